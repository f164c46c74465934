//! Flat TOML experiment configuration with per-key overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use hdc_core::encoders::{LrSchedule, Objective, SteMode, TrainConfig};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetId {
    Mnist,
    Fashion,
    Isolet,
    UciHar,
}

impl DatasetId {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Mnist => "mnist",
            Self::Fashion => "fashion",
            Self::Isolet => "isolet",
            Self::UciHar => "uci-har",
        }
    }

    pub fn is_image(self) -> bool {
        matches!(self, Self::Mnist | Self::Fashion)
    }
}

impl fmt::Display for DatasetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveKind {
    CrossEntropy,
    Mse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SteKind {
    Identity,
    Clipped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    Constant,
    Cosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BatchNormSetting {
    /// Batch norm on every layer of a multi-layer encoder, none otherwise.
    Auto,
    On,
    Off,
}

/// How the prototype threshold is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThetaSetting {
    /// Median training class size over two.
    Median,
    /// Best training accuracy over `theta_candidates` evenly spaced values.
    Auto,
    Fixed(f64),
}

impl FromStr for ThetaSetting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "median" => Ok(Self::Median),
            "auto" => Ok(Self::Auto),
            t => t
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(Self::Fixed)
                .ok_or_else(|| format!("theta must be \"median\", \"auto\" or a number, got {t:?}")),
        }
    }
}

impl fmt::Display for ThetaSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Median => f.write_str("median"),
            Self::Auto => f.write_str("auto"),
            Self::Fixed(v) => write!(f, "{v}"),
        }
    }
}

impl Serialize for ThetaSetting {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Self::Fixed(v) => s.serialize_f64(*v),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for ThetaSetting {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Float(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(v) => Ok(Self::Fixed(v as f64)),
            Raw::Float(v) => Ok(Self::Fixed(v)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// One experiment: data, quantizer, encoder, training, prototypes and
/// retraining. Every field has a default; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetId,
    /// Pixel binarization threshold for image datasets (bit = pixel > t).
    pub pixel_threshold: u8,
    /// Thermometer levels per feature for delimited datasets.
    pub levels: usize,
    pub layers: usize,
    pub dim: usize,
    /// Width of hidden layers; 0 means `dim`.
    pub hidden_dim: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub schedule: ScheduleKind,
    pub weight_clip: f32,
    pub objective: ObjectiveKind,
    pub ste: SteKind,
    pub ste_width: f32,
    pub batch_norm: BatchNormSetting,
    pub theta: ThetaSetting,
    pub theta_candidates: usize,
    pub retrain_step1: bool,
    pub step1_epochs: usize,
    pub step1_lr: f64,
    pub retrain_step2: bool,
    pub step2_lr: f64,
    pub step2_passes: usize,
    /// Keep the step-2 pass with the best training accuracy.
    pub step2_keep_best: bool,
    pub retrain_cycles: usize,
    /// Use only the first n training samples; 0 keeps all.
    pub train_limit: usize,
    /// Use only the first n test samples; 0 keeps all.
    pub test_limit: usize,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetId::Mnist,
            pixel_threshold: 127,
            levels: 8,
            layers: 1,
            dim: 64,
            hidden_dim: 0,
            epochs: 20,
            batch_size: 64,
            lr: 1e-3,
            schedule: ScheduleKind::Constant,
            weight_clip: 127.0,
            objective: ObjectiveKind::CrossEntropy,
            ste: SteKind::Clipped,
            ste_width: 1.0,
            batch_norm: BatchNormSetting::Auto,
            theta: ThetaSetting::Median,
            theta_candidates: 19,
            retrain_step1: true,
            step1_epochs: 10,
            step1_lr: 1e-4,
            retrain_step2: true,
            step2_lr: 1.0,
            step2_passes: 1,
            step2_keep_best: true,
            retrain_cycles: 1,
            train_limit: 0,
            test_limit: 0,
            seed: 0,
            out: PathBuf::from("results"),
        }
    }
}

/// Parses a flag value as a TOML scalar, falling back to a bare string.
fn parse_value(text: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {text}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(text.to_string()))
}

impl ExperimentConfig {
    /// Builds a config from an optional TOML file and `key = value`
    /// overrides applied in order (later wins), then validates it.
    pub fn load(file: Option<&Path>, overrides: &[(String, String)]) -> CliResult<Self> {
        let mut table = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                toml::from_str::<toml::Table>(&text)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
            }
            None => toml::Table::new(),
        };
        for (key, value) in overrides {
            table.insert(key.replace('-', "_"), parse_value(value));
        }
        let cfg: Self = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.layers == 0 {
            return bad("layers must be >= 1".into());
        }
        if self.dim == 0 {
            return bad("dim must be >= 1".into());
        }
        if self.levels == 0 {
            return bad("levels must be >= 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1".into());
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if !(self.weight_clip > 0.0 && self.weight_clip.is_finite()) {
            return bad(format!("weight_clip must be positive, got {}", self.weight_clip));
        }
        if !(self.ste_width > 0.0 && self.ste_width.is_finite()) {
            return bad(format!("ste_width must be positive, got {}", self.ste_width));
        }
        if self.theta == ThetaSetting::Auto && self.theta_candidates == 0 {
            return bad("theta = \"auto\" needs theta_candidates >= 1".into());
        }
        if self.retrain_step1 && !(self.step1_lr > 0.0 && self.step1_lr.is_finite()) {
            return bad(format!("step1_lr must be positive, got {}", self.step1_lr));
        }
        if self.retrain_step2 && !(self.step2_lr > 0.0 && self.step2_lr.is_finite()) {
            return bad(format!("step2_lr must be positive, got {}", self.step2_lr));
        }
        if self.retrain_cycles == 0 {
            return bad("retrain_cycles must be >= 1".into());
        }
        Ok(())
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            dim: self.dim,
            layers: self.layers,
            hidden_dim: (self.hidden_dim > 0).then_some(self.hidden_dim),
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.lr as f32,
            schedule: match self.schedule {
                ScheduleKind::Constant => LrSchedule::Constant,
                ScheduleKind::Cosine => LrSchedule::Cosine,
            },
            weight_clip: self.weight_clip,
            seed: self.seed,
            objective: match self.objective {
                ObjectiveKind::CrossEntropy => Objective::AuxHeadCrossEntropy,
                ObjectiveKind::Mse => Objective::MseToPrototype,
            },
            ste: match self.ste {
                SteKind::Identity => SteMode::Identity,
                SteKind::Clipped => SteMode::Clipped(self.ste_width),
            },
            batch_norm: match self.batch_norm {
                BatchNormSetting::Auto => None,
                BatchNormSetting::On => Some(true),
                BatchNormSetting::Off => Some(false),
            },
        }
    }

    pub fn step1_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.step1_epochs,
            learning_rate: self.step1_lr as f32,
            ..self.train_config()
        }
    }

    /// The resolved config as `# key = value` lines for CSV headers.
    pub fn header_lines(&self) -> Vec<String> {
        let table = toml::Table::try_from(self).expect("config serializes to a table");
        table.iter().map(|(k, v)| format!("# {k} = {v}")).collect()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to toml")
    }
}
