//! One function per subcommand. Each writes its CSV (and model file) under
//! the output directory and returns the numbers it wrote.

use std::path::{Path, PathBuf};

use hdc_core::data::write_container;
use hdc_core::model::{count_ops, evaluate_encoded, Architecture, Evaluation, OpCountReport};
use hdc_core::snapshot::{read_snapshot, write_snapshot};
use hdc_core::theory::{
    average_case_accuracy, lemma2_bruteforce, lemma2_sup, projection_monotonicity, worst_case_accuracy,
    LEMMA2_BRUTEFORCE_MAX_DIM,
};
use hdc_core::SplittableRng;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::datasets::{self, SplitData};
use crate::error::{CliError, CliResult};
use crate::pipeline::{self, PipelineOutcome};
use crate::report::{header_from_pairs, write_csv};

pub const MODEL_FILE: &str = "model.ehdc";

#[derive(Debug, Clone, Serialize)]
pub struct AccuracyRow {
    pub dataset: String,
    pub dim: usize,
    pub layers: usize,
    pub theta: f64,
    pub accuracy: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
struct StageRow {
    stage: &'static str,
    theta: f64,
    accuracy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DimRow {
    pub d: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaRow {
    pub theta: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryRow {
    pub kind: &'static str,
    pub d: usize,
    pub value: f64,
    pub stderr: f64,
    pub n: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
struct OpCountRow {
    architecture: String,
    encoder_additions: u64,
    boolean_ops: u64,
    similarity_ops: u64,
    baseline_ratio: f64,
}

fn out_path(cfg: &ExperimentConfig, name: &str) -> PathBuf {
    cfg.out.join(name)
}

fn accuracy_row(cfg: &ExperimentConfig, theta: f64, accuracy: f64) -> AccuracyRow {
    AccuracyRow {
        dataset: cfg.dataset.to_string(),
        dim: cfg.dim,
        layers: cfg.layers,
        theta,
        accuracy,
        seed: cfg.seed,
    }
}

/// Binarizes both splits and stores them as EHDD containers.
pub fn cmd_data_prepare(cfg: &ExperimentConfig, root: &Path) -> CliResult<Vec<(PathBuf, String)>> {
    let data = datasets::load(cfg, root)?;
    let mut written = Vec::new();
    for (split, ds) in [("train", &data.train), ("test", &data.test)] {
        let path = out_path(cfg, &format!("{}-{split}.ehdd", cfg.dataset));
        std::fs::create_dir_all(&cfg.out).map_err(|e| CliError::io(&cfg.out, e))?;
        write_container(&path, ds)?;
        written.push((path, ds.provenance().digest()));
    }
    Ok(written)
}

/// Full pipeline on already loaded data; writes the model, `train.csv`
/// and `stages.csv`.
pub fn train_on(cfg: &ExperimentConfig, data: &SplitData, progress: &mut dyn FnMut(&str)) -> CliResult<PipelineOutcome> {
    let outcome = pipeline::run(cfg, data, progress)?;
    std::fs::create_dir_all(&cfg.out).map_err(|e| CliError::io(&cfg.out, e))?;
    write_snapshot(&out_path(cfg, MODEL_FILE), &outcome.encoder, Some(&outcome.prototypes))?;
    let header = cfg.header_lines();
    write_csv(
        &out_path(cfg, "train.csv"),
        &header,
        &[accuracy_row(cfg, outcome.prototypes.theta(), outcome.accuracy())],
    )?;
    let stages: Vec<StageRow> = outcome
        .stages
        .iter()
        .map(|s| StageRow {
            stage: s.name,
            theta: s.theta,
            accuracy: s.test_accuracy,
        })
        .collect();
    write_csv(&out_path(cfg, "stages.csv"), &header, &stages)?;
    Ok(outcome)
}

pub fn cmd_train(cfg: &ExperimentConfig, root: &Path, progress: &mut dyn FnMut(&str)) -> CliResult<PipelineOutcome> {
    let data = datasets::load(cfg, root)?;
    train_on(cfg, &data, progress)
}

/// One pipeline per dimension with the same seed; writes `sweep.csv`.
pub fn sweep_on(
    cfg: &ExperimentConfig,
    data: &SplitData,
    dims: &[usize],
    progress: &mut dyn FnMut(&str),
) -> CliResult<Vec<DimRow>> {
    if dims.is_empty() {
        return Err(CliError::Config("sweep needs at least one dimension".into()));
    }
    let mut rows = Vec::with_capacity(dims.len());
    for &d in dims {
        let c = ExperimentConfig { dim: d, ..cfg.clone() };
        let outcome = pipeline::run(&c, data, progress)?;
        progress(&format!("d = {d}: accuracy {:.2}%", 100.0 * outcome.accuracy()));
        rows.push(DimRow {
            d,
            accuracy: outcome.accuracy(),
        });
    }
    write_csv(&out_path(cfg, "sweep.csv"), &cfg.header_lines(), &rows)?;
    Ok(rows)
}

pub fn cmd_sweep(
    cfg: &ExperimentConfig,
    root: &Path,
    dims: &[usize],
    progress: &mut dyn FnMut(&str),
) -> CliResult<Vec<DimRow>> {
    if dims.is_empty() {
        return Err(CliError::Config("sweep needs at least one dimension".into()));
    }
    let data = datasets::load(cfg, root)?;
    sweep_on(cfg, &data, dims, progress)
}

/// Trains once, then regenerates prototypes per theta; writes
/// `theta_sweep.csv`.
pub fn cmd_theta_sweep(
    cfg: &ExperimentConfig,
    root: &Path,
    thetas: &[f64],
    progress: &mut dyn FnMut(&str),
) -> CliResult<Vec<ThetaRow>> {
    if thetas.is_empty() {
        return Err(CliError::Config("theta sweep needs at least one theta".into()));
    }
    let data = datasets::load(cfg, root)?;
    let outcome = pipeline::run(cfg, &data, progress)?;
    let rows: Vec<ThetaRow> = outcome
        .theta_sweep(&data.test, thetas)?
        .into_iter()
        .map(|(theta, accuracy)| ThetaRow { theta, accuracy })
        .collect();
    write_csv(&out_path(cfg, "theta_sweep.csv"), &cfg.header_lines(), &rows)?;
    Ok(rows)
}

/// Evaluates a saved model on the configured dataset's test split.
pub fn cmd_eval(cfg: &ExperimentConfig, root: &Path, model: &Path) -> CliResult<Evaluation> {
    let (encoder, prototypes) = read_snapshot(model)?;
    let prototypes = prototypes.ok_or_else(|| CliError::Data(format!("{}: no prototype section", model.display())))?;
    let data = datasets::load(cfg, root)?;
    if encoder.input_dim() != data.test.input_dim() {
        return Err(CliError::Data(format!(
            "model expects {} input bits, dataset has {}",
            encoder.input_dim(),
            data.test.input_dim()
        )));
    }
    let encoded = encoder.encode_all(data.test.samples())?;
    let eval = evaluate_encoded(&prototypes, &encoded, data.test.labels())?;
    let row = AccuracyRow {
        dim: encoder.output_dim(),
        layers: encoder.layers().len(),
        ..accuracy_row(cfg, prototypes.theta(), eval.accuracy())
    };
    let mut header = cfg.header_lines();
    header.push(format!("# model = {}", model.display()));
    write_csv(&out_path(cfg, "eval.csv"), &header, &[row])?;
    Ok(eval)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TheoryCommand {
    Worst,
    Average,
    Lemma2Check,
    Projection,
}

impl TheoryCommand {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Worst => "worst",
            Self::Average => "average",
            Self::Lemma2Check => "lemma2-check",
            Self::Projection => "projection",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoryParams {
    pub kind: TheoryCommand,
    /// Dimensions to evaluate; for `projection` only the largest is used as m.
    pub dims: Vec<usize>,
    /// Monte Carlo draws (`average`), instances (`lemma2-check`) or trials
    /// (`projection`).
    pub n: usize,
    /// Per-pair Monte Carlo re-estimate for `projection`; 0 disables.
    pub n_mc: usize,
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoryOutput {
    pub rows: Vec<TheoryRow>,
    /// `lemma2-check`: every instance matched to 1e-12.
    /// `projection`: no per-trial monotonicity violation.
    pub passed: Option<bool>,
    pub path: PathBuf,
}

const LEMMA2_TOL: f64 = 1e-12;

pub fn cmd_theory(params: &TheoryParams) -> CliResult<TheoryOutput> {
    if params.dims.is_empty() || params.dims.contains(&0) {
        return Err(CliError::Config("theory needs dimensions >= 1".into()));
    }
    if params.kind != TheoryCommand::Worst && params.n == 0 {
        return Err(CliError::Config("n must be >= 1".into()));
    }
    let kind = params.kind.as_str();
    let mut passed = None;
    let rows = match params.kind {
        TheoryCommand::Worst => params
            .dims
            .iter()
            .map(|&d| {
                let r = worst_case_accuracy(d)?;
                Ok(TheoryRow {
                    kind,
                    d,
                    value: r.value,
                    stderr: 0.0,
                    n: 0,
                    seed: params.seed,
                })
            })
            .collect::<CliResult<Vec<_>>>()?,
        TheoryCommand::Average => params
            .dims
            .iter()
            .map(|&d| {
                let r = average_case_accuracy(d, params.n, params.seed)?;
                Ok(TheoryRow {
                    kind,
                    d,
                    value: r.value,
                    stderr: r.stderr,
                    n: r.n_samples,
                    seed: params.seed,
                })
            })
            .collect::<CliResult<Vec<_>>>()?,
        TheoryCommand::Lemma2Check => {
            if let Some(&d) = params.dims.iter().find(|&&d| d > LEMMA2_BRUTEFORCE_MAX_DIM) {
                return Err(CliError::Config(format!(
                    "lemma2-check brute force supports d <= {LEMMA2_BRUTEFORCE_MAX_DIM}, got {d}"
                )));
            }
            let root = SplittableRng::new(params.seed).named("lemma2");
            let mut all = true;
            let mut rows = Vec::new();
            for &d in &params.dims {
                let mut worst: f64 = 0.0;
                for t in 0..params.n {
                    let mut rng = root.split(((d as u64) << 32) | t as u64);
                    let delta = loop {
                        let v: Vec<f64> = (0..d).map(|_| rng.next_f64() - rng.next_f64()).collect();
                        if v.iter().any(|&x| x != 0.0) {
                            break v;
                        }
                    };
                    let diff = (lemma2_sup(&delta)?.0 - lemma2_bruteforce(&delta)?).abs();
                    worst = worst.max(diff);
                }
                all &= worst <= LEMMA2_TOL;
                rows.push(TheoryRow {
                    kind,
                    d,
                    value: worst,
                    stderr: 0.0,
                    n: params.n,
                    seed: params.seed,
                });
            }
            passed = Some(all);
            rows
        }
        TheoryCommand::Projection => {
            let m = *params.dims.iter().max().expect("non-empty");
            let table = projection_monotonicity(m, params.n, params.n_mc, params.seed)?;
            passed = Some(table.violations() == 0);
            let trials = table.accuracy.len() as f64;
            table
                .means()
                .into_iter()
                .enumerate()
                .map(|(k, mean)| {
                    let var = table.accuracy.iter().map(|r| (r[k] - mean).powi(2)).sum::<f64>()
                        / (trials - 1.0).max(1.0);
                    TheoryRow {
                        kind,
                        d: k + 1,
                        value: mean,
                        stderr: (var / trials).sqrt(),
                        n: params.n,
                        seed: params.seed,
                    }
                })
                .collect()
        }
    };
    let header = header_from_pairs(&[
        ("kind", kind.to_string()),
        ("dims", format!("{}..={}", params.dims[0], params.dims[params.dims.len() - 1])),
        ("n", params.n.to_string()),
        ("n_mc", params.n_mc.to_string()),
        ("seed", params.seed.to_string()),
    ]);
    let path = params.out.join(format!("theory_{kind}.csv"));
    write_csv(&path, &header, &rows)?;
    Ok(TheoryOutput { rows, passed, path })
}

/// Parses `784,64,64` (learned widths) or `classic:784x10000`.
pub fn parse_architecture(text: &str) -> CliResult<Architecture> {
    let bad = || CliError::Config(format!("bad architecture {text:?}: use e.g. 784,64 or classic:784x10000"));
    if let Some(rest) = text.strip_prefix("classic:") {
        let (p, d) = rest.split_once('x').ok_or_else(bad)?;
        let positions = p.trim().parse().map_err(|_| bad())?;
        let dim = d.trim().parse().map_err(|_| bad())?;
        if positions == 0 || dim == 0 {
            return Err(bad());
        }
        return Ok(Architecture::Classic { positions, dim });
    }
    let widths = text
        .split(',')
        .map(|w| w.trim().parse::<usize>().ok().filter(|&w| w > 0))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(bad)?;
    if widths.len() < 2 {
        return Err(bad());
    }
    Ok(Architecture::Learned(widths))
}

pub fn cmd_opcount(arch_text: &str, classes: usize, out: &Path) -> CliResult<OpCountReport> {
    let arch = parse_architecture(arch_text)?;
    let report = count_ops(&arch, classes);
    let row = OpCountRow {
        architecture: arch_text.to_string(),
        encoder_additions: report.encoder_additions,
        boolean_ops: report.boolean_ops,
        similarity_ops: report.similarity_ops,
        baseline_ratio: report.baseline_ratio(),
    };
    let header = header_from_pairs(&[("architecture", arch_text.to_string()), ("classes", classes.to_string())]);
    write_csv(&out.join("opcount.csv"), &header, &[row])?;
    Ok(report)
}
