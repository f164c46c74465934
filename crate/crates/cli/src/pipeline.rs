//! Train, generate prototypes, retrain and evaluate.

use hdc_core::data::LabeledBinaryDataset;
use hdc_core::encoders::{train_encoder_with_progress, EpochStats, LearnedEncoder};
use hdc_core::model::{
    default_theta, evaluate_encoded, retrain_step1, retrain_step2_best, retrain_step2_encoded, select_theta,
    theta_candidates, ClassPrototypes, Evaluation,
};
use hdc_core::BinaryHypervector;

use crate::config::{ExperimentConfig, ThetaSetting};
use crate::datasets::SplitData;
use crate::error::CliResult;

#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    /// `base`, `step1` or `step2`.
    pub name: &'static str,
    pub theta: f64,
    pub test_accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub encoder: LearnedEncoder,
    pub prototypes: ClassPrototypes,
    pub stages: Vec<Stage>,
    pub evaluation: Evaluation,
    /// Encoded test split under the final encoder.
    pub test_encoded: Vec<BinaryHypervector>,
}

impl PipelineOutcome {
    pub fn accuracy(&self) -> f64 {
        self.evaluation.accuracy()
    }

    /// Test accuracy before any retraining.
    pub fn base_accuracy(&self) -> f64 {
        self.stages[0].test_accuracy
    }

    /// Test accuracy with the final sums regenerated at each theta.
    pub fn theta_sweep(&self, test: &LabeledBinaryDataset, thetas: &[f64]) -> CliResult<Vec<(f64, f64)>> {
        thetas
            .iter()
            .map(|&t| {
                let p = self.prototypes.with_theta(t)?;
                Ok((t, evaluate_encoded(&p, &self.test_encoded, test.labels())?.accuracy()))
            })
            .collect()
    }
}

/// Prototypes from encoded training vectors under the configured theta rule.
fn prototypes_for(
    cfg: &ExperimentConfig,
    train: &LabeledBinaryDataset,
    encoded: &[BinaryHypervector],
) -> CliResult<ClassPrototypes> {
    let median = default_theta(train);
    let initial = match cfg.theta {
        ThetaSetting::Fixed(t) => t,
        ThetaSetting::Median | ThetaSetting::Auto => median,
    };
    let p = ClassPrototypes::from_encoded(encoded, train.labels(), train.classes(), initial)?;
    if cfg.theta == ThetaSetting::Auto {
        let candidates = theta_candidates(train, cfg.theta_candidates);
        return Ok(select_theta(&p, encoded, train.labels(), &candidates)?.0);
    }
    Ok(p)
}

/// Runs the full workflow. `progress` receives one line per epoch and stage.
pub fn run(cfg: &ExperimentConfig, data: &SplitData, progress: &mut dyn FnMut(&str)) -> CliResult<PipelineOutcome> {
    cfg.validate()?;
    let (train, test) = (&data.train, &data.test);
    let mut encoder = train_encoder_with_progress(train, &cfg.train_config(), &mut |s: EpochStats| {
        progress(&format!("train epoch {} loss {:.4}", s.epoch, s.loss))
    })?;
    let mut train_encoded = encoder.encode_all(train.samples())?;
    let mut test_encoded = encoder.encode_all(test.samples())?;
    let mut prototypes = prototypes_for(cfg, train, &train_encoded)?;
    let mut stages = Vec::new();
    let mut record = |name: &'static str, p: &ClassPrototypes, enc: &[BinaryHypervector], progress: &mut dyn FnMut(&str)| -> CliResult<()> {
        let acc = evaluate_encoded(p, enc, test.labels())?.accuracy();
        progress(&format!("{name}: theta {:.1} test accuracy {:.2}%", p.theta(), 100.0 * acc));
        stages.push(Stage {
            name,
            theta: p.theta(),
            test_accuracy: acc,
        });
        Ok(())
    };
    record("base", &prototypes, &test_encoded, progress)?;
    for _ in 0..cfg.retrain_cycles {
        if cfg.retrain_step1 {
            encoder = retrain_step1(&encoder, &prototypes, train, &cfg.step1_config())?;
            train_encoded = encoder.encode_all(train.samples())?;
            test_encoded = encoder.encode_all(test.samples())?;
            let keep = ExperimentConfig {
                theta: match cfg.theta {
                    ThetaSetting::Auto => ThetaSetting::Auto,
                    _ => ThetaSetting::Fixed(prototypes.theta()),
                },
                ..cfg.clone()
            };
            prototypes = prototypes_for(&keep, train, &train_encoded)?;
            record("step1", &prototypes, &test_encoded, progress)?;
        }
        if cfg.retrain_step2 {
            prototypes = if cfg.step2_keep_best {
                retrain_step2_best(&prototypes, &train_encoded, train.labels(), cfg.step2_lr, cfg.step2_passes)?.0
            } else {
                retrain_step2_encoded(&prototypes, &train_encoded, train.labels(), cfg.step2_lr, cfg.step2_passes)?
            };
            record("step2", &prototypes, &test_encoded, progress)?;
        }
    }
    let evaluation = evaluate_encoded(&prototypes, &test_encoded, test.labels())?;
    Ok(PipelineOutcome {
        encoder,
        prototypes,
        stages,
        evaluation,
        test_encoded,
    })
}
