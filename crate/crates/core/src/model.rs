//! Majority-rule class prototypes, two-step retraining, inference and
//! operation counting.

use crate::data::LabeledBinaryDataset;
use crate::encoders::train::{fit_to_targets, EpochStats, TrainConfig};
use crate::encoders::LearnedEncoder;
use crate::error::{HdcError, Result};
use crate::hv::{sim_active_words, BinaryHypervector};

/// Per-class sums `S_c`, binary prototypes `R_c` and the shared threshold.
///
/// Invariant: `reps[c]` has bit `i` set iff `sums[c][i] > theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassPrototypes {
    dim: usize,
    sums: Vec<Vec<f64>>,
    reps: Vec<BinaryHypervector>,
    theta: f64,
}

impl ClassPrototypes {
    pub fn from_sums(sums: Vec<Vec<f64>>, theta: f64) -> Result<Self> {
        if sums.len() < 2 {
            return Err(HdcError::InvalidArgument(format!(
                "need at least 2 classes, got {}",
                sums.len()
            )));
        }
        let dim = sums[0].len();
        if let Some(s) = sums.iter().find(|s| s.len() != dim) {
            return Err(HdcError::DimensionMismatch {
                left: s.len(),
                right: dim,
            });
        }
        if theta.is_nan() {
            return Err(HdcError::InvalidArgument("theta is NaN".into()));
        }
        let mut p = Self {
            dim,
            reps: Vec::new(),
            sums,
            theta,
        };
        p.regenerate()?;
        Ok(p)
    }

    /// Sums of already-encoded vectors per class (`{0,1}` view).
    pub fn from_encoded(
        encoded: &[BinaryHypervector],
        labels: &[usize],
        classes: usize,
        theta: f64,
    ) -> Result<Self> {
        if encoded.len() != labels.len() {
            return Err(HdcError::DimensionMismatch {
                left: encoded.len(),
                right: labels.len(),
            });
        }
        let dim = encoded.first().ok_or(HdcError::Empty("training set"))?.dim();
        let mut counts = vec![vec![0u64; dim]; classes];
        let mut seen = vec![0usize; classes];
        for (index, (r, &l)) in encoded.iter().zip(labels).enumerate() {
            if l >= classes {
                return Err(HdcError::LabelOutOfRange {
                    index,
                    label: l,
                    classes,
                });
            }
            if r.dim() != dim {
                return Err(HdcError::DimensionMismatch {
                    left: r.dim(),
                    right: dim,
                });
            }
            seen[l] += 1;
            for i in r.ones_iter() {
                counts[l][i] += 1;
            }
        }
        if let Some(c) = seen.iter().position(|&n| n == 0) {
            return Err(HdcError::EmptyClass(c));
        }
        let sums = counts
            .into_iter()
            .map(|c| c.into_iter().map(|v| v as f64).collect())
            .collect();
        Self::from_sums(sums, theta)
    }

    /// Rebuilds every `R_c` from `S_c` with the strict `> theta` rule.
    fn regenerate(&mut self) -> Result<()> {
        let theta = self.theta;
        self.reps = self
            .sums
            .iter()
            .map(|s| BinaryHypervector::from_bits(s.iter().map(|&v| v > theta)))
            .collect::<Result<_>>()?;
        Ok(())
    }

    pub fn with_theta(&self, theta: f64) -> Result<Self> {
        Self::from_sums(self.sums.clone(), theta)
    }

    pub fn classes(&self) -> usize {
        self.sums.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn sums(&self) -> &[Vec<f64>] {
        &self.sums
    }

    pub fn reps(&self) -> &[BinaryHypervector] {
        &self.reps
    }

    /// `sim_active(r, R_c)` for every class.
    pub fn scores(&self, r: &BinaryHypervector) -> Result<Vec<i64>> {
        if r.dim() != self.dim {
            return Err(HdcError::DimensionMismatch {
                left: r.dim(),
                right: self.dim,
            });
        }
        Ok(self
            .reps
            .iter()
            .map(|p| sim_active_words(r.words(), p.words()))
            .collect())
    }

    /// Highest-scoring class; ties go to the lowest index.
    pub fn classify(&self, r: &BinaryHypervector) -> Result<usize> {
        let scores = self.scores(r)?;
        let mut best = 0;
        for (c, &s) in scores.iter().enumerate().skip(1) {
            if s > scores[best] {
                best = c;
            }
        }
        Ok(best)
    }
}

/// Median class size over two: a true majority within a typical class.
pub fn default_theta(train: &LabeledBinaryDataset) -> f64 {
    let mut counts = train.class_counts();
    counts.sort_unstable();
    if counts.is_empty() {
        return 0.0;
    }
    let n = counts.len();
    let median = if n % 2 == 1 {
        counts[n / 2] as f64
    } else {
        (counts[n / 2 - 1] + counts[n / 2]) as f64 / 2.0
    };
    median / 2.0
}

pub fn generate_representations(
    encoder: &LearnedEncoder,
    train: &LabeledBinaryDataset,
    theta: f64,
) -> Result<ClassPrototypes> {
    if train.is_empty() {
        return Err(HdcError::Empty("training set"));
    }
    let encoded = encoder.encode_all(train.samples())?;
    ClassPrototypes::from_encoded(&encoded, train.labels(), train.classes(), theta)
}

/// Step 1: trains the encoder towards each sample's class prototype `R_c`.
/// The prototypes themselves are not modified.
pub fn retrain_step1(
    encoder: &LearnedEncoder,
    prototypes: &ClassPrototypes,
    train: &LabeledBinaryDataset,
    cfg: &TrainConfig,
) -> Result<LearnedEncoder> {
    fit_to_targets(encoder, train, prototypes.reps(), cfg, &mut |_: EpochStats| {})
}

/// Step 2 on pre-encoded training vectors.
///
/// For every misclassified sample the true class sum gains `lr * r` and the
/// predicted class sum loses `lr * r`. Sums change immediately, but
/// predictions within a pass use the prototypes from the start of the pass;
/// all `R_c` are regenerated after each pass.
pub fn retrain_step2_encoded(
    prototypes: &ClassPrototypes,
    encoded: &[BinaryHypervector],
    labels: &[usize],
    lr: f64,
    passes: usize,
) -> Result<ClassPrototypes> {
    if !(lr > 0.0) || !lr.is_finite() {
        return Err(HdcError::InvalidArgument(format!("step-2 learning rate must be > 0, got {lr}")));
    }
    if encoded.len() != labels.len() {
        return Err(HdcError::DimensionMismatch {
            left: encoded.len(),
            right: labels.len(),
        });
    }
    let mut p = prototypes.clone();
    for _ in 0..passes {
        let frozen = p.clone();
        for (index, (r, &truth)) in encoded.iter().zip(labels).enumerate() {
            if truth >= p.classes() {
                return Err(HdcError::LabelOutOfRange {
                    index,
                    label: truth,
                    classes: p.classes(),
                });
            }
            let predicted = frozen.classify(r)?;
            if predicted != truth {
                for i in r.ones_iter() {
                    p.sums[truth][i] += lr;
                    p.sums[predicted][i] -= lr;
                }
            }
        }
        p.regenerate()?;
    }
    Ok(p)
}

/// Evenly spaced candidate thresholds `median * k / (steps + 1)` for
/// `k = 1..=steps`, where `median` is the median class size.
pub fn theta_candidates(train: &LabeledBinaryDataset, steps: usize) -> Vec<f64> {
    let median = 2.0 * default_theta(train);
    (1..=steps).map(|k| median * k as f64 / (steps + 1) as f64).collect()
}

/// Picks the candidate threshold with the best accuracy on the given
/// (training) vectors. Ties keep the earliest candidate.
pub fn select_theta(
    prototypes: &ClassPrototypes,
    encoded: &[BinaryHypervector],
    labels: &[usize],
    candidates: &[f64],
) -> Result<(ClassPrototypes, f64)> {
    let mut best: Option<(ClassPrototypes, f64)> = None;
    for &theta in candidates {
        let p = prototypes.with_theta(theta)?;
        let acc = evaluate_encoded(&p, encoded, labels)?.accuracy();
        if best.as_ref().is_none_or(|(_, a)| acc > *a) {
            best = Some((p, acc));
        }
    }
    best.ok_or_else(|| HdcError::InvalidArgument("no theta candidates".into()))
}

/// Runs step 2 pass by pass and keeps whichever state (including the
/// starting one) scores best on the same training vectors.
pub fn retrain_step2_best(
    prototypes: &ClassPrototypes,
    encoded: &[BinaryHypervector],
    labels: &[usize],
    lr: f64,
    passes: usize,
) -> Result<(ClassPrototypes, usize)> {
    let mut current = prototypes.clone();
    let mut best = current.clone();
    let mut best_acc = evaluate_encoded(&current, encoded, labels)?.accuracy();
    let mut best_pass = 0;
    for pass in 1..=passes {
        current = retrain_step2_encoded(&current, encoded, labels, lr, 1)?;
        let acc = evaluate_encoded(&current, encoded, labels)?.accuracy();
        if acc > best_acc {
            best_acc = acc;
            best = current.clone();
            best_pass = pass;
        }
    }
    Ok((best, best_pass))
}

/// Step 2 with a frozen encoder over the training set in dataset order.
pub fn retrain_step2(
    encoder: &LearnedEncoder,
    prototypes: &ClassPrototypes,
    train: &LabeledBinaryDataset,
    lr: f64,
    passes: usize,
) -> Result<ClassPrototypes> {
    let encoded = encoder.encode_all(train.samples())?;
    retrain_step2_encoded(prototypes, &encoded, train.labels(), lr, passes)
}

pub fn predict(
    encoder: &LearnedEncoder,
    prototypes: &ClassPrototypes,
    x: &BinaryHypervector,
) -> Result<usize> {
    prototypes.classify(&encoder.encode(x)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub correct: usize,
    pub total: usize,
    /// `confusion[truth][predicted]`.
    pub confusion: Vec<Vec<usize>>,
}

impl Evaluation {
    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.total as f64
    }
}

pub fn evaluate_encoded(
    prototypes: &ClassPrototypes,
    encoded: &[BinaryHypervector],
    labels: &[usize],
) -> Result<Evaluation> {
    if encoded.is_empty() {
        return Err(HdcError::Empty("test set"));
    }
    if encoded.len() != labels.len() {
        return Err(HdcError::DimensionMismatch {
            left: encoded.len(),
            right: labels.len(),
        });
    }
    let k = prototypes.classes();
    let mut confusion = vec![vec![0usize; k]; k];
    let mut correct = 0;
    for (index, (r, &truth)) in encoded.iter().zip(labels).enumerate() {
        if truth >= k {
            return Err(HdcError::LabelOutOfRange {
                index,
                label: truth,
                classes: k,
            });
        }
        let p = prototypes.classify(r)?;
        confusion[truth][p] += 1;
        correct += usize::from(p == truth);
    }
    Ok(Evaluation {
        correct,
        total: encoded.len(),
        confusion,
    })
}

pub fn evaluate(
    encoder: &LearnedEncoder,
    prototypes: &ClassPrototypes,
    test: &LabeledBinaryDataset,
) -> Result<Evaluation> {
    if test.is_empty() {
        return Err(HdcError::Empty("test set"));
    }
    let encoded = encoder.encode_all(test.samples())?;
    evaluate_encoded(prototypes, &encoded, test.labels())
}

/// Encoder shape for operation accounting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Architecture {
    /// Layer widths including the input, e.g. `[784, 64, 64]`.
    Learned(Vec<usize>),
    /// Item-memory encoder over `positions` features at dimension `dim`.
    Classic { positions: usize, dim: usize },
}

impl Architecture {
    pub fn output_dim(&self) -> usize {
        match self {
            Self::Learned(shape) => *shape.last().unwrap_or(&0),
            Self::Classic { dim, .. } => *dim,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpCountReport {
    pub encoder_additions: u64,
    pub boolean_ops: u64,
    pub similarity_ops: u64,
}

/// Additions of the 10,000-d classic encoder on 784 inputs.
pub const CLASSIC_BASELINE_ADDITIONS: u64 = 784 * 10_000;

impl OpCountReport {
    /// Encoder additions relative to [`CLASSIC_BASELINE_ADDITIONS`].
    pub fn baseline_ratio(&self) -> f64 {
        self.encoder_additions as f64 / CLASSIC_BASELINE_ADDITIONS as f64
    }
}

/// Dense per-sample accounting: `sum in*out` additions for learned
/// encoders (no boolean ops), `positions*d` of each for the classic one,
/// plus `K*d` similarity operations.
pub fn count_ops(arch: &Architecture, classes: usize) -> OpCountReport {
    let (encoder_additions, boolean_ops) = match arch {
        Architecture::Learned(shape) => (
            shape.windows(2).map(|w| (w[0] * w[1]) as u64).sum(),
            0,
        ),
        Architecture::Classic { positions, dim } => {
            let n = (*positions * *dim) as u64;
            (n, n)
        }
    };
    OpCountReport {
        encoder_additions,
        boolean_ops,
        similarity_ops: (classes * arch.output_dim()) as u64,
    }
}
