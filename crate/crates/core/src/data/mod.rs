//! Dataset ingestion and binarization.

mod container;
mod delimited;
mod idx;
mod quantize;

pub use container::{decode_container, encode_container, read_container, write_container, CONTAINER_MAGIC};
pub use delimited::{load_delimited, DelimitedSchema, LabelSource, Separator};
pub use idx::{load_idx, IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC};
pub use quantize::{binarize_pixels, thermometer_quantize, QuantizerSpec};

use sha2::{Digest, Sha256};

use crate::error::{HdcError, Result};
use crate::hv::BinaryHypervector;

/// Where a dataset came from: SHA-256 over the source file bytes plus the
/// preprocessing descriptor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub source_digest: String,
    pub descriptor: String,
}

impl Provenance {
    pub fn from_bytes<'a, I>(sources: I, descriptor: impl Into<String>) -> Self
    where
        I: IntoIterator<Item = &'a [u8]>,
    {
        let mut h = Sha256::new();
        for s in sources {
            h.update((s.len() as u64).to_le_bytes());
            h.update(s);
        }
        Self {
            source_digest: hex::encode(h.finalize()),
            descriptor: descriptor.into(),
        }
    }

    /// Digest of source digest and descriptor together.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.source_digest.as_bytes());
        h.update([0u8]);
        h.update(self.descriptor.as_bytes());
        hex::encode(h.finalize())
    }

    pub fn with_step(&self, step: &str) -> Self {
        Self {
            source_digest: self.source_digest.clone(),
            descriptor: if self.descriptor.is_empty() {
                step.to_string()
            } else {
                format!("{};{step}", self.descriptor)
            },
        }
    }
}

/// Integer-valued features (e.g. 8-bit pixels), row-major.
#[derive(Debug, Clone)]
pub struct RawDataset {
    pub features: Vec<u8>,
    pub labels: Vec<usize>,
    pub feature_dim: usize,
    pub classes: usize,
    pub provenance: Provenance,
}

impl RawDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.features[i * self.feature_dim..(i + 1) * self.feature_dim]
    }
}

/// Real-valued features, row-major.
#[derive(Debug, Clone)]
pub struct RealDataset {
    pub features: Vec<f64>,
    pub labels: Vec<usize>,
    pub feature_dim: usize,
    pub classes: usize,
    pub provenance: Provenance,
}

impl RealDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.feature_dim..(i + 1) * self.feature_dim]
    }
}

#[derive(Debug, Clone)]
pub struct LabeledBinaryDataset {
    samples: Vec<BinaryHypervector>,
    labels: Vec<usize>,
    input_dim: usize,
    classes: usize,
    provenance: Provenance,
}

impl LabeledBinaryDataset {
    pub fn new(
        samples: Vec<BinaryHypervector>,
        labels: Vec<usize>,
        classes: usize,
        provenance: Provenance,
    ) -> Result<Self> {
        if samples.len() != labels.len() {
            return Err(HdcError::DimensionMismatch {
                left: samples.len(),
                right: labels.len(),
            });
        }
        let input_dim = samples.first().map(|s| s.dim()).unwrap_or(0);
        for s in &samples {
            if s.dim() != input_dim {
                return Err(HdcError::DimensionMismatch {
                    left: s.dim(),
                    right: input_dim,
                });
            }
        }
        if let Some((index, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= classes) {
            return Err(HdcError::LabelOutOfRange {
                index,
                label,
                classes,
            });
        }
        Ok(Self {
            samples,
            labels,
            input_dim,
            classes,
            provenance,
        })
    }

    pub fn samples(&self) -> &[BinaryHypervector] {
        &self.samples
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// First `n` samples (all of them if `n >= len`).
    pub fn head(&self, n: usize) -> Self {
        let n = n.min(self.len());
        Self {
            samples: self.samples[..n].to_vec(),
            labels: self.labels[..n].to_vec(),
            input_dim: self.input_dim,
            classes: self.classes,
            provenance: self.provenance.with_step(&format!("head={n}")),
        }
    }
}
