//! Binarization of raw features into encoder inputs.

use super::{LabeledBinaryDataset, RawDataset, RealDataset};
use crate::error::{DataError, HdcError, Result};
use crate::hv::{BinaryHypervector, WORD_BITS};

#[derive(Debug, Clone, PartialEq)]
pub enum QuantizerSpec {
    /// Bit = 1 iff pixel > threshold.
    PixelThreshold { threshold: u8 },
    /// `levels` ordered bits per feature; bit `q` of feature `f` is 1 iff
    /// `v > min[f] + (q + 1) (max[f] - min[f]) / (levels + 1)`.
    Thermometer {
        levels: usize,
        min: Vec<f64>,
        max: Vec<f64>,
    },
}

impl QuantizerSpec {
    pub const DEFAULT_PIXEL_THRESHOLD: u8 = 127;
    pub const DEFAULT_LEVELS: usize = 8;

    /// Thermometer ranges fitted on `train` only. Constant features get a
    /// unit-wide range centred on their value.
    pub fn fit_thermometer(train: &RealDataset, levels: usize) -> Result<Self> {
        if levels == 0 {
            return Err(DataError::Quantizer("levels must be >= 1".into()).into());
        }
        let f = train.feature_dim;
        let mut min = vec![f64::INFINITY; f];
        let mut max = vec![f64::NEG_INFINITY; f];
        for r in 0..train.len() {
            for (c, &v) in train.row(r).iter().enumerate() {
                if v.is_nan() {
                    return Err(DataError::NanFeature { row: r, column: c }.into());
                }
                min[c] = min[c].min(v);
                max[c] = max[c].max(v);
            }
        }
        for c in 0..f {
            if !(min[c] < max[c]) {
                let centre = if min[c].is_finite() { min[c] } else { 0.0 };
                min[c] = centre - 0.5;
                max[c] = centre + 0.5;
            }
        }
        Ok(Self::Thermometer { levels, min, max })
    }

    pub fn descriptor(&self) -> String {
        match self {
            Self::PixelThreshold { threshold } => format!("pixel>{threshold}"),
            Self::Thermometer { levels, .. } => format!("thermometer(levels={levels})"),
        }
    }
}

pub fn binarize_pixels(raw: &RawDataset, threshold: u8) -> Result<LabeledBinaryDataset> {
    let dim = raw.feature_dim;
    let samples = (0..raw.len())
        .map(|r| {
            let mut words = vec![0u64; dim.div_ceil(WORD_BITS)];
            for (i, &p) in raw.row(r).iter().enumerate() {
                if p > threshold {
                    words[i / WORD_BITS] |= 1 << (i % WORD_BITS);
                }
            }
            BinaryHypervector::from_words(dim, words)
        })
        .collect::<Result<Vec<_>>>()?;
    let spec = QuantizerSpec::PixelThreshold { threshold };
    LabeledBinaryDataset::new(
        samples,
        raw.labels.clone(),
        raw.classes,
        raw.provenance.with_step(&spec.descriptor()),
    )
}

pub fn thermometer_quantize(raw: &RealDataset, spec: &QuantizerSpec) -> Result<LabeledBinaryDataset> {
    let QuantizerSpec::Thermometer { levels, min, max } = spec else {
        return Err(DataError::Quantizer("thermometer_quantize needs a thermometer spec".into()).into());
    };
    let (levels, f) = (*levels, raw.feature_dim);
    if levels == 0 || min.len() != f || max.len() != f {
        return Err(DataError::Quantizer(format!(
            "spec covers {} features with {levels} levels, data has {f}",
            min.len()
        ))
        .into());
    }
    if let Some(c) = (0..f).find(|&c| !(min[c] < max[c])) {
        return Err(DataError::Quantizer(format!("feature {c}: min must be < max")).into());
    }
    let dim = f * levels;
    let mut samples = Vec::with_capacity(raw.len());
    for r in 0..raw.len() {
        let mut out = BinaryHypervector::zeros(dim)?;
        for (c, &v) in raw.row(r).iter().enumerate() {
            if v.is_nan() {
                return Err(HdcError::Data(DataError::NanFeature { row: r, column: c }));
            }
            let step = (max[c] - min[c]) / (levels + 1) as f64;
            for q in 0..levels {
                if v > min[c] + (q + 1) as f64 * step {
                    out.set_bit(c * levels + q, true);
                } else {
                    break;
                }
            }
        }
        samples.push(out);
    }
    LabeledBinaryDataset::new(
        samples,
        raw.labels.clone(),
        raw.classes,
        raw.provenance.with_step(&spec.descriptor()),
    )
}
