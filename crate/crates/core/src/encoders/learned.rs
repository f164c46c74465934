//! Integer-weight, binary-activation fully-connected encoder.
//!
//! Inference is integer-only and multiplication-free: for every active input
//! bit the corresponding weight row is gathered and added, then each unit
//! fires iff its accumulator clears the unit threshold.

use crate::error::{HdcError, Result};
use crate::hv::{BinaryHypervector, WORD_BITS};
use crate::encoders::item_memory::ItemMemory;
use crate::rng::SplittableRng;

/// Per-unit batch-norm parameters and population statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormState {
    pub mean: Vec<f32>,
    pub var: Vec<f32>,
    pub gamma: Vec<f32>,
    pub beta: Vec<f32>,
    pub eps: f32,
}

impl BatchNormState {
    pub fn identity(units: usize) -> Self {
        Self {
            mean: vec![0.0; units],
            var: vec![1.0; units],
            gamma: vec![1.0; units],
            beta: vec![0.0; units],
            eps: 1e-5,
        }
    }

    /// Float reference decision for unit `j`: `gamma (a - mean) / sqrt(var + eps) + beta > 0`.
    pub fn fires(&self, j: usize, a: f64) -> bool {
        self.output(j, a) > 0.0
    }

    pub fn output(&self, j: usize, a: f64) -> f64 {
        let s = (self.var[j] as f64 + self.eps as f64).sqrt();
        self.gamma[j] as f64 * (a - self.mean[j] as f64) / s + self.beta[j] as f64
    }
}

/// Addition / comparison / multiplication tallies from an instrumented forward.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounter {
    pub additions: u64,
    pub comparisons: u64,
    pub multiplications: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseBinaryLayer {
    in_dim: usize,
    out_dim: usize,
    /// Real master weights, input-major: `shadow[i * out_dim + j]`.
    pub(crate) shadow: Vec<f32>,
    /// Forward weights, input-major, `round(shadow)` clamped to `±weight_clip`.
    pub(crate) quantized: Vec<i32>,
    pub(crate) threshold: Vec<i32>,
    /// `true`: unit fires iff `a < threshold`; `false`: iff `a > threshold`.
    pub(crate) below: Vec<bool>,
    pub(crate) bn: Option<BatchNormState>,
    pub(crate) weight_clip: f32,
}

#[inline]
pub(crate) fn quantize(w: f32, clip: f32) -> i32 {
    let c = clip.floor();
    w.round().clamp(-c, c) as i32
}

impl DenseBinaryLayer {
    /// Shadow weights drawn uniformly from `{-1, +1}`, zero thresholds.
    pub fn random_binary(
        in_dim: usize,
        out_dim: usize,
        weight_clip: f32,
        rng: &mut SplittableRng,
    ) -> Result<Self> {
        let shadow = (0..in_dim * out_dim)
            .map(|_| if rng.next_bit() { 1.0 } else { -1.0 })
            .collect();
        Self::from_shadow(in_dim, out_dim, shadow, weight_clip)
    }

    /// Layer from real weights in input-major order.
    pub fn from_shadow(
        in_dim: usize,
        out_dim: usize,
        shadow: Vec<f32>,
        weight_clip: f32,
    ) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(HdcError::InvalidArgument("layer dims must be positive".into()));
        }
        if shadow.len() != in_dim * out_dim {
            return Err(HdcError::DimensionMismatch {
                left: shadow.len(),
                right: in_dim * out_dim,
            });
        }
        if !(weight_clip >= 1.0) {
            return Err(HdcError::InvalidArgument(format!(
                "weight_clip must be >= 1, got {weight_clip}"
            )));
        }
        let mut layer = Self {
            in_dim,
            out_dim,
            quantized: vec![0; shadow.len()],
            shadow,
            threshold: vec![0; out_dim],
            below: vec![false; out_dim],
            bn: None,
            weight_clip,
        };
        layer.requantize();
        Ok(layer)
    }

    /// Integer-only layer (e.g. from a snapshot); the shadow copy mirrors the integers.
    pub fn from_integer(
        in_dim: usize,
        out_dim: usize,
        weights_row_major: &[i32],
        threshold: Vec<i32>,
        below: Vec<bool>,
    ) -> Result<Self> {
        if weights_row_major.len() != in_dim * out_dim
            || threshold.len() != out_dim
            || below.len() != out_dim
        {
            return Err(HdcError::InvalidArgument("inconsistent layer shapes".into()));
        }
        let clip = weights_row_major
            .iter()
            .map(|w| w.unsigned_abs())
            .max()
            .unwrap_or(1)
            .max(1) as f32;
        let mut quantized = vec![0i32; in_dim * out_dim];
        for j in 0..out_dim {
            for i in 0..in_dim {
                quantized[i * out_dim + j] = weights_row_major[j * in_dim + i];
            }
        }
        Ok(Self {
            in_dim,
            out_dim,
            shadow: quantized.iter().map(|&q| q as f32).collect(),
            quantized,
            threshold,
            below,
            bn: None,
            weight_clip: clip,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn weight_clip(&self) -> f32 {
        self.weight_clip
    }

    pub fn thresholds(&self) -> &[i32] {
        &self.threshold
    }

    pub fn below_flags(&self) -> &[bool] {
        &self.below
    }

    pub fn batch_norm(&self) -> Option<&BatchNormState> {
        self.bn.as_ref()
    }

    pub fn set_batch_norm(&mut self, bn: Option<BatchNormState>) {
        if let Some(b) = &bn {
            assert_eq!(b.mean.len(), self.out_dim);
        }
        self.bn = bn;
    }

    pub fn set_thresholds(&mut self, threshold: Vec<i32>, below: Vec<bool>) -> Result<()> {
        if threshold.len() != self.out_dim || below.len() != self.out_dim {
            return Err(HdcError::DimensionMismatch {
                left: threshold.len(),
                right: self.out_dim,
            });
        }
        self.threshold = threshold;
        self.below = below;
        Ok(())
    }

    /// Quantized weight of unit `j` for input `i`.
    #[inline]
    pub fn weight(&self, j: usize, i: usize) -> i32 {
        self.quantized[i * self.out_dim + j]
    }

    pub fn shadow_weight(&self, j: usize, i: usize) -> f32 {
        self.shadow[i * self.out_dim + j]
    }

    /// Weights as an `out x in` row-major matrix.
    pub fn weights_row_major(&self) -> Vec<i32> {
        let mut out = vec![0; self.in_dim * self.out_dim];
        for i in 0..self.in_dim {
            for j in 0..self.out_dim {
                out[j * self.in_dim + i] = self.quantized[i * self.out_dim + j];
            }
        }
        out
    }

    pub(crate) fn requantize(&mut self) {
        let clip = self.weight_clip;
        for (q, &w) in self.quantized.iter_mut().zip(&self.shadow) {
            *q = quantize(w, clip);
        }
    }

    /// Integer pre-activations `a_j = sum_{i: x_i = 1} W[j][i]`.
    pub fn preactivations(&self, input: &BinaryHypervector, acc: &mut [i32], ops: &mut OpCounter) {
        acc.iter_mut().for_each(|a| *a = 0);
        let mut active = 0u64;
        for i in input.ones_iter() {
            let row = &self.quantized[i * self.out_dim..(i + 1) * self.out_dim];
            for (a, &w) in acc.iter_mut().zip(row) {
                *a += w;
            }
            active += 1;
        }
        ops.additions += active * self.out_dim as u64;
    }

    #[inline]
    pub fn fires(&self, j: usize, a: i32) -> bool {
        if self.below[j] {
            a < self.threshold[j]
        } else {
            a > self.threshold[j]
        }
    }

    pub fn forward(&self, input: &BinaryHypervector, ops: &mut OpCounter) -> BinaryHypervector {
        let mut acc = vec![0i32; self.out_dim];
        self.preactivations(input, &mut acc, ops);
        let mut words = vec![0u64; self.out_dim.div_ceil(WORD_BITS)];
        for (j, &a) in acc.iter().enumerate() {
            if self.fires(j, a) {
                words[j / WORD_BITS] |= 1 << (j % WORD_BITS);
            }
        }
        ops.comparisons += self.out_dim as u64;
        BinaryHypervector::from_words(self.out_dim, words).expect("out_dim validated")
    }

    /// Replaces thresholds with the folded batch-norm decision (no-op without batch norm).
    pub(crate) fn fold_in_place(&mut self) {
        if let Some(bn) = &self.bn {
            for j in 0..self.out_dim {
                let (t, below) = Self::fold_unit(bn, j);
                self.threshold[j] = t;
                self.below[j] = below;
            }
        }
    }

    /// Threshold and direction for one unit from its batch-norm affine.
    fn fold_unit(bn: &BatchNormState, j: usize) -> (i32, bool) {
        let gamma = bn.gamma[j] as f64;
        let beta = bn.beta[j] as f64;
        let s = (bn.var[j] as f64 + bn.eps as f64).sqrt();
        if gamma == 0.0 {
            return if beta > 0.0 {
                (i32::MIN, false)
            } else {
                (i32::MAX, false)
            };
        }
        let t = bn.mean[j] as f64 - beta * s / gamma;
        let clamp = |v: f64| v.clamp(i32::MIN as f64, i32::MAX as f64) as i32;
        if gamma > 0.0 {
            // integer a: a > t  <=>  a > floor(t)
            (clamp(t.floor()), false)
        } else {
            // integer a: a < t  <=>  a < ceil(t)
            (clamp(t.ceil()), true)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnedEncoder {
    layers: Vec<DenseBinaryLayer>,
}

impl LearnedEncoder {
    pub fn new(layers: Vec<DenseBinaryLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(HdcError::Empty("encoder layers"));
        }
        for w in layers.windows(2) {
            if w[0].out_dim != w[1].in_dim {
                return Err(HdcError::DimensionMismatch {
                    left: w[0].out_dim,
                    right: w[1].in_dim,
                });
            }
        }
        Ok(Self { layers })
    }

    /// Binary-initialized encoder `input -> dims[0] -> dims[1] -> ...`.
    ///
    /// With `batch_norm`, every layer carries identity batch-norm state.
    pub fn random_binary(
        input_dim: usize,
        dims: &[usize],
        weight_clip: f32,
        batch_norm: bool,
        rng: &mut SplittableRng,
    ) -> Result<Self> {
        let mut layers = Vec::with_capacity(dims.len());
        let mut prev = input_dim;
        for &d in dims {
            let mut layer = DenseBinaryLayer::random_binary(prev, d, weight_clip, rng)?;
            if batch_norm {
                layer.bn = Some(BatchNormState::identity(d));
            }
            layers.push(layer);
            prev = d;
        }
        Self::new(layers)
    }

    /// One-layer encoder equivalent to the classic encoder on binary inputs.
    ///
    /// With two value vectors `v0, v1`, the classic pre-sign sum is
    /// `c + sum_{i: x_i = 1} (v1 - v0) (x) p_i` with `c = sum_i v0 (x) p_i`,
    /// so weights are `(v1 - v0) (x) p_i` (entries in {-2, 0, 2}) and the
    /// unit threshold is `-c`. Outputs agree wherever the classic sum is nonzero.
    pub fn from_item_memory(mem: &ItemMemory) -> Result<Self> {
        if mem.num_values() != 2 {
            return Err(HdcError::InvalidArgument(format!(
                "binary-input equivalence needs 2 value vectors, got {}",
                mem.num_values()
            )));
        }
        let d = mem.dim();
        let n = mem.num_positions();
        let mut weights = vec![0i32; d * n];
        let mut constant = vec![0i32; d];
        for i in 0..n {
            let p = mem.position(i);
            for j in 0..d {
                let pj = p.bipolar(j) as i32;
                let t0 = mem.value(0).bipolar(j) as i32 * pj;
                let t1 = mem.value(1).bipolar(j) as i32 * pj;
                weights[j * n + i] = t1 - t0;
                constant[j] += t0;
            }
        }
        let threshold = constant.iter().map(|c| -c).collect();
        let layer = DenseBinaryLayer::from_integer(n, d, &weights, threshold, vec![false; d])?;
        Self::new(vec![layer])
    }

    pub fn layers(&self) -> &[DenseBinaryLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseBinaryLayer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").out_dim
    }

    /// Layer widths including the input, e.g. `[784, 64, 64]`.
    pub fn shape(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(|l| l.out_dim))
            .collect()
    }

    pub fn has_batch_norm(&self) -> bool {
        self.layers.iter().any(|l| l.bn.is_some())
    }

    pub fn encode(&self, x: &BinaryHypervector) -> Result<BinaryHypervector> {
        self.encode_counted(x, &mut OpCounter::default())
    }

    pub fn encode_counted(
        &self,
        x: &BinaryHypervector,
        ops: &mut OpCounter,
    ) -> Result<BinaryHypervector> {
        if x.dim() != self.input_dim() {
            return Err(HdcError::DimensionMismatch {
                left: x.dim(),
                right: self.input_dim(),
            });
        }
        let mut h = self.layers[0].forward(x, ops);
        for layer in &self.layers[1..] {
            h = layer.forward(&h, ops);
        }
        Ok(h)
    }

    /// Encodes a dense `{0,1}` byte slice; any other byte value is rejected.
    pub fn encode_dense(&self, x: &[u8]) -> Result<BinaryHypervector> {
        if let Some(pos) = x.iter().position(|&b| b > 1) {
            return Err(HdcError::InvalidArgument(format!(
                "non-binary input {} at index {pos}",
                x[pos]
            )));
        }
        if x.is_empty() {
            return Err(HdcError::Empty("encoder input"));
        }
        let v = BinaryHypervector::from_bits(x.iter().map(|&b| b == 1))?;
        self.encode(&v)
    }

    pub fn encode_all(&self, xs: &[BinaryHypervector]) -> Result<Vec<BinaryHypervector>> {
        xs.iter().map(|x| self.encode(x)).collect()
    }
}

pub fn encode_learned(x: &BinaryHypervector, enc: &LearnedEncoder) -> Result<BinaryHypervector> {
    enc.encode(x)
}

/// Folds every layer's batch-norm affine into an integer threshold and
/// direction flag. The batch-norm state is kept so training can resume.
pub fn fold_batchnorm(enc: &LearnedEncoder) -> Result<LearnedEncoder> {
    if !enc.has_batch_norm() {
        return Err(HdcError::NoBatchNorm);
    }
    let mut out = enc.clone();
    for layer in &mut out.layers {
        layer.fold_in_place();
    }
    Ok(out)
}
