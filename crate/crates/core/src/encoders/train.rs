//! Straight-through-estimator training of [`LearnedEncoder`]s.
//!
//! The forward pass always uses the quantized integer weights and hard
//! `{0,1}` activations, so the trained network behaves exactly like the
//! deployed one. Gradients flow through rounding unchanged and through the
//! step activation according to [`SteMode`]. Optimisation is Adam on the
//! real shadow weights, which are clipped to `±weight_clip` after every step.
//!
//! Layers carrying batch-norm state are normalised with batch statistics
//! while training. Afterwards the exact population statistics are measured
//! layer by layer over the training set and folded into integer thresholds.

use crate::data::LabeledBinaryDataset;
use crate::encoders::learned::{DenseBinaryLayer, LearnedEncoder, OpCounter};
use crate::error::{HdcError, Result};
use crate::hv::{random_hv, BinaryHypervector};
use crate::rng::SplittableRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// Temporary real linear head `d -> K` with softmax cross-entropy.
    AuxHeadCrossEntropy,
    /// Mean squared error between output bits and a per-class target code.
    /// Trained from scratch the targets are seeded random codes.
    MseToPrototype,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LrSchedule {
    Constant,
    /// Cosine decay from the base rate to zero over all optimiser steps.
    Cosine,
}

/// Gradient of the step activation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SteMode {
    /// Gradient passes unchanged.
    Identity,
    /// Gradient passes only where the normalised pre-activation lies in
    /// `[-width, width]`. Batch-norm layers use their normalised output;
    /// other layers divide by the per-unit batch standard deviation.
    Clipped(f32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    pub layers: usize,
    /// Hidden width of a 2-layer encoder; `None` means `dim`.
    pub hidden_dim: Option<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f32,
    pub schedule: LrSchedule,
    pub weight_clip: f32,
    pub seed: u64,
    pub objective: Objective,
    pub ste: SteMode,
    /// Batch norm on every layer; `None` means "only for 2+ layers".
    pub batch_norm: Option<bool>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dim: 64,
            layers: 1,
            hidden_dim: None,
            epochs: 20,
            batch_size: 64,
            learning_rate: 1e-3,
            schedule: LrSchedule::Constant,
            weight_clip: 127.0,
            seed: 0,
            objective: Objective::AuxHeadCrossEntropy,
            ste: SteMode::Identity,
            batch_norm: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(HdcError::InvalidArgument(m.to_string()));
        if self.dim == 0 {
            return bad("dim must be positive");
        }
        if !(1..=2).contains(&self.layers) {
            return bad("layers must be 1 or 2");
        }
        if self.hidden_dim == Some(0) {
            return bad("hidden_dim must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return bad("learning_rate must be positive");
        }
        if !(self.weight_clip >= 1.0) {
            return bad("weight_clip must be >= 1");
        }
        if let SteMode::Clipped(w) = self.ste {
            if !(w > 0.0) {
                return bad("STE clip width must be positive");
            }
        }
        Ok(())
    }

    /// Output widths of every layer.
    pub fn layer_dims(&self) -> Vec<usize> {
        match self.layers {
            1 => vec![self.dim],
            _ => vec![self.hidden_dim.unwrap_or(self.dim), self.dim],
        }
    }

    pub fn uses_batch_norm(&self) -> bool {
        self.batch_norm.unwrap_or(self.layers > 1)
    }
}

/// Mean loss per epoch, reported through the progress callback.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
}

pub fn train_encoder(train: &LabeledBinaryDataset, cfg: &TrainConfig) -> Result<LearnedEncoder> {
    train_encoder_with_progress(train, cfg, &mut |_| {})
}

pub fn train_encoder_with_progress(
    train: &LabeledBinaryDataset,
    cfg: &TrainConfig,
    progress: &mut dyn FnMut(EpochStats),
) -> Result<LearnedEncoder> {
    cfg.validate()?;
    check_dataset(train)?;
    let root = SplittableRng::new(cfg.seed);
    let mut enc = LearnedEncoder::random_binary(
        train.input_dim(),
        &cfg.layer_dims(),
        cfg.weight_clip,
        cfg.uses_batch_norm(),
        &mut root.named("weights"),
    )?;
    if cfg.epochs == 0 {
        return Ok(enc);
    }
    let head = match cfg.objective {
        Objective::AuxHeadCrossEntropy => {
            Head::linear(cfg.dim, train.classes(), &mut root.named("head"))
        }
        Objective::MseToPrototype => {
            let mut rng = root.named("codes");
            let codes = (0..train.classes())
                .map(|_| random_hv(cfg.dim, &mut rng))
                .collect::<Result<Vec<_>>>()?;
            Head::targets(&codes)
        }
    };
    fit(&mut enc, train, cfg, head, progress)?;
    Ok(enc)
}

/// Continues training `enc` with squared error towards `targets[label]`
/// (retraining step 1). Only `epochs`, `batch_size`, `learning_rate`,
/// `seed` and `ste` of `cfg` are used.
pub fn fit_to_targets(
    enc: &LearnedEncoder,
    train: &LabeledBinaryDataset,
    targets: &[BinaryHypervector],
    cfg: &TrainConfig,
    progress: &mut dyn FnMut(EpochStats),
) -> Result<LearnedEncoder> {
    check_dataset(train)?;
    if train.input_dim() != enc.input_dim() {
        return Err(HdcError::DimensionMismatch {
            left: train.input_dim(),
            right: enc.input_dim(),
        });
    }
    if targets.len() != train.classes() {
        return Err(HdcError::DimensionMismatch {
            left: targets.len(),
            right: train.classes(),
        });
    }
    if let Some(t) = targets.iter().find(|t| t.dim() != enc.output_dim()) {
        return Err(HdcError::DimensionMismatch {
            left: t.dim(),
            right: enc.output_dim(),
        });
    }
    let mut out = enc.clone();
    if cfg.epochs == 0 {
        return Ok(out);
    }
    let cfg = TrainConfig {
        dim: enc.output_dim(),
        weight_clip: enc.layers()[0].weight_clip(),
        ..cfg.clone()
    };
    if cfg.batch_size == 0 || !(cfg.learning_rate > 0.0) {
        return Err(HdcError::InvalidArgument(
            "batch_size and learning_rate must be positive".into(),
        ));
    }
    fit(&mut out, train, &cfg, Head::targets(targets), progress)?;
    Ok(out)
}

fn check_dataset(train: &LabeledBinaryDataset) -> Result<()> {
    if train.is_empty() {
        return Err(HdcError::Empty("training set"));
    }
    if let Some((index, &label)) = train
        .labels()
        .iter()
        .enumerate()
        .find(|(_, &l)| l >= train.classes())
    {
        return Err(HdcError::LabelOutOfRange {
            index,
            label,
            classes: train.classes(),
        });
    }
    Ok(())
}

/// Adam moments for one parameter tensor.
struct Adam {
    m: Vec<f32>,
    v: Vec<f32>,
}

const BETA1: f32 = 0.9;
const BETA2: f32 = 0.999;
const ADAM_EPS: f32 = 1e-8;

impl Adam {
    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    fn step(&mut self, params: &mut [f32], grads: &[f32], lr: f32, t: i32) {
        let c1 = 1.0 - BETA1.powi(t);
        let c2 = 1.0 - BETA2.powi(t);
        for ((p, &g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = BETA1 * *m + (1.0 - BETA1) * g;
            *v = BETA2 * *v + (1.0 - BETA2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPS);
        }
    }
}

enum Head {
    Linear {
        classes: usize,
        /// `classes x d`, row-major.
        w: Vec<f32>,
        b: Vec<f32>,
        gw: Vec<f32>,
        gb: Vec<f32>,
        adam_w: Adam,
        adam_b: Adam,
    },
    Targets {
        /// `classes x d` bits as floats.
        codes: Vec<f32>,
    },
}

impl Head {
    /// Uniform `±1/sqrt(d)` initialisation for weights and bias.
    fn linear(d: usize, classes: usize, rng: &mut SplittableRng) -> Self {
        let bound = 1.0 / (d as f64).sqrt();
        let mut draw = || ((rng.next_f64() * 2.0 - 1.0) * bound) as f32;
        let w = (0..classes * d).map(|_| draw()).collect();
        let b = (0..classes).map(|_| draw()).collect();
        Self::Linear {
            classes,
            w,
            b,
            gw: vec![0.0; classes * d],
            gb: vec![0.0; classes],
            adam_w: Adam::new(classes * d),
            adam_b: Adam::new(classes),
        }
    }

    fn targets(codes: &[BinaryHypervector]) -> Self {
        Self::Targets {
            codes: codes
                .iter()
                .flat_map(|c| c.to_bits().into_iter().map(|b| b as u8 as f32))
                .collect(),
        }
    }

    /// Loss of the batch and `dL/dh` (`rows x d`).
    fn backward(&mut self, h: &[Vec<u32>], labels: &[usize], d: usize, dh: &mut [f32]) -> f64 {
        let rows = h.len();
        dh.iter_mut().for_each(|g| *g = 0.0);
        match self {
            Head::Linear {
                classes,
                w,
                b,
                gw,
                gb,
                ..
            } => {
                let k = *classes;
                gw.iter_mut().for_each(|g| *g = 0.0);
                gb.iter_mut().for_each(|g| *g = 0.0);
                let mut loss = 0.0f64;
                let mut logits = vec![0.0f32; k];
                for (r, active) in h.iter().enumerate() {
                    for c in 0..k {
                        let row = &w[c * d..(c + 1) * d];
                        logits[c] = b[c] + active.iter().map(|&j| row[j as usize]).sum::<f32>();
                    }
                    let max = logits.iter().cloned().fold(f32::NEG_INFINITY, f32::max);
                    let z: f32 = logits.iter().map(|&l| (l - max).exp()).sum();
                    loss += (z.ln() + max - logits[labels[r]]) as f64;
                    let dhr = &mut dh[r * d..(r + 1) * d];
                    for c in 0..k {
                        let p = (logits[c] - max).exp() / z;
                        let g = (p - (c == labels[r]) as u8 as f32) / rows as f32;
                        gb[c] += g;
                        let row = &w[c * d..(c + 1) * d];
                        for (x, &wv) in dhr.iter_mut().zip(row) {
                            *x += g * wv;
                        }
                        let grow = &mut gw[c * d..(c + 1) * d];
                        for &j in active {
                            grow[j as usize] += g;
                        }
                    }
                }
                loss / rows as f64
            }
            Head::Targets { codes } => {
                let scale = 2.0 / (rows * d) as f32;
                let mut loss = 0.0f64;
                for (r, active) in h.iter().enumerate() {
                    let t = &codes[labels[r] * d..(labels[r] + 1) * d];
                    let dhr = &mut dh[r * d..(r + 1) * d];
                    let mut on = vec![false; d];
                    for &j in active {
                        on[j as usize] = true;
                    }
                    for j in 0..d {
                        let diff = on[j] as u8 as f32 - t[j];
                        loss += (diff * diff) as f64;
                        dhr[j] = scale * diff;
                    }
                }
                loss / (rows * d) as f64
            }
        }
    }

    fn step(&mut self, lr: f32, t: i32) {
        if let Head::Linear {
            w,
            b,
            gw,
            gb,
            adam_w,
            adam_b,
            ..
        } = self
        {
            adam_w.step(w, gw, lr, t);
            adam_b.step(b, gb, lr, t);
        }
    }
}

/// Per-layer optimiser state and batch buffers.
struct LayerTrainer {
    adam_w: Adam,
    adam_gamma: Adam,
    adam_beta: Adam,
    gw: Vec<f32>,
    ggamma: Vec<f32>,
    gbeta: Vec<f32>,
    /// Forward records (`rows x out`): normalised pre-activation and the
    /// batch-norm `xhat` (equal to it without batch norm).
    z: Vec<f32>,
    xhat: Vec<f32>,
    /// Per-unit batch standard deviation of the raw pre-activation.
    std: Vec<f32>,
}

impl LayerTrainer {
    fn new(layer: &DenseBinaryLayer) -> Self {
        let (n, out) = (layer.in_dim() * layer.out_dim(), layer.out_dim());
        Self {
            adam_w: Adam::new(n),
            adam_gamma: Adam::new(out),
            adam_beta: Adam::new(out),
            gw: vec![0.0; n],
            ggamma: vec![0.0; out],
            gbeta: vec![0.0; out],
            z: Vec::new(),
            xhat: Vec::new(),
            std: vec![0.0; out],
        }
    }
}

const BN_EPS: f32 = 1e-5;

/// Training-mode forward of one layer over a batch of sparse inputs.
/// Returns the active output indices per row.
fn forward_layer(layer: &DenseBinaryLayer, st: &mut LayerTrainer, input: &[Vec<u32>]) -> Vec<Vec<u32>> {
    let (rows, out) = (input.len(), layer.out_dim());
    let mut a = vec![0.0f32; rows * out];
    let mut acc = vec![0i32; out];
    for (r, active) in input.iter().enumerate() {
        acc.iter_mut().for_each(|x| *x = 0);
        for &i in active {
            let w = &layer.quantized[i as usize * out..(i as usize + 1) * out];
            for (x, &wv) in acc.iter_mut().zip(w) {
                *x += wv;
            }
        }
        for (dst, &x) in a[r * out..(r + 1) * out].iter_mut().zip(&acc) {
            *dst = x as f32;
        }
    }
    st.z.resize(rows * out, 0.0);
    st.xhat.resize(rows * out, 0.0);
    for j in 0..out {
        let mean = (0..rows).map(|r| a[r * out + j] as f64).sum::<f64>() / rows as f64;
        let var = (0..rows)
            .map(|r| (a[r * out + j] as f64 - mean).powi(2))
            .sum::<f64>()
            / rows as f64;
        match &layer.bn {
            Some(bn) => {
                let s = (var + BN_EPS as f64).sqrt();
                st.std[j] = s as f32;
                for r in 0..rows {
                    let xh = ((a[r * out + j] as f64 - mean) / s) as f32;
                    st.xhat[r * out + j] = xh;
                    st.z[r * out + j] = bn.gamma[j] * xh + bn.beta[j];
                }
            }
            None => {
                st.std[j] = (var.sqrt() + 1e-6) as f32;
                let t = layer.threshold[j] as f32;
                for r in 0..rows {
                    let v = a[r * out + j] - t;
                    let v = if layer.below[j] { -v } else { v };
                    st.xhat[r * out + j] = v;
                    st.z[r * out + j] = v;
                }
            }
        }
    }
    (0..rows)
        .map(|r| {
            (0..out as u32)
                .filter(|&j| st.z[r * out + j as usize] > 0.0)
                .collect()
        })
        .collect()
}

/// Backward of one layer. `dh` is `dL/dh_out` (`rows x out`); gradients of
/// the weights (and batch-norm affine) are written into `st`, and `dL/dh_in`
/// (`rows x in`) into `dx` when given.
fn backward_layer(
    layer: &DenseBinaryLayer,
    st: &mut LayerTrainer,
    input: &[Vec<u32>],
    dh: &[f32],
    ste: SteMode,
    dx: Option<&mut [f32]>,
) {
    let (rows, out, inp) = (input.len(), layer.out_dim(), layer.in_dim());
    let mut dz = dh.to_vec();
    if let SteMode::Clipped(width) = ste {
        for r in 0..rows {
            for j in 0..out {
                let k = r * out + j;
                let u = if layer.bn.is_some() {
                    st.z[k]
                } else {
                    st.z[k] / st.std[j]
                };
                if u.abs() > width {
                    dz[k] = 0.0;
                }
            }
        }
    }
    let mut da = vec![0.0f32; rows * out];
    match &layer.bn {
        Some(bn) => {
            for j in 0..out {
                let (mut sg, mut sb, mut sdx, mut sdxx) = (0.0f32, 0.0f32, 0.0f32, 0.0f32);
                for r in 0..rows {
                    let k = r * out + j;
                    sg += dz[k] * st.xhat[k];
                    sb += dz[k];
                    let dxh = dz[k] * bn.gamma[j];
                    sdx += dxh;
                    sdxx += dxh * st.xhat[k];
                }
                st.ggamma[j] = sg;
                st.gbeta[j] = sb;
                let n = rows as f32;
                for r in 0..rows {
                    let k = r * out + j;
                    let dxh = dz[k] * bn.gamma[j];
                    da[k] = (n * dxh - sdx - st.xhat[k] * sdxx) / (n * st.std[j]);
                }
            }
        }
        None => {
            for r in 0..rows {
                for j in 0..out {
                    let k = r * out + j;
                    da[k] = if layer.below[j] { -dz[k] } else { dz[k] };
                }
            }
        }
    }
    st.gw.iter_mut().for_each(|g| *g = 0.0);
    for (r, active) in input.iter().enumerate() {
        let dar = &da[r * out..(r + 1) * out];
        for &i in active {
            let g = &mut st.gw[i as usize * out..(i as usize + 1) * out];
            for (x, &d) in g.iter_mut().zip(dar) {
                *x += d;
            }
        }
    }
    if let Some(dx) = dx {
        for r in 0..rows {
            let dar = &da[r * out..(r + 1) * out];
            for i in 0..inp {
                let w = &layer.quantized[i * out..(i + 1) * out];
                dx[r * inp + i] = w.iter().zip(dar).map(|(&wv, &d)| wv as f32 * d).sum();
            }
        }
    }
}

fn apply_step(layer: &mut DenseBinaryLayer, st: &mut LayerTrainer, lr: f32, t: i32) {
    st.adam_w.step(&mut layer.shadow, &st.gw, lr, t);
    let clip = layer.weight_clip;
    for w in &mut layer.shadow {
        *w = w.clamp(-clip, clip);
    }
    layer.requantize();
    if let Some(bn) = &mut layer.bn {
        st.adam_gamma.step(&mut bn.gamma, &st.ggamma, lr, t);
        st.adam_beta.step(&mut bn.beta, &st.gbeta, lr, t);
    }
}

fn fit(
    enc: &mut LearnedEncoder,
    train: &LabeledBinaryDataset,
    cfg: &TrainConfig,
    mut head: Head,
    progress: &mut dyn FnMut(EpochStats),
) -> Result<()> {
    let inputs: Vec<Vec<u32>> = train
        .samples()
        .iter()
        .map(|s| s.ones_iter().map(|i| i as u32).collect())
        .collect();
    let labels = train.labels();
    let d = enc.output_dim();
    let mut states: Vec<LayerTrainer> = enc.layers().iter().map(LayerTrainer::new).collect();
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut shuffle = SplittableRng::new(cfg.seed).named("shuffle");
    let total_steps = (cfg.epochs * train.len().div_ceil(cfg.batch_size)) as f64;
    let mut t = 0i32;
    for epoch in 0..cfg.epochs {
        shuffle.shuffle(&mut order);
        let mut loss_sum = 0.0f64;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let x: Vec<Vec<u32>> = chunk.iter().map(|&i| inputs[i].clone()).collect();
            let y: Vec<usize> = chunk.iter().map(|&i| labels[i]).collect();
            let mut acts = vec![x];
            for (layer, st) in enc.layers().iter().zip(states.iter_mut()) {
                let h = forward_layer(layer, st, acts.last().expect("input"));
                acts.push(h);
            }
            let mut dh = vec![0.0f32; chunk.len() * d];
            loss_sum += head.backward(acts.last().expect("output"), &y, d, &mut dh);
            batches += 1;
            for l in (0..enc.layers().len()).rev() {
                let layer = &enc.layers()[l];
                let mut dx = (l > 0).then(|| vec![0.0f32; chunk.len() * layer.in_dim()]);
                backward_layer(layer, &mut states[l], &acts[l], &dh, cfg.ste, dx.as_deref_mut());
                if let Some(dx) = dx {
                    dh = dx;
                }
            }
            let lr = match cfg.schedule {
                LrSchedule::Constant => cfg.learning_rate,
                LrSchedule::Cosine => {
                    let progress = t as f64 / total_steps;
                    (cfg.learning_rate as f64 * 0.5 * (1.0 + (std::f64::consts::PI * progress).cos())) as f32
                }
            };
            t += 1;
            for (layer, st) in enc.layers_mut().iter_mut().zip(states.iter_mut()) {
                apply_step(layer, st, lr, t);
            }
            head.step(lr, t);
        }
        progress(EpochStats {
            epoch,
            loss: loss_sum / batches.max(1) as f64,
        });
    }
    calibrate_batch_norm(enc, train.samples());
    Ok(())
}

/// Sets every batch-norm layer's mean/var to the exact population
/// statistics of its integer pre-activation over `samples` (earlier layers
/// already folded), then folds it into thresholds.
pub fn calibrate_batch_norm(enc: &mut LearnedEncoder, samples: &[BinaryHypervector]) {
    let mut h: Vec<BinaryHypervector> = samples.to_vec();
    let mut ops = OpCounter::default();
    for layer in enc.layers_mut() {
        if layer.bn.is_some() && !h.is_empty() {
            let out = layer.out_dim();
            let mut sum = vec![0.0f64; out];
            let mut sq = vec![0.0f64; out];
            let mut acc = vec![0i32; out];
            for x in &h {
                layer.preactivations(x, &mut acc, &mut ops);
                for j in 0..out {
                    sum[j] += acc[j] as f64;
                    sq[j] += (acc[j] as f64).powi(2);
                }
            }
            let n = h.len() as f64;
            let bn = layer.bn.as_mut().expect("checked");
            bn.eps = BN_EPS;
            for j in 0..out {
                let mean = sum[j] / n;
                bn.mean[j] = mean as f32;
                bn.var[j] = (sq[j] / n - mean * mean).max(0.0) as f32;
            }
            layer.fold_in_place();
        }
        h = h.iter().map(|x| layer.forward(x, &mut ops)).collect();
    }
}
