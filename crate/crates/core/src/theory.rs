//! Dimension-accuracy analysis for binary support vectors.
//!
//! Two classes with real support vectors `R1, R2` are approximated by binary
//! vectors. The probability that both pairs order a uniform point of the
//! unit ball the same way is `1 - phi / pi`, where `phi` is the angle between
//! the difference vectors. Choosing the best ternary difference reduces to an
//! order-statistic supremum ([`lemma2_sup`]).

use std::f64::consts::PI;

use rand_distr::{Distribution, StandardNormal};

use crate::error::{HdcError, Result};
use crate::rng::SplittableRng;

/// Samples drawn from one child stream in Monte Carlo loops.
const BLOCK: usize = 1 << 16;
const CLAMP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TheoryKind {
    Worst,
    Average,
}

impl TheoryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Worst => "worst",
            Self::Average => "average",
        }
    }
}

/// Accuracy at one dimension; `stderr == 0` for closed forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryResult {
    pub kind: TheoryKind,
    pub d: usize,
    pub value: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub seed: u64,
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl Estimate {
    fn from_moments(sum: f64, sum_sq: f64, n: usize) -> Self {
        let mean = sum / n as f64;
        let var = if n > 1 {
            ((sum_sq - n as f64 * mean * mean) / (n - 1) as f64).max(0.0)
        } else {
            0.0
        };
        Self {
            mean,
            stderr: (var / n as f64).sqrt(),
            n,
        }
    }
}

/// `arccos` with arguments within `1e-12` of `[-1, 1]` clamped onto it.
pub fn clamped_acos(x: f64) -> Result<f64> {
    if !(x >= -1.0 - CLAMP_TOL && x <= 1.0 + CLAMP_TOL) {
        return Err(HdcError::InvalidArgument(format!("arccos argument {x} outside [-1, 1]")));
    }
    Ok(x.clamp(-1.0, 1.0).acos())
}

fn accuracy_from_cos(c: f64) -> Result<f64> {
    Ok(1.0 - clamped_acos(c)? / PI)
}

/// `(sqrt(j) - sqrt(j-1))^2` in the cancellation-free form.
fn construction_coord(j: usize) -> f64 {
    1.0 / ((j as f64).sqrt() + ((j - 1) as f64).sqrt())
}

/// Closed-form worst-case two-class accuracy at dimension `d`:
/// `1 - arccos(1 / sqrt(sum_j (sqrt j - sqrt(j-1))^2)) / pi`.
pub fn worst_case_accuracy(d: usize) -> Result<TheoryResult> {
    if d == 0 {
        return Err(HdcError::InvalidDimension(0));
    }
    let s: f64 = (1..=d).map(|j| construction_coord(j).powi(2)).sum();
    Ok(TheoryResult {
        kind: TheoryKind::Worst,
        d,
        value: accuracy_from_cos(1.0 / s.sqrt())?,
        stderr: 0.0,
        n_samples: 0,
        seed: 0,
    })
}

/// Worst-case accuracy for every `d` in `1..=max_d`, sharing one running sum.
pub fn worst_case_curve(max_d: usize) -> Result<Vec<f64>> {
    let mut s = 0.0;
    (1..=max_d)
        .map(|j| {
            s += construction_coord(j).powi(2);
            accuracy_from_cos(1.0 / s.sqrt())
        })
        .collect()
}

/// Monte Carlo mean of the best binary accuracy for `R1, R2 ~ U[0,1]^d`.
/// Draws with `R1 == R2` are discarded and redrawn. Trial `t` uses child
/// stream `t` of the seed.
pub fn average_case_accuracy(d: usize, n_samples: usize, seed: u64) -> Result<TheoryResult> {
    if d == 0 {
        return Err(HdcError::InvalidDimension(0));
    }
    if n_samples == 0 {
        return Err(HdcError::InvalidArgument("n_samples must be >= 1".into()));
    }
    let root = SplittableRng::new(seed).named("mc");
    let (mut sum, mut sq) = (0.0, 0.0);
    let mut delta = vec![0.0; d];
    for t in 0..n_samples {
        let mut rng = root.split(t as u64);
        loop {
            for x in delta.iter_mut() {
                *x = rng.next_f64() - rng.next_f64();
            }
            if delta.iter().any(|&x| x != 0.0) {
                break;
            }
        }
        let (v, _) = lemma2_sup(&delta)?;
        let acc = accuracy_from_cos(v)?;
        sum += acc;
        sq += acc * acc;
    }
    let e = Estimate::from_moments(sum, sq, n_samples);
    Ok(TheoryResult {
        kind: TheoryKind::Average,
        d,
        value: e.mean,
        stderr: e.stderr,
        n_samples,
        seed,
    })
}

/// Mean of the off-diagonal entries of a `K x K` pairwise accuracy matrix.
pub fn quasi_accuracy(pairwise: &[Vec<f64>]) -> Result<f64> {
    let k = pairwise.len();
    if k < 2 {
        return Err(HdcError::InvalidArgument(format!("need K >= 2, got {k}")));
    }
    if let Some(row) = pairwise.iter().find(|r| r.len() != k) {
        return Err(HdcError::DimensionMismatch {
            left: row.len(),
            right: k,
        });
    }
    let mut total = 0.0;
    for (i, row) in pairwise.iter().enumerate() {
        for (j, &a) in row.iter().enumerate() {
            if i != j {
                total += a;
            }
        }
    }
    Ok(total / (k * (k - 1)) as f64)
}

fn difference(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(HdcError::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    if d.iter().all(|&x| x == 0.0) {
        return Err(HdcError::ZeroVector);
    }
    Ok(d)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Probability that `theta1 . x > theta2 . x` and `hat1 . x > hat2 . x`
/// for `x` uniform on the unit ball: `(1 - arccos(cos phi) / pi) / 2`.
pub fn lemma1_closed_form(theta1: &[f64], theta2: &[f64], hat1: &[f64], hat2: &[f64]) -> Result<f64> {
    let u = difference(theta1, theta2)?;
    let v = difference(hat1, hat2)?;
    if u.len() != v.len() {
        return Err(HdcError::DimensionMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    let c = dot(&u, &v) / (norm(&u) * norm(&v));
    Ok(0.5 * accuracy_from_cos(c)?)
}

/// Uniform point of the unit ball: Gaussian direction, radius `U^(1/d)`.
pub fn sample_unit_ball(rng: &mut SplittableRng, out: &mut [f64]) {
    let mut n2 = 0.0;
    while n2 == 0.0 {
        n2 = 0.0;
        for x in out.iter_mut() {
            *x = StandardNormal.sample(rng);
            n2 += *x * *x;
        }
    }
    let r = rng.next_f64().powf(1.0 / out.len() as f64) / n2.sqrt();
    out.iter_mut().for_each(|x| *x *= r);
}

/// Monte Carlo estimate of the double-indicator expectation of
/// [`lemma1_closed_form`].
pub fn lemma1_monte_carlo(
    theta1: &[f64],
    theta2: &[f64],
    hat1: &[f64],
    hat2: &[f64],
    n: usize,
    seed: u64,
) -> Result<Estimate> {
    if n == 0 {
        return Err(HdcError::InvalidArgument("n must be >= 1".into()));
    }
    let u = difference(theta1, theta2)?;
    let v = difference(hat1, hat2)?;
    if u.len() != v.len() {
        return Err(HdcError::DimensionMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    let root = SplittableRng::new(seed).named("mc");
    let mut x = vec![0.0; u.len()];
    let mut hits = 0usize;
    for block in 0..n.div_ceil(BLOCK) {
        let mut rng = root.split(block as u64);
        for _ in 0..BLOCK.min(n - block * BLOCK) {
            sample_unit_ball(&mut rng, &mut x);
            if dot(&u, &x) > 0.0 && dot(&v, &x) > 0.0 {
                hits += 1;
            }
        }
    }
    // indicator variable: sum == sum of squares
    Ok(Estimate::from_moments(hits as f64, hits as f64, n))
}

/// `sup_j sum_{i<=j} |delta|_(i) / (sqrt(j) ||delta||)` over prefixes of the
/// magnitudes sorted in descending order, with the smallest maximising `j`.
pub fn lemma2_sup(delta: &[f64]) -> Result<(f64, usize)> {
    if delta.is_empty() || delta.iter().all(|&x| x == 0.0) {
        return Err(HdcError::ZeroVector);
    }
    if delta.iter().any(|x| !x.is_finite()) {
        return Err(HdcError::InvalidArgument("non-finite coordinate".into()));
    }
    let mut mags: Vec<f64> = delta.iter().map(|x| x.abs()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    let n = norm(&mags);
    let (mut best, mut best_j, mut prefix) = (f64::NEG_INFINITY, 0, 0.0);
    for (i, &m) in mags.iter().enumerate() {
        prefix += m;
        let v = prefix / (((i + 1) as f64).sqrt() * n);
        if v > best {
            best = v;
            best_j = i + 1;
        }
    }
    Ok((best, best_j))
}

pub const LEMMA2_BRUTEFORCE_MAX_DIM: usize = 12;

/// Exhaustive maximum of the cosine between `delta` and every nonzero
/// vector in `{-1, 0, 1}^d`.
pub fn lemma2_bruteforce(delta: &[f64]) -> Result<f64> {
    if delta.len() > LEMMA2_BRUTEFORCE_MAX_DIM {
        return Err(HdcError::InvalidArgument(format!(
            "brute force limited to d <= {LEMMA2_BRUTEFORCE_MAX_DIM}, got {}",
            delta.len()
        )));
    }
    if delta.is_empty() || delta.iter().all(|&x| x == 0.0) {
        return Err(HdcError::ZeroVector);
    }
    fn walk(delta: &[f64], dot: f64, nnz: usize, best: &mut f64) {
        match delta.split_first() {
            None => {
                if nnz > 0 {
                    *best = best.max(dot / (nnz as f64).sqrt());
                }
            }
            Some((&x, rest)) => {
                walk(rest, dot - x, nnz + 1, best);
                walk(rest, dot, nnz, best);
                walk(rest, dot + x, nnz + 1, best);
            }
        }
    }
    let mut best = f64::NEG_INFINITY;
    walk(delta, 0.0, 0, &mut best);
    Ok(best / norm(delta))
}

/// Accuracy reached by the extremal pair `theta1 = (sqrt j - sqrt(j-1))_j`,
/// `theta2 = 0`, through [`lemma2_sup`]. Equals [`worst_case_accuracy`].
pub fn theorem1_construction_check(d: usize) -> Result<f64> {
    if d == 0 {
        return Err(HdcError::InvalidDimension(0));
    }
    let theta1: Vec<f64> = (1..=d).map(construction_coord).collect();
    let (v, _) = lemma2_sup(&theta1)?;
    accuracy_from_cos(v)
}

/// Smallest best-binary accuracy found over `trials` random pairs in
/// `[0,1]^d` (for certifying that no pair falls below the closed form).
pub fn lemma4_random_search(d: usize, trials: usize, seed: u64) -> Result<f64> {
    if d == 0 {
        return Err(HdcError::InvalidDimension(0));
    }
    let root = SplittableRng::new(seed).named("lemma4");
    let mut worst = f64::INFINITY;
    let mut delta = vec![0.0; d];
    for t in 0..trials {
        let mut rng = root.split(t as u64);
        loop {
            for x in delta.iter_mut() {
                *x = rng.next_f64() - rng.next_f64();
            }
            if delta.iter().any(|&x| x != 0.0) {
                break;
            }
        }
        worst = worst.min(accuracy_from_cos(lemma2_sup(&delta)?.0)?);
    }
    Ok(worst)
}

pub const PROJECTION_MAX_DIM: usize = 6;

/// Per-trial best accuracies when the binary vectors may only use `d`
/// of the `m` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionTable {
    pub m: usize,
    /// `accuracy[t][d - 1]` for trial `t`.
    pub accuracy: Vec<Vec<f64>>,
    /// Monte Carlo re-estimate of the best pair per `(t, d)`, when requested.
    pub monte_carlo: Option<Vec<Vec<Estimate>>>,
    pub seed: u64,
}

impl ProjectionTable {
    pub fn means(&self) -> Vec<f64> {
        (0..self.m)
            .map(|k| self.accuracy.iter().map(|r| r[k]).sum::<f64>() / self.accuracy.len() as f64)
            .collect()
    }

    /// Number of `(trial, d)` with `accuracy(d) > accuracy(d + 1)`.
    pub fn violations(&self) -> usize {
        self.accuracy
            .iter()
            .map(|r| r.windows(2).filter(|w| w[0] > w[1] + CLAMP_TOL).count())
            .sum()
    }
}

/// Best (accuracy, ternary difference) over all `{-1,0,1}` patterns on `coords`.
fn best_on_subset(delta: &[f64], coords: &[usize]) -> Result<(f64, Vec<f64>)> {
    let n = norm(delta);
    let mut best = (f64::NEG_INFINITY, Vec::new());
    let total = 3usize.pow(coords.len() as u32);
    let mut hat = vec![0.0; delta.len()];
    for code in 0..total {
        let mut c = code;
        let mut nnz = 0;
        for &k in coords {
            hat[k] = (c % 3) as f64 - 1.0;
            nnz += usize::from(hat[k] != 0.0);
            c /= 3;
        }
        if nnz == 0 {
            continue;
        }
        let cos = dot(delta, &hat) / (n * (nnz as f64).sqrt());
        let acc = accuracy_from_cos(cos)?;
        if acc > best.0 {
            best = (acc, hat.clone());
        }
    }
    Ok(best)
}

fn subsets(m: usize, d: usize) -> Vec<Vec<usize>> {
    (0u32..1 << m)
        .filter(|s| s.count_ones() as usize == d)
        .map(|s| (0..m).filter(|&k| s >> k & 1 == 1).collect())
        .collect()
}

/// For random `R1, R2 ~ U[0,1]^m` and each `d <= m`, the best accuracy over
/// every `d`-coordinate subset and every binary pair supported on it.
/// With `n_mc > 0` each winning pair is re-estimated by Monte Carlo.
pub fn projection_monotonicity(m: usize, trials: usize, n_mc: usize, seed: u64) -> Result<ProjectionTable> {
    if m == 0 || m > PROJECTION_MAX_DIM {
        return Err(HdcError::InvalidArgument(format!(
            "projection experiment needs 1 <= m <= {PROJECTION_MAX_DIM}, got {m}"
        )));
    }
    let root = SplittableRng::new(seed).named("projection");
    let mut accuracy = Vec::with_capacity(trials);
    let mut mc = Vec::new();
    for t in 0..trials {
        let mut rng = root.split(t as u64);
        let (r1, r2) = loop {
            let r1: Vec<f64> = (0..m).map(|_| rng.next_f64()).collect();
            let r2: Vec<f64> = (0..m).map(|_| rng.next_f64()).collect();
            if r1 != r2 {
                break (r1, r2);
            }
        };
        let delta = difference(&r1, &r2)?;
        let mut row = Vec::with_capacity(m);
        let mut mc_row = Vec::new();
        for d in 1..=m {
            let mut best = (f64::NEG_INFINITY, Vec::new());
            for s in subsets(m, d) {
                let cand = best_on_subset(&delta, &s)?;
                if cand.0 > best.0 {
                    best = cand;
                }
            }
            row.push(best.0);
            if n_mc > 0 {
                let zero = vec![0.0; m];
                let e = lemma1_monte_carlo(&r1, &r2, &best.1, &zero, n_mc, seed ^ ((t * m + d) as u64))?;
                mc_row.push(Estimate {
                    mean: 2.0 * e.mean,
                    stderr: 2.0 * e.stderr,
                    n: e.n,
                });
            }
        }
        accuracy.push(row);
        if n_mc > 0 {
            mc.push(mc_row);
        }
    }
    Ok(ProjectionTable {
        m,
        accuracy,
        monte_carlo: (n_mc > 0).then_some(mc),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worst_case_small_dims() {
        assert_eq!(worst_case_accuracy(1).unwrap().value, 1.0);
        // arccos(cos(pi/8)) = pi/8, so the value is 7/8
        assert!((worst_case_accuracy(2).unwrap().value - 0.875).abs() < 1e-12);
        assert!(worst_case_accuracy(0).is_err());
        let curve = worst_case_curve(50).unwrap();
        assert!((curve[1] - 0.875).abs() < 1e-12);
    }

    #[test]
    fn lemma1_closed_form_cases() {
        let z = [0.0, 0.0];
        let v = lemma1_closed_form(&[1.0, 0.0], &z, &[2.0, 0.0], &z).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
        let v = lemma1_closed_form(&[1.0, 0.0], &z, &[0.0, 3.0], &z).unwrap();
        assert!((v - 0.25).abs() < 1e-15);
        let v = lemma1_closed_form(&[1.0, 0.0], &z, &[-1.0, 0.0], &z).unwrap();
        assert!(v.abs() < 1e-15);
        assert!(matches!(lemma1_closed_form(&z, &z, &[1.0, 0.0], &z), Err(HdcError::ZeroVector)));
    }

    #[test]
    fn lemma2_examples() {
        let (v, j) = lemma2_sup(&[0.8, 0.6]).unwrap();
        assert!((v - 1.4 / 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(j, 2);
        assert!((lemma2_bruteforce(&[0.8, 0.6]).unwrap() - 1.4 / 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(lemma2_sup(&[1.0, 0.0, 0.0]).unwrap(), (1.0, 1));
        assert_eq!(lemma2_bruteforce(&[1.0, 0.0, 0.0]).unwrap(), 1.0);
        let (v, j) = lemma2_sup(&[-0.3; 5]).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        assert_eq!(j, 5);
        assert!(lemma2_bruteforce(&[0.1; 13]).is_err());
        assert!(lemma2_sup(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn average_case_d1_is_exact() {
        let r = average_case_accuracy(1, 50, 4).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(r.stderr, 0.0);
    }

    #[test]
    fn average_case_is_reproducible() {
        let a = average_case_accuracy(8, 200, 9).unwrap();
        let b = average_case_accuracy(8, 200, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn quasi_accuracy_cases() {
        let m = vec![vec![f64::NAN, 0.7, 0.7], vec![0.7, f64::NAN, 0.7], vec![0.7, 0.7, f64::NAN]];
        assert!((quasi_accuracy(&m).unwrap() - 0.7).abs() < 1e-15);
        assert!(quasi_accuracy(&[vec![1.0]]).is_err());
        let two = vec![vec![0.0, 0.9], vec![0.9, 0.0]];
        assert!((quasi_accuracy(&two).unwrap() - 0.9).abs() < 1e-15);
    }

    #[test]
    fn projection_full_dim_matches_unrestricted_sup() {
        let t = projection_monotonicity(3, 5, 0, 1).unwrap();
        let root = SplittableRng::new(1).named("projection");
        let mut rng = root.split(0);
        let r1: Vec<f64> = (0..3).map(|_| rng.next_f64()).collect();
        let r2: Vec<f64> = (0..3).map(|_| rng.next_f64()).collect();
        let delta: Vec<f64> = r1.iter().zip(&r2).map(|(a, b)| a - b).collect();
        let full = accuracy_from_cos(lemma2_sup(&delta).unwrap().0).unwrap();
        assert!((t.accuracy[0][2] - full).abs() < 1e-12);
        assert!(projection_monotonicity(7, 1, 0, 0).is_err());
    }

    #[test]
    fn projection_d1_picks_dominant_coordinate() {
        let delta = [0.0, 0.9, 0.1];
        let (acc, hat) = best_on_subset(&delta, &[1]).unwrap();
        assert_eq!(hat, vec![0.0, 1.0, 0.0]);
        let best_any = subsets(3, 1)
            .iter()
            .map(|s| best_on_subset(&delta, s).unwrap().0)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(acc, best_any);
    }
}
