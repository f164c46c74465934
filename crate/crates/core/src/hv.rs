//! Bit-packed binary hypervectors.
//!
//! Storage is the `{0,1}` form packed into 64-bit words, least significant
//! bit first: logical bit `i` lives in word `i / 64` at bit position
//! `i % 64`. Padding bits past `dim` are always zero. The `{-1,+1}` form is a
//! view: bit `b` reads as `2b - 1`.

use std::fmt;

use crate::error::{HdcError, Result};
use crate::rng::SplittableRng;

pub const WORD_BITS: usize = 64;
pub const MAX_DIM: usize = 1 << 20;

#[inline]
pub fn words_for(dim: usize) -> usize {
    dim.div_ceil(WORD_BITS)
}

#[inline]
fn tail_mask(dim: usize) -> u64 {
    match dim % WORD_BITS {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || dim > MAX_DIM {
        Err(HdcError::InvalidDimension(dim))
    } else {
        Ok(())
    }
}

#[inline]
fn check_same(a: &BinaryHypervector, b: &BinaryHypervector) -> Result<()> {
    if a.dim != b.dim {
        Err(HdcError::DimensionMismatch {
            left: a.dim,
            right: b.dim,
        })
    } else {
        Ok(())
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryHypervector {
    dim: usize,
    words: Vec<u64>,
}

impl BinaryHypervector {
    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            words: vec![0; words_for(dim)],
        })
    }

    /// All bits set; the all-`+1` vector in the bipolar view.
    pub fn ones(dim: usize) -> Result<Self> {
        let mut v = Self::zeros(dim)?;
        v.words.iter_mut().for_each(|w| *w = u64::MAX);
        v.clear_padding();
        Ok(v)
    }

    /// Packs raw words; any padding bits in the last word are cleared.
    pub fn from_words(dim: usize, mut words: Vec<u64>) -> Result<Self> {
        check_dim(dim)?;
        if words.len() != words_for(dim) {
            return Err(HdcError::InvalidArgument(format!(
                "{} words cannot hold exactly {dim} bits",
                words.len()
            )));
        }
        if let Some(last) = words.last_mut() {
            *last &= tail_mask(dim);
        }
        Ok(Self { dim, words })
    }

    pub fn from_bits<I>(bits: I) -> Result<Self>
    where
        I: IntoIterator<Item = bool>,
    {
        let mut words = Vec::new();
        let mut dim = 0usize;
        for b in bits {
            if dim.is_multiple_of(WORD_BITS) {
                words.push(0);
            }
            if b {
                words[dim / WORD_BITS] |= 1u64 << (dim % WORD_BITS);
            }
            dim += 1;
        }
        check_dim(dim)?;
        Ok(Self { dim, words })
    }

    /// Builds from a `{-1,+1}` slice; any value other than -1/+1 is rejected.
    pub fn from_bipolar(values: &[i8]) -> Result<Self> {
        if let Some(pos) = values.iter().position(|&v| v != 1 && v != -1) {
            return Err(HdcError::InvalidArgument(format!(
                "bipolar value {} at index {pos}",
                values[pos]
            )));
        }
        Self::from_bits(values.iter().map(|&v| v == 1))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn bit(&self, i: usize) -> bool {
        debug_assert!(i < self.dim);
        (self.words[i / WORD_BITS] >> (i % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set_bit(&mut self, i: usize, value: bool) {
        assert!(i < self.dim, "bit {i} out of range for dim {}", self.dim);
        let mask = 1u64 << (i % WORD_BITS);
        if value {
            self.words[i / WORD_BITS] |= mask;
        } else {
            self.words[i / WORD_BITS] &= !mask;
        }
    }

    /// `{-1,+1}` value of coordinate `i`.
    #[inline]
    pub fn bipolar(&self, i: usize) -> i8 {
        if self.bit(i) {
            1
        } else {
            -1
        }
    }

    pub fn to_bits(&self) -> Vec<bool> {
        (0..self.dim).map(|i| self.bit(i)).collect()
    }

    pub fn to_bipolar(&self) -> Vec<i8> {
        (0..self.dim).map(|i| self.bipolar(i)).collect()
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Indices of set bits in increasing order.
    pub fn ones_iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    None
                } else {
                    let tz = rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    Some(wi * WORD_BITS + tz)
                }
            })
        })
    }

    pub fn complement(&self) -> Self {
        let mut out = Self {
            dim: self.dim,
            words: self.words.iter().map(|w| !w).collect(),
        };
        out.clear_padding();
        out
    }

    fn clear_padding(&mut self) {
        let mask = tail_mask(self.dim);
        if let Some(last) = self.words.last_mut() {
            *last &= mask;
        }
    }
}

impl fmt::Debug for BinaryHypervector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BinaryHypervector(dim={}, ", self.dim)?;
        let shown = self.dim.min(64);
        for i in 0..shown {
            f.write_str(if self.bit(i) { "1" } else { "0" })?;
        }
        if shown < self.dim {
            f.write_str("...")?;
        }
        f.write_str(")")
    }
}

/// Signed integer accumulator, e.g. class-sum counts before thresholding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntVector {
    values: Vec<i64>,
}

impl IntVector {
    pub fn zeros(dim: usize) -> Self {
        Self {
            values: vec![0; dim],
        }
    }

    pub fn from_values(values: Vec<i64>) -> Self {
        Self { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    /// Adds the `{0,1}` view of `v`.
    pub fn add_bits(&mut self, v: &BinaryHypervector) -> Result<()> {
        if v.dim() != self.dim() {
            return Err(HdcError::DimensionMismatch {
                left: self.dim(),
                right: v.dim(),
            });
        }
        for i in v.ones_iter() {
            self.values[i] += 1;
        }
        Ok(())
    }

    /// Adds the `{-1,+1}` view of `v`.
    pub fn add_bipolar(&mut self, v: &BinaryHypervector) -> Result<()> {
        if v.dim() != self.dim() {
            return Err(HdcError::DimensionMismatch {
                left: self.dim(),
                right: v.dim(),
            });
        }
        for (i, s) in self.values.iter_mut().enumerate() {
            *s += if v.bit(i) { 1 } else { -1 };
        }
        Ok(())
    }

    /// Sign with ties broken by one rng draw per zero coordinate, in
    /// increasing coordinate order.
    pub fn sign(&self, rng: &mut SplittableRng) -> Result<BinaryHypervector> {
        let mut out = BinaryHypervector::zeros(self.dim())?;
        for (i, &s) in self.values.iter().enumerate() {
            let bit = match s {
                s if s > 0 => true,
                s if s < 0 => false,
                _ => rng.next_bit(),
            };
            if bit {
                out.set_bit(i, true);
            }
        }
        Ok(out)
    }
}

/// Binding: elementwise product in the bipolar view, XNOR in the bit view.
pub fn bind(a: &BinaryHypervector, b: &BinaryHypervector) -> Result<BinaryHypervector> {
    check_same(a, b)?;
    let mut out = BinaryHypervector {
        dim: a.dim,
        words: a
            .words
            .iter()
            .zip(&b.words)
            .map(|(x, y)| !(x ^ y))
            .collect(),
    };
    out.clear_padding();
    Ok(out)
}

/// Majority rule: sign of the bipolar sum, ties drawn from `rng`.
///
/// The rng is consulted once per zero-sum coordinate, in coordinate order,
/// so an odd number of inputs never touches it.
pub fn bundle_majority(
    vs: &[BinaryHypervector],
    rng: &mut SplittableRng,
) -> Result<BinaryHypervector> {
    let first = vs.first().ok_or(HdcError::Empty("bundle_majority input"))?;
    let mut sums = IntVector::zeros(first.dim());
    for v in vs {
        sums.add_bipolar(v)?;
    }
    sums.sign(rng)
}

/// Number of differing coordinates (popcount of XOR).
pub fn hamming(a: &BinaryHypervector, b: &BinaryHypervector) -> Result<usize> {
    check_same(a, b)?;
    Ok(a.words
        .iter()
        .zip(&b.words)
        .map(|(x, y)| (x ^ y).count_ones() as usize)
        .sum())
}

/// Bipolar inner product, `dim - 2 * hamming`.
pub fn inner_pm1(a: &BinaryHypervector, b: &BinaryHypervector) -> Result<i64> {
    let h = hamming(a, b)? as i64;
    Ok(a.dim as i64 - 2 * h)
}

/// Classification score: `r` in its `{0,1}` view against `proto` in its
/// bipolar view, `sum_i r_i * (2 proto_i - 1)`.
///
/// Equals `2 * popcount(r & proto) - popcount(r)`.
#[inline]
pub fn sim_active(r: &BinaryHypervector, proto: &BinaryHypervector) -> Result<i64> {
    check_same(r, proto)?;
    Ok(sim_active_words(&r.words, &proto.words))
}

#[inline]
pub(crate) fn sim_active_words(r: &[u64], proto: &[u64]) -> i64 {
    let mut agree = 0i64;
    let mut active = 0i64;
    for (x, p) in r.iter().zip(proto) {
        agree += (x & p).count_ones() as i64;
        active += x.count_ones() as i64;
    }
    2 * agree - active
}

/// I.i.d. fair bits, 64 per rng draw.
pub fn random_hv(dim: usize, rng: &mut SplittableRng) -> Result<BinaryHypervector> {
    use rand::RngCore;
    check_dim(dim)?;
    let words = (0..words_for(dim)).map(|_| rng.next_u64()).collect();
    BinaryHypervector::from_words(dim, words)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(s: &str) -> BinaryHypervector {
        BinaryHypervector::from_bits(s.chars().map(|c| c == '1')).unwrap()
    }

    #[test]
    fn bind_bipolar_example() {
        let a = BinaryHypervector::from_bipolar(&[-1, 1, 1, -1]).unwrap();
        let b = BinaryHypervector::from_bipolar(&[1, 1, 1, -1]).unwrap();
        assert_eq!(bind(&a, &b).unwrap().to_bipolar(), vec![-1, 1, 1, 1]);
    }

    #[test]
    fn bind_bit_view_is_xnor() {
        // 0b1010 and 0b1100 written MSB-first; bit view XNOR gives 0b1001.
        let a = bits("1010");
        let b = bits("1100");
        assert_eq!(bind(&a, &b).unwrap(), bits("1001"));
    }

    #[test]
    fn bind_self_is_all_ones() {
        let mut rng = SplittableRng::new(9);
        let a = random_hv(130, &mut rng).unwrap();
        assert_eq!(bind(&a, &a).unwrap(), BinaryHypervector::ones(130).unwrap());
    }

    #[test]
    fn dimension_mismatch_names_both() {
        let a = BinaryHypervector::zeros(8).unwrap();
        let b = BinaryHypervector::zeros(9).unwrap();
        let err = bind(&a, &b).unwrap_err().to_string();
        assert!(err.contains('8') && err.contains('9'), "{err}");
        assert!(hamming(&a, &b).is_err());
        assert!(inner_pm1(&a, &b).is_err());
        assert!(sim_active(&a, &b).is_err());
    }

    #[test]
    fn bundle_forced_arithmetic() {
        let vs = [bits("11"), bits("10"), bits("10")];
        let mut rng = SplittableRng::new(0);
        assert_eq!(bundle_majority(&vs, &mut rng).unwrap(), bits("10"));
    }

    #[test]
    fn bundle_tie_is_reproducible() {
        let vs = [bits("10"), bits("01")];
        let a = bundle_majority(&vs, &mut SplittableRng::new(42)).unwrap();
        let b = bundle_majority(&vs, &mut SplittableRng::new(42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bundle_single_is_identity_and_empty_errors() {
        let mut rng = SplittableRng::new(1);
        let v = random_hv(77, &mut rng).unwrap();
        assert_eq!(bundle_majority(std::slice::from_ref(&v), &mut rng).unwrap(), v);
        assert!(bundle_majority(&[], &mut rng).is_err());
    }

    #[test]
    fn bundle_odd_count_never_draws() {
        let mut rng = SplittableRng::new(3);
        let vs: Vec<_> = (0..5).map(|_| random_hv(100, &mut rng).unwrap()).collect();
        let mut tie_rng = SplittableRng::new(11);
        let untouched = tie_rng.clone();
        bundle_majority(&vs, &mut tie_rng).unwrap();
        use rand::RngCore;
        assert_eq!(tie_rng.clone().next_u64(), untouched.clone().next_u64());
    }

    #[test]
    fn hamming_and_inner_basics() {
        let mut rng = SplittableRng::new(2);
        let a = random_hv(200, &mut rng).unwrap();
        assert_eq!(hamming(&a, &a).unwrap(), 0);
        assert_eq!(hamming(&a, &a.complement()).unwrap(), 200);
        assert_eq!(inner_pm1(&a, &a).unwrap(), 200);
        assert_eq!(inner_pm1(&a, &a.complement()).unwrap(), -200);
        assert_eq!(inner_pm1(&bits("1011"), &bits("1101")).unwrap(), 0);
    }

    #[test]
    fn inner_matches_hamming_on_random_pairs() {
        let mut rng = SplittableRng::new(4);
        for _ in 0..1000 {
            let d = 1 + rng.below(300) as usize;
            let a = random_hv(d, &mut rng).unwrap();
            let b = random_hv(d, &mut rng).unwrap();
            let direct: i64 = (0..d).map(|i| (a.bipolar(i) * b.bipolar(i)) as i64).sum();
            assert_eq!(inner_pm1(&a, &b).unwrap(), direct);
            assert_eq!(direct, d as i64 - 2 * hamming(&a, &b).unwrap() as i64);
        }
    }

    #[test]
    fn sim_active_examples() {
        let d = 70;
        let ones = BinaryHypervector::ones(d).unwrap();
        let zeros = BinaryHypervector::zeros(d).unwrap();
        assert_eq!(sim_active(&ones, &ones).unwrap(), d as i64);
        let mut rng = SplittableRng::new(8);
        let p = random_hv(d, &mut rng).unwrap();
        assert_eq!(sim_active(&zeros, &p).unwrap(), 0);
        assert_eq!(sim_active(&bits("101"), &bits("100")).unwrap(), 0);
    }

    #[test]
    fn random_hv_golden_and_zero_dim() {
        let mut rng = SplittableRng::new(2024);
        let v = random_hv(64, &mut rng).unwrap();
        let again = random_hv(64, &mut SplittableRng::new(2024)).unwrap();
        assert_eq!(v, again);
        assert_eq!(v.words()[0], 0x5477_bae9_9c34_bc02);
        assert!(random_hv(0, &mut rng).is_err());
    }

    #[test]
    fn random_hv_streams_differ() {
        let a = random_hv(256, &mut SplittableRng::with_stream(1, 10)).unwrap();
        let b = random_hv(256, &mut SplittableRng::with_stream(1, 11)).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn random_hv_mean_popcount() {
        let mut rng = SplittableRng::new(6);
        let total: usize = (0..10_000)
            .map(|_| random_hv(128, &mut rng).unwrap().count_ones())
            .sum();
        let mean = total as f64 / 10_000.0;
        assert!((mean - 64.0).abs() <= 1.0, "{mean}");
    }

    #[test]
    fn padding_stays_zero() {
        let v = BinaryHypervector::from_words(65, vec![u64::MAX, u64::MAX]).unwrap();
        assert_eq!(v.count_ones(), 65);
        assert_eq!(v.complement().count_ones(), 0);
        assert_eq!(BinaryHypervector::ones(65).unwrap().words()[1], 1);
    }

    #[test]
    fn ones_iter_lists_set_bits() {
        let v = bits("0100000000000000000000000000000000000000000000000000000000000000001");
        assert_eq!(v.ones_iter().collect::<Vec<_>>(), vec![1, 66]);
    }
}
