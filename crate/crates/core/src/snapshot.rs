//! EHDC: integer-only model snapshot.
//!
//! Layout (little-endian):
//!
//! ```text
//! "EHDC" | version u32 | layer count u8
//! per layer: in_dim u32 | out_dim u32 | weight width u8 (1, 2 or 4)
//!            | out*in weights, row-major, signed | out thresholds i32
//!            | out sign flags u8 (1: fires iff a < threshold)
//! prototypes flag u8 (0 or 1), then if 1:
//!            K u32 | theta f64 | K*d sums f64 | K*ceil(d/64) rep words u64
//! ```
//!
//! Shadow weights and batch-norm state are not stored; a loaded encoder is
//! inference-only but encodes bit-identically.

use std::path::Path;

use crate::encoders::{DenseBinaryLayer, LearnedEncoder};
use crate::error::{FormatError, HdcError, Result};
use crate::hv::{words_for, BinaryHypervector};
use crate::model::ClassPrototypes;

pub const SNAPSHOT_MAGIC: [u8; 4] = *b"EHDC";
pub const SNAPSHOT_VERSION: u32 = 2;

/// Integer-only copy of `enc`: quantized weights and thresholds, no shadow
/// weights or batch-norm state.
pub fn export_weights(enc: &LearnedEncoder) -> Result<LearnedEncoder> {
    let layers = enc
        .layers()
        .iter()
        .map(|l| {
            DenseBinaryLayer::from_integer(
                l.in_dim(),
                l.out_dim(),
                &l.weights_row_major(),
                l.thresholds().to_vec(),
                l.below_flags().to_vec(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    LearnedEncoder::new(layers)
}

/// Narrowest of 1, 2, 4 bytes that holds every weight.
fn weight_width(weights: &[i32]) -> u8 {
    if weights.iter().all(|&w| i8::try_from(w).is_ok()) {
        1
    } else if weights.iter().all(|&w| i16::try_from(w).is_ok()) {
        2
    } else {
        4
    }
}

pub fn encode_snapshot(enc: &LearnedEncoder, prototypes: Option<&ClassPrototypes>) -> Result<Vec<u8>> {
    if enc.layers().len() > u8::MAX as usize {
        return Err(HdcError::InvalidArgument("too many layers".into()));
    }
    let mut out = Vec::new();
    out.extend_from_slice(&SNAPSHOT_MAGIC);
    out.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
    out.push(enc.layers().len() as u8);
    for l in enc.layers() {
        let w = l.weights_row_major();
        let width = weight_width(&w);
        out.extend_from_slice(&(l.in_dim() as u32).to_le_bytes());
        out.extend_from_slice(&(l.out_dim() as u32).to_le_bytes());
        out.push(width);
        for &v in &w {
            match width {
                1 => out.extend_from_slice(&(v as i8).to_le_bytes()),
                2 => out.extend_from_slice(&(v as i16).to_le_bytes()),
                _ => out.extend_from_slice(&v.to_le_bytes()),
            }
        }
        for &t in l.thresholds() {
            out.extend_from_slice(&t.to_le_bytes());
        }
        out.extend(l.below_flags().iter().map(|&b| b as u8));
    }
    if let Some(p) = prototypes {
        if p.dim() != enc.output_dim() {
            return Err(HdcError::DimensionMismatch {
                left: p.dim(),
                right: enc.output_dim(),
            });
        }
        out.push(1);
        out.extend_from_slice(&(p.classes() as u32).to_le_bytes());
        out.extend_from_slice(&p.theta().to_le_bytes());
        for s in p.sums() {
            for &v in s {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        for r in p.reps() {
            for &w in r.words() {
                out.extend_from_slice(&w.to_le_bytes());
            }
        }
    } else {
        out.push(0);
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        match self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()) {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(FormatError::Truncated {
                offset: self.pos,
                needed: n - (self.bytes.len() - self.pos),
            }),
        }
    }

    fn u8(&mut self) -> Result<u8, FormatError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn i32(&mut self) -> Result<i32, FormatError> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, FormatError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, FormatError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

fn invalid(offset: usize, reason: impl Into<String>) -> HdcError {
    FormatError::Invalid {
        offset,
        reason: reason.into(),
    }
    .into()
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<(LearnedEncoder, Option<ClassPrototypes>)> {
    let mut r = Reader { bytes, pos: 0 };
    let magic: [u8; 4] = r.take(4)?.try_into().unwrap();
    if magic != SNAPSHOT_MAGIC {
        return Err(FormatError::BadMagic {
            expected: SNAPSHOT_MAGIC,
            found: magic,
        }
        .into());
    }
    let version = r.u32()?;
    if version != SNAPSHOT_VERSION {
        return Err(FormatError::UnsupportedVersion(version).into());
    }
    let count = r.u8()?;
    if count == 0 {
        return Err(invalid(8, "snapshot has no layers"));
    }
    let mut layers = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let at = r.pos;
        let in_dim = r.u32()? as usize;
        let out_dim = r.u32()? as usize;
        let width = r.u8()?;
        if ![1, 2, 4].contains(&width) {
            return Err(FormatError::BadWeightWidth(width).into());
        }
        let n = in_dim
            .checked_mul(out_dim)
            .filter(|&n| n > 0)
            .ok_or_else(|| invalid(at, "bad layer dimensions"))?;
        let raw = r.take(n.checked_mul(width as usize).ok_or_else(|| invalid(at, "layer too large"))?)?;
        let weights: Vec<i32> = match width {
            1 => raw.iter().map(|&b| b as i8 as i32).collect(),
            2 => raw
                .chunks_exact(2)
                .map(|c| i16::from_le_bytes([c[0], c[1]]) as i32)
                .collect(),
            _ => raw
                .chunks_exact(4)
                .map(|c| i32::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        };
        let thresholds = (0..out_dim).map(|_| r.i32()).collect::<Result<Vec<_>, _>>()?;
        let flags_at = r.pos;
        let below = r
            .take(out_dim)?
            .iter()
            .map(|&f| match f {
                0 => Ok(false),
                1 => Ok(true),
                _ => Err(invalid(flags_at, format!("sign flag {f} is not 0 or 1"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let layer = DenseBinaryLayer::from_integer(in_dim, out_dim, &weights, thresholds, below)
            .map_err(|e| invalid(at, e.to_string()))?;
        layers.push(layer);
    }
    let enc = LearnedEncoder::new(layers).map_err(|e| invalid(9, e.to_string()))?;
    let flag_at = r.pos;
    match r.u8()? {
        0 if r.remaining() == 0 => return Ok((enc, None)),
        0 => return Err(invalid(r.pos, "trailing bytes")),
        1 => {}
        f => return Err(invalid(flag_at, format!("bad prototypes flag {f}"))),
    }
    let at = r.pos;
    let k = r.u32()? as usize;
    let theta = r.f64()?;
    let d = enc.output_dim();
    let needed = k
        .checked_mul(d * 8 + words_for(d) * 8)
        .ok_or_else(|| invalid(at, "class count overflows"))?;
    if r.remaining() < needed {
        return Err(FormatError::Truncated {
            offset: r.pos,
            needed: needed - r.remaining(),
        }
        .into());
    }
    let sums = (0..k)
        .map(|_| (0..d).map(|_| r.f64()).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    let reps_at = r.pos;
    let reps = (0..k)
        .map(|_| {
            let words = (0..words_for(d)).map(|_| r.u64()).collect::<Result<Vec<_>, _>>()?;
            BinaryHypervector::from_words(d, words)
        })
        .collect::<Result<Vec<_>>>()?;
    if r.remaining() != 0 {
        return Err(invalid(r.pos, "trailing bytes"));
    }
    let protos = ClassPrototypes::from_sums(sums, theta).map_err(|e| invalid(at, e.to_string()))?;
    if protos.reps() != reps.as_slice() {
        return Err(invalid(reps_at, "stored prototypes disagree with sums and theta"));
    }
    Ok((enc, Some(protos)))
}

pub fn write_snapshot(path: &Path, enc: &LearnedEncoder, prototypes: Option<&ClassPrototypes>) -> Result<()> {
    let bytes = encode_snapshot(enc, prototypes)?;
    std::fs::write(path, bytes).map_err(|e| FormatError::Io(e).into())
}

pub fn read_snapshot(path: &Path) -> Result<(LearnedEncoder, Option<ClassPrototypes>)> {
    let bytes = std::fs::read(path).map_err(FormatError::Io)?;
    decode_snapshot(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoders::build_item_memory;
    use crate::hv::random_hv;
    use crate::rng::SplittableRng;

    fn encoder() -> LearnedEncoder {
        LearnedEncoder::random_binary(784, &[64], 127.0, false, &mut SplittableRng::new(5)).unwrap()
    }

    #[test]
    fn round_trip_encodes_identically() {
        let enc = encoder();
        let bytes = encode_snapshot(&enc, None).unwrap();
        let (back, protos) = decode_snapshot(&bytes).unwrap();
        assert!(protos.is_none());
        let mut rng = SplittableRng::new(6);
        for _ in 0..100 {
            let x = random_hv(784, &mut rng).unwrap();
            assert_eq!(enc.encode(&x).unwrap(), back.encode(&x).unwrap());
        }
        assert_eq!(encode_snapshot(&back, None).unwrap(), bytes);
    }

    #[test]
    fn eight_bit_file_size() {
        let bytes = encode_snapshot(&encoder(), None).unwrap();
        // header 9, layer header 9, weights 784*64, thresholds 4*64, flags 64,
        // prototypes flag 1
        assert_eq!(bytes.len(), 9 + 9 + 50_176 + 256 + 64 + 1);
    }

    #[test]
    fn prototypes_cut_at_layer_boundary_is_an_error() {
        let enc = encoder();
        let protos = ClassPrototypes::from_sums(vec![vec![1.0; 64], vec![-1.0; 64]], 0.0).unwrap();
        let bare = encode_snapshot(&enc, None).unwrap();
        let full = encode_snapshot(&enc, Some(&protos)).unwrap();
        assert!(decode_snapshot(&full[..bare.len() - 1]).is_err());
        assert!(decode_snapshot(&full[..bare.len()]).is_err());
    }

    #[test]
    fn wide_weights_and_prototypes_round_trip() {
        let mem = build_item_memory(2, 10, 70, 3).unwrap();
        let enc = LearnedEncoder::from_item_memory(&mem).unwrap();
        let mut layer = enc.layers()[0].clone();
        layer.set_thresholds(vec![-40_000; 70], vec![true; 70]).unwrap();
        let wide = LearnedEncoder::new(vec![layer]).unwrap();
        let p = ClassPrototypes::from_sums(vec![vec![1.5; 70], vec![-0.25; 70], vec![3.0; 70]], 1.0).unwrap();
        let bytes = encode_snapshot(&wide, Some(&p)).unwrap();
        let (back, protos) = decode_snapshot(&bytes).unwrap();
        assert_eq!(back.layers()[0].thresholds(), wide.layers()[0].thresholds());
        assert_eq!(back.layers()[0].weights_row_major(), wide.layers()[0].weights_row_major());
        assert_eq!(protos.unwrap(), p);
    }

    #[test]
    fn rejects_corruption() {
        let bytes = encode_snapshot(&encoder(), None).unwrap();
        let mut bad = bytes.clone();
        bad[1] = b'X';
        assert!(decode_snapshot(&bad).unwrap_err().to_string().contains("offset 0"));
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(matches!(
            decode_snapshot(&bad),
            Err(HdcError::Format(FormatError::UnsupportedVersion(9)))
        ));
        let mut bad = bytes.clone();
        bad[17] = 3;
        assert!(matches!(decode_snapshot(&bad), Err(HdcError::Format(FormatError::BadWeightWidth(3)))));
        assert!(matches!(
            decode_snapshot(&bytes[..bytes.len() - 1]),
            Err(HdcError::Format(FormatError::Truncated { .. }))
        ));
    }

    #[test]
    fn exported_item_memory_encoder_matches_classic_weights() {
        let mem = build_item_memory(2, 16, 32, 8).unwrap();
        let enc = LearnedEncoder::from_item_memory(&mem).unwrap();
        let exported = export_weights(&enc).unwrap();
        let (back, _) = decode_snapshot(&encode_snapshot(&exported, None).unwrap()).unwrap();
        let mut rng = SplittableRng::new(1);
        for _ in 0..50 {
            let x = random_hv(16, &mut rng).unwrap();
            assert_eq!(back.encode(&x).unwrap(), enc.encode(&x).unwrap());
        }
    }
}
