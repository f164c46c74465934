//! EHDD: packed binary cache for preprocessed datasets.
//!
//! Layout (little-endian):
//! `"EHDD"`, dim u32, K u32, count u64, `count * ceil(dim/64)` u64 words,
//! `count` u32 labels, then the provenance as two length-prefixed (u32)
//! UTF-8 strings (source digest, descriptor).

use std::path::Path;

use super::{LabeledBinaryDataset, Provenance};
use crate::error::{FormatError, HdcError, Result};
use crate::hv::{words_for, BinaryHypervector};

pub const CONTAINER_MAGIC: [u8; 4] = *b"EHDD";

pub fn encode_container(ds: &LabeledBinaryDataset) -> Vec<u8> {
    let w = words_for(ds.input_dim());
    let mut out = Vec::with_capacity(20 + ds.len() * (w * 8 + 4));
    out.extend_from_slice(&CONTAINER_MAGIC);
    out.extend_from_slice(&(ds.input_dim() as u32).to_le_bytes());
    out.extend_from_slice(&(ds.classes() as u32).to_le_bytes());
    out.extend_from_slice(&(ds.len() as u64).to_le_bytes());
    for s in ds.samples() {
        for &word in s.words() {
            out.extend_from_slice(&word.to_le_bytes());
        }
    }
    for &l in ds.labels() {
        out.extend_from_slice(&(l as u32).to_le_bytes());
    }
    for s in [&ds.provenance().source_digest, &ds.provenance().descriptor] {
        out.extend_from_slice(&(s.len() as u32).to_le_bytes());
        out.extend_from_slice(s.as_bytes());
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let Some(end) = end else {
            return Err(FormatError::Truncated {
                offset: self.pos,
                needed: n - (self.bytes.len() - self.pos),
            });
        };
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, FormatError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String, FormatError> {
        let n = self.u32()? as usize;
        let offset = self.pos;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| FormatError::Invalid {
            offset,
            reason: "provenance is not UTF-8".into(),
        })
    }
}

pub fn decode_container(bytes: &[u8]) -> Result<LabeledBinaryDataset> {
    let mut c = Cursor { bytes, pos: 0 };
    let magic: [u8; 4] = c.take(4)?.try_into().unwrap();
    if magic != CONTAINER_MAGIC {
        return Err(FormatError::BadMagic {
            expected: CONTAINER_MAGIC,
            found: magic,
        }
        .into());
    }
    let dim = c.u32()? as usize;
    let classes = c.u32()? as usize;
    let count_off = c.pos;
    let count = usize::try_from(c.u64()?).map_err(|_| FormatError::Invalid {
        offset: count_off,
        reason: "count overflows".into(),
    })?;
    let w = words_for(dim);
    let needed = count.checked_mul(w * 8 + 4).ok_or(FormatError::Invalid {
        offset: count_off,
        reason: "count overflows".into(),
    })?;
    if bytes.len() - c.pos < needed {
        return Err(FormatError::Truncated {
            offset: c.pos,
            needed: needed - (bytes.len() - c.pos),
        }
        .into());
    }
    let mut samples = Vec::with_capacity(count);
    for _ in 0..count {
        let off = c.pos;
        let words = c
            .take(w * 8)?
            .chunks_exact(8)
            .map(|b| u64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        let hv = BinaryHypervector::from_words(dim, words).map_err(|e| FormatError::Invalid {
            offset: off,
            reason: e.to_string(),
        })?;
        samples.push(hv);
    }
    let labels = (0..count)
        .map(|_| c.u32().map(|l| l as usize))
        .collect::<Result<Vec<_>, _>>()?;
    let provenance = Provenance {
        source_digest: c.string()?,
        descriptor: c.string()?,
    };
    if c.pos != bytes.len() {
        return Err(FormatError::Invalid {
            offset: c.pos,
            reason: "trailing bytes".into(),
        }
        .into());
    }
    LabeledBinaryDataset::new(samples, labels, classes, provenance)
}

pub fn write_container(path: &Path, ds: &LabeledBinaryDataset) -> Result<()> {
    std::fs::write(path, encode_container(ds)).map_err(|e| HdcError::Format(FormatError::Io(e)))
}

pub fn read_container(path: &Path) -> Result<LabeledBinaryDataset> {
    let bytes = std::fs::read(path).map_err(FormatError::Io)?;
    decode_container(&bytes)
}
