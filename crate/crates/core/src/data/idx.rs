//! IDX reader (MNIST / Fashion-MNIST layout): big-endian `u32` magic, then
//! one big-endian `u32` per dimension, then the raw `u8` payload.

use std::path::Path;

use super::{Provenance, RawDataset};
use crate::error::DataError;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn read(path: &Path) -> Result<Vec<u8>, DataError> {
    std::fs::read(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn be_u32(bytes: &[u8], at: usize) -> Option<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes(b.try_into().expect("4 bytes")))
}

/// Parses an IDX buffer with `ndims` dimensions and returns `(dims, payload)`.
pub(crate) fn parse_idx<'a>(
    bytes: &'a [u8],
    magic: u32,
    ndims: usize,
    path: &Path,
) -> Result<(Vec<usize>, &'a [u8]), DataError> {
    let header = 4 + 4 * ndims;
    let truncated = |expected: usize| DataError::Truncated {
        path: path.to_path_buf(),
        expected,
        found: bytes.len(),
    };
    let found = be_u32(bytes, 0).ok_or_else(|| truncated(header))?;
    if found != magic {
        return Err(DataError::BadMagic {
            path: path.to_path_buf(),
            expected: magic,
            found,
        });
    }
    let dims: Vec<usize> = (0..ndims)
        .map(|k| be_u32(bytes, 4 + 4 * k).map(|d| d as usize))
        .collect::<Option<_>>()
        .ok_or_else(|| truncated(header))?;
    let expected = header + dims.iter().product::<usize>();
    if bytes.len() < expected {
        return Err(truncated(expected));
    }
    Ok((dims, &bytes[header..expected]))
}

/// Loads an image/label IDX pair into a row-major pixel matrix.
pub fn load_idx(images: &Path, labels: &Path) -> Result<RawDataset, DataError> {
    let img_bytes = read(images)?;
    let lbl_bytes = read(labels)?;
    let (idims, pixels) = parse_idx(&img_bytes, IDX_IMAGES_MAGIC, 3, images)?;
    let (ldims, lbls) = parse_idx(&lbl_bytes, IDX_LABELS_MAGIC, 1, labels)?;
    if idims[0] != ldims[0] {
        return Err(DataError::CountMismatch {
            images: idims[0],
            labels: ldims[0],
        });
    }
    let labels: Vec<usize> = lbls.iter().map(|&l| l as usize).collect();
    let classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    Ok(RawDataset {
        features: pixels.to_vec(),
        labels,
        feature_dim: idims[1] * idims[2],
        classes,
        provenance: Provenance::from_bytes([&img_bytes[..], &lbl_bytes[..]], "idx"),
    })
}
