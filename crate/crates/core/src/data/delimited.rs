//! Delimited text loaders (ISOLET-style trailing-label CSV, UCI-HAR-style
//! whitespace matrices with a separate label file).

use std::path::{Path, PathBuf};

use super::{Provenance, RealDataset};
use crate::error::DataError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Separator {
    Comma,
    Whitespace,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelSource {
    /// Last field of each row.
    TrailingColumn,
    /// One label per line in another file.
    File(PathBuf),
}

/// Layout of a delimited dataset. Labels in `label_min..=label_max` are
/// shifted to start at 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelimitedSchema {
    pub feature_dim: usize,
    pub separator: Separator,
    pub labels: LabelSource,
    pub label_min: i64,
    pub label_max: i64,
}

impl DelimitedSchema {
    pub fn isolet() -> Self {
        Self {
            feature_dim: 617,
            separator: Separator::Comma,
            labels: LabelSource::TrailingColumn,
            label_min: 1,
            label_max: 26,
        }
    }

    pub fn uci_har(label_file: impl Into<PathBuf>) -> Self {
        Self {
            feature_dim: 561,
            separator: Separator::Whitespace,
            labels: LabelSource::File(label_file.into()),
            label_min: 1,
            label_max: 6,
        }
    }

    pub fn classes(&self) -> usize {
        (self.label_max - self.label_min + 1) as usize
    }
}

fn read(path: &Path) -> Result<Vec<u8>, DataError> {
    std::fs::read(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn fields(line: &str, sep: Separator) -> Vec<&str> {
    match sep {
        Separator::Comma => line.split(',').map(str::trim).collect(),
        Separator::Whitespace => line.split_whitespace().collect(),
    }
}

fn parse_label(text: &str, path: &Path, line: usize, column: usize, schema: &DelimitedSchema) -> Result<usize, DataError> {
    // ISOLET writes labels as "1." etc.
    let t = text.trim().trim_end_matches('.');
    let label: i64 = t.parse().map_err(|_| DataError::Parse {
        path: path.to_path_buf(),
        line,
        column,
        text: text.to_string(),
    })?;
    if label < schema.label_min || label > schema.label_max {
        return Err(DataError::LabelRange {
            path: path.to_path_buf(),
            line,
            label,
            min: schema.label_min,
            max: schema.label_max,
        });
    }
    Ok((label - schema.label_min) as usize)
}

pub fn load_delimited(path: &Path, schema: &DelimitedSchema) -> Result<RealDataset, DataError> {
    let bytes = read(path)?;
    let text = String::from_utf8_lossy(&bytes);
    let trailing = schema.labels == LabelSource::TrailingColumn;
    let expected = schema.feature_dim + usize::from(trailing);

    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f = fields(line, schema.separator);
        if f.len() != expected {
            return Err(DataError::RaggedRow {
                path: path.to_path_buf(),
                line: line_no,
                expected,
                found: f.len(),
            });
        }
        for (c, t) in f[..schema.feature_dim].iter().enumerate() {
            let v: f64 = t.parse().map_err(|_| DataError::Parse {
                path: path.to_path_buf(),
                line: line_no,
                column: c,
                text: t.to_string(),
            })?;
            if v.is_nan() {
                return Err(DataError::NanFeature { row: labels.len(), column: c });
            }
            features.push(v);
        }
        if trailing {
            labels.push(parse_label(f[schema.feature_dim], path, line_no, schema.feature_dim, schema)?);
        } else {
            labels.push(usize::MAX);
        }
    }

    let mut sources = vec![bytes.clone()];
    if let LabelSource::File(lp) = &schema.labels {
        let lbytes = read(lp)?;
        let ltext = String::from_utf8_lossy(&lbytes);
        let parsed = ltext
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(n, l)| parse_label(l, lp, n + 1, 0, schema))
            .collect::<Result<Vec<_>, _>>()?;
        if parsed.len() != labels.len() {
            return Err(DataError::CountMismatch {
                images: labels.len(),
                labels: parsed.len(),
            });
        }
        labels = parsed;
        sources.push(lbytes);
    }

    Ok(RealDataset {
        features,
        labels,
        feature_dim: schema.feature_dim,
        classes: schema.classes(),
        provenance: Provenance::from_bytes(sources.iter().map(Vec::as_slice), "delimited"),
    })
}
