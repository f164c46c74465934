//! Locating and loading the evaluation datasets under the data directory.
//!
//! Expected layout below `$HDC_DATA_DIR` (default `data`):
//!
//! | dataset   | files |
//! |-----------|-------|
//! | `mnist`   | `mnist/{train,t10k}-{images-idx3,labels-idx1}-ubyte` |
//! | `fashion` | `fashion/` with the same four IDX names |
//! | `isolet`  | `isolet/isolet1+2+3+4.data`, `isolet/isolet5.data` |
//! | `uci-har` | `uci-har/{train,test}/{X,y}_{train,test}.txt` |

use std::path::{Path, PathBuf};

use hdc_core::data::{
    binarize_pixels, load_delimited, load_idx, thermometer_quantize, DelimitedSchema, LabeledBinaryDataset,
    QuantizerSpec,
};

use crate::config::{DatasetId, ExperimentConfig};
use crate::error::{CliError, CliResult};

pub const DATA_DIR_ENV: &str = "HDC_DATA_DIR";

pub fn data_dir() -> PathBuf {
    std::env::var_os(DATA_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("data"))
}

#[derive(Debug, Clone)]
pub struct SplitData {
    pub train: LabeledBinaryDataset,
    pub test: LabeledBinaryDataset,
}

/// Source files in the order train features, train labels, test features,
/// test labels. ISOLET keeps labels inside the feature files.
pub fn dataset_files(id: DatasetId, root: &Path) -> Vec<PathBuf> {
    let dir = root.join(id.as_str());
    match id {
        DatasetId::Mnist | DatasetId::Fashion => [
            "train-images-idx3-ubyte",
            "train-labels-idx1-ubyte",
            "t10k-images-idx3-ubyte",
            "t10k-labels-idx1-ubyte",
        ]
        .iter()
        .map(|f| dir.join(f))
        .collect(),
        DatasetId::Isolet => vec![dir.join("isolet1+2+3+4.data"), dir.join("isolet5.data")],
        DatasetId::UciHar => vec![
            dir.join("train/X_train.txt"),
            dir.join("train/y_train.txt"),
            dir.join("test/X_test.txt"),
            dir.join("test/y_test.txt"),
        ],
    }
}

pub fn dataset_available(id: DatasetId, root: &Path) -> bool {
    dataset_files(id, root).iter().all(|p| p.is_file())
}

/// Loads and binarizes both splits, then applies the sample limits.
pub fn load(cfg: &ExperimentConfig, root: &Path) -> CliResult<SplitData> {
    let files = dataset_files(cfg.dataset, root);
    if let Some(missing) = files.iter().find(|p| !p.is_file()) {
        return Err(CliError::MissingData {
            dataset: cfg.dataset.to_string(),
            path: missing.clone(),
        });
    }
    let (train, test) = match cfg.dataset {
        DatasetId::Mnist | DatasetId::Fashion => {
            let train = binarize_pixels(&load_idx(&files[0], &files[1])?, cfg.pixel_threshold)?;
            let test = binarize_pixels(&load_idx(&files[2], &files[3])?, cfg.pixel_threshold)?;
            (train, test)
        }
        DatasetId::Isolet | DatasetId::UciHar => {
            let (train_raw, test_raw) = if cfg.dataset == DatasetId::Isolet {
                let schema = DelimitedSchema::isolet();
                (load_delimited(&files[0], &schema)?, load_delimited(&files[1], &schema)?)
            } else {
                (
                    load_delimited(&files[0], &DelimitedSchema::uci_har(&files[1]))?,
                    load_delimited(&files[2], &DelimitedSchema::uci_har(&files[3]))?,
                )
            };
            let spec = QuantizerSpec::fit_thermometer(&train_raw, cfg.levels)?;
            (thermometer_quantize(&train_raw, &spec)?, thermometer_quantize(&test_raw, &spec)?)
        }
    };
    let limit = |ds: LabeledBinaryDataset, n: usize| if n == 0 { ds } else { ds.head(n) };
    Ok(SplitData {
        train: limit(train, cfg.train_limit),
        test: limit(test, cfg.test_limit),
    })
}
