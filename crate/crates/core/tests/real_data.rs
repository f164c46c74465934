//! Checks against the real MNIST files. Skipped (with a note) when
//! `$HDC_DATA_DIR/mnist` or the workspace `data/mnist` is absent.

use std::path::{Path, PathBuf};

use hdc_core::data::{binarize_pixels, load_idx};

fn mnist_dir() -> Option<PathBuf> {
    let root = std::env::var_os("HDC_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data"));
    let dir = root.join("mnist");
    dir.join("train-images-idx3-ubyte").is_file().then_some(dir)
}

#[test]
fn mnist_shapes_and_active_fraction() {
    let Some(dir) = mnist_dir() else {
        eprintln!("MNIST not present, skipping");
        return;
    };
    let train = load_idx(&dir.join("train-images-idx3-ubyte"), &dir.join("train-labels-idx1-ubyte")).unwrap();
    let test = load_idx(&dir.join("t10k-images-idx3-ubyte"), &dir.join("t10k-labels-idx1-ubyte")).unwrap();
    assert_eq!((train.len(), train.row(0).len()), (60_000, 784));
    assert_eq!(test.len(), 10_000);
    assert!(train.labels.iter().all(|&l| l < 10));

    // measured independently from the raw bytes: 0.13226 train, 0.13423 test
    for (raw, expected) in [(&train, 0.132_26), (&test, 0.134_23)] {
        let ds = binarize_pixels(raw, 127).unwrap();
        let ones: usize = ds.samples().iter().map(|s| s.count_ones()).sum();
        let frac = ones as f64 / (ds.len() * 784) as f64;
        assert!((frac - expected).abs() < 1e-4, "{frac}");
    }
    let again = binarize_pixels(&train, 127).unwrap();
    assert_eq!(again.provenance(), binarize_pixels(&train, 127).unwrap().provenance());
}
