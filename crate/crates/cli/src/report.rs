//! CSV outputs: `# key = value` header lines, then a column row and data.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{CliError, CliResult};

pub fn write_csv<R: Serialize>(path: &Path, header: &[String], rows: &[R]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut out = BufWriter::new(file);
    for line in header {
        writeln!(out, "{line}").map_err(|e| CliError::io(path, e))?;
    }
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))?;
    Ok(())
}

/// Header lines for commands without an experiment config.
pub fn header_from_pairs(pairs: &[(&str, String)]) -> Vec<String> {
    pairs.iter().map(|(k, v)| format!("# {k} = {v}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        d: usize,
        accuracy: f64,
    }

    #[test]
    fn header_precedes_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/out.csv");
        let rows = [Row { d: 32, accuracy: 0.5 }, Row { d: 64, accuracy: 0.75 }];
        write_csv(&path, &header_from_pairs(&[("seed", "7".into())]), &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "# seed = 7\nd,accuracy\n32,0.5\n64,0.75\n");
    }
}
