//! Text output: diagnostics CSV, snapshot profiles and run manifests.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use thinfilm_core::DiagnosticsRow;

use crate::error::{CliError, CliResult};

/// Version string recorded in manifests.
pub const CODE_VERSION: &str = concat!("thinfilm ", env!("CARGO_PKG_VERSION"));

/// 17 significant digits in scientific notation; round-trips any `f64`.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

/// Comment line identifying the configuration that produced a file.
pub fn hash_line(hash: &str) -> String {
    format!("# config_sha256={hash}")
}

pub(crate) fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

pub(crate) fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    let mut w = create(path)?;
    w.write_all(contents.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(path, e))
}

/// Streams diagnostics rows so that partial output survives an abort.
pub struct DiagnosticsWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl DiagnosticsWriter {
    pub fn create(path: &Path, hash: &str) -> CliResult<Self> {
        let mut out = create(path)?;
        writeln!(out, "{}\n{}", hash_line(hash), DiagnosticsRow::CSV_HEADER).map_err(|e| CliError::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            out,
        })
    }

    pub fn row(&mut self, row: &DiagnosticsRow) -> CliResult<()> {
        let line: Vec<String> = row.values().iter().map(|v| fmt_real(*v)).collect();
        writeln!(self.out, "{}", line.join(",")).map_err(|e| CliError::io(&self.path, e))
    }

    pub fn finish(mut self) -> CliResult<()> {
        self.out.flush().map_err(|e| CliError::io(&self.path, e))
    }
}

/// Uniform-grid profiles of `f` and `g` at one snapshot time.
pub fn write_snapshot(path: &Path, hash: &str, t: f64, xs: &[f64], f: &[f64], g: &[f64]) -> CliResult<()> {
    let mut s = format!("{}\n# t={}\nx,f,g\n", hash_line(hash), fmt_real(t));
    for ((x, a), b) in xs.iter().zip(f).zip(g) {
        s.push_str(&format!("{},{},{}\n", fmt_real(*x), fmt_real(*a), fmt_real(*b)));
    }
    write_file(path, &s)
}

/// A CSV file with named columns, as produced by the writers above.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    /// Reads a CSV, skipping `#` comment lines before the header.
    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
        let (_, header) = lines
            .next()
            .ok_or_else(|| CliError::Config(format!("{}: no header line", path.display())))?;
        let columns: Vec<String> = header.split(',').map(|c| c.trim().to_string()).collect();
        let mut rows = Vec::new();
        for (i, line) in lines {
            let row: Vec<f64> = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| CliError::Config(format!("{}:{}: malformed row", path.display(), i + 1)))?;
            if row.len() != columns.len() {
                return Err(CliError::Config(format!(
                    "{}:{}: expected {} fields, found {}",
                    path.display(),
                    i + 1,
                    columns.len(),
                    row.len()
                )));
            }
            rows.push(row);
        }
        Ok(Self { columns, rows })
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}
