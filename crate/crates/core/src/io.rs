//! CSV tables with `#` provenance headers, and small serialization helpers.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a value
//! read back compares equal to the one written.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

pub const CRATE_VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

/// A table of named float columns.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub comments: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table {
            comments: vec![],
            columns: columns.into_iter().map(Into::into).collect(),
            rows: vec![],
        }
    }

    pub fn comment(mut self, line: impl Into<String>) -> Self {
        self.comments.push(line.into());
        self
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }

    pub fn render(&self, config_hash: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# opa-core {CRATE_VERSION}");
        let _ = writeln!(out, "# config_sha256 {config_hash}");
        for c in &self.comments {
            let _ = writeln!(out, "# {c}");
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let mut first = true;
            for v in row {
                if !first {
                    out.push(',');
                }
                first = false;
                let _ = write!(out, "{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path, config_hash: &str) -> Result<()> {
        std::fs::write(path, self.render(config_hash))?;
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Table> {
        let mut table = Table::default();
        let mut header_seen = false;
        for (lineno, line) in text.lines().enumerate() {
            if let Some(c) = line.strip_prefix('#') {
                table.comments.push(c.trim_start().to_string());
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            if !header_seen {
                table.columns = line.split(',').map(|s| s.trim().to_string()).collect();
                header_seen = true;
                continue;
            }
            let row = line
                .split(',')
                .map(|s| {
                    s.trim().parse::<f64>().map_err(|e| {
                        Error::Config(format!("line {}: cannot parse {s:?}: {e}", lineno + 1))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            if row.len() != table.columns.len() {
                return Err(Error::LengthMismatch {
                    expected: table.columns.len(),
                    got: row.len(),
                });
            }
            table.rows.push(row);
        }
        Ok(table)
    }

    pub fn read(path: &Path) -> Result<Table> {
        Table::parse(&std::fs::read_to_string(path)?)
    }
}

/// Writes a complex matrix with one row per row index and interleaved re/im columns.
pub fn write_complex_matrix(path: &Path, m: &CMatrix, config_hash: &str) -> Result<()> {
    let columns = (0..m.ncols()).flat_map(|k| [format!("re{k}"), format!("im{k}")]);
    let mut table = Table::new(columns).comment(format!("matrix {}x{}", m.nrows(), m.ncols()));
    for j in 0..m.nrows() {
        table.push((0..m.ncols()).flat_map(|k| [m[(j, k)].re, m[(j, k)].im]).collect());
    }
    table.write(path, config_hash)
}

pub fn read_complex_matrix(path: &Path) -> Result<CMatrix> {
    let table = Table::read(path)?;
    if table.columns.len() % 2 != 0 {
        return Err(Error::Config(format!(
            "{}: odd number of re/im columns",
            path.display()
        )));
    }
    let ncols = table.columns.len() / 2;
    Ok(CMatrix::from_fn(table.rows.len(), ncols, |j, k| {
        Complex64::new(table.rows[j][2 * k], table.rows[j][2 * k + 1])
    }))
}

/// Table of mode functions: omega followed by re/im columns per mode.
pub fn mode_table(omegas: &[f64], modes: &CMatrix, count: usize) -> Table {
    let count = count.min(modes.ncols());
    let columns = std::iter::once("omega".to_string())
        .chain((0..count).flat_map(|n| [format!("re{n}"), format!("im{n}")]));
    let mut table = Table::new(columns);
    for (j, w) in omegas.iter().enumerate() {
        let mut row = vec![*w];
        for n in 0..count {
            row.push(modes[(j, n)].re);
            row.push(modes[(j, n)].im);
        }
        table.push(row);
    }
    table
}
