//! Matrix input files: `{"s": 2, "re": [[...], ...], "im": [[...], ...]}`.
//!
//! `re` and `im` may be nested rows or a flat row-major list; `im` is
//! optional. Errors name the offending key, row and column.

use std::fmt;
use std::path::Path;

use gaussmeter::{CMatrix, RMatrix};
use num_complex::Complex64;
use serde_json::Value;

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFileError {
    pub source: String,
    pub message: String,
}

impl fmt::Display for MatrixFileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.source, self.message)
    }
}

impl std::error::Error for MatrixFileError {}

/// How many rows per mode the matrix must have.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// `s×s` complex correlation matrix.
    Complex,
    /// `2s×2s` real covariance.
    Real,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFile {
    pub modes: usize,
    pub matrix: CMatrix,
}

impl MatrixFile {
    pub fn read(path: &Path, layout: Layout) -> Result<Self, MatrixFileError> {
        let text = std::fs::read_to_string(path).map_err(|e| MatrixFileError {
            source: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text, layout).map_err(|message| MatrixFileError {
            source: path.display().to_string(),
            message,
        })
    }

    pub fn parse(text: &str, layout: Layout) -> Result<Self, String> {
        let doc: Value = serde_json::from_str(text)
            .map_err(|e| format!("invalid JSON at line {} column {}: {e}", e.line(), e.column()))?;
        let obj = doc.as_object().ok_or("top level must be an object")?;
        let modes = match obj.get("s") {
            Some(v) => v
                .as_u64()
                .filter(|&s| s > 0)
                .ok_or("\"s\" must be a positive integer")? as usize,
            None => return Err("missing key \"s\"".into()),
        };
        let dim = match layout {
            Layout::Complex => modes,
            Layout::Real => 2 * modes,
        };
        let re = obj.get("re").ok_or("missing key \"re\"")?;
        let re = read_array(re, dim, "re")?;
        let im = match obj.get("im") {
            Some(v) => read_array(v, dim, "im")?,
            None => vec![0.0; dim * dim],
        };
        if layout == Layout::Real && im.iter().any(|&x| x != 0.0) {
            return Err("covariance matrices must be real; drop \"im\"".into());
        }
        let matrix = CMatrix::from_fn(dim, dim, |i, j| Complex64::new(re[i * dim + j], im[i * dim + j]));
        Ok(Self { modes, matrix })
    }

    pub fn real_part(&self) -> RMatrix {
        self.matrix.map(|z| z.re)
    }
}

fn number(v: &Value, key: &str, row: usize, col: usize) -> Result<f64, String> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| format!("\"{key}\" row {row} column {col}: expected a finite number, got {v}"))
}

fn read_array(v: &Value, dim: usize, key: &str) -> Result<Vec<f64>, String> {
    let outer = v
        .as_array()
        .ok_or_else(|| format!("\"{key}\" must be an array"))?;
    if outer.iter().all(|x| !x.is_array()) {
        if outer.len() != dim * dim {
            return Err(format!(
                "\"{key}\" flat list has {} entries, expected {}",
                outer.len(),
                dim * dim
            ));
        }
        return outer
            .iter()
            .enumerate()
            .map(|(k, x)| number(x, key, k / dim, k % dim))
            .collect();
    }
    if outer.len() != dim {
        return Err(format!("\"{key}\" has {} rows, expected {dim}", outer.len()));
    }
    let mut out = Vec::with_capacity(dim * dim);
    for (i, row) in outer.iter().enumerate() {
        let row = row
            .as_array()
            .ok_or_else(|| format!("\"{key}\" row {i}: expected an array"))?;
        if row.len() != dim {
            return Err(format!(
                "\"{key}\" row {i} has {} columns, expected {dim}",
                row.len()
            ));
        }
        for (j, x) in row.iter().enumerate() {
            out.push(number(x, key, i, j)?);
        }
    }
    Ok(out)
}
