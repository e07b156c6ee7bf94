//! Plain-text numeric matrices: one row per line, comma or whitespace
//! separated. A first line that does not parse as numbers is a header and
//! is skipped. Blank lines are ignored.

use std::path::Path;

use crate::{Error, Result};

/// Row-major values with their row and column counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub values: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
}

fn tokens(line: &str) -> Vec<&str> {
    if line.contains(',') {
        line.split(',').map(str::trim).collect()
    } else {
        line.split_whitespace().collect()
    }
}

pub fn parse_matrix(text: &str, path: &Path) -> Result<Matrix> {
    let err = |line: usize, column: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        column,
        message,
    };
    let mut values = Vec::new();
    let mut cols = 0;
    let mut rows = 0;
    let mut seen_first = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let toks = tokens(raw);
        if !seen_first {
            seen_first = true;
            if toks.iter().any(|t| t.parse::<f64>().is_err()) {
                continue;
            }
        }
        if rows > 0 && toks.len() != cols {
            return Err(err(
                line_no,
                toks.len().min(cols) + 1,
                format!("row has {} columns, expected {cols}", toks.len()),
            ));
        }
        for (c, t) in toks.iter().enumerate() {
            if t.is_empty() {
                return Err(err(line_no, c + 1, "empty cell".into()));
            }
            let v: f64 = t
                .parse()
                .map_err(|_| err(line_no, c + 1, format!("`{t}` is not a number")))?;
            if !v.is_finite() {
                return Err(err(line_no, c + 1, format!("non-finite value `{t}`")));
            }
            values.push(v);
        }
        cols = toks.len();
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::Shape {
            path: path.to_path_buf(),
            message: "no numeric rows".into(),
        });
    }
    Ok(Matrix { values, rows, cols })
}

pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_matrix(&text, path)
}
