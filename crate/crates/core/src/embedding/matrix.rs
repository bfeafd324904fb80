use std::collections::HashSet;
use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Labeled n×d matrix of finite reals, one row per token.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    labels: Vec<String>,
    data: DMatrix<f64>,
}

impl EmbeddingMatrix {
    pub fn new(labels: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if labels.len() != rows.len() {
            return Err(Error::InvalidInput(format!(
                "{} labels for {} rows",
                labels.len(),
                rows.len()
            )));
        }
        let d = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != d) {
            return Err(Error::InvalidInput(format!(
                "row {i} has {} columns, expected {d}",
                r.len()
            )));
        }
        let data = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
        Self::from_matrix(labels, data)
    }

    pub fn from_matrix(labels: Vec<String>, data: DMatrix<f64>) -> Result<Self> {
        if labels.len() != data.nrows() {
            return Err(Error::InvalidInput(format!(
                "{} labels for {} rows",
                labels.len(),
                data.nrows()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = labels.iter().find(|l| !seen.insert(l.as_str())) {
            return Err(Error::InvalidInput(format!("duplicate row label {dup:?}")));
        }
        Ok(Self { labels, data })
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.data.row(i).iter().copied().collect()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// CSV with a `token` column followed by one column per dimension,
    /// values printed with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("token");
        for j in 0..self.dim() {
            let _ = write!(out, ",d{j}");
        }
        out.push('\n');
        for (i, label) in self.labels.iter().enumerate() {
            out.push_str(&csv_field(label));
            for j in 0..self.dim() {
                let _ = write!(out, ",{:.16e}", self.data[(i, j)]);
            }
            out.push('\n');
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
