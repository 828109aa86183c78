use crate::error::{Error, Result};

/// Row-stochastic tolerance used when validating probability rows.
pub const ROW_SUM_TOLERANCE: f64 = 1e-6;

/// `N × D` matrix of embedding vectors, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    data: Vec<f64>,
    rows: usize,
    cols: usize,
    label: String,
}

impl EmbeddingSet {
    pub fn new(data: Vec<f64>, rows: usize, cols: usize, label: impl Into<String>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InsufficientData("embedding set must be non-empty".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {rows}×{cols} matrix",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("row {} column {}", i / cols, i % cols)));
        }
        Ok(Self {
            data,
            rows,
            cols,
            label: label.into(),
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], label: impl Into<String>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != cols) {
            return Err(Error::ShapeMismatch(format!(
                "row {i} has {} columns, expected {cols}",
                rows[i].len()
            )));
        }
        Self::new(rows.concat(), rows.len(), cols, label)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.cols
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> + Clone {
        self.data.chunks_exact(self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Rows selected by index, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<EmbeddingSet> {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        EmbeddingSet::new(data, indices.len(), self.cols, self.label.clone())
    }

    pub fn scaled(&self, factor: f64) -> Result<EmbeddingSet> {
        EmbeddingSet::new(
            self.data.iter().map(|v| v * factor).collect(),
            self.rows,
            self.cols,
            self.label.clone(),
        )
    }
}

/// `N × C` matrix of class probabilities; every row sums to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMatrix {
    data: Vec<f64>,
    rows: usize,
    classes: usize,
}

impl ProbabilityMatrix {
    pub fn new(data: Vec<f64>, rows: usize, classes: usize) -> Result<Self> {
        if classes < 2 {
            return Err(Error::InvalidParameter(format!(
                "probability matrix needs at least 2 classes, got {classes}"
            )));
        }
        if rows == 0 {
            return Err(Error::InsufficientData("probability matrix has no rows".into()));
        }
        if data.len() != rows * classes {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {rows}×{classes} matrix",
                data.len()
            )));
        }
        for (i, row) in data.chunks_exact(classes).enumerate() {
            let in_range = row.iter().all(|p| p.is_finite() && (0.0..=1.0).contains(p));
            let sum: f64 = row.iter().sum();
            if !in_range || (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::RowNotNormalized(i));
            }
        }
        Ok(Self {
            data,
            rows,
            classes,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let classes = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != classes) {
            return Err(Error::ShapeMismatch(format!("row {i} has {} columns", rows[i].len())));
        }
        Self::new(rows.concat(), rows.len(), classes)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.classes..(i + 1) * self.classes]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> + Clone {
        self.data.chunks_exact(self.classes)
    }
}
