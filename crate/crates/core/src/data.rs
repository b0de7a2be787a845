//! The n × p sample matrix.

use nalgebra::DMatrix;

use crate::accum::ExactSum;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
    column_names: Option<Vec<String>>,
    centered: bool,
}

impl DataMatrix {
    /// Validates shape (n ≥ 2, p ≥ 1) and finiteness.
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() < 2 {
            return Err(Error::InvalidData(format!(
                "need at least 2 observations, got {}",
                values.nrows()
            )));
        }
        if values.ncols() == 0 {
            return Err(Error::InvalidData("no columns".into()));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            let (r, c) = (pos % values.nrows(), pos / values.nrows());
            return Err(Error::InvalidData(format!(
                "non-finite value at row {}, column {}",
                r + 1,
                c + 1
            )));
        }
        Ok(DataMatrix {
            values,
            column_names: None,
            centered: false,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != p) {
            return Err(Error::InvalidData(format!(
                "row {} has {} values, expected {p}",
                bad + 1,
                rows[bad].len()
            )));
        }
        Self::new(DMatrix::from_fn(rows.len(), p, |r, c| rows[r][c]))
    }

    /// Row-major flat buffer of `n * p` values.
    pub fn from_row_major(n: usize, p: usize, values: &[f64]) -> Result<Self> {
        if values.len() != n * p {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {n} x {p} matrix",
                values.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(n, p, values))
    }

    pub fn with_column_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p() {
            return Err(Error::DimensionMismatch(format!(
                "{} names for {} columns",
                names.len(),
                self.p()
            )));
        }
        self.column_names = Some(names);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn column_names(&self) -> Option<&[String]> {
        self.column_names.as_deref()
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    /// Column means, summed order-independently.
    pub fn column_means(&self) -> Vec<f64> {
        let n = self.n() as f64;
        self.values
            .column_iter()
            .map(|col| {
                let mut acc = ExactSum::new();
                col.iter().for_each(|&v| acc.add(v));
                acc.value() / n
            })
            .collect()
    }

    /// Subtracts the column means.
    pub fn centered(&self) -> DataMatrix {
        if self.centered {
            return self.clone();
        }
        let means = self.column_means();
        let mut values = self.values.clone();
        for (mut col, m) in values.column_iter_mut().zip(&means) {
            col.iter_mut().for_each(|v| *v -= m);
        }
        DataMatrix {
            values,
            column_names: self.column_names.clone(),
            centered: true,
        }
    }

    /// Centers and scales every column to unit (1/n) variance.
    pub fn standardized(&self) -> Result<DataMatrix> {
        let centered = self.centered();
        let n = self.n() as f64;
        let mut values = centered.values;
        for (c, mut col) in values.column_iter_mut().enumerate() {
            let mut acc = ExactSum::new();
            col.iter().for_each(|&v| acc.add(v * v));
            let sd = (acc.value() / n).sqrt();
            if !(sd > 0.0) {
                return Err(Error::InvalidData(format!("column {} has zero variance", c + 1)));
            }
            col.iter_mut().for_each(|v| *v /= sd);
        }
        Ok(DataMatrix {
            values,
            column_names: self.column_names.clone(),
            centered: true,
        })
    }

    /// Rows picked by index (repeats allowed), e.g. a bootstrap resample.
    pub fn select_rows(&self, rows: &[usize]) -> DataMatrix {
        let values = DMatrix::from_fn(rows.len(), self.p(), |r, c| self.values[(rows[r], c)]);
        DataMatrix {
            values,
            column_names: self.column_names.clone(),
            centered: false,
        }
    }

    /// Columns reordered by `order`.
    pub fn select_columns(&self, order: &[usize]) -> Result<DataMatrix> {
        if order.iter().any(|&c| c >= self.p()) {
            return Err(Error::DimensionMismatch("column index out of range".into()));
        }
        let values = DMatrix::from_fn(self.n(), order.len(), |r, c| self.values[(r, order[c])]);
        Ok(DataMatrix {
            values,
            column_names: self
                .column_names
                .as_ref()
                .map(|names| order.iter().map(|&c| names[c].clone()).collect()),
            centered: self.centered,
        })
    }

    /// Entrywise map; the result is no longer flagged as centered.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<DataMatrix> {
        let mut out = Self::new(self.values.map(f))?;
        out.column_names = self.column_names.clone();
        Ok(out)
    }

    pub fn row(&self, r: usize) -> Vec<f64> {
        self.values.row(r).iter().copied().collect()
    }

    /// Row-major copy of all values.
    pub fn to_row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n() * self.p());
        for r in 0..self.n() {
            out.extend(self.values.row(r).iter());
        }
        out
    }
}
