//! Multivariate time series of graph signals.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result};

/// An N x K observation matrix: one graph signal (column) per time step.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    data: DMatrix<f64>,
}

impl TimeSeries {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(invalid("time series must have at least one node and one step"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(invalid("time series contains non-finite entries"));
        }
        Ok(Self { data })
    }

    pub fn n_nodes(&self) -> usize {
        self.data.nrows()
    }

    /// Number of time steps K.
    pub fn len(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.data.ncols() == 0
    }

    pub fn column(&self, k: usize) -> DVector<f64> {
        DVector::from_column_slice(self.data.column(k).as_slice())
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// Columns `[start, start + len)` as an owned N x len block.
    pub fn block(&self, start: usize, len: usize) -> DMatrix<f64> {
        self.data.columns(start, len).into_owned()
    }

    /// Contiguous chronological slice as a new series.
    pub fn slice(&self, start: usize, len: usize) -> Result<Self> {
        if start + len > self.len() || len == 0 {
            return Err(invalid("slice out of range"));
        }
        Ok(Self { data: self.block(start, len) })
    }

    pub fn from_columns(cols: &[DVector<f64>]) -> Result<Self> {
        if cols.is_empty() {
            return Err(invalid("no columns"));
        }
        let n = cols[0].len();
        if cols.iter().any(|c| c.len() != n) {
            return Err(invalid("ragged columns"));
        }
        let mut data = DMatrix::zeros(n, cols.len());
        for (k, c) in cols.iter().enumerate() {
            data.set_column(k, c);
        }
        Self::new(data)
    }

    /// Per-node mean/std over the first `fit_len` columns, applied to all
    /// columns. Constant nodes keep std 1 so they map to zero.
    pub fn standardize_per_node(&self, fit_len: usize) -> Result<(Self, Vec<f64>, Vec<f64>)> {
        if fit_len == 0 || fit_len > self.len() {
            return Err(invalid("fit_len out of range"));
        }
        let n = self.n_nodes();
        let mut means = Vec::with_capacity(n);
        let mut stds = Vec::with_capacity(n);
        for i in 0..n {
            let row = self.data.row(i);
            let mean = row.columns(0, fit_len).sum() / fit_len as f64;
            let var = row
                .columns(0, fit_len)
                .iter()
                .map(|v| (v - mean) * (v - mean))
                .sum::<f64>()
                / fit_len as f64;
            let std = libm::sqrt(var);
            means.push(mean);
            stds.push(if std > 0.0 { std } else { 1.0 });
        }
        let mut data = self.data.clone();
        for i in 0..n {
            for k in 0..self.len() {
                data[(i, k)] = (data[(i, k)] - means[i]) / stds[i];
            }
        }
        Ok((Self { data }, means, stds))
    }
}
