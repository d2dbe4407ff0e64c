use alloc::vec::Vec;

use crate::error::{Error, Result};

/// A T×Q matrix of cepstral vectors, one row per retained frame.
///
/// `first_coeff` records the cepstral index of column 0 (1 for plain
/// LPCC, 3 once the two lowest coefficients were removed). Index-dependent
/// lifters use it so that weights stay attached to the true quefrency.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    dim: usize,
    first_coeff: usize,
    data: Vec<f64>,
}

impl FeatureSequence {
    pub fn new(dim: usize) -> Self {
        Self::with_first_coeff(dim, 1)
    }

    pub fn with_first_coeff(dim: usize, first_coeff: usize) -> Self {
        Self {
            dim,
            first_coeff,
            data: Vec::new(),
        }
    }

    /// Builds a sequence from row-major storage.
    pub fn from_flat(dim: usize, first_coeff: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            if !data.is_empty() {
                return Err(Error::Dimension { expected: 0, got: data.len() });
            }
        } else if !data.len().is_multiple_of(dim) {
            return Err(Error::Dimension {
                expected: dim,
                got: data.len() % dim,
            });
        }
        Ok(Self {
            dim,
            first_coeff,
            data,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(dim: usize, rows: &[R]) -> Result<Self> {
        let mut seq = Self::new(dim);
        for row in rows {
            seq.push(row.as_ref())?;
        }
        Ok(seq)
    }

    pub fn push(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: row.len(),
            });
        }
        self.data.extend_from_slice(row);
        Ok(())
    }

    /// Appends all rows of `other`, which must share the column layout.
    pub fn extend(&mut self, other: &FeatureSequence) -> Result<()> {
        if other.dim != self.dim || other.first_coeff != self.first_coeff {
            return Err(Error::Dimension {
                expected: self.dim,
                got: other.dim,
            });
        }
        self.data.extend_from_slice(&other.data);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn first_coeff(&self) -> usize {
        self.first_coeff
    }

    /// Number of frames T.
    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        // chunks_exact panics on a zero chunk size
        self.data.chunks_exact(self.dim.max(1))
    }

    pub fn rows_mut(&mut self) -> impl Iterator<Item = &mut [f64]> + '_ {
        self.data.chunks_exact_mut(self.dim.max(1))
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.data
    }

    /// Per-column mean. Zero vector for an empty sequence.
    pub fn mean(&self) -> Vec<f64> {
        let mut mean = alloc::vec![0.0; self.dim];
        let t = self.len();
        if t == 0 {
            return mean;
        }
        for row in self.rows() {
            for (m, x) in mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        for m in &mut mean {
            *m /= t as f64;
        }
        mean
    }

    /// Applies `f(n, value)` to every entry, where `n` is the cepstral index.
    pub fn map_indexed(mut self, f: impl Fn(usize, f64) -> f64) -> Self {
        let first = self.first_coeff;
        for row in self.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = f(first + j, *v);
            }
        }
        self
    }
}
