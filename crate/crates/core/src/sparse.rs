//! Sorted sparse feature vectors.

use crate::error::{Error, Result};

/// A sparse vector stored as strictly increasing `(index, value)` pairs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseVector {
    /// Builds a vector from pairs that must already be strictly increasing in index.
    pub fn from_sorted(pairs: impl IntoIterator<Item = (u32, f64)>) -> Result<Self> {
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for (idx, val) in pairs {
            if let Some(&last) = indices.last() {
                if idx <= last {
                    return Err(Error::domain(format!(
                        "sparse indices must be strictly increasing (got {idx} after {last})"
                    )));
                }
            }
            if !val.is_finite() {
                return Err(Error::domain(format!("non-finite feature value at index {idx}")));
            }
            indices.push(idx);
            values.push(val);
        }
        Ok(SparseVector { indices, values })
    }

    /// Builds a vector from arbitrary pairs, sorting them; duplicate indices are rejected.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u32, f64)>) -> Result<Self> {
        let mut pairs: Vec<_> = pairs.into_iter().collect();
        pairs.sort_by_key(|p| p.0);
        Self::from_sorted(pairs)
    }

    /// Sparse view of a dense slice, dropping exact zeros.
    pub fn from_dense(dense: &[f64]) -> Self {
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for (i, &v) in dense.iter().enumerate() {
            if v != 0.0 {
                indices.push(i as u32);
                values.push(v);
            }
        }
        SparseVector { indices, values }
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at `index` (0 when not stored).
    pub fn get(&self, index: usize) -> f64 {
        u32::try_from(index)
            .ok()
            .and_then(|i| self.indices.binary_search(&i).ok())
            .map_or(0.0, |k| self.values[k])
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices
            .iter()
            .zip(&self.values)
            .map(|(&i, &v)| (i as usize, v))
    }

    /// One past the largest stored index (0 for an empty vector).
    pub fn min_dimension(&self) -> usize {
        self.indices.last().map_or(0, |&i| i as usize + 1)
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.iter().map(|(i, v)| v * dense[i]).sum()
    }

    pub fn squared_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// `dense += scale * self`
    pub fn axpy(&self, scale: f64, dense: &mut [f64]) {
        for (i, v) in self.iter() {
            dense[i] += scale * v;
        }
    }

    pub fn scaled(&self, scale: f64) -> SparseVector {
        SparseVector {
            indices: self.indices.clone(),
            values: self.values.iter().map(|v| v * scale).collect(),
        }
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        self.axpy(1.0, &mut out);
        out
    }
}

/// Pairwise (cascade) summation; the error grows with `log n` rather than `n`.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}
