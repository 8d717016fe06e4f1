//! Dense model vectors and the handful of vector kernels the simulator needs.
//!
//! All algorithms work on `ModelVector`, a dense `f64` parameter vector.
//! Gradients of the sparse data term are accumulated through
//! [`ModelVector::axpy_sparse`] so a per-sample gradient never has to be
//! materialized densely.

use crate::dataset::RowView;

/// Dense parameter vector x in R^d.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelVector {
    coords: Vec<f64>,
}

impl ModelVector {
    pub fn zeros(dim: usize) -> Self {
        ModelVector {
            coords: vec![0.0; dim],
        }
    }

    pub fn from_vec(coords: Vec<f64>) -> Self {
        ModelVector { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.coords
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|v| v.is_finite())
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        self.coords.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Dot product with a sparse row.
    pub fn dot_sparse(&self, row: RowView<'_>) -> f64 {
        row.indices()
            .iter()
            .zip(row.values())
            .map(|(&i, &v)| self.coords[i as usize] * v)
            .sum()
    }

    /// self += coeff * row, touching only the row's nonzero coordinates.
    pub fn axpy_sparse(&mut self, coeff: f64, row: RowView<'_>) {
        for (&i, &v) in row.indices().iter().zip(row.values()) {
            self.coords[i as usize] += coeff * v;
        }
    }

    /// self += other.
    pub fn add_assign(&mut self, other: &ModelVector) {
        debug_assert_eq!(self.dim(), other.dim());
        for (a, b) in self.coords.iter_mut().zip(&other.coords) {
            *a += b;
        }
    }

    /// self -= other.
    pub fn sub_assign(&mut self, other: &ModelVector) {
        debug_assert_eq!(self.dim(), other.dim());
        for (a, b) in self.coords.iter_mut().zip(&other.coords) {
            *a -= b;
        }
    }

    /// self *= factor.
    pub fn scale(&mut self, factor: f64) {
        for a in &mut self.coords {
            *a *= factor;
        }
    }

    /// self += coeff * other.
    pub fn axpy(&mut self, coeff: f64, other: &ModelVector) {
        debug_assert_eq!(self.dim(), other.dim());
        for (a, b) in self.coords.iter_mut().zip(&other.coords) {
            *a += coeff * b;
        }
    }

    /// Norm of (self - other) without allocating.
    pub fn distance(&self, other: &ModelVector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl std::ops::Index<usize> for ModelVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.coords[i]
    }
}

impl std::ops::IndexMut<usize> for ModelVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.coords[i]
    }
}
