//! Compressed-row complex operators.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Anything that can be applied to a coefficient vector.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    /// `y = A x`; `y` is overwritten.
    fn apply_into(&self, x: &[Complex64], y: &mut [Complex64]);
    fn is_hermitian(&self) -> bool;

    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::default(); self.dim()];
        self.apply_into(x, &mut y);
        y
    }

    /// `<x, A x> / <x, x>` in the plain l2 product.
    fn rayleigh_quotient(&self, x: &[Complex64]) -> f64 {
        let y = self.apply(x);
        let num: Complex64 = x.iter().zip(&y).map(|(a, b)| a.conj() * b).sum();
        let den: f64 = x.iter().map(|a| a.norm_sqr()).sum();
        num.re / den
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<Complex64>,
    hermitian: bool,
}

impl SparseOperator {
    /// Builds from `(row, col, value)` triplets; duplicates are summed and exact zeros dropped.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, Complex64)>) -> Result<Self> {
        if let Some(&(r, c, _)) = triplets.iter().find(|t| t.0 >= dim || t.1 >= dim) {
            return Err(Error::Validation(format!("entry ({r}, {c}) outside dimension {dim}")));
        }
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut values: Vec<Complex64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            last = Some((r, c));
            cols.push(c);
            values.push(v);
            row_ptr[r + 1] += 1;
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut op = Self {
            dim,
            row_ptr,
            cols,
            values,
            hermitian: false,
        };
        op.prune();
        Ok(op)
    }

    pub fn diagonal(values: &[Complex64]) -> Self {
        let dim = values.len();
        let mut op = Self {
            dim,
            row_ptr: (0..=dim).collect(),
            cols: (0..dim).collect(),
            values: values.to_vec(),
            hermitian: false,
        };
        op.prune();
        op
    }

    fn prune(&mut self) {
        let mut row_ptr = vec![0usize; self.dim + 1];
        let mut cols = Vec::with_capacity(self.cols.len());
        let mut values = Vec::with_capacity(self.values.len());
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.values[k] != Complex64::default() {
                    cols.push(self.cols[k]);
                    values.push(self.values[k]);
                }
            }
            row_ptr[r + 1] = cols.len();
        }
        self.row_ptr = row_ptr;
        self.cols = cols;
        self.values = values;
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (self.cols[k], self.values[k]))
    }

    pub fn triplets(&self) -> Vec<(usize, usize, Complex64)> {
        (0..self.dim).flat_map(|r| self.row(r).map(move |(c, v)| (r, c, v))).collect()
    }

    pub fn adjoint(&self) -> Self {
        let t = self.triplets().into_iter().map(|(r, c, v)| (c, r, v.conj())).collect();
        let mut op = Self::from_triplets(self.dim, t).expect("same dimension");
        op.hermitian = self.hermitian;
        op
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::Validation("operator dimensions differ".into()));
        }
        let mut t = self.triplets();
        t.extend(other.triplets());
        Self::from_triplets(self.dim, t)
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        let mut op = self.clone();
        op.values.iter_mut().for_each(|v| *v *= s);
        op.prune();
        op.hermitian = self.hermitian && s.im == 0.0;
        op
    }

    /// `max |A - A^dagger|` over entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let diff = self.add(&self.adjoint().scaled(Complex64::new(-1.0, 0.0))).expect("same dimension");
        diff.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Sets the hermitian flag after verifying `max |A - A^dagger| <= tol`.
    pub fn mark_hermitian(mut self, tol: f64) -> Result<Self> {
        let defect = self.hermiticity_defect();
        if defect > tol {
            return Err(Error::Validation(format!("operator is not hermitian (defect {defect:e})")));
        }
        self.hermitian = true;
        Ok(self)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }
}

impl LinearOperator for SparseOperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.dim);
        y.par_iter_mut().with_min_len(256).enumerate().for_each(|(r, out)| {
            let mut acc = Complex64::default();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.cols[k]];
            }
            *out = acc;
        });
    }

    fn is_hermitian(&self) -> bool {
        self.hermitian
    }
}
