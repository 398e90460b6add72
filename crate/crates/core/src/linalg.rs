//! Dense hermitian helpers over nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

/// Eigen-decomposition with eigenvalues sorted ascending.
pub struct SortedEigen {
    pub values: Vec<f64>,
    /// Columns are eigenvectors, in the order of `values`.
    pub vectors: DMatrix<Complex64>,
}

pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> SortedEigen {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    SortedEigen { values, vectors }
}

pub fn real_symmetric_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// `sum |lambda_i|` of a hermitian matrix.
pub fn trace_norm(m: &DMatrix<Complex64>) -> f64 {
    let h = hermitize(m);
    SymmetricEigen::new(h).eigenvalues.iter().map(|v| v.abs()).sum()
}

pub fn min_eigenvalue(m: &DMatrix<Complex64>) -> f64 {
    let h = hermitize(m);
    SymmetricEigen::new(h)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// `(m + m^dagger) / 2`
pub fn hermitize(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

pub fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Apply `f` to the spectrum of a hermitian matrix.
pub fn hermitian_function(m: &DMatrix<Complex64>, f: impl Fn(f64) -> f64) -> DMatrix<Complex64> {
    let eig = hermitian_eigen(&hermitize(m));
    let d = DVector::from_iterator(eig.values.len(), eig.values.iter().map(|&v| Complex64::new(f(v), 0.0)));
    &eig.vectors * DMatrix::from_diagonal(&d) * eig.vectors.adjoint()
}

pub fn to_dmatrix(n: usize, row_major: &[Complex64]) -> DMatrix<Complex64> {
    DMatrix::from_row_slice(n, n, row_major)
}
