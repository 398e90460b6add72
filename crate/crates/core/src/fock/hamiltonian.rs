//! Composite particle-field states and the truncated Hamiltonian.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::basis::{check_alpha, FockBasis};
use super::lanczos::{lowest_eigenpair, Eigenpair, LanczosOptions};
use super::modes::ModeSet;
use super::sparse::{LinearOperator, SparseOperator};
use crate::error::{Error, Result};
use crate::grid::{laplacian_matrix, Field, Grid};
use crate::pekar::PekarProblem;

/// `Psi(x_i, f)` stored at `i * D + f`, normalized so that `h sum |Psi|^2 = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct CompositeState {
    grid: Grid,
    alpha: f64,
    fock_dim: usize,
    coeffs: Vec<Complex64>,
}

impl CompositeState {
    pub fn new(grid: &Grid, fock_dim: usize, alpha: f64, coeffs: Vec<Complex64>) -> Result<Self> {
        check_alpha(alpha)?;
        if coeffs.len() != grid.n() * fock_dim {
            return Err(Error::Validation(format!(
                "expected {} coefficients, got {}",
                grid.n() * fock_dim,
                coeffs.len()
            )));
        }
        let s = Self {
            grid: grid.clone(),
            alpha,
            fock_dim,
            coeffs,
        };
        let norm = s.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Validation(format!("composite state has norm {norm}")));
        }
        Ok(s)
    }

    /// From an arbitrary nonzero coefficient vector, normalizing it.
    pub fn from_vector(grid: &Grid, fock_dim: usize, alpha: f64, mut v: Vec<Complex64>) -> Result<Self> {
        let raw: f64 = v.iter().map(|c| c.norm_sqr()).sum::<f64>() * grid.spacing();
        if !(raw > 0.0 && raw.is_finite()) {
            return Err(Error::NumericalFailure("cannot normalize composite state".into()));
        }
        let s = 1.0 / raw.sqrt();
        v.iter_mut().for_each(|c| *c *= s);
        Self::new(grid, fock_dim, alpha, v)
    }

    /// `psi(x) xi_f`, with `psi` normalized on the grid and `xi` in l2.
    pub fn product(psi: &Field, xi: &[Complex64], alpha: f64) -> Result<Self> {
        let d = xi.len();
        let mut v = Vec::with_capacity(psi.len() * d);
        for p in psi.values() {
            v.extend(xi.iter().map(|x| p * x));
        }
        Self::from_vector(psi.grid(), d, alpha, v)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn fock_dim(&self) -> usize {
        self.fock_dim
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coefficient(&self, x: usize, f: usize) -> Complex64 {
        self.coeffs[x * self.fock_dim + f]
    }

    pub fn norm(&self) -> f64 {
        (self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.spacing()).sqrt()
    }

    /// Coefficients rescaled to a unit l2 vector.
    pub fn unit_vector(&self) -> Vec<Complex64> {
        let s = self.grid.spacing().sqrt();
        self.coeffs.iter().map(|c| c * s).collect()
    }

    /// `<self, other>` in the grid-weighted product.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * self.grid.spacing()
    }
}

/// `H = (-Delta + V) (x) 1 + 1 (x) N_alpha + sum_j (e^{-i k_j x} conj(v_j) a_j^dagger + h.c.)`
/// on `grid (x) FockBasis`, where `v_j = <e_j, v>`.
///
/// For real `v`, `conj(v_j) = v_{-j}`, so the interaction equals
/// `sum_j e^{i k_j x} v_j a_{-j}^dagger + h.c.`.
#[derive(Clone, Debug)]
pub struct Hamiltonian {
    grid: Grid,
    alpha: f64,
    fock_dim: usize,
    kinetic: DMatrix<f64>,
    number: Vec<f64>,
    interaction: SparseOperator,
}

impl Hamiltonian {
    pub fn new(problem: &PekarProblem, modes: &ModeSet, basis: &FockBasis, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let grid = problem.grid().clone();
        if modes.grid() != &grid {
            return Err(Error::Validation("mode set lives on a different grid".into()));
        }
        if basis.modes() != modes.len() {
            return Err(Error::Validation(format!(
                "basis has {} modes, mode set has {}",
                basis.modes(),
                modes.len()
            )));
        }
        let v = problem.coupling();
        if v.max_imag() > 1e-12 * v.max_abs().max(1.0) {
            return Err(Error::Validation("coupling profile v must be real".into()));
        }
        let n = grid.n();
        let d = basis.dim();
        let lap = laplacian_matrix(&grid);
        let mut kinetic = DMatrix::from_row_slice(n, n, &lap);
        for i in 0..n {
            kinetic[(i, i)] += problem.potential().values()[i].re;
        }
        let asym = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| (kinetic[(i, j)] - kinetic[(j, i)]).abs())
            .fold(0.0, f64::max);
        if asym > 1e-12 * kinetic.amax().max(1.0) {
            return Err(Error::Validation(format!("particle operator not symmetric ({asym:e})")));
        }
        // Symmetrize rounding.
        let kinetic = (&kinetic + kinetic.transpose()) * 0.5;
        let number = (0..d).map(|s| basis.total(s) as f64 / (alpha * alpha)).collect();

        let vj = modes.amplitudes(v);
        let mut t = Vec::with_capacity(2 * n * d * modes.len());
        for i in 0..n {
            let x = grid.x(i);
            for (j, vj) in vj.iter().enumerate() {
                let coupling = Complex64::from_polar(1.0, -modes.wavenumber(j) * x) * vj.conj();
                if coupling == Complex64::default() {
                    continue;
                }
                for s in 0..d {
                    if let Some(r) = basis.raised(s, j) {
                        let amp = ((basis.occupation(s)[j] as f64 + 1.0).sqrt() / alpha) * coupling;
                        t.push((i * d + r, i * d + s, amp));
                        t.push((i * d + s, i * d + r, amp.conj()));
                    }
                }
            }
        }
        let interaction = SparseOperator::from_triplets(n * d, t)?.mark_hermitian(1e-12)?;
        Ok(Self {
            grid,
            alpha,
            fock_dim: d,
            kinetic,
            number,
            interaction,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn fock_dim(&self) -> usize {
        self.fock_dim
    }

    /// Dense `-Delta + V` on grid values.
    pub fn particle_matrix(&self) -> &DMatrix<f64> {
        &self.kinetic
    }

    pub fn interaction(&self) -> &SparseOperator {
        &self.interaction
    }

    pub fn apply_particle(&self, x: &[Complex64], y: &mut [Complex64]) {
        let d = self.fock_dim;
        let n = self.grid.n();
        y.par_chunks_mut(d).enumerate().for_each(|(i, out)| {
            out.iter_mut().for_each(|o| *o = Complex64::default());
            for l in 0..n {
                let k = self.kinetic[(i, l)];
                if k == 0.0 {
                    continue;
                }
                let src = &x[l * d..(l + 1) * d];
                for (o, s) in out.iter_mut().zip(src) {
                    *o += s * k;
                }
            }
        });
    }

    pub fn apply_number(&self, x: &[Complex64], y: &mut [Complex64]) {
        let d = self.fock_dim;
        y.par_chunks_mut(d).zip(x.par_chunks(d)).for_each(|(out, src)| {
            for ((o, s), w) in out.iter_mut().zip(src).zip(&self.number) {
                *o = s * w;
            }
        });
    }

    /// Expectations of the three terms in a state (any normalization).
    pub fn energy_parts(&self, x: &[Complex64]) -> (f64, f64, f64) {
        let norm: f64 = x.iter().map(|c| c.norm_sqr()).sum();
        let mut y = vec![Complex64::default(); x.len()];
        let ip = |y: &[Complex64]| x.iter().zip(y).map(|(a, b)| a.conj() * b).sum::<Complex64>().re / norm;
        self.apply_particle(x, &mut y);
        let p = ip(&y);
        self.apply_number(x, &mut y);
        let nn = ip(&y);
        self.interaction.apply_into(x, &mut y);
        let i = ip(&y);
        (p, nn, i)
    }

    /// Assembled sparse parts `(particle (x) 1, 1 (x) N_alpha, interaction)`.
    pub fn sparse_parts(&self) -> Result<(SparseOperator, SparseOperator, SparseOperator)> {
        let n = self.grid.n();
        let d = self.fock_dim;
        let mut t = Vec::new();
        for i in 0..n {
            for l in 0..n {
                let k = self.kinetic[(i, l)];
                if k != 0.0 {
                    for f in 0..d {
                        t.push((i * d + f, l * d + f, Complex64::new(k, 0.0)));
                    }
                }
            }
        }
        let particle = SparseOperator::from_triplets(n * d, t)?.mark_hermitian(1e-12)?;
        let diag: Vec<Complex64> = (0..n * d).map(|r| Complex64::new(self.number[r % d], 0.0)).collect();
        let number = SparseOperator::diagonal(&diag).mark_hermitian(0.0)?;
        Ok((particle, number, self.interaction.clone()))
    }

    pub fn to_sparse(&self) -> Result<SparseOperator> {
        let (p, n, i) = self.sparse_parts()?;
        p.add(&n)?.add(&i)?.mark_hermitian(1e-12)
    }

    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        Ok(self.to_sparse()?.to_dense())
    }
}

impl LinearOperator for Hamiltonian {
    fn dim(&self) -> usize {
        self.grid.n() * self.fock_dim
    }

    fn apply_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        let mut tmp = vec![Complex64::default(); x.len()];
        self.apply_particle(x, y);
        self.apply_number(x, &mut tmp);
        y.par_iter_mut().zip(&tmp).for_each(|(a, b)| *a += b);
        self.interaction.apply_into(x, &mut tmp);
        y.par_iter_mut().zip(&tmp).for_each(|(a, b)| *a += b);
    }

    fn is_hermitian(&self) -> bool {
        true
    }
}

#[derive(Clone, Debug)]
pub struct GroundState {
    pub energy: f64,
    pub state: CompositeState,
    pub residual: f64,
    pub matvecs: usize,
}

/// Lowest eigenpair of `h`; `trial` (if given) starts the Krylov iteration.
pub fn ground_state(h: &Hamiltonian, opts: &LanczosOptions, trial: Option<&CompositeState>) -> Result<GroundState> {
    let start = trial.map(|t| t.unit_vector());
    let Eigenpair {
        value,
        vector,
        residual,
        matvecs,
        ..
    } = lowest_eigenpair(h, opts, start.as_deref())?;
    let state = CompositeState::from_vector(h.grid(), h.fock_dim(), h.alpha(), vector)?;
    Ok(GroundState {
        energy: value,
        state,
        residual,
        matvecs,
    })
}
