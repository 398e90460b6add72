//! Classical (Pekar) side: effective pair potential, optimal field configuration,
//! pure and mixed energy functionals and their minimization on the mass sphere.
//!
//! Sign conventions: the induced pair interaction enters the energy with a minus sign
//! and the optimal field is the negative of the smeared density,
//!
//! ```text
//! E(psi)  = <psi, (-Delta + V) psi> - <rho, W * rho>,   rho = |psi|^2
//! u_psi(y) = -int rho(x) v(x - y) dx
//! W(t)    = int v(s) v(s + t) ds,   W^(k) = |v^(k)|^2
//! ```
//!
//! For even couplings `u_psi = -rho * v` and `W = v * v`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{self, apply_multiplier, convolve, fourier_transform, laplacian_apply, Field, Grid};
use crate::linalg;

const REAL_TOL: f64 = 1e-12;

/// External potential, coupling profile and mass of a single-particle Pekar problem.
#[derive(Clone, Debug)]
pub struct PekarProblem {
    potential: Field,
    coupling: Field,
    mass: f64,
    effective: Field,
    potential_is_zero: bool,
}

impl PekarProblem {
    pub fn new(potential: Field, coupling: Field, mass: f64) -> Result<Self> {
        potential.same_grid(&coupling)?;
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::Validation(format!("mass must be positive, got {mass}")));
        }
        validate_potential(&potential)?;
        let effective = effective_potential(&coupling)?;
        let potential_is_zero = potential.max_abs() == 0.0;
        Ok(Self {
            potential,
            coupling,
            mass,
            effective,
            potential_is_zero,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.potential.grid()
    }

    pub fn potential(&self) -> &Field {
        &self.potential
    }

    pub fn coupling(&self) -> &Field {
        &self.coupling
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// `W` for this coupling (see [`effective_potential`]).
    pub fn effective(&self) -> &Field {
        &self.effective
    }

    pub fn potential_is_zero(&self) -> bool {
        self.potential_is_zero
    }

    pub fn with_potential(&self, potential: Field) -> Result<Self> {
        Self::new(potential, self.coupling.clone(), self.mass)
    }

    pub fn without_potential(&self) -> Self {
        let mut p = self.clone();
        p.potential = Field::zeros(self.grid());
        p.potential_is_zero = true;
        p
    }

    pub fn with_coupling(&self, coupling: Field) -> Result<Self> {
        Self::new(self.potential.clone(), coupling, self.mass)
    }

    pub fn with_mass(&self, mass: f64) -> Result<Self> {
        Self::new(self.potential.clone(), self.coupling.clone(), mass)
    }

    /// `(-Delta + V) psi`
    pub fn apply_linear(&self, psi: &Field) -> Field {
        laplacian_apply(psi).add(&psi.mul(&self.potential))
    }

    /// Dense matrix of `-Delta + V` on grid values.
    pub fn linear_matrix(&self) -> DMatrix<f64> {
        let n = self.grid().n();
        let lap = grid::laplacian_matrix(self.grid());
        let mut m = DMatrix::from_row_slice(n, n, &lap);
        for i in 0..n {
            m[(i, i)] += self.potential.values()[i].re;
        }
        m
    }

    /// Lowest eigenpair of `-Delta + V`; the state is normalized to the problem mass.
    pub fn linear_ground_state(&self) -> (f64, Field) {
        let (values, vectors) = linalg::real_symmetric_eigen(&self.linear_matrix());
        let grid = self.grid();
        let scale = (self.mass / grid.spacing()).sqrt();
        let mut psi = Field::from_real(grid, vectors.column(0).as_slice()).unwrap().scaled_real(scale);
        if psi.integral().re < 0.0 {
            psi = psi.scaled_real(-1.0);
        }
        (values[0], psi)
    }
}

fn validate_potential(potential: &Field) -> Result<()> {
    let sup = potential.max_abs();
    if potential.max_imag() > REAL_TOL * sup.max(1.0) {
        return Err(Error::Validation("external potential must be real".into()));
    }
    let max = potential.values().iter().map(|v| v.re).fold(f64::NEG_INFINITY, f64::max);
    if max > 1e-14 * sup.max(1.0) {
        return Err(Error::Validation(format!(
            "external potential must be non-positive, max value {max:e}"
        )));
    }
    let grid = potential.grid();
    let ring = (0.025 * grid.length()).max(grid.spacing());
    let edge = (0..grid.n())
        .filter(|&i| grid.periodic_distance(grid.x(i), 0.0) <= ring + 1e-12)
        .map(|i| potential.values()[i].norm())
        .fold(0.0, f64::max);
    if edge > 1e-3 * sup {
        return Err(Error::Validation(format!(
            "external potential does not decay toward the box edge (|V| = {edge:e} vs sup {sup:e})"
        )));
    }
    Ok(())
}

fn check_real_coupling(v: &Field) -> Result<()> {
    if v.max_imag() > REAL_TOL * v.max_abs().max(1.0) {
        return Err(Error::Validation("coupling profile v must be real".into()));
    }
    Ok(())
}

/// Induced pair potential `W(t) = int v(s) v(s + t) ds` (equal to `v * v` for even `v`).
pub fn effective_potential(v: &Field) -> Result<Field> {
    check_real_coupling(v)?;
    let w = convolve(&v.reflected(), v)?;
    Ok(w.map(|z| Complex64::new(z.re, 0.0)))
}

/// Optimal classical field `u_psi(y) = -int |psi(x)|^2 v(x - y) dx`.
pub fn field_configuration(psi: &Field, v: &Field) -> Result<Field> {
    psi.same_grid(v)?;
    let u = convolve(&psi.density(), &v.reflected())?;
    Ok(u.scaled_real(-1.0))
}

/// Energy of the product state `psi (x) xi(u)`:
/// kinetic + potential + `||u||^2` + `int int (u + conj u)(y) v(x - y) |psi(x)|^2`.
pub fn product_energy(psi: &Field, u: &Field, problem: &PekarProblem) -> Result<f64> {
    psi.same_grid(problem.potential())?;
    u.same_grid(problem.potential())?;
    let linear = psi.inner(&problem.apply_linear(psi)).re;
    let field = u.norm_sq();
    let two_re_u = u.map(|z| Complex64::new(2.0 * z.re, 0.0));
    let smeared = convolve(&two_re_u, problem.coupling())?;
    let interaction = psi.density().inner(&smeared).re;
    Ok(linear + field + interaction)
}

/// `<rho, W * rho>` for a density `rho`.
fn pair_energy(rho: &Field, problem: &PekarProblem) -> f64 {
    let w_rho = convolve(problem.effective(), rho).expect("grid checked by caller");
    rho.inner(&w_rho).re
}

pub fn pekar_energy(psi: &Field, problem: &PekarProblem) -> Result<f64> {
    psi.same_grid(problem.potential())?;
    let linear = psi.inner(&problem.apply_linear(psi)).re;
    Ok(linear - pair_energy(&psi.density(), problem))
}

/// Unconstrained L2 gradient `2 (-Delta + V) psi - 4 (W * |psi|^2) psi`
/// with respect to the real inner product `Re <., .>`.
pub fn pekar_gradient(psi: &Field, problem: &PekarProblem) -> Result<Field> {
    psi.same_grid(problem.potential())?;
    let w_rho = convolve(problem.effective(), &psi.density())?;
    let lin = problem.apply_linear(psi);
    Ok(lin.scaled_real(2.0).sub(&psi.mul(&w_rho).scaled_real(4.0)))
}

#[derive(Clone, Debug)]
pub struct MinimizeOptions {
    pub max_iterations: usize,
    /// Sphere-tangent gradient residual tolerance.
    pub gradient_tolerance: f64,
    /// Required bound on the per-iteration energy change at convergence.
    pub energy_tolerance: f64,
    /// Shift `s` in the `(-Delta + s)^{-1}` preconditioner.
    pub preconditioner_shift: f64,
    /// Width of the Gaussian initial guess; `None` means `L / 16`.
    pub initial_width: Option<f64>,
    pub seed: u64,
    /// Random displacement (in length units) applied to the initial centre.
    pub perturbation: f64,
    pub record_trace: bool,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200_000,
            gradient_tolerance: 1e-8,
            energy_tolerance: 1e-12,
            preconditioner_shift: 1.0,
            initial_width: None,
            seed: 0,
            perturbation: 0.0,
            record_trace: false,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub energy: f64,
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct PekarResult {
    pub psi: Field,
    pub energy: f64,
    pub u_psi: Field,
    pub gradient_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Energy of the initial guess.
    pub initial_energy: f64,
    pub trace: Vec<TracePoint>,
}

/// Normalized Gaussian centred at the minimum of `V` (box centre when `V = 0`).
pub fn initial_guess(problem: &PekarProblem, opts: &MinimizeOptions) -> Field {
    let grid = problem.grid();
    let mut center = if problem.potential_is_zero() {
        grid.center()
    } else {
        let (imin, _) = problem
            .potential()
            .values()
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.re.total_cmp(&b.1.re))
            .expect("non-empty grid");
        grid.x(imin)
    };
    if opts.perturbation > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        center += rng.random_range(-opts.perturbation..opts.perturbation);
    }
    let width = opts.initial_width.unwrap_or(grid.length() / 16.0);
    let psi = Field::from_real_fn(grid, |x| {
        let d = grid.periodic_distance(x, center);
        (-d * d / (2.0 * width * width)).exp()
    });
    normalize_to(&psi, problem.mass())
}

fn normalize_to(psi: &Field, mass: f64) -> Field {
    psi.scaled_real((mass / psi.norm_sq()).sqrt())
}

fn precondition(f: &Field, shift: f64) -> Field {
    let grid = f.grid().clone();
    apply_multiplier(f, |j| {
        let k = grid.wavenumber(j);
        Complex64::new(1.0 / (k * k + shift), 0.0)
    })
}

/// Remove the component along `psi` in the real inner product.
fn tangent(g: &Field, psi: &Field, mass: f64) -> Field {
    let c = psi.inner(g).re / mass;
    g.axpy(-c, psi)
}

/// Translate `psi` so that the circular centroid of `|psi|^2` sits at the box centre.
fn pin_centroid(psi: &Field) -> Field {
    let grid = psi.grid();
    let l = grid.length();
    let two_pi = 2.0 * std::f64::consts::PI;
    let moment: Complex64 = psi
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| Complex64::from_polar(v.norm_sqr(), two_pi * grid.x(i) / l))
        .sum();
    let total: f64 = psi.values().iter().map(|v| v.norm_sqr()).sum();
    if moment.norm() < 1e-8 * total {
        return psi.clone();
    }
    let centroid = (moment.arg() / two_pi * l).rem_euclid(l);
    let shift = grid.periodic_displacement(grid.center(), centroid);
    if shift.abs() < 1e-14 * l {
        return psi.clone();
    }
    translate(psi, shift)
}

/// `f(x) -> f(x - s)` by a Fourier phase.
pub fn translate(f: &Field, s: f64) -> Field {
    let grid = f.grid().clone();
    apply_multiplier(f, |j| Complex64::from_polar(1.0, -grid.wavenumber(j) * s))
}

pub fn minimize(problem: &PekarProblem, opts: &MinimizeOptions) -> Result<PekarResult> {
    minimize_from(problem, initial_guess(problem, opts), opts)
}

/// Projected, preconditioned gradient descent with Armijo backtracking on the sphere
/// `||psi||^2 = m`. Every iterate is renormalized onto the sphere.
pub fn minimize_from(problem: &PekarProblem, initial: Field, opts: &MinimizeOptions) -> Result<PekarResult> {
    initial.same_grid(problem.potential())?;
    let mass = problem.mass();
    let mut psi = normalize_to(&initial, mass);
    if problem.potential_is_zero() {
        psi = pin_centroid(&psi);
    }
    let mut energy = pekar_energy(&psi, problem)?;
    let initial_energy = energy;
    let mut step = 1.0;
    let mut last_change = f64::INFINITY;
    let mut trace = Vec::new();
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    for it in 0..=opts.max_iterations {
        iterations = it;
        let grad = pekar_gradient(&psi, problem)?;
        let g_t = tangent(&grad, &psi, mass);
        residual = g_t.norm();
        if !residual.is_finite() || !energy.is_finite() {
            return Err(Error::NumericalFailure(format!(
                "non-finite energy or gradient at iteration {it}"
            )));
        }
        if opts.record_trace {
            trace.push(TracePoint {
                iteration: it,
                energy,
                residual,
            });
        }
        if residual <= opts.gradient_tolerance && last_change <= opts.energy_tolerance {
            converged = true;
            break;
        }
        if it == opts.max_iterations {
            break;
        }
        let dir = tangent(&precondition(&g_t, opts.preconditioner_shift), &psi, mass).scaled_real(-1.0);
        let slope = g_t.inner(&dir).re;
        let slack = 8.0 * f64::EPSILON * energy.abs().max(1.0);
        let mut accepted = None;
        for _ in 0..60 {
            let trial = normalize_to(&psi.axpy(step, &dir), mass);
            let trial = if problem.potential_is_zero() { pin_centroid(&trial) } else { trial };
            let e = pekar_energy(&trial, problem)?;
            let ok = if (step * slope).abs() > 1e-9 * energy.abs().max(1.0) {
                e <= energy + 1e-4 * step * slope + slack
            } else {
                // Energy differences are at rounding level here; require the
                // sphere residual to shrink instead.
                let g = tangent(&pekar_gradient(&trial, problem)?, &trial, mass);
                e <= energy + slack && g.norm() < residual
            };
            if ok {
                accepted = Some((trial, e));
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some((trial, e)) => {
                last_change = (energy - e).abs();
                psi = trial;
                energy = e;
                step = (step * 1.5).min(1e3);
            }
            None => {
                // Line search exhausted at rounding level: no further progress possible.
                converged = residual <= opts.gradient_tolerance;
                break;
            }
        }
    }

    let u_psi = field_configuration(&psi, problem.coupling())?;
    Ok(PekarResult {
        psi,
        energy,
        u_psi,
        gradient_residual: residual,
        iterations,
        converged,
        initial_energy,
        trace,
    })
}

/// Energies `(E_V, E_0)` of the problem with and without the external potential.
pub fn binding_gap(problem: &PekarProblem, opts: &MinimizeOptions) -> Result<(f64, f64)> {
    let with_v = minimize(problem, opts)?;
    if problem.potential_is_zero() {
        return Ok((with_v.energy, with_v.energy));
    }
    let (a, b) = rayon::join(|| Ok::<_, Error>(with_v.energy), || minimize(&problem.without_potential(), opts));
    Ok((a?, b?.energy))
}

/// Runs `minimize` from `trials` perturbed initial guesses and reports the largest
/// trace distance between the resulting pure states.
pub fn minimizer_spread(problem: &PekarProblem, opts: &MinimizeOptions, trials: usize, displacement: f64) -> Result<f64> {
    let reference = minimize(problem, opts)?;
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let mut o = opts.clone();
        o.seed = opts.seed.wrapping_add(t as u64 + 1);
        o.perturbation = displacement;
        let r = minimize(problem, &o)?;
        let overlap = reference.psi.inner(&r.psi).norm() / problem.mass();
        let d = 2.0 * (1.0 - overlap * overlap).max(0.0).sqrt();
        worst = worst.max(d);
    }
    Ok(worst)
}

/// `gamma = sum_j lambda_j |u_j><u_j|` with orthonormal `u_j`.
#[derive(Clone, Debug)]
pub struct MixedState {
    eigenvalues: Vec<f64>,
    orbitals: Vec<Field>,
}

impl MixedState {
    pub fn new(eigenvalues: Vec<f64>, orbitals: Vec<Field>, mass: f64) -> Result<Self> {
        if eigenvalues.len() != orbitals.len() || orbitals.is_empty() {
            return Err(Error::Validation("eigenvalue and orbital counts differ".into()));
        }
        if eigenvalues.iter().any(|&l| l < 0.0 || !l.is_finite()) {
            return Err(Error::Validation("mixed-state weights must be non-negative".into()));
        }
        let total: f64 = eigenvalues.iter().sum();
        if (total - mass).abs() > 1e-12 * mass.max(1.0) {
            return Err(Error::Validation(format!("weights sum to {total}, expected {mass}")));
        }
        for (a, ua) in orbitals.iter().enumerate() {
            for (b, ub) in orbitals.iter().enumerate() {
                let g = ua.inner(ub);
                let target = if a == b { 1.0 } else { 0.0 };
                if (g - target).norm() > 1e-10 {
                    return Err(Error::Validation(format!(
                        "orbitals are not orthonormal: <u_{a}, u_{b}> = {g}"
                    )));
                }
            }
        }
        Ok(Self { eigenvalues, orbitals })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn orbitals(&self) -> &[Field] {
        &self.orbitals
    }

    pub fn rank(&self) -> usize {
        self.orbitals.len()
    }

    pub fn density(&self) -> Field {
        let mut rho = Field::zeros(self.orbitals[0].grid());
        for (l, u) in self.eigenvalues.iter().zip(&self.orbitals) {
            rho = rho.axpy(*l, &u.density());
        }
        rho
    }

    /// `lambda_2 / lambda_1` (zero for rank one).
    pub fn second_ratio(&self) -> f64 {
        if self.eigenvalues.len() < 2 || self.eigenvalues[0] == 0.0 {
            return 0.0;
        }
        self.eigenvalues[1] / self.eigenvalues[0]
    }
}

/// `sum_j lambda_j <u_j, (-Delta + V) u_j> - <rho, W * rho>`, `rho = sum_j lambda_j |u_j|^2`.
pub fn mixed_pekar_energy(gamma: &MixedState, problem: &PekarProblem) -> Result<f64> {
    let mut linear = 0.0;
    for (l, u) in gamma.eigenvalues.iter().zip(&gamma.orbitals) {
        u.same_grid(problem.potential())?;
        linear += l * u.inner(&problem.apply_linear(u)).re;
    }
    Ok(linear - pair_energy(&gamma.density(), problem))
}

#[derive(Clone, Debug)]
pub struct MixedResult {
    pub state: MixedState,
    pub energy: f64,
    pub ratio: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `<psi, h_rho psi> / m - min spec(h_rho)` for the dominant orbital, where
    /// `h_rho = -Delta + V - 2 W * rho` is the linearized operator.
    pub linearized_defect: f64,
}

/// Euclidean projection of `y` onto `{lambda >= 0, sum lambda = mass}`.
fn project_simplex(y: &[f64], mass: f64) -> Vec<f64> {
    let mut sorted = y.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, v) in sorted.iter().enumerate() {
        cumulative += v;
        let t = (cumulative - mass) / (i as f64 + 1.0);
        if v - t > 0.0 {
            theta = t;
        }
    }
    y.iter().map(|v| (v - theta).max(0.0)).collect()
}

/// Löwdin orthonormalization `U (U^dagger U)^{-1/2}`.
fn orthonormalize(orbitals: &[Field]) -> Vec<Field> {
    let r = orbitals.len();
    let gram = DMatrix::from_fn(r, r, |a, b| orbitals[a].inner(&orbitals[b]));
    let inv_sqrt = linalg::hermitian_function(&gram, |v| 1.0 / v.sqrt());
    (0..r)
        .map(|b| {
            let mut acc = Field::zeros(orbitals[0].grid());
            for (a, u) in orbitals.iter().enumerate() {
                acc = acc.add(&u.scaled(inv_sqrt[(a, b)]));
            }
            acc
        })
        .collect()
}

/// First Fourier coefficient with modulus above `1e-8`, used for ordering and phase fixing.
fn leading_coefficient(u: &Field) -> Complex64 {
    let c = fourier_transform(u);
    c.values()
        .iter()
        .copied()
        .find(|v| v.norm() > 1e-8)
        .unwrap_or_default()
}

fn fix_phase(u: &Field) -> Field {
    let c = leading_coefficient(u);
    if c.norm() == 0.0 {
        return u.clone();
    }
    u.scaled(c.conj() / c.norm())
}

/// Sort descending in weight; ties broken by the leading Fourier coefficient.
fn sort_state(lambda: Vec<f64>, orbitals: Vec<Field>) -> (Vec<f64>, Vec<Field>) {
    let mut pairs: Vec<(f64, Field)> = lambda.into_iter().zip(orbitals.into_iter().map(|u| fix_phase(&u))).collect();
    pairs.sort_by(|a, b| {
        b.0.total_cmp(&a.0).then_with(|| {
            let (ca, cb) = (leading_coefficient(&a.1), leading_coefficient(&b.1));
            ca.re.total_cmp(&cb.re).then(ca.im.total_cmp(&cb.im))
        })
    });
    pairs.into_iter().unzip()
}

fn linearized_operator_apply(u: &Field, w_rho: &Field, problem: &PekarProblem) -> Field {
    problem.apply_linear(u).sub(&u.mul(w_rho).scaled_real(2.0))
}

fn linearized_defect(psi: &Field, problem: &PekarProblem) -> Result<f64> {
    let rho = psi.density();
    let w_rho = convolve(problem.effective(), &rho)?;
    let mut m = problem.linear_matrix();
    for i in 0..m.nrows() {
        m[(i, i)] -= 2.0 * w_rho.values()[i].re;
    }
    let (values, _) = linalg::real_symmetric_eigen(&m);
    let expectation = psi.inner(&linearized_operator_apply(psi, &w_rho, problem)).re / problem.mass();
    Ok(expectation - values[0])
}

/// Alternating projected-gradient minimization of the mixed functional over
/// `(lambda, {u_j})` of rank `rank`, starting from the `rank` lowest eigenvectors of
/// `-Delta + V` with equal weights.
///
/// Once the weights have collapsed onto a vertex of the simplex the surviving orbital
/// is polished with [`minimize_from`].
pub fn minimize_mixed(problem: &PekarProblem, rank: usize, opts: &MinimizeOptions) -> Result<MixedResult> {
    if rank == 0 {
        return Err(Error::Validation("rank must be at least 1".into()));
    }
    let mass = problem.mass();
    let grid = problem.grid().clone();
    if rank == 1 {
        let r = minimize(problem, opts)?;
        let state = MixedState::new(vec![mass], vec![r.psi.scaled_real(1.0 / mass.sqrt())], mass)?;
        let defect = linearized_defect(&r.psi, problem)?;
        return Ok(MixedResult {
            state,
            energy: r.energy,
            ratio: 0.0,
            iterations: r.iterations,
            converged: r.converged,
            linearized_defect: defect,
        });
    }
    if rank > grid.n() {
        return Err(Error::Validation(format!("rank {rank} exceeds grid size {}", grid.n())));
    }

    let (_, vectors) = linalg::real_symmetric_eigen(&problem.linear_matrix());
    let scale = 1.0 / grid.spacing().sqrt();
    let mut orbitals: Vec<Field> = (0..rank)
        .map(|j| fix_phase(&Field::from_real(&grid, vectors.column(j).as_slice()).unwrap().scaled_real(scale)))
        .collect();
    let mut lambda = vec![mass / rank as f64; rank];

    let energy_of = |lambda: &[f64], orbitals: &[Field]| -> Result<f64> {
        let mut linear = 0.0;
        let mut rho = Field::zeros(&grid);
        for (l, u) in lambda.iter().zip(orbitals) {
            linear += l * u.inner(&problem.apply_linear(u)).re;
            rho = rho.axpy(*l, &u.density());
        }
        Ok(linear - pair_energy(&rho, problem))
    };

    let mut energy = energy_of(&lambda, &orbitals)?;
    let mut step: f64 = 1.0;
    let mut at_vertex = 0usize;
    let mut iterations = 0;
    let max_outer = opts.max_iterations.min(20_000);
    for it in 0..max_outer {
        iterations = it;
        let mut rho = Field::zeros(&grid);
        for (l, u) in lambda.iter().zip(&orbitals) {
            rho = rho.axpy(*l, &u.density());
        }
        let w_rho = convolve(problem.effective(), &rho)?;
        let h_u: Vec<Field> = orbitals.iter().map(|u| linearized_operator_apply(u, &w_rho, problem)).collect();
        let g_lambda: Vec<f64> = orbitals.iter().zip(&h_u).map(|(u, hu)| u.inner(hu).re).collect();
        let grads: Vec<Field> = h_u.iter().zip(&lambda).map(|(hu, l)| hu.scaled_real(2.0 * l)).collect();

        // Stiefel tangent projection in the real metric: G - U herm(U^dagger G).
        let stiefel = |g: &[Field]| -> Vec<Field> {
            let a = DMatrix::from_fn(rank, rank, |i, j| orbitals[i].inner(&g[j]));
            let herm = linalg::hermitize(&a);
            (0..rank)
                .map(|j| {
                    let mut out = g[j].clone();
                    for i in 0..rank {
                        out = out.sub(&orbitals[i].scaled(herm[(i, j)]));
                    }
                    out
                })
                .collect()
        };
        let proj_grad = stiefel(&grads);
        let precond: Vec<Field> = proj_grad.iter().map(|g| precondition(g, opts.preconditioner_shift)).collect();
        let dirs: Vec<Field> = stiefel(&precond).into_iter().map(|d| d.scaled_real(-1.0)).collect();

        let target = project_simplex(
            &lambda.iter().zip(&g_lambda).map(|(l, g)| l - g).collect::<Vec<_>>(),
            mass,
        );
        let d_lambda: Vec<f64> = target.iter().zip(&lambda).map(|(t, l)| t - l).collect();

        let slope: f64 = proj_grad.iter().zip(&dirs).map(|(g, d)| g.inner(d).re).sum::<f64>()
            + g_lambda.iter().zip(&d_lambda).map(|(g, d)| g * d).sum::<f64>();

        let nonzero = lambda.iter().filter(|&&l| l > 0.0).count();
        if nonzero == 1 && d_lambda.iter().all(|d| d.abs() == 0.0) {
            at_vertex += 1;
            if at_vertex >= 3 {
                break;
            }
        } else {
            at_vertex = 0;
        }

        let slack = 8.0 * f64::EPSILON * energy.abs().max(1.0);
        let mut accepted = None;
        let mut t = step;
        for _ in 0..60 {
            let tl = t.min(1.0);
            let trial_u: Vec<Field> = orbitals.iter().zip(&dirs).map(|(u, d)| u.axpy(t, d)).collect();
            let trial_u = orthonormalize(&trial_u);
            let trial_l: Vec<f64> = lambda.iter().zip(&d_lambda).map(|(l, d)| (l + tl * d).max(0.0)).collect();
            let sum: f64 = trial_l.iter().sum();
            let trial_l: Vec<f64> = trial_l.iter().map(|l| l * mass / sum).collect();
            let e = energy_of(&trial_l, &trial_u)?;
            if !e.is_finite() {
                return Err(Error::NumericalFailure("non-finite mixed energy".into()));
            }
            if e <= energy + 1e-4 * tl.min(t) * slope + slack {
                accepted = Some((trial_l, trial_u, e));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((l, u, e)) => {
                // Snap weights that the projection put on the boundary.
                lambda = l;
                orbitals = u;
                energy = e;
                step = (t * 1.5).min(1e3);
            }
            None => break,
        }
    }

    let (lambda, orbitals) = sort_state(lambda, orbitals);
    if lambda[1] == 0.0 {
        let polished = minimize_from(problem, orbitals[0].scaled_real(mass.sqrt()), opts)?;
        let lead = polished.psi.scaled_real(1.0 / mass.sqrt());
        let mut rest: Vec<Field> = Vec::with_capacity(rank);
        rest.push(lead.clone());
        for u in &orbitals[1..] {
            let mut w = u.clone();
            for prev in &rest {
                w = w.sub(&prev.scaled(prev.inner(&w)));
            }
            rest.push(w.scaled_real(1.0 / w.norm()));
        }
        let mut weights = vec![0.0; rank];
        weights[0] = mass;
        let state = MixedState::new(weights, rest, mass)?;
        let defect = linearized_defect(&polished.psi, problem)?;
        return Ok(MixedResult {
            energy: polished.energy,
            ratio: 0.0,
            state,
            iterations: iterations + polished.iterations,
            converged: polished.converged,
            linearized_defect: defect,
        });
    }

    let state = MixedState::new(lambda, orbitals, mass)?;
    let ratio = state.second_ratio();
    let lead = state.orbitals()[0].scaled_real(mass.sqrt());
    let defect = linearized_defect(&lead, problem)?;
    Ok(MixedResult {
        energy,
        ratio,
        state,
        iterations,
        converged: false,
        linearized_defect: defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{double_well, gaussian_coupling, gaussian_well};

    fn sample_problem() -> PekarProblem {
        let grid = Grid::new(256, 32.0).unwrap();
        let v_ext = gaussian_well(&grid, 0.05, 2.0, grid.center());
        let v = gaussian_coupling(&grid, 0.5, 1.0);
        PekarProblem::new(v_ext, v, 1.0).unwrap()
    }

    fn random_normalized(grid: &Grid, seed: u64, mass: f64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = grid.center();
        let f = Field::from_fn(grid, |x| {
            let env = (-(x - c).powi(2) / 8.0).exp();
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * env
        });
        // Smooth the noise so the kinetic term stays moderate.
        let smooth = apply_multiplier(&f, |j| {
            let k = grid.wavenumber(j);
            Complex64::new((-k * k / 4.0).exp(), 0.0)
        });
        normalize_to(&smooth, mass)
    }

    #[test]
    fn rejects_invalid_problems() {
        let grid = Grid::new(32, 8.0).unwrap();
        let v = gaussian_coupling(&grid, 0.5, 1.0);
        let positive = Field::from_real_fn(&grid, |_| 0.1);
        assert!(matches!(PekarProblem::new(positive, v.clone(), 1.0), Err(Error::Validation(_))));
        let wide = gaussian_well(&grid, 1.0, 20.0, grid.center());
        assert!(PekarProblem::new(wide, v.clone(), 1.0).is_err());
        let complex_v = v.map(|z| z * Complex64::new(1.0, 1.0));
        assert!(PekarProblem::new(Field::zeros(&grid), complex_v, 1.0).is_err());
        assert!(PekarProblem::new(Field::zeros(&grid), v, 0.0).is_err());
    }

    #[test]
    fn effective_potential_cases() {
        let grid = Grid::new(256, 40.0).unwrap();
        let w = effective_potential(&Field::zeros(&grid)).unwrap();
        assert_eq!(w.max_abs(), 0.0);

        // Unit-mass Gaussian(sigma) -> Gaussian(sigma sqrt 2).
        let sigma = 1.2;
        let norm = 1.0 / (2.0 * std::f64::consts::PI * sigma * sigma).sqrt();
        let v = gaussian_coupling(&grid, norm, sigma);
        let w = effective_potential(&v).unwrap();
        let s2 = sigma * 2f64.sqrt();
        let expected = gaussian_coupling(&grid, 1.0 / (2.0 * std::f64::consts::PI * s2 * s2).sqrt(), s2);
        assert!(w.sub(&expected).max_abs() <= 1e-6 * expected.max_abs());

        // W^ = |v^|^2 modewise, in the convolution normalization.
        let cv = fourier_transform(&v);
        let cw = fourier_transform(&w);
        let s = grid.spacing() * (grid.n() as f64).sqrt();
        for (a, b) in cw.values().iter().zip(cv.values()) {
            assert!((a - b.norm_sqr() * s).norm() <= 1e-12 * s * cv.max_abs().powi(2));
            assert!(a.re >= -1e-12);
        }
    }

    #[test]
    fn effective_potential_rejects_complex_coupling() {
        let grid = Grid::new(16, 4.0).unwrap();
        let v = Field::from_fn(&grid, |x| Complex64::new(0.0, x));
        assert!(matches!(effective_potential(&v), Err(Error::Validation(_))));
    }

    #[test]
    fn field_configuration_cases() {
        let grid = Grid::new(64, 10.0).unwrap();
        let v = gaussian_coupling(&grid, 0.7, 0.9);
        assert_eq!(field_configuration(&Field::zeros(&grid), &v).unwrap().max_abs(), 0.0);
        let psi = normalize_to(&Field::from_real_fn(&grid, |_| 1.0), 1.0);
        let u = field_configuration(&psi, &v).unwrap();
        let sum_v: f64 = v.values().iter().map(|z| z.re).sum();
        let expected = -(1.0 / grid.length()) * grid.spacing() * sum_v;
        assert!(u.values().iter().all(|z| (z.re - expected).abs() < 1e-14 && z.im.abs() < 1e-14));
        let any = random_normalized(&grid, 1, 1.0);
        assert_eq!(field_configuration(&any, &Field::zeros(&grid)).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn product_energy_cases() {
        let p = sample_problem();
        let grid = p.grid().clone();
        let psi = random_normalized(&grid, 3, 1.0);
        let e0 = product_energy(&psi, &Field::zeros(&grid), &p).unwrap();
        assert!((e0 - psi.inner(&p.apply_linear(&psi)).re).abs() < 1e-14);

        let free = p.without_potential();
        let m = 1.3;
        let uniform = normalize_to(&Field::from_real_fn(&grid, |_| 1.0), m);
        let c = -0.21;
        let u = Field::from_real_fn(&grid, |_| c);
        let sum_v: f64 = p.coupling().values().iter().map(|z| z.re).sum::<f64>() * grid.spacing();
        let expected = grid.length() * c * c + 2.0 * c * m * sum_v;
        let e = product_energy(&uniform, &u, &free).unwrap();
        assert!((e - expected).abs() < 1e-12 * expected.abs().max(1.0));
    }

    #[test]
    fn square_completion() {
        let p = sample_problem();
        for seed in 0..10 {
            let psi = random_normalized(p.grid(), seed, 1.0);
            let u = field_configuration(&psi, p.coupling()).unwrap();
            let a = product_energy(&psi, &u, &p).unwrap();
            let b = pekar_energy(&psi, &p).unwrap();
            assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn square_completion_holds_for_uneven_coupling() {
        let grid = Grid::new(128, 16.0).unwrap();
        let v = Field::from_real_fn(&grid, |x| {
            let d = grid.periodic_displacement(x, 0.7);
            0.4 * (-d * d).exp() * (1.0 + 0.5 * d)
        });
        let p = PekarProblem::new(Field::zeros(&grid), v, 1.0).unwrap();
        let psi = random_normalized(&grid, 9, 1.0);
        let u = field_configuration(&psi, p.coupling()).unwrap();
        let a = product_energy(&psi, &u, &p).unwrap();
        let b = pekar_energy(&psi, &p).unwrap();
        assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        // u_psi minimizes the product energy over u.
        let bumped = u.add(&Field::from_real_fn(&grid, |x| 0.01 * (x / 3.0).sin()));
        assert!(product_energy(&psi, &bumped, &p).unwrap() > a);
    }

    #[test]
    fn uniform_state_energy_closed_form() {
        let p = sample_problem().without_potential();
        let grid = p.grid().clone();
        let m = 0.8;
        let psi = normalize_to(&Field::from_real_fn(&grid, |_| 1.0), m);
        let sum_v: f64 = p.coupling().values().iter().map(|z| z.re).sum::<f64>() * grid.spacing();
        let expected = -(m * m / grid.length()) * sum_v * sum_v;
        let e = pekar_energy(&psi, &p).unwrap();
        assert!((e - expected).abs() < 1e-12 * expected.abs());
    }

    #[test]
    fn energy_monotone_in_potential_and_phase_invariant() {
        let p = sample_problem();
        let grid = p.grid().clone();
        let deeper = p.with_potential(gaussian_well(&grid, 0.2, 2.0, grid.center())).unwrap();
        let psi = random_normalized(&grid, 5, 1.0);
        assert!(pekar_energy(&psi, &deeper).unwrap() < pekar_energy(&psi, &p).unwrap());
        let e = pekar_energy(&psi, &p).unwrap();
        for theta in [std::f64::consts::PI / 7.0, 1.0, 2.5] {
            let rotated = psi.scaled(Complex64::from_polar(1.0, theta));
            assert!((pekar_energy(&rotated, &p).unwrap() - e).abs() < 1e-13 * e.abs().max(1.0));
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = sample_problem();
        let grid = p.grid().clone();
        assert_eq!(pekar_gradient(&Field::zeros(&grid), &p).unwrap().max_abs(), 0.0);
        for seed in 0..5 {
            let psi = random_normalized(&grid, 100 + seed, 1.0);
            let eta = random_normalized(&grid, 200 + seed, 1.0);
            let g = pekar_gradient(&psi, &p).unwrap();
            let t = 1e-5;
            let fd = (pekar_energy(&psi.axpy(t, &eta), &p).unwrap() - pekar_energy(&psi.axpy(-t, &eta), &p).unwrap()) / (2.0 * t);
            let an = eta.inner(&g).re;
            assert!((fd - an).abs() <= 1e-6 * an.abs(), "{fd} vs {an}");
        }
    }

    #[test]
    fn gradient_without_coupling_is_linear() {
        let p = sample_problem().with_coupling(Field::zeros(&Grid::new(256, 32.0).unwrap())).unwrap();
        let psi = random_normalized(p.grid(), 8, 1.0);
        let g = pekar_gradient(&psi, &p).unwrap();
        let expected = p.apply_linear(&psi).scaled_real(2.0);
        assert!(g.sub(&expected).max_abs() < 1e-12 * expected.max_abs());
    }

    #[test]
    fn minimize_linear_case_matches_eigensolver() {
        let grid = Grid::new(128, 16.0).unwrap();
        let p = PekarProblem::new(gaussian_well(&grid, 1.0, 1.5, grid.center()), Field::zeros(&grid), 1.0).unwrap();
        let (lambda, _) = p.linear_ground_state();
        let r = minimize(&p, &MinimizeOptions::default()).unwrap();
        assert!(r.converged);
        assert!((r.energy - lambda).abs() <= 1e-8, "{} vs {lambda}", r.energy);
        assert!((r.psi.norm_sq() - 1.0).abs() <= 1e-10);
        assert!(r.energy <= r.initial_energy);
    }

    #[test]
    fn minimize_fully_free_case() {
        let grid = Grid::new(64, 16.0).unwrap();
        let p = PekarProblem::new(Field::zeros(&grid), Field::zeros(&grid), 2.0).unwrap();
        let opts = MinimizeOptions::default();
        let r = minimize(&p, &opts).unwrap();
        assert!((r.psi.norm_sq() - 2.0).abs() <= 1e-10 * 2.0);
        assert!(r.energy >= -opts.gradient_tolerance);
        assert!(r.energy < 1e-8);
    }

    #[test]
    fn minimize_keeps_mass_on_every_iterate() {
        let p = sample_problem();
        let opts = MinimizeOptions {
            max_iterations: 5,
            record_trace: true,
            ..Default::default()
        };
        let r = minimize(&p, &opts).unwrap();
        assert!(!r.converged);
        assert_eq!(r.trace.len(), 6);
        assert!(r.trace.windows(2).all(|w| w[1].energy <= w[0].energy + 1e-14));
        assert!((r.psi.norm_sq() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn sample_problem_binds() {
        let p = sample_problem();
        let opts = MinimizeOptions::default();
        let r = minimize(&p, &opts).unwrap();
        assert!(r.converged, "residual {}", r.gradient_residual);
        let (e_linear, _) = p.with_coupling(Field::zeros(p.grid())).unwrap().linear_ground_state();
        let e_free = minimize(&p.without_potential(), &opts).unwrap();
        assert!(r.energy < e_linear);
        assert!(r.energy < e_free.energy);
        // psi is the ground state of its own linearized operator.
        let d = linearized_defect(&r.psi, &p).unwrap();
        assert!(d.abs() < 1e-7, "defect {d}");
    }

    #[test]
    fn binding_gap_cases() {
        let p = sample_problem();
        let opts = MinimizeOptions::default();
        let free = p.without_potential();
        let (a, b) = binding_gap(&free, &opts).unwrap();
        assert_eq!(a, b);
        let (ev, e0) = binding_gap(&p, &opts).unwrap();
        assert!(ev < e0);
        let grid = p.grid().clone();
        let doubled = p.with_potential(gaussian_well(&grid, 0.1, 2.0, grid.center())).unwrap();
        let (ev2, e02) = binding_gap(&doubled, &opts).unwrap();
        assert!(e02 - ev2 >= e0 - ev);
    }

    #[test]
    fn mixed_state_validation() {
        let grid = Grid::new(16, 4.0).unwrap();
        let u = normalize_to(&Field::from_real_fn(&grid, |_| 1.0), 1.0);
        assert!(MixedState::new(vec![1.0], vec![u.clone()], 1.0).is_ok());
        assert!(MixedState::new(vec![0.5, 0.5], vec![u.clone(), u.clone()], 1.0).is_err());
        assert!(MixedState::new(vec![0.9], vec![u], 1.0).is_err());
    }

    #[test]
    fn mixed_energy_rank_one_matches_pure() {
        let p = sample_problem();
        let psi = random_normalized(p.grid(), 4, 1.0);
        let gamma = MixedState::new(vec![1.0], vec![psi.clone()], 1.0).unwrap();
        let a = mixed_pekar_energy(&gamma, &p).unwrap();
        let b = pekar_energy(&psi, &p).unwrap();
        assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
    }

    #[test]
    fn mixed_energy_of_separated_bumps_without_coupling() {
        let grid = Grid::new(128, 32.0).unwrap();
        let v_ext = gaussian_well(&grid, 0.3, 2.0, grid.center());
        let p = PekarProblem::new(v_ext, Field::zeros(&grid), 1.0).unwrap();
        let bump = |c: f64| {
            normalize_to(
                &Field::from_real_fn(&grid, |x| {
                    let d = grid.periodic_distance(x, c);
                    (-d * d).exp()
                }),
                1.0,
            )
        };
        let (a, b) = (bump(10.0), bump(22.0));
        let gamma = MixedState::new(vec![0.5, 0.5], vec![a.clone(), b.clone()], 1.0).unwrap();
        let expected = 0.5 * a.inner(&p.apply_linear(&a)).re + 0.5 * b.inner(&p.apply_linear(&b)).re;
        assert!((mixed_pekar_energy(&gamma, &p).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn simplex_projection() {
        let p = project_simplex(&[0.2, 0.9, -0.3], 1.0);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(p.iter().all(|&v| v >= 0.0));
        assert_eq!(project_simplex(&[0.3, 0.7], 1.0), vec![0.3, 0.7]);
    }

    #[test]
    fn mixed_rank_one_reduces_to_minimize() {
        let p = sample_problem();
        let opts = MinimizeOptions::default();
        let mixed = minimize_mixed(&p, 1, &opts).unwrap();
        let pure = minimize(&p, &opts).unwrap();
        assert_eq!(mixed.energy, pure.energy);
        assert_eq!(mixed.state.rank(), 1);
    }

    #[test]
    fn mixed_without_coupling_concentrates_in_deeper_well() {
        let grid = Grid::new(128, 32.0).unwrap();
        let v_ext = double_well(&grid, 0.6, 0.9, 1.5, 10.0, grid.center());
        let p = PekarProblem::new(v_ext, Field::zeros(&grid), 1.0).unwrap();
        let r = minimize_mixed(&p, 2, &MinimizeOptions::default()).unwrap();
        assert!(r.ratio <= 1e-6);
        let (lambda, _) = p.linear_ground_state();
        assert!((r.energy - lambda).abs() < 1e-8);
        // Deeper well sits at centre + 5.
        let lead = &r.state.orbitals()[0];
        let right: f64 = (0..grid.n())
            .filter(|&i| grid.x(i) > grid.center())
            .map(|i| lead.values()[i].norm_sqr() * grid.spacing())
            .sum();
        assert!(right > 0.9, "right-well mass {right}");
    }
}
