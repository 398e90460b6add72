//! Reduced densities of composite states, quasi-classical moments and one-mode
//! Husimi marginals.
//!
//! Particle matrices are in orthonormal grid coordinates (`sqrt(h) psi(x_i)`), so a
//! normalized state has `trace(gamma) = 1` and particle observables are plain `n x n`
//! matrices acting on grid values.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{CompositeState, FockBasis, LinearOperator, ModeSet};
use crate::grid::{Field, Grid};
use crate::linalg;
use crate::pekar::PekarResult;

/// `Gamma = sum_r w_r |Phi_r><Phi_r|` on grid (x) Fock, with `Phi_r` in grid-weighted
/// coordinates. The trace is not required to be one.
#[derive(Clone, Debug)]
pub struct CompositeDensity {
    grid: Grid,
    alpha: f64,
    fock_dim: usize,
    terms: Vec<(f64, Vec<Complex64>)>,
}

impl CompositeDensity {
    pub fn new(grid: &Grid, fock_dim: usize, alpha: f64, terms: Vec<(f64, Vec<Complex64>)>) -> Result<Self> {
        for (w, v) in &terms {
            if *w < 0.0 || !w.is_finite() {
                return Err(Error::Validation(format!("mixture weight {w} is negative")));
            }
            if v.len() != grid.n() * fock_dim {
                return Err(Error::Validation("mixture component has wrong length".into()));
            }
        }
        Ok(Self {
            grid: grid.clone(),
            alpha,
            fock_dim,
            terms,
        })
    }

    pub fn pure(state: &CompositeState) -> Self {
        Self {
            grid: state.grid().clone(),
            alpha: state.alpha(),
            fock_dim: state.fock_dim(),
            terms: vec![(1.0, state.coeffs().to_vec())],
        }
    }

    /// Convex combination of normalized states.
    pub fn mixture(states: &[CompositeState], weights: &[f64]) -> Result<Self> {
        if states.is_empty() || states.len() != weights.len() {
            return Err(Error::Validation("mixture needs one weight per state".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Validation(format!("mixture weights sum to {total}")));
        }
        let first = &states[0];
        let terms = states.iter().zip(weights).map(|(s, &w)| (w, s.coeffs().to_vec())).collect();
        Self::new(first.grid(), first.fock_dim(), first.alpha(), terms)
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

    pub fn terms(&self) -> &[(f64, Vec<Complex64>)] {
        &self.terms
    }

    pub fn trace(&self) -> f64 {
        let h = self.grid.spacing();
        self.terms
            .iter()
            .map(|(w, v)| w * h * v.iter().map(|c| c.norm_sqr()).sum::<f64>())
            .sum()
    }

    /// `Tr(H Gamma)` for an operator acting on grid-value coordinates.
    pub fn expectation(&self, op: &dyn LinearOperator) -> f64 {
        let h = self.grid.spacing();
        self.terms
            .iter()
            .map(|(w, v)| {
                let hv = op.apply(v);
                w * h * v.iter().zip(&hv).map(|(a, b)| a.conj() * b).sum::<Complex64>().re
            })
            .sum()
    }

    /// Dense matrix in orthonormal coordinates (small instances only).
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let dim = self.grid.n() * self.fock_dim;
        let h = self.grid.spacing();
        let mut m = DMatrix::zeros(dim, dim);
        for (w, v) in &self.terms {
            for a in 0..dim {
                if v[a] == Complex64::default() {
                    continue;
                }
                for b in 0..dim {
                    m[(a, b)] += v[a] * v[b].conj() * (w * h);
                }
            }
        }
        m
    }
}

#[derive(Clone, Debug)]
pub struct ReducedDensities {
    /// Particle density matrix, `n x n`.
    pub gamma: DMatrix<Complex64>,
    /// `field11[(j, l)] = <b_l^dagger b_j>` with unscaled `b = alpha a`.
    pub field11: DMatrix<Complex64>,
    /// `<a_j>` for the scaled annihilators.
    pub field10: Vec<Complex64>,
    /// `sigma_kernel[(x, j)] = Tr_F[Gamma(x, x) (a_j^dagger + a_j)]`, a density in `x`.
    pub sigma_kernel: DMatrix<Complex64>,
    pub alpha: f64,
}

impl ReducedDensities {
    /// `<a_l^dagger a_j>` in the scaled convention.
    pub fn field11_scaled(&self) -> DMatrix<Complex64> {
        &self.field11 / Complex64::new(self.alpha * self.alpha, 0.0)
    }

    pub fn trace(&self) -> f64 {
        self.gamma.trace().re
    }
}

/// Reduced densities of a normalized pure state.
pub fn reduce(psi: &CompositeState, basis: &FockBasis) -> Result<ReducedDensities> {
    if (psi.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::Validation(format!("state is not normalized (norm {})", psi.norm())));
    }
    reduce_density(&CompositeDensity::pure(psi), basis)
}

pub fn reduce_density(gamma: &CompositeDensity, basis: &FockBasis) -> Result<ReducedDensities> {
    if basis.dim() != gamma.fock_dim {
        return Err(Error::Validation("basis does not match the state".into()));
    }
    let n = gamma.grid.n();
    let d = gamma.fock_dim;
    let m = basis.modes();
    let h = gamma.grid.spacing();
    let alpha = gamma.alpha;
    let mut g = DMatrix::zeros(n, n);
    let mut f11 = DMatrix::zeros(m, m);
    let mut f10 = vec![Complex64::default(); m];
    let mut sigma = DMatrix::zeros(n, m);
    for (w, v) in &gamma.terms {
        for x in 0..n {
            let row_x = &v[x * d..(x + 1) * d];
            for y in 0..n {
                let row_y = &v[y * d..(y + 1) * d];
                let s: Complex64 = row_x.iter().zip(row_y).map(|(a, b)| a * b.conj()).sum();
                g[(x, y)] += s * (w * h);
            }
            let lowered: Vec<Vec<Complex64>> = (0..m).map(|j| basis.lower_vector(j, alpha, row_x)).collect();
            for j in 0..m {
                let e: Complex64 = row_x.iter().zip(&lowered[j]).map(|(a, b)| a.conj() * b).sum();
                f10[j] += e * (w * h);
                sigma[(x, j)] += Complex64::new(2.0 * e.re * w, 0.0);
                for l in 0..m {
                    let e2: Complex64 = lowered[l].iter().zip(&lowered[j]).map(|(a, b)| a.conj() * b).sum();
                    f11[(j, l)] += e2 * (w * h * alpha * alpha);
                }
            }
        }
    }
    Ok(ReducedDensities {
        gamma: g,
        field11: f11,
        field10: f10,
        sigma_kernel: sigma,
        alpha,
    })
}

/// `(sum_x h (sum_j |sigma(x, j)|^2)^{1/2}, 4 (1 + <N_alpha>))`.
pub fn sigma_summability(r: &ReducedDensities, grid: &Grid) -> (f64, f64) {
    let h = grid.spacing();
    let lhs: f64 = (0..r.sigma_kernel.nrows())
        .map(|x| h * r.sigma_kernel.row(x).iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt())
        .sum();
    let number = r.field11_scaled().trace().re;
    (lhs, 4.0 * (1.0 + number))
}

/// `sqrt(k! l!) <A (x) a^dagger(g_1)...a^dagger(g_l) a(f_1)...a(f_k)>` with
/// `a(f) = sum_j conj(f_j) a_j`. Mode vectors are indexed like the [`ModeSet`].
#[derive(Clone, Debug)]
pub struct MomentRequest {
    pub observable: DMatrix<Complex64>,
    pub annihilate: Vec<Vec<Complex64>>,
    pub create: Vec<Vec<Complex64>>,
    /// Permit `k + l > 2`.
    pub allow_higher: bool,
}

impl MomentRequest {
    pub fn particle(observable: DMatrix<Complex64>) -> Self {
        Self {
            observable,
            annihilate: Vec::new(),
            create: Vec::new(),
            allow_higher: false,
        }
    }

    pub fn order(&self) -> (usize, usize) {
        (self.annihilate.len(), self.create.len())
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn check_request(req: &MomentRequest, n: usize, m: usize) -> Result<()> {
    let (k, l) = req.order();
    if k + l > 2 && !req.allow_higher {
        return Err(Error::UnsupportedRange(k + l));
    }
    if req.observable.nrows() != n || req.observable.ncols() != n {
        return Err(Error::Validation("observable has wrong dimension".into()));
    }
    if req.annihilate.iter().chain(&req.create).any(|f| f.len() != m) {
        return Err(Error::Validation("mode vector has wrong length".into()));
    }
    Ok(())
}

pub fn moment(psi: &CompositeState, req: &MomentRequest, basis: &FockBasis) -> Result<Complex64> {
    moment_density(&CompositeDensity::pure(psi), req, basis)
}

pub fn moment_density(gamma: &CompositeDensity, req: &MomentRequest, basis: &FockBasis) -> Result<Complex64> {
    let n = gamma.grid.n();
    let d = gamma.fock_dim;
    let m = basis.modes();
    check_request(req, n, m)?;
    let alpha = gamma.alpha;
    let h = gamma.grid.spacing();
    let (k, l) = req.order();
    let mut total = Complex64::default();
    for (w, v) in &gamma.terms {
        let mut out = Vec::with_capacity(n * d);
        for x in 0..n {
            let mut blk = v[x * d..(x + 1) * d].to_vec();
            for f in req.annihilate.iter().rev() {
                let mut acc = vec![Complex64::default(); d];
                for (j, fj) in f.iter().enumerate() {
                    if *fj != Complex64::default() {
                        for (a, b) in acc.iter_mut().zip(basis.lower_vector(j, alpha, &blk)) {
                            *a += fj.conj() * b;
                        }
                    }
                }
                blk = acc;
            }
            for g in req.create.iter().rev() {
                let mut acc = vec![Complex64::default(); d];
                for (j, gj) in g.iter().enumerate() {
                    if *gj != Complex64::default() {
                        for (a, b) in acc.iter_mut().zip(basis.raise_vector(j, alpha, &blk)) {
                            *a += gj * b;
                        }
                    }
                }
                blk = acc;
            }
            out.extend(blk);
        }
        for x in 0..n {
            for y in 0..n {
                let a = req.observable[(x, y)];
                if a == Complex64::default() {
                    continue;
                }
                let s: Complex64 = v[x * d..(x + 1) * d]
                    .iter()
                    .zip(&out[y * d..(y + 1) * d])
                    .map(|(p, q)| p.conj() * q)
                    .sum();
                total += a * s * (w * h);
            }
        }
    }
    Ok(total * (factorial(k) * factorial(l)).sqrt())
}

/// `<psi, A psi> prod_j <f_j, u> prod_j <u, g_j>` for the stored minimizer, with
/// `psi` normalized to one and `u` the mode amplitudes of `u_psi`.
pub fn pekar_prediction(result: &PekarResult, modes: &ModeSet, req: &MomentRequest) -> Result<Complex64> {
    let grid = result.psi.grid();
    check_request(req, grid.n(), modes.len())?;
    let mass = result.psi.norm_sq();
    let psi: Vec<Complex64> = result.psi.values().iter().map(|c| c * (grid.spacing() / mass).sqrt()).collect();
    let mut a_psi = Complex64::default();
    for x in 0..grid.n() {
        for y in 0..grid.n() {
            a_psi += psi[x].conj() * req.observable[(x, y)] * psi[y];
        }
    }
    let u = modes.amplitudes(&result.u_psi);
    let inner = |f: &[Complex64]| f.iter().zip(&u).map(|(a, b)| a.conj() * b).sum::<Complex64>();
    let mut value = a_psi;
    for f in &req.annihilate {
        value *= inner(f);
    }
    for g in &req.create {
        value *= inner(g).conj();
    }
    Ok(value)
}

/// `|| gamma - |psi><psi| ||_1` with `psi` normalized to one.
pub fn trace_distance_to_pure(gamma: &DMatrix<Complex64>, psi: &Field) -> f64 {
    let h = psi.grid().spacing();
    let scale = (h / psi.norm_sq()).sqrt();
    let v: Vec<Complex64> = psi.values().iter().map(|c| c * scale).collect();
    let n = v.len();
    let proj = DMatrix::from_fn(n, n, |a, b| v[a] * v[b].conj());
    linalg::trace_norm(&(gamma - proj))
}

/// Diagonal multiplication observable.
pub fn multiplication(f: &Field) -> DMatrix<Complex64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(f.values()))
}

pub fn mode_vector(modes: &ModeSet, signed: i64) -> Result<Vec<Complex64>> {
    let j = modes
        .position(signed)
        .ok_or_else(|| Error::Validation(format!("mode {signed} not retained")))?;
    let mut e = vec![Complex64::default(); modes.len()];
    e[j] = Complex64::new(1.0, 0.0);
    Ok(e)
}

#[derive(Clone, Debug)]
pub struct Probe {
    pub name: String,
    pub request: MomentRequest,
}

/// Fixed probe set: a particle window (`k = l = 0`) and the first moments of modes
/// `+1` and `-1`. Mode 0 only feels a constant force and is left out.
pub fn standard_probes(grid: &Grid, modes: &ModeSet, window: &Field) -> Result<Vec<Probe>> {
    let id = DMatrix::identity(grid.n(), grid.n());
    let plus = mode_vector(modes, 1)?;
    let minus = mode_vector(modes, -1)?;
    Ok(vec![
        Probe {
            name: "window".into(),
            request: MomentRequest::particle(multiplication(window)),
        },
        Probe {
            name: "a(+1)".into(),
            request: MomentRequest {
                observable: id.clone(),
                annihilate: vec![plus.clone()],
                create: vec![],
                allow_higher: false,
            },
        },
        Probe {
            name: "a(-1)".into(),
            request: MomentRequest {
                observable: id,
                annihilate: vec![minus],
                create: vec![],
                allow_higher: false,
            },
        },
    ])
}

pub struct SweepEntry<'a> {
    pub alpha: f64,
    pub state: &'a CompositeState,
    pub basis: &'a FockBasis,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRow {
    pub alpha: f64,
    pub trace_distance: f64,
    pub moment_errors: Vec<f64>,
    /// `Tr[chi gamma chi]`.
    pub mass_in_window: f64,
}

pub fn convergence_report(
    sweep: &[SweepEntry],
    result: &PekarResult,
    modes: &ModeSet,
    probes: &[Probe],
    chi: &Field,
) -> Result<Vec<ConvergenceRow>> {
    if sweep.windows(2).any(|w| w[1].alpha <= w[0].alpha) {
        return Err(Error::Validation("alpha values must be strictly increasing".into()));
    }
    let grid = result.psi.grid();
    let predictions = probes
        .iter()
        .map(|p| pekar_prediction(result, modes, &p.request))
        .collect::<Result<Vec<_>>>()?;
    let chi_m = multiplication(chi);
    sweep
        .iter()
        .map(|e| {
            if e.state.grid() != grid || e.basis.modes() != modes.len() {
                return Err(Error::Validation("sweep entries use inconsistent grids or modes".into()));
            }
            let r = reduce(e.state, e.basis)?;
            let moment_errors = probes
                .iter()
                .zip(&predictions)
                .map(|(p, pred)| moment(e.state, &p.request, e.basis).map(|m| (m - pred).norm()))
                .collect::<Result<Vec<_>>>()?;
            Ok(ConvergenceRow {
                alpha: e.alpha,
                trace_distance: trace_distance_to_pure(&r.gamma, &result.psi),
                moment_errors,
                mass_in_window: (&chi_m * &r.gamma * &chi_m).trace().re,
            })
        })
        .collect()
}

pub fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

pub fn non_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] >= w[0])
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Reduced density of mode `j` on occupations `0..=cutoff`.
pub fn mode_density(psi: &CompositeState, basis: &FockBasis, j: usize) -> Result<DMatrix<Complex64>> {
    if j >= basis.modes() {
        return Err(Error::Validation(format!("mode index {j} out of range")));
    }
    let n_max = basis.cutoff();
    let d = basis.dim();
    // Group basis states by the occupations of the other modes.
    let mut groups: HashMap<Vec<u16>, Vec<(usize, usize)>> = HashMap::new();
    for s in 0..d {
        let occ = basis.occupation(s);
        let mut rest = occ.to_vec();
        rest[j] = 0;
        groups.entry(rest).or_default().push((occ[j] as usize, s));
    }
    let h = psi.grid().spacing();
    let mut rho = DMatrix::zeros(n_max + 1, n_max + 1);
    for x in 0..psi.grid().n() {
        for members in groups.values() {
            for &(a, s) in members {
                let ca = psi.coefficient(x, s);
                if ca == Complex64::default() {
                    continue;
                }
                for &(b, t) in members {
                    rho[(a, b)] += ca * psi.coefficient(x, t).conj() * h;
                }
            }
        }
    }
    Ok(rho)
}

#[derive(Clone, Debug)]
pub struct HusimiSpec {
    /// Half-width of the square plotting window around `center`.
    pub half_width: f64,
    pub cells: usize,
    pub center: Complex64,
    /// Disc radius for the mass estimate; `None` means `3 / alpha`.
    pub radius: Option<f64>,
    pub radial_nodes: usize,
    pub angular_nodes: usize,
}

impl HusimiSpec {
    pub fn around(center: Complex64, alpha: f64) -> Self {
        Self {
            half_width: 6.0 / alpha,
            cells: 48,
            center,
            radius: None,
            radial_nodes: 48,
            angular_nodes: 96,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HusimiReport {
    pub mode: usize,
    pub alpha: f64,
    pub centers_re: Vec<f64>,
    pub centers_im: Vec<f64>,
    /// `density[r][c]` at `(centers_re[c], centers_im[r])`.
    pub density: Vec<Vec<f64>>,
    pub cell_size: f64,
    pub coarse: bool,
    pub predicted: [f64; 2],
    pub radius: f64,
    pub mass_near_prediction: f64,
    pub grid_mass: f64,
}

/// Density `q(u) = (alpha^2 / pi) <xi(alpha u)| rho |xi(alpha u)>` of the anti-Wick
/// (Husimi) measure of a one-mode density `rho`, with `u` the classical amplitude.
pub fn husimi_density(rho: &DMatrix<Complex64>, alpha: f64, u: Complex64) -> f64 {
    let z = u * alpha;
    let n = rho.nrows();
    let mut c = Vec::with_capacity(n);
    c.push(Complex64::new((-0.5 * z.norm_sqr()).exp(), 0.0));
    for k in 1..n {
        let prev = c[k - 1];
        c.push(prev * z / (k as f64).sqrt());
    }
    let mut s = Complex64::default();
    for a in 0..n {
        for b in 0..n {
            s += c[a].conj() * rho[(a, b)] * c[b];
        }
    }
    s.re * alpha * alpha / std::f64::consts::PI
}

/// Mass of the Husimi density in the disc of radius `r` around `center`
/// (Gauss-Legendre in radius, trapezoid in angle).
pub fn husimi_disc_mass(rho: &DMatrix<Complex64>, alpha: f64, center: Complex64, r: f64, radial: usize, angular: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(radial);
    let dtheta = 2.0 * std::f64::consts::PI / angular as f64;
    let mut total = 0.0;
    for (x, w) in nodes.iter().zip(&weights) {
        let rho_r = 0.5 * r * (x + 1.0);
        let ring: f64 = (0..angular)
            .map(|k| husimi_density(rho, alpha, center + Complex64::from_polar(rho_r, k as f64 * dtheta)))
            .sum();
        total += 0.5 * r * w * rho_r * ring * dtheta;
    }
    total
}

pub fn husimi_marginal(psi: &CompositeState, basis: &FockBasis, mode: usize, spec: &HusimiSpec) -> Result<HusimiReport> {
    let alpha = psi.alpha();
    let rho = mode_density(psi, basis, mode)?;
    Ok(husimi_from_density(&rho, alpha, mode, spec))
}

pub fn husimi_from_density(rho: &DMatrix<Complex64>, alpha: f64, mode: usize, spec: &HusimiSpec) -> HusimiReport {
    let cell = 2.0 * spec.half_width / spec.cells as f64;
    let centers = |c: f64| -> Vec<f64> {
        (0..spec.cells)
            .map(|i| c - spec.half_width + (i as f64 + 0.5) * cell)
            .collect()
    };
    let centers_re = centers(spec.center.re);
    let centers_im = centers(spec.center.im);
    let density: Vec<Vec<f64>> = centers_im
        .iter()
        .map(|&y| centers_re.iter().map(|&x| husimi_density(rho, alpha, Complex64::new(x, y))).collect())
        .collect();
    let grid_mass = density.iter().flatten().sum::<f64>() * cell * cell;
    let radius = spec.radius.unwrap_or(3.0 / alpha);
    HusimiReport {
        mode,
        alpha,
        centers_re,
        centers_im,
        density,
        cell_size: cell,
        coarse: cell > 0.5 / alpha,
        predicted: [spec.center.re, spec.center.im],
        radius,
        mass_near_prediction: husimi_disc_mass(rho, alpha, spec.center, radius, spec.radial_nodes, spec.angular_nodes),
        grid_mass,
    }
}
