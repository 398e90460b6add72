//! Localized states: partitions of unity, the doubling isometry on truncated Fock
//! spaces, the localized density operators and the energy-splitting diagnostics.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::densities::{reduce_density, CompositeDensity};
use crate::error::{Error, Result};
use crate::fock::{fock_dimension, FockBasis, Hamiltonian, ModeSet};
use crate::grid::{derivative, laplacian_matrix, Field, Grid};
use crate::linalg;

/// Default cap on `n * dim F(2M, N_tot)`.
pub const DEFAULT_CAPACITY: usize = 200_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum Profile {
    /// `chi = 1 - S(t)` with the quintic smoothstep `S`, `eta = sqrt(1 - chi^2)`.
    /// Only `C^1` in `eta` at the inner edge.
    Quintic,
    /// `chi = cos(pi S / 2)`, `eta = sin(pi S / 2)` with the quintic smoothstep (`C^2`).
    QuinticAngle,
    /// `chi = cos(pi S / 2)`, `eta = sin(pi S / 2)` with an infinitely smooth step.
    /// The default: its IMS deviation on the spectral grid sits at rounding level.
    #[default]
    Smooth,
}

fn quintic(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * s * (10.0 + s * (-15.0 + 6.0 * s))
}

fn smooth_step(s: f64) -> f64 {
    let f = |t: f64| if t <= 0.0 { 0.0 } else { (-1.0 / t).exp() };
    let (a, b) = (f(s), f(1.0 - s));
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

/// `chi^2 + eta^2 = 1`, `chi = 1` within `R` of the centre and `0` beyond `2R`.
#[derive(Clone, Debug)]
pub struct PartitionOfUnity {
    pub radius: f64,
    pub center: f64,
    pub profile: Profile,
    pub chi: Field,
    pub eta: Field,
}

impl PartitionOfUnity {
    pub fn new(grid: &Grid, center: f64, radius: f64, profile: Profile) -> Result<Self> {
        if !(radius > 0.0 && 2.0 * radius <= 0.5 * grid.length() + 1e-12) {
            return Err(Error::Validation(format!(
                "radius {radius} must satisfy 0 < 2R <= L/2 = {}",
                0.5 * grid.length()
            )));
        }
        let pair = |x: f64| -> (f64, f64) {
            let s = (grid.periodic_distance(x, center) - radius) / radius;
            match profile {
                Profile::Quintic => {
                    let chi = 1.0 - quintic(s);
                    (chi, (1.0 - chi * chi).max(0.0).sqrt())
                }
                Profile::QuinticAngle => {
                    let a = 0.5 * std::f64::consts::PI * quintic(s);
                    (a.cos(), a.sin())
                }
                Profile::Smooth => {
                    let a = 0.5 * std::f64::consts::PI * smooth_step(s);
                    (a.cos(), a.sin())
                }
            }
        };
        let chi = Field::from_real_fn(grid, |x| pair(x).0);
        let eta = Field::from_real_fn(grid, |x| pair(x).1);
        Ok(Self {
            radius,
            center,
            profile,
            chi,
            eta,
        })
    }

    /// `|chi'|^2 + |eta'|^2` from spectral derivatives.
    pub fn gradient_term(&self) -> Field {
        let dc = derivative(&self.chi);
        let de = derivative(&self.eta);
        Field::from_real(self.chi.grid(), &dc.values().iter().zip(de.values()).map(|(a, b)| a.re * a.re + b.re * b.re).collect::<Vec<_>>())
            .expect("same grid")
    }
}

/// `Y(Q)` from `F(M, N)` into `F(2M, N)` (modes `c_1..c_M, d_1..d_M`), stored as sparse
/// columns of `(c index, d index, value)` with both indices in `F(M, N)`.
#[derive(Clone, Debug)]
pub struct DoublingIsometry {
    pub columns: Vec<Vec<(usize, usize, Complex64)>>,
    pub doubled_dim: usize,
}

/// Unscaled creation operator for a one-body vector on the doubled space.
fn create_doubled(doubled: &FockBasis, coeffs: &[Complex64], x: &[Complex64]) -> Vec<Complex64> {
    let mut y = vec![Complex64::default(); x.len()];
    for (s, v) in x.iter().enumerate() {
        if *v == Complex64::default() {
            continue;
        }
        for (l, c) in coeffs.iter().enumerate() {
            if *c == Complex64::default() {
                continue;
            }
            if let Some(t) = doubled.raised(s, l) {
                y[t] += c * v * (doubled.occupation(s)[l] as f64 + 1.0).sqrt();
            }
        }
    }
    y
}

fn check_contraction(q: &DMatrix<Complex64>, m: usize) -> Result<()> {
    if q.nrows() != m || q.ncols() != m {
        return Err(Error::Validation(format!("field localizer must be {m} x {m}")));
    }
    if linalg::max_abs_diff(q, &q.adjoint()) > 1e-12 {
        return Err(Error::Validation("field localizer must be hermitian".into()));
    }
    let eig = linalg::hermitian_eigen(q).values;
    if eig[0] < -1e-12 || eig[eig.len() - 1] > 1.0 + 1e-12 {
        return Err(Error::Validation(format!(
            "field localizer spectrum [{}, {}] outside [0, 1]",
            eig[0],
            eig[eig.len() - 1]
        )));
    }
    Ok(())
}

/// `sqrt(1 - q^2)` for a hermitian contraction.
pub fn complement(q: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    linalg::hermitian_function(q, |v| (1.0 - v * v).max(0.0).sqrt())
}

pub fn doubling_isometry(q: &DMatrix<Complex64>, basis: &FockBasis) -> Result<DoublingIsometry> {
    let m = basis.modes();
    check_contraction(q, m)?;
    let s = complement(q);
    let doubled = FockBasis::new(2 * m, basis.cutoff())?;
    // Q e_j = q e_j (+) s e_j
    let images: Vec<Vec<Complex64>> = (0..m)
        .map(|j| (0..m).map(|l| q[(l, j)]).chain((0..m).map(|l| s[(l, j)])).collect())
        .collect();
    let dd = doubled.dim();
    let mut dense_cols: Vec<Vec<Complex64>> = Vec::with_capacity(basis.dim());
    for f in 0..basis.dim() {
        let col = if f == 0 {
            let mut v = vec![Complex64::default(); dd];
            v[0] = Complex64::new(1.0, 0.0);
            v
        } else {
            let occ = basis.occupation(f);
            let j = occ.iter().position(|&n| n > 0).expect("non-vacuum");
            let prev = basis.lowered(f, j).expect("n_j > 0");
            let mut v = create_doubled(&doubled, &images[j], &dense_cols[prev]);
            let norm = 1.0 / (occ[j] as f64).sqrt();
            v.iter_mut().for_each(|z| *z *= norm);
            v
        };
        dense_cols.push(col);
    }
    let split: Vec<(usize, usize)> = (0..dd)
        .map(|t| {
            let occ = doubled.occupation(t);
            let c = basis.index_of(&occ[..m]).expect("within cutoff");
            let d = basis.index_of(&occ[m..]).expect("within cutoff");
            (c, d)
        })
        .collect();
    let columns = dense_cols
        .into_iter()
        .map(|col| {
            col.into_iter()
                .enumerate()
                .filter(|(_, v)| v.norm() > 0.0)
                .map(|(t, v)| (split[t].0, split[t].1, v))
                .collect()
        })
        .collect();
    Ok(DoublingIsometry {
        columns,
        doubled_dim: dd,
    })
}

impl DoublingIsometry {
    /// `Y x` as a dense matrix indexed `[c][d]`.
    pub fn apply(&self, x: &[Complex64], fock_dim: usize) -> DMatrix<Complex64> {
        let mut out = DMatrix::zeros(fock_dim, fock_dim);
        for (f, col) in self.columns.iter().enumerate() {
            if x[f] == Complex64::default() {
                continue;
            }
            for &(c, d, v) in col {
                out[(c, d)] += v * x[f];
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub enum FieldLocalizer {
    /// `q_field = 1` for both pieces.
    Identity,
    /// Compression of the particle window to the mode subspace, spectrum clipped to
    /// `[0, 1]`; the complement piece uses `sqrt(1 - q^2)`.
    Compressed,
    Explicit(DMatrix<Complex64>),
}

/// `<e_j, f e_l>` on the retained modes, spectrum clipped to `[0, 1]`.
pub fn compress_to_modes(f: &Field, modes: &ModeSet) -> DMatrix<Complex64> {
    let m = modes.len();
    let basis: Vec<Field> = (0..m)
        .map(|j| {
            let mut a = vec![Complex64::default(); m];
            a[j] = Complex64::new(1.0, 0.0);
            modes.synthesize(&a)
        })
        .collect();
    let raw = DMatrix::from_fn(m, m, |j, l| basis[j].inner(&basis[l].mul(f)));
    linalg::hermitian_function(&raw, |v| v.clamp(0.0, 1.0))
}

/// Both-sided check that the localization capacity is respected.
fn check_capacity(n: usize, basis: &FockBasis, cap: usize) -> Result<()> {
    let dd = fock_dimension(2 * basis.modes(), basis.cutoff()).unwrap_or(usize::MAX);
    let required = n.saturating_mul(dd);
    if required > cap {
        return Err(Error::Capacity {
            parameter: format!(
                "doubled composite dimension n x C(2M + N, 2M) with n = {n}, M = {}, N = {}",
                basis.modes(),
                basis.cutoff()
            ),
            required,
            cap,
        });
    }
    Ok(())
}

/// `Gamma_q`: particle-side multiplication by `q_particle`, field side through `Y(q_field)`
/// followed by the partial trace over the second factor.
pub fn localize(gamma: &CompositeDensity, q_particle: &Field, q_field: &DMatrix<Complex64>, basis: &FockBasis, cap: usize) -> Result<CompositeDensity> {
    let n = gamma.grid().n();
    check_capacity(n, basis, cap)?;
    check_particle(q_particle)?;
    let y = doubling_isometry(q_field, basis)?;
    let d = basis.dim();
    // Entries of Y grouped by the traced-out index.
    let mut by_d: Vec<Vec<(usize, usize, Complex64)>> = vec![Vec::new(); d];
    for (f, col) in y.columns.iter().enumerate() {
        for &(c, dd, v) in col {
            by_d[dd].push((c, f, v));
        }
    }
    let q: Vec<f64> = q_particle.values().iter().map(|z| z.re).collect();
    let mut terms = Vec::new();
    for (w, phi) in gamma.terms() {
        let pieces: Vec<Vec<Complex64>> = by_d
            .par_iter()
            .filter(|e| !e.is_empty())
            .map(|entries| {
                let mut out = vec![Complex64::default(); n * d];
                for x in 0..n {
                    if q[x] == 0.0 {
                        continue;
                    }
                    for &(c, f, v) in entries {
                        out[x * d + c] += v * phi[x * d + f] * q[x];
                    }
                }
                out
            })
            .collect();
        terms.extend(pieces.into_iter().filter(|v| v.iter().any(|z| *z != Complex64::default())).map(|v| (*w, v)));
    }
    CompositeDensity::new(gamma.grid(), d, gamma.alpha(), terms)
}

fn check_particle(q: &Field) -> Result<()> {
    if q.values().iter().any(|z| z.im != 0.0 || z.re < -1e-15 || z.re > 1.0 + 1e-15) {
        return Err(Error::Validation("particle localizer must take values in [0, 1]".into()));
    }
    Ok(())
}

/// `(Tr[Gamma_q], Tr[H Gamma_q])` without materializing `Gamma_q`.
pub fn localized_energy(
    gamma: &CompositeDensity,
    q_particle: &Field,
    q_field: &DMatrix<Complex64>,
    basis: &FockBasis,
    h: &Hamiltonian,
    cap: usize,
) -> Result<(f64, f64)> {
    let n = gamma.grid().n();
    check_capacity(n, basis, cap)?;
    check_particle(q_particle)?;
    let y = doubling_isometry(q_field, basis)?;
    let d = basis.dim();
    let mut by_d: Vec<Vec<(usize, usize, Complex64)>> = vec![Vec::new(); d];
    for (f, col) in y.columns.iter().enumerate() {
        for &(c, dd, v) in col {
            by_d[dd].push((c, f, v));
        }
    }
    let hx = gamma.grid().spacing();
    let q: Vec<f64> = q_particle.values().iter().map(|z| z.re).collect();
    let mut trace = 0.0;
    let mut energy = 0.0;
    for (w, phi) in gamma.terms() {
        let parts: Vec<(f64, f64)> = by_d
            .iter()
            .filter(|e| !e.is_empty())
            .map(|entries| {
                let mut out = vec![Complex64::default(); n * d];
                for x in 0..n {
                    if q[x] == 0.0 {
                        continue;
                    }
                    for &(c, f, v) in entries {
                        out[x * d + c] += v * phi[x * d + f] * q[x];
                    }
                }
                let t: f64 = out.iter().map(|z| z.norm_sqr()).sum();
                let e = if t == 0.0 { 0.0 } else { crate::fock::LinearOperator::rayleigh_quotient(h, &out) * t };
                (w * hx * t, w * hx * e)
            })
            .collect();
        for (t, e) in parts {
            trace += t;
            energy += e;
        }
    }
    Ok((trace, energy))
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub particle: f64,
    pub field: f64,
    pub interaction: f64,
    pub trace: f64,
    /// Smallest eigenvalue of `Gamma_q` (dense check on small instances only).
    pub min_eigenvalue: Option<f64>,
}

/// `Tr_F[Gamma (a^dagger(g) + a(g))]` as an `n x n` particle matrix.
pub fn field_particle_operator(gamma: &CompositeDensity, g: &[Complex64], basis: &FockBasis) -> DMatrix<Complex64> {
    let n = gamma.grid().n();
    let d = basis.dim();
    let h = gamma.grid().spacing();
    let alpha = gamma.alpha();
    let mut out = DMatrix::zeros(n, n);
    for (w, phi) in gamma.terms() {
        let b_phi: Vec<Vec<Complex64>> = (0..n)
            .map(|y| {
                let blk = &phi[y * d..(y + 1) * d];
                let mut acc = vec![Complex64::default(); d];
                for (j, gj) in g.iter().enumerate() {
                    if *gj == Complex64::default() {
                        continue;
                    }
                    let up = basis.raise_vector(j, alpha, blk);
                    let down = basis.lower_vector(j, alpha, blk);
                    for ((a, u), dn) in acc.iter_mut().zip(up).zip(down) {
                        *a += gj * u + gj.conj() * dn;
                    }
                }
                acc
            })
            .collect();
        for x in 0..n {
            for y in 0..n {
                let s: Complex64 = phi[x * d..(x + 1) * d].iter().zip(&b_phi[y]).map(|(a, b)| a * b.conj()).sum();
                out[(x, y)] += s * (w * h);
            }
        }
    }
    out
}

fn scale_particle(gamma: &CompositeDensity, q: &Field) -> Result<CompositeDensity> {
    let d = gamma.fock_dim();
    let terms = gamma
        .terms()
        .iter()
        .map(|(w, v)| {
            let scaled = v.iter().enumerate().map(|(k, z)| z * q.values()[k / d].re).collect();
            (*w, scaled)
        })
        .collect();
    CompositeDensity::new(gamma.grid(), d, gamma.alpha(), terms)
}

/// Evaluates both sides of the particle, field, interaction and trace identities of the
/// localized state.
pub fn verify_localization_identities(
    gamma: &CompositeDensity,
    q_particle: &Field,
    q_field: &DMatrix<Complex64>,
    basis: &FockBasis,
    cap: usize,
) -> Result<IdentityReport> {
    let gq = localize(gamma, q_particle, q_field, basis, cap)?;
    let complement_p = q_particle.map(|z| Complex64::new((1.0 - z.re * z.re).max(0.0).sqrt(), 0.0));
    let gc = localize(gamma, &complement_p, &complement(q_field), basis, cap)?;
    let r = reduce_density(gamma, basis)?;
    let rq = reduce_density(&gq, basis)?;
    let qd = crate::densities::multiplication(q_particle);

    let particle = linalg::max_abs_diff(&rq.gamma, &(&qd * &r.gamma * &qd));

    let inner = scale_particle(gamma, q_particle)?;
    let r_inner = reduce_density(&inner, basis)?;
    // field11 stores (j, l) -> <e_j, G e_l>; localized G_q = q G' q.
    let expected_field = q_field * &r_inner.field11 * q_field;
    let field = linalg::max_abs_diff(&rq.field11, &expected_field);

    let m = basis.modes();
    let mut interaction: f64 = 0.0;
    let mut probes: Vec<Vec<Complex64>> = (0..m)
        .map(|j| (0..m).map(|l| if l == j { Complex64::new(1.0, 0.0) } else { Complex64::default() }).collect())
        .collect();
    probes.push((0..m).map(|l| Complex64::new(0.3 + 0.1 * l as f64, -0.2 * l as f64)).collect());
    for f in &probes {
        let lhs = field_particle_operator(&gq, f, basis);
        let qf: Vec<Complex64> = (0..m).map(|l| (0..m).map(|j| q_field[(l, j)] * f[j]).sum()).collect();
        let rhs = &qd * field_particle_operator(gamma, &qf, basis) * &qd;
        interaction = interaction.max(linalg::max_abs_diff(&lhs, &rhs));
    }
    let trace = (gq.trace() + gc.trace() - gamma.trace()).abs();
    let dim = gamma.grid().n() * basis.dim();
    let min_eigenvalue = (dim <= 2000).then(|| linalg::min_eigenvalue(&gq.to_dense()));
    Ok(IdentityReport {
        particle,
        field,
        interaction,
        trace,
        min_eigenvalue,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ImsReport {
    /// `Tr(-Delta g) - Tr(-chi Delta chi g) - Tr(-eta Delta eta g) + Tr(G g)`.
    pub deviation: f64,
    pub kinetic: f64,
    pub inner: f64,
    pub outer: f64,
    pub gradient: f64,
    /// `R^2 max(|chi'|^2 + |eta'|^2)`.
    pub gradient_constant: f64,
    pub max_gradient: f64,
}

/// IMS localization check for a particle density matrix (orthonormal coordinates).
pub fn ims_check(gamma: &DMatrix<Complex64>, partition: &PartitionOfUnity) -> ImsReport {
    let grid = partition.chi.grid();
    let n = grid.n();
    let lap = laplacian_matrix(grid);
    let l = DMatrix::from_row_slice(n, n, &lap).map(|v| Complex64::new(v, 0.0));
    let chi = crate::densities::multiplication(&partition.chi);
    let eta = crate::densities::multiplication(&partition.eta);
    let g = partition.gradient_term();
    let gm = crate::densities::multiplication(&g);
    let tr = |m: DMatrix<Complex64>| (m * gamma).trace().re;
    let kinetic = tr(l.clone());
    let inner = tr(&chi * &l * &chi);
    let outer = tr(&eta * &l * &eta);
    let gradient = tr(gm);
    let max_gradient = g.values().iter().map(|z| z.re).fold(0.0, f64::max);
    ImsReport {
        deviation: kinetic - inner - outer + gradient,
        kinetic,
        inner,
        outer,
        gradient,
        gradient_constant: partition.radius * partition.radius * max_gradient,
        max_gradient,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SplitRow {
    pub radius: f64,
    pub energy: f64,
    pub inner_energy: f64,
    pub outer_energy: f64,
    /// `Tr(H^V Gamma) - [Tr(H^V Gamma_chi) + Tr(H^0 Gamma_eta)]`.
    pub defect: f64,
    pub inner_trace: f64,
    pub outer_trace: f64,
    pub ims_deviation: f64,
    pub gradient_constant: f64,
}

/// Energy splitting for a ladder of partitions. `h_v` and `h_0` must share the basis.
pub fn energy_split_check(
    gamma: &CompositeDensity,
    partitions: &[PartitionOfUnity],
    h_v: &Hamiltonian,
    h_0: &Hamiltonian,
    basis: &FockBasis,
    modes: &ModeSet,
    field: &FieldLocalizer,
    cap: usize,
) -> Result<Vec<SplitRow>> {
    let energy = gamma.expectation(h_v);
    let m = basis.modes();
    partitions
        .iter()
        .map(|p| {
            let (q_in, q_out) = match field {
                FieldLocalizer::Identity => (DMatrix::identity(m, m), DMatrix::identity(m, m)),
                FieldLocalizer::Compressed => {
                    let q = compress_to_modes(&p.chi, modes);
                    let c = complement(&q);
                    (q, c)
                }
                FieldLocalizer::Explicit(q) => (q.clone(), complement(q)),
            };
            let (inner_trace, inner_energy) = localized_energy(gamma, &p.chi, &q_in, basis, h_v, cap)?;
            let (outer_trace, outer_energy) = localized_energy(gamma, &p.eta, &q_out, basis, h_0, cap)?;
            let reduced = reduce_density(gamma, basis)?;
            let ims = ims_check(&reduced.gamma, p);
            Ok(SplitRow {
                radius: p.radius,
                energy,
                inner_energy,
                outer_energy,
                defect: energy - inner_energy - outer_energy,
                inner_trace,
                outer_trace,
                ims_deviation: ims.deviation,
                gradient_constant: ims.gradient_constant,
            })
        })
        .collect()
}
