//! Field coherent states, product trial energies and the occupation cutoff rule.

use num_complex::Complex64;

use super::basis::{check_alpha, FockBasis};
use super::hamiltonian::{CompositeState, Hamiltonian};
use super::modes::ModeSet;
use super::sparse::LinearOperator;
use crate::error::{Error, Result};
use crate::grid::Field;

/// Tail mass above which a truncated coherent state is flagged.
pub const TRUNCATION_WARNING: f64 = 0.01;

#[derive(Clone, Debug)]
pub struct CoherentState {
    /// Normalized Fock coefficients.
    pub vector: Vec<Complex64>,
    /// `1 - sum |c_n|^2` over the retained occupations, before renormalization.
    pub truncation_error: f64,
    pub unreliable: bool,
}

/// Coherent state with `a_j xi = u_j xi` for the scaled annihilators, i.e. the vacuum
/// displaced by `alpha * u` in unscaled units:
/// `c_n = prod_j exp(-|z_j|^2 / 2) z_j^{n_j} / sqrt(n_j!)`, `z_j = alpha <e_j, u>`.
pub fn coherent_state(u: &Field, modes: &ModeSet, basis: &FockBasis, alpha: f64) -> Result<CoherentState> {
    coherent_from_amplitudes(&modes.amplitudes(u), basis, alpha)
}

pub fn coherent_from_amplitudes(amplitudes: &[Complex64], basis: &FockBasis, alpha: f64) -> Result<CoherentState> {
    check_alpha(alpha)?;
    if amplitudes.len() != basis.modes() {
        return Err(Error::Validation("amplitude count differs from basis mode count".into()));
    }
    let cutoff = basis.cutoff();
    // tables[j][n] = exp(-|z|^2/2) z^n / sqrt(n!)
    let tables: Vec<Vec<Complex64>> = amplitudes
        .iter()
        .map(|a| {
            let z = a * alpha;
            let mut t = Vec::with_capacity(cutoff + 1);
            t.push(Complex64::new((-0.5 * z.norm_sqr()).exp(), 0.0));
            for n in 1..=cutoff {
                let prev = t[n - 1];
                t.push(prev * z / (n as f64).sqrt());
            }
            t
        })
        .collect();
    let mut vector: Vec<Complex64> = (0..basis.dim())
        .map(|s| {
            basis
                .occupation(s)
                .iter()
                .zip(&tables)
                .map(|(&n, t)| t[n as usize])
                .product()
        })
        .collect();
    let kept: f64 = vector.iter().map(|c| c.norm_sqr()).sum();
    let truncation_error = (1.0 - kept).max(0.0);
    let s = 1.0 / kept.sqrt();
    vector.iter_mut().for_each(|c| *c *= s);
    Ok(CoherentState {
        vector,
        truncation_error,
        unreliable: truncation_error > TRUNCATION_WARNING,
    })
}

#[derive(Clone, Debug)]
pub struct TrialEnergy {
    pub energy: f64,
    /// Coherent-state tail mass discarded by the occupation cutoff.
    pub fock_truncation: f64,
    /// `||u||^2 - ||P_M u||^2`: field weight outside the retained modes.
    pub mode_truncation: f64,
}

/// Rayleigh quotient of `psi (x) xi(u)` under `h`.
pub fn product_trial_energy(psi: &Field, u: &Field, h: &Hamiltonian, modes: &ModeSet, basis: &FockBasis) -> Result<TrialEnergy> {
    let xi = coherent_state(u, modes, basis, h.alpha())?;
    if xi.unreliable {
        return Err(Error::Validation(format!(
            "coherent-state truncation error {:e} exceeds {TRUNCATION_WARNING}",
            xi.truncation_error
        )));
    }
    let state = CompositeState::product(psi, &xi.vector, h.alpha())?;
    Ok(TrialEnergy {
        energy: h.rayleigh_quotient(state.coeffs()),
        fock_truncation: xi.truncation_error,
        mode_truncation: modes.truncation_weight(u),
    })
}

/// `N_tot = ceil(alpha^2 ||u||^2 + s alpha ||u|| + s)`.
///
/// The coherent occupation is Poisson with mean `alpha^2 ||u||^2`, so `s` standard
/// deviations above the mean plus an offset of `s` bounds the discarded tail.
pub fn cutoff_rule(u_norm: f64, alpha: f64, safety: f64) -> Result<usize> {
    if safety < 3.0 {
        return Err(Error::Validation(format!("safety factor must be at least 3, got {safety}")));
    }
    check_alpha(alpha)?;
    let mean = alpha * alpha * u_norm * u_norm;
    Ok((mean + safety * alpha * u_norm + safety).ceil() as usize)
}
