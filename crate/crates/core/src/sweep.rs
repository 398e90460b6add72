//! One-α runs of the quasi-classical sweep: truncated ground state, product trial
//! energy and the Pekar reference of the mode-truncated model.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{
    coherent_state, cutoff_rule, fock_dimension, ground_state, product_trial_energy, CompositeState, FockBasis,
    GroundState, Hamiltonian, LanczosOptions, ModeSet,
};
use crate::pekar::{minimize, MinimizeOptions, PekarProblem, PekarResult};

/// Classical reference for a truncated model. The field only sees the retained
/// modes, so its Pekar limit uses the coupling projected onto them.
#[derive(Clone, Debug)]
pub struct Reference {
    pub problem: PekarProblem,
    pub projected: PekarProblem,
    pub modes: ModeSet,
    pub result: PekarResult,
    /// `||P_M u_psi||`.
    pub u_norm: f64,
}

pub fn reference(problem: &PekarProblem, modes: &ModeSet, opts: &MinimizeOptions) -> Result<Reference> {
    let projected = problem.with_coupling(modes.project(problem.coupling()).map(|z| z.re.into()))?;
    let result = minimize(&projected, opts)?;
    let u_norm = modes.project(&result.u_psi).norm();
    Ok(Reference {
        problem: problem.clone(),
        projected,
        modes: modes.clone(),
        result,
        u_norm,
    })
}

#[derive(Clone, Debug)]
pub struct AlphaRun {
    pub alpha: f64,
    pub cutoff: usize,
    pub basis: FockBasis,
    pub ground: GroundState,
    pub trial_energy: f64,
    pub fock_truncation: f64,
    pub mode_truncation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EnergyRow {
    pub alpha: f64,
    pub cutoff: usize,
    pub composite_dim: usize,
    pub e_alpha: f64,
    pub e_trial: f64,
    pub e_pekar: f64,
    pub residual: f64,
    pub fock_truncation: f64,
    pub mode_truncation: f64,
}

impl AlphaRun {
    pub fn row(&self, reference: &Reference) -> EnergyRow {
        EnergyRow {
            alpha: self.alpha,
            cutoff: self.cutoff,
            composite_dim: self.ground.state.coeffs().len(),
            e_alpha: self.ground.energy,
            e_trial: self.trial_energy,
            e_pekar: reference.result.energy,
            residual: self.ground.residual,
            fock_truncation: self.fock_truncation,
            mode_truncation: self.mode_truncation,
        }
    }
}

/// Ground state at coupling `alpha` with `N_tot = cutoff_rule(||u||, alpha, safety)`,
/// started from the product trial state. Refuses composite dimensions above `cap`.
pub fn run_alpha(reference: &Reference, alpha: f64, safety: f64, lanczos: &LanczosOptions, cap: usize) -> Result<AlphaRun> {
    let modes = &reference.modes;
    let cutoff = cutoff_rule(reference.u_norm, alpha, safety)?;
    let grid = reference.problem.grid();
    let required = fock_dimension(modes.len(), cutoff)
        .and_then(|d| d.checked_mul(grid.n()))
        .unwrap_or(usize::MAX);
    if required > cap {
        return Err(Error::Capacity {
            parameter: format!("cutoff {cutoff} at alpha {alpha}"),
            required,
            cap,
        });
    }
    let basis = FockBasis::new(modes.len(), cutoff)?;
    let h = Hamiltonian::new(&reference.problem, modes, &basis, alpha)?;
    let psi = &reference.result.psi;
    let u = &reference.result.u_psi;
    let trial = product_trial_energy(psi, u, &h, modes, &basis)?;
    let xi = coherent_state(u, modes, &basis, alpha)?;
    let start = CompositeState::product(psi, &xi.vector, alpha)?;
    let ground = ground_state(&h, lanczos, Some(&start))?;
    Ok(AlphaRun {
        alpha,
        cutoff,
        basis,
        ground,
        trial_energy: trial.energy,
        fock_truncation: trial.fock_truncation,
        mode_truncation: trial.mode_truncation,
    })
}
