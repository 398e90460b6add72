//! Truncated second-quantized engine.

mod basis;
mod coherent;
pub mod container;
mod hamiltonian;
mod lanczos;
mod modes;
mod sparse;

pub use basis::{fock_dimension, ladder_operators, number_operator, FockBasis};
pub use coherent::{coherent_from_amplitudes, coherent_state, cutoff_rule, product_trial_energy, CoherentState, TrialEnergy, TRUNCATION_WARNING};
pub use hamiltonian::{ground_state, CompositeState, GroundState, Hamiltonian};
pub use lanczos::{lowest_eigenpair, Eigenpair, LanczosOptions};
pub use modes::ModeSet;
pub use sparse::{LinearOperator, SparseOperator};
