//! Numerical study of the quasi-classical limit of a one-dimensional polaron model:
//! a particle on a periodic grid coupled linearly to finitely many bosonic field modes.
//!
//! The crate provides the grid and FFT plumbing, the classical Pekar functional and its
//! minimizers, the truncated Fock-space Hamiltonian with a Lanczos ground-state solver,
//! reduced densities and quasi-classical moments, and the localization machinery.

pub mod densities;
pub mod error;
pub mod fock;
pub mod grid;
pub mod linalg;
pub mod localization;
pub mod pekar;
pub mod profiles;
pub mod sweep;

pub use error::{Error, Result};
pub use grid::{Field, Grid};
pub use num_complex::Complex64;
