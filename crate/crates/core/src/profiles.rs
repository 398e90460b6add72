//! Parameter families for the external potential and the particle-field coupling.

use crate::error::Result;
use crate::grid::{Field, Grid};
use crate::pekar::PekarProblem;

/// `-depth * exp(-(x - center)^2 / (2 width^2))`, periodic distance.
pub fn gaussian_well(grid: &Grid, depth: f64, width: f64, center: f64) -> Field {
    Field::from_real_fn(grid, |x| {
        let d = grid.periodic_distance(x, center);
        -depth * (-d * d / (2.0 * width * width)).exp()
    })
}

/// Two Gaussian wells at `center -/+ separation / 2`.
pub fn double_well(
    grid: &Grid,
    depth_left: f64,
    depth_right: f64,
    width: f64,
    separation: f64,
    center: f64,
) -> Field {
    let left = gaussian_well(grid, depth_left, width, center - 0.5 * separation);
    let right = gaussian_well(grid, depth_right, width, center + 0.5 * separation);
    left.add(&right)
}

/// `amplitude * exp(-x^2 / (2 width^2))`, centred at the origin of the torus.
pub fn gaussian_coupling(grid: &Grid, amplitude: f64, width: f64) -> Field {
    Field::from_real_fn(grid, |x| {
        let d = grid.periodic_distance(x, 0.0);
        amplitude * (-d * d / (2.0 * width * width)).exp()
    })
}

/// `amplitude * cos(k x) * exp(-x^2 / (2 width^2))`, centred at the origin.
pub fn cosine_packet(grid: &Grid, amplitude: f64, width: f64, wavenumber: f64) -> Field {
    Field::from_real_fn(grid, |x| {
        let d = grid.periodic_displacement(x, 0.0);
        amplitude * (wavenumber * d).cos() * (-d * d / (2.0 * width * width)).exp()
    })
}

/// Shallow well (depth 0.05, width 2) with a Gaussian coupling of amplitude 0.5 and
/// width 1, unit mass. Used on `(n, L) = (256, 32)` and its refinements.
pub fn sample_problem(grid: &Grid) -> Result<PekarProblem> {
    PekarProblem::new(
        gaussian_well(grid, 0.05, 2.0, grid.center()),
        gaussian_coupling(grid, 0.5, 1.0),
        1.0,
    )
}

/// Deeper, narrower well and stronger coupling for the `alpha` sweeps on
/// `(n, L) = (64, 16)`. The polaron is well inside the window there already at
/// `alpha = 1`, which keeps the sweep in its asymptotic regime.
pub fn sweep_problem(grid: &Grid) -> Result<PekarProblem> {
    PekarProblem::new(
        gaussian_well(grid, 2.0, 0.7, grid.center()),
        gaussian_coupling(grid, 1.0, 0.7),
        1.0,
    )
}
