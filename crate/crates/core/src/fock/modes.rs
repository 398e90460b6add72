//! Retained field modes on the dual lattice.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

/// A finite set of plane-wave modes `e_j(x) = e^{i k_j x} / sqrt(L)`, closed under
/// `k -> -k`. Mode amplitudes are orthonormal-basis coefficients, so each mode carries
/// the dual-lattice weight `2 pi / L` implicitly.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeSet {
    grid: Grid,
    indices: Vec<i64>,
}

impl ModeSet {
    /// The `m` lowest-|k| modes in the order `0, +1, -1, +2, -2, ...`; `m` must be odd.
    pub fn lowest(grid: &Grid, m: usize) -> Result<Self> {
        if m == 0 || m % 2 == 0 {
            return Err(Error::Validation(format!(
                "mode count must be odd to be closed under negation, got {m}"
            )));
        }
        if m >= grid.n() {
            return Err(Error::Validation(format!("mode count {m} must be below grid size {}", grid.n())));
        }
        let mut indices = vec![0i64];
        for k in 1..=((m - 1) / 2) as i64 {
            indices.push(k);
            indices.push(-k);
        }
        Ok(Self {
            grid: grid.clone(),
            indices,
        })
    }

    pub fn from_indices(grid: &Grid, indices: Vec<i64>) -> Result<Self> {
        let half = (grid.n() / 2) as i64;
        if indices.is_empty() {
            return Err(Error::Validation("empty mode set".into()));
        }
        for (a, &k) in indices.iter().enumerate() {
            if k.abs() >= half {
                return Err(Error::Validation(format!("mode {k} outside |k| < {half}")));
            }
            if indices[..a].contains(&k) {
                return Err(Error::Validation(format!("duplicate mode {k}")));
            }
            if !indices.contains(&-k) {
                return Err(Error::Validation(format!("mode set not closed under negation: {k}")));
            }
        }
        Ok(Self {
            grid: grid.clone(),
            indices,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[i64] {
        &self.indices
    }

    pub fn wavenumber(&self, j: usize) -> f64 {
        2.0 * std::f64::consts::PI * self.indices[j] as f64 / self.grid.length()
    }

    /// Dual-lattice quadrature weight `2 pi / L`.
    pub fn weight(&self) -> f64 {
        self.grid.dual_spacing()
    }

    /// Position of `-k_j` in this set.
    pub fn partner(&self, j: usize) -> usize {
        let k = -self.indices[j];
        self.indices.iter().position(|&i| i == k).expect("closed under negation")
    }

    pub fn position(&self, signed: i64) -> Option<usize> {
        self.indices.iter().position(|&i| i == signed)
    }

    /// `<e_j, f>` for every retained mode.
    pub fn amplitudes(&self, f: &Field) -> Vec<Complex64> {
        self.indices.iter().map(|&k| f.mode_amplitude(k)).collect()
    }

    /// `sum_j c_j e_j` on the grid.
    pub fn synthesize(&self, amplitudes: &[Complex64]) -> Field {
        let l = self.grid.length();
        Field::from_fn(&self.grid, |x| {
            amplitudes
                .iter()
                .enumerate()
                .map(|(j, c)| c * Complex64::from_polar(1.0, self.wavenumber(j) * x))
                .sum::<Complex64>()
                / l.sqrt()
        })
    }

    /// Orthogonal projection onto the span of the retained modes.
    pub fn project(&self, f: &Field) -> Field {
        self.synthesize(&self.amplitudes(f))
    }

    /// `||f||^2 - sum_j |<e_j, f>|^2`: weight of `f` outside the retained modes.
    pub fn truncation_weight(&self, f: &Field) -> f64 {
        let kept: f64 = self.amplitudes(f).iter().map(|c| c.norm_sqr()).sum();
        (f.norm_sq() - kept).max(0.0)
    }
}
