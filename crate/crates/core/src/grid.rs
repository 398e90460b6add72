//! Periodic one-dimensional lattice, grid functions and spectral operations.
//!
//! Conventions used throughout the crate:
//!
//! * Points are `x_i = i * h` for `i = 0..n`, with `h = L / n`. The box centre is `L / 2`.
//! * The inner product of grid functions is `<f, g> = h * sum_i conj(f_i) g_i`.
//! * [`fourier_transform`] is the unitary DFT `c_j = n^{-1/2} sum_i f_i e^{-i k_j x_i}`,
//!   stored in FFT order. Coefficient fields carry the same `h` weight, so
//!   `||c|| = ||f||` holds exactly.
//! * The amplitude of `f` on the orthonormal plane wave `e_j(x) = e^{i k_j x} / sqrt(L)`
//!   is `sqrt(h) * c_j` (see [`Field::mode_amplitude`]).

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Periodic lattice `[0, L)` with `n` points.
#[derive(Clone)]
pub struct Grid {
    n: usize,
    length: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.n)
            .field("length", &self.length)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.length.to_bits() == other.length.to_bits()
    }
}

impl Grid {
    pub const DIMENSION: usize = 1;

    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::Configuration(format!(
                "grid.n must be a power of two >= 8, got {n}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::Configuration(format!(
                "grid.length must be positive, got {length}"
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            n,
            length,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }

    pub fn center(&self) -> f64 {
        0.5 * self.length
    }

    /// Signed mode index of FFT slot `j`, in `-n/2 .. n/2`.
    pub fn signed_index(&self, j: usize) -> i64 {
        let n = self.n as i64;
        let j = j as i64;
        if j < n / 2 {
            j
        } else {
            j - n
        }
    }

    /// FFT slot of a signed mode index.
    pub fn slot(&self, signed: i64) -> usize {
        signed.rem_euclid(self.n as i64) as usize
    }

    pub fn wavenumber(&self, j: usize) -> f64 {
        2.0 * std::f64::consts::PI * self.signed_index(j) as f64 / self.length
    }

    /// Spacing of the dual lattice, `2 pi / L`; also the mode quadrature weight.
    pub fn dual_spacing(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.length
    }

    /// Periodic distance from `x` to `y`, in `[0, L/2]`.
    pub fn periodic_distance(&self, x: f64, y: f64) -> f64 {
        let d = (x - y).rem_euclid(self.length);
        d.min(self.length - d)
    }

    /// Signed periodic displacement `x - y` folded into `[-L/2, L/2)`.
    pub fn periodic_displacement(&self, x: f64, y: f64) -> f64 {
        let l = self.length;
        (x - y + 0.5 * l).rem_euclid(l) - 0.5 * l
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::Configuration(format!(
                "value array of length {len} does not match grid with {} points",
                self.n
            )));
        }
        Ok(())
    }

    pub(crate) fn fft_unitary(&self, values: &mut [Complex64]) {
        self.forward.process(values);
        let s = 1.0 / (self.n as f64).sqrt();
        values.iter_mut().for_each(|v| *v *= s);
    }

    pub(crate) fn ifft_unitary(&self, values: &mut [Complex64]) {
        self.inverse.process(values);
        let s = 1.0 / (self.n as f64).sqrt();
        values.iter_mut().for_each(|v| *v *= s);
    }
}

/// Complex-valued function sampled on a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<Complex64>,
}

impl Field {
    pub fn new(grid: &Grid, values: Vec<Complex64>) -> Result<Self> {
        grid.check(values.len())?;
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![Complex64::new(0.0, 0.0); grid.n()],
        }
    }

    pub fn from_fn(grid: &Grid, mut f: impl FnMut(f64) -> Complex64) -> Self {
        let values = (0..grid.n()).map(|i| f(grid.x(i))).collect();
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn from_real_fn(grid: &Grid, mut f: impl FnMut(f64) -> f64) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    pub fn from_real(grid: &Grid, values: &[f64]) -> Result<Self> {
        Self::new(grid, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    /// Grid inner product `h * sum conj(self) other`.
    pub fn inner(&self, other: &Field) -> Complex64 {
        let s: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum();
        s * self.grid.spacing()
    }

    pub fn norm_sq(&self) -> f64 {
        self.grid.spacing() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, s: Complex64) -> Field {
        self.map(|v| v * s)
    }

    pub fn scaled_real(&self, s: f64) -> Field {
        self.map(|v| v * s)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Field {
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(Complex64, Complex64) -> Complex64) -> Field {
        Field {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &Field) -> Field {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.zip_map(other, |a, b| a - b)
    }

    /// `self + t * other`
    pub fn axpy(&self, t: f64, other: &Field) -> Field {
        self.zip_map(other, |a, b| a + b * t)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Field) -> Field {
        self.zip_map(other, |a, b| a * b)
    }

    /// `|f|^2` as a real field.
    pub fn density(&self) -> Field {
        self.map(|v| Complex64::new(v.norm_sqr(), 0.0))
    }

    /// `x -> f(-x)` on the torus.
    pub fn reflected(&self) -> Field {
        let n = self.len();
        let values = (0..n).map(|i| self.values[(n - i) % n]).collect();
        Field {
            grid: self.grid.clone(),
            values,
        }
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    /// Grid integral `h * sum f_i`.
    pub fn integral(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() * self.grid.spacing()
    }

    /// Coefficient on the orthonormal plane wave with signed index `signed`,
    /// `<e_j, f> = sqrt(h) * c_j`.
    pub fn mode_amplitude(&self, signed: i64) -> Complex64 {
        let c = fourier_transform(self);
        c.values[self.grid.slot(signed)] * self.grid.spacing().sqrt()
    }

    pub fn same_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Configuration(format!(
                "grid mismatch: {:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        Ok(())
    }
}

/// Unitary DFT of `f`, in FFT slot order.
pub fn fourier_transform(f: &Field) -> Field {
    let mut values = f.values.clone();
    f.grid.fft_unitary(&mut values);
    Field {
        grid: f.grid.clone(),
        values,
    }
}

pub fn inverse_transform(c: &Field) -> Field {
    let mut values = c.values.clone();
    c.grid.ifft_unitary(&mut values);
    Field {
        grid: c.grid.clone(),
        values,
    }
}

/// Apply a Fourier multiplier `m(j)` indexed by FFT slot.
pub fn apply_multiplier(f: &Field, m: impl Fn(usize) -> Complex64) -> Field {
    let mut values = f.values.clone();
    f.grid.fft_unitary(&mut values);
    for (j, v) in values.iter_mut().enumerate() {
        *v *= m(j);
    }
    f.grid.ifft_unitary(&mut values);
    Field {
        grid: f.grid.clone(),
        values,
    }
}

/// `-Delta f`, multiplication by `|k|^2` in mode space.
pub fn laplacian_apply(f: &Field) -> Field {
    let grid = f.grid.clone();
    apply_multiplier(f, |j| {
        let k = grid.wavenumber(j);
        Complex64::new(k * k, 0.0)
    })
}

/// Spectral first derivative. The Nyquist mode is dropped.
pub fn derivative(f: &Field) -> Field {
    let grid = f.grid.clone();
    let nyquist = grid.n() / 2;
    apply_multiplier(f, |j| {
        if j == nyquist {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, grid.wavenumber(j))
        }
    })
}

/// Periodic convolution `(f * g)(x) = h sum_y f(y) g(x - y)`.
///
/// In mode space `c(f * g) = h sqrt(n) c(f) c(g)`.
pub fn convolve(f: &Field, g: &Field) -> Result<Field> {
    f.same_grid(g)?;
    let grid = &f.grid;
    let mut a = f.values.clone();
    let mut b = g.values.clone();
    grid.fft_unitary(&mut a);
    grid.fft_unitary(&mut b);
    let s = grid.spacing() * (grid.n() as f64).sqrt();
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y * s;
    }
    grid.ifft_unitary(&mut a);
    Ok(Field {
        grid: grid.clone(),
        values: a,
    })
}

/// Reference `O(n^2)` DFT with the same normalization as [`fourier_transform`].
pub fn naive_dft(f: &Field) -> Field {
    let grid = &f.grid;
    let n = grid.n();
    let s = 1.0 / (n as f64).sqrt();
    let values = (0..n)
        .map(|j| {
            let k = grid.wavenumber(j);
            f.values
                .iter()
                .enumerate()
                .map(|(i, v)| v * Complex64::from_polar(1.0, -k * grid.x(i)))
                .sum::<Complex64>()
                * s
        })
        .collect();
    Field {
        grid: grid.clone(),
        values,
    }
}

/// Dense matrix of `-Delta` on grid values (real symmetric, row-major).
pub fn laplacian_matrix(grid: &Grid) -> Vec<f64> {
    let n = grid.n();
    // Row i of the Laplacian only depends on (i - l) mod n.
    let mut kernel = vec![0.0; n];
    for (d, slot) in kernel.iter_mut().enumerate() {
        let mut s = 0.0;
        for j in 0..n {
            let k = grid.wavenumber(j);
            s += k * k * (k * grid.x(d)).cos();
        }
        *slot = s / n as f64;
    }
    // The kernel is even; enforce it so the matrix is exactly symmetric.
    for d in 1..n / 2 {
        let even = 0.5 * (kernel[d] + kernel[n - d]);
        kernel[d] = even;
        kernel[n - d] = even;
    }
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for l in 0..n {
            m[i * n + l] = kernel[(i + n - l) % n];
        }
    }
    m
}
