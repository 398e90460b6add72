//! Occupation-number basis with a total-excitation cutoff, and the scaled ladder operators.

use std::collections::HashMap;

use num_complex::Complex64;

use super::sparse::SparseOperator;
use crate::error::{Error, Result};

const NONE: u32 = u32::MAX;

/// `C(m + n, m)`, or `None` on overflow.
pub fn fock_dimension(modes: usize, cutoff: usize) -> Option<usize> {
    let mut d: u128 = 1;
    for i in 1..=modes as u128 {
        d = d * (cutoff as u128 + i) / i;
        if d > usize::MAX as u128 {
            return None;
        }
    }
    Some(d as usize)
}

/// All occupation vectors `(n_1, ..., n_M)` with `sum n_j <= N_tot`.
///
/// Order: by total occupation, then lexicographically descending, so the vacuum is
/// index 0 and single excitations follow in mode order.
#[derive(Clone, Debug, PartialEq)]
pub struct FockBasis {
    modes: usize,
    cutoff: usize,
    occupations: Vec<u16>,
    lookup: HashMap<Vec<u16>, u32>,
    raise: Vec<u32>,
    lower: Vec<u32>,
}

impl FockBasis {
    pub fn new(modes: usize, cutoff: usize) -> Result<Self> {
        Self::with_capacity(modes, cutoff, u32::MAX as usize - 1)
    }

    /// As [`FockBasis::new`] but refusing to build more than `cap` states.
    pub fn with_capacity(modes: usize, cutoff: usize, cap: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::Validation("at least one mode is required".into()));
        }
        if cutoff > u16::MAX as usize {
            return Err(Error::Validation(format!("cutoff {cutoff} too large")));
        }
        let dim = fock_dimension(modes, cutoff).unwrap_or(usize::MAX);
        if dim > cap {
            return Err(Error::Capacity {
                parameter: "fock dimension".into(),
                required: dim,
                cap,
            });
        }
        let mut occupations = Vec::with_capacity(dim * modes);
        let mut current = vec![0u16; modes];
        for total in 0..=cutoff {
            push_descending(&mut occupations, &mut current, 0, total);
        }
        debug_assert_eq!(occupations.len(), dim * modes);
        let lookup: HashMap<Vec<u16>, u32> = occupations
            .chunks(modes)
            .enumerate()
            .map(|(i, o)| (o.to_vec(), i as u32))
            .collect();
        let mut raise = vec![NONE; dim * modes];
        let mut lower = vec![NONE; dim * modes];
        let mut key = vec![0u16; modes];
        for s in 0..dim {
            let occ = &occupations[s * modes..(s + 1) * modes];
            let total: usize = occ.iter().map(|&n| n as usize).sum();
            for j in 0..modes {
                key.copy_from_slice(occ);
                if total < cutoff {
                    key[j] += 1;
                    raise[s * modes + j] = lookup[&key];
                    key[j] -= 1;
                }
                if occ[j] > 0 {
                    key[j] -= 1;
                    lower[s * modes + j] = lookup[&key];
                }
            }
        }
        Ok(Self {
            modes,
            cutoff,
            occupations,
            lookup,
            raise,
            lower,
        })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.occupations.len() / self.modes
    }

    pub fn occupation(&self, s: usize) -> &[u16] {
        &self.occupations[s * self.modes..(s + 1) * self.modes]
    }

    pub fn total(&self, s: usize) -> usize {
        self.occupation(s).iter().map(|&n| n as usize).sum()
    }

    pub fn index_of(&self, occupation: &[u16]) -> Option<usize> {
        self.lookup.get(occupation).map(|&i| i as usize)
    }

    /// Index of the state with `n_j + 1`, if inside the cutoff.
    pub fn raised(&self, s: usize, j: usize) -> Option<usize> {
        let r = self.raise[s * self.modes + j];
        (r != NONE).then_some(r as usize)
    }

    /// Index of the state with `n_j - 1`, if `n_j > 0`.
    pub fn lowered(&self, s: usize, j: usize) -> Option<usize> {
        let r = self.lower[s * self.modes + j];
        (r != NONE).then_some(r as usize)
    }
}

impl FockBasis {
    /// `a_j x` for a Fock coefficient vector.
    pub fn lower_vector(&self, j: usize, alpha: f64, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::default(); x.len()];
        for (s, c) in x.iter().enumerate() {
            if let Some(t) = self.lowered(s, j) {
                y[t] += c * ((self.occupation(s)[j] as f64).sqrt() / alpha);
            }
        }
        y
    }

    /// `a_j^dagger x`; components pushed beyond the cutoff are dropped.
    pub fn raise_vector(&self, j: usize, alpha: f64, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::default(); x.len()];
        for (s, c) in x.iter().enumerate() {
            if let Some(t) = self.raised(s, j) {
                y[t] += c * ((self.occupation(s)[j] as f64 + 1.0).sqrt() / alpha);
            }
        }
        y
    }
}

fn push_descending(out: &mut Vec<u16>, current: &mut [u16], pos: usize, remaining: usize) {
    if pos + 1 == current.len() {
        current[pos] = remaining as u16;
        out.extend_from_slice(current);
        return;
    }
    for n in (0..=remaining).rev() {
        current[pos] = n as u16;
        push_descending(out, current, pos + 1, remaining - n);
    }
}

/// Scaled annihilation and creation operators for mode `j` (zero-based):
/// `a_j |n> = sqrt(n_j) / alpha |n - e_j>`.
pub fn ladder_operators(basis: &FockBasis, j: usize, alpha: f64) -> Result<(SparseOperator, SparseOperator)> {
    if j >= basis.modes() {
        return Err(Error::Validation(format!("mode index {j} out of range")));
    }
    check_alpha(alpha)?;
    let mut t = Vec::new();
    for s in 0..basis.dim() {
        if let Some(l) = basis.lowered(s, j) {
            let amp = (basis.occupation(s)[j] as f64).sqrt() / alpha;
            t.push((l, s, Complex64::new(amp, 0.0)));
        }
    }
    let a = SparseOperator::from_triplets(basis.dim(), t)?;
    let adag = a.adjoint();
    Ok((a, adag))
}

/// Diagonal `(sum_j n_j) / alpha^2`.
pub fn number_operator(basis: &FockBasis, alpha: f64) -> Result<SparseOperator> {
    check_alpha(alpha)?;
    let diag: Vec<Complex64> = (0..basis.dim())
        .map(|s| Complex64::new(basis.total(s) as f64 / (alpha * alpha), 0.0))
        .collect();
    SparseOperator::diagonal(&diag).mark_hermitian(0.0)
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 {
        Ok(())
    } else {
        Err(Error::Validation(format!("alpha must be positive, got {alpha}")))
    }
}
