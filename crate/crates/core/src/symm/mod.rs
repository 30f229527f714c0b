//! Elementary symmetric functions of eigenvalues and their derivatives.
//!
//! All evaluations go through the coefficient recurrence of
//! `prod_i (1 + lambda_i t)`, which costs `O(nk)` and never enumerates
//! subsets. Indices are zero-based throughout: `sigma_excl(k, 0)` drops the
//! largest eigenvalue.
//!
//! The second-order spectral form uses the closed-form divided difference
//! `(f_p - f_q) / (lambda_p - lambda_q) = -sigma_{k-2}(lambda | pq)`, so it
//! stays defined when eigenvalues coincide. This is the continuous extension
//! of the distinct-eigenvalue formula.

mod hermitian;
mod jacobi;
mod spectral;

pub use hermitian::{CMatrix, HermitianMatrix};
pub use jacobi::{hermitian_eigen, EigenDecomposition, JACOBI_MAX_SWEEPS, JACOBI_REL_TOL};
pub use spectral::{matrix_sigma_first, spectral_second_form, spectral_second_form_complex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `sigma_k` of an arbitrary slice. Returns 1 for `k == 0` and 0 for
/// `k < 0` or `k > len`.
pub fn elementary(values: &[f64], k: isize) -> f64 {
    if k < 0 || k as usize > values.len() {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let k = k as usize;
    let mut coeffs = vec![0.0; k + 1];
    coeffs[0] = 1.0;
    for (seen, &x) in values.iter().enumerate() {
        let top = k.min(seen + 1);
        for j in (1..=top).rev() {
            coeffs[j] += x * coeffs[j - 1];
        }
    }
    coeffs[k]
}

/// All of `sigma_0, ..., sigma_kmax` of a slice in one pass.
pub fn elementary_all(values: &[f64], kmax: usize) -> Vec<f64> {
    let mut coeffs = vec![0.0; kmax + 1];
    coeffs[0] = 1.0;
    for (seen, &x) in values.iter().enumerate() {
        let top = kmax.min(seen + 1);
        for j in (1..=top).rev() {
            coeffs[j] += x * coeffs[j - 1];
        }
    }
    coeffs
}

fn elementary_skipping(values: &[f64], k: isize, skip: &[usize]) -> f64 {
    if k < 0 {
        return 0.0;
    }
    let k = k as usize;
    let mut coeffs = vec![0.0; k + 1];
    coeffs[0] = 1.0;
    let mut seen = 0;
    for (idx, &x) in values.iter().enumerate() {
        if skip.contains(&idx) {
            continue;
        }
        seen += 1;
        let top = k.min(seen);
        for j in (1..=top).rev() {
            coeffs[j] += x * coeffs[j - 1];
        }
    }
    coeffs[k]
}

/// Result of a Garding cone membership test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Membership {
    pub inside: bool,
    /// Smallest `i` in `1..=k` with `sigma_i <= 0`.
    pub first_failure: Option<usize>,
}

/// Membership of an unsorted vector in `Gamma_k`.
pub fn gamma_membership_of(values: &[f64], k: usize) -> Membership {
    let coeffs = elementary_all(values, k);
    let first_failure = (1..=k).find(|&i| !(coeffs[i] > 0.0));
    Membership {
        inside: first_failure.is_none(),
        first_failure,
    }
}

/// Eigenvalues sorted non-increasingly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Spectrum {
    values: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Spectrum {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Spectrum::new(values)
    }
}

impl From<Spectrum> for Vec<f64> {
    fn from(s: Spectrum) -> Self {
        s.values
    }
}

impl Spectrum {
    /// Wraps already sorted values.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidSpectrum(format!(
                "need at least 2 entries, got {}",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidSpectrum(format!("non-finite entry {bad}")));
        }
        if let Some(i) = (0..values.len() - 1).find(|&i| values[i] < values[i + 1]) {
            return Err(Error::InvalidSpectrum(format!(
                "entries {i} and {} out of order",
                i + 1
            )));
        }
        Ok(Self { values })
    }

    /// Sorts non-increasingly (stable, so tied entries keep their order).
    pub fn from_unsorted(mut values: Vec<f64>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidSpectrum(format!("non-finite entry {bad}")));
        }
        values.sort_by(|a, b| b.total_cmp(a));
        Self::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn largest(&self) -> f64 {
        self.values[0]
    }

    pub fn smallest(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn sigma(&self, k: usize) -> f64 {
        elementary(&self.values, k as isize)
    }

    /// `sigma_k` with signed index, following the `sigma_{k<0} = 0` convention.
    pub fn sigma_signed(&self, k: isize) -> f64 {
        elementary(&self.values, k)
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.values.len() {
            return Err(Error::Index {
                index: i,
                len: self.values.len(),
            });
        }
        Ok(())
    }

    /// `sigma_k(lambda | i)`.
    pub fn sigma_excl(&self, k: isize, i: usize) -> Result<f64> {
        self.check_index(i)?;
        Ok(elementary_skipping(&self.values, k, &[i]))
    }

    /// `sigma_k(lambda | ij)`.
    pub fn sigma_excl2(&self, k: isize, i: usize, j: usize) -> Result<f64> {
        self.check_index(i)?;
        self.check_index(j)?;
        if i == j {
            return Err(Error::RepeatedIndex(i));
        }
        Ok(elementary_skipping(&self.values, k, &[i, j]))
    }

    /// `(sigma_{k-1}(lambda|1), ..., sigma_{k-1}(lambda|n))`, the diagonal of
    /// `d sigma_k / d chi` in an eigenframe.
    pub fn sigma_grad(&self, k: usize) -> Vec<f64> {
        (0..self.values.len())
            .map(|i| elementary_skipping(&self.values, k as isize - 1, &[i]))
            .collect()
    }

    /// `sigma_{k-2}(lambda | pq)`, the `(pp, qq)` second derivative.
    pub fn sigma_hess_offdiag(&self, k: usize, p: usize, q: usize) -> Result<f64> {
        if k < 2 {
            return Err(Error::Parameter(format!("second derivative needs k >= 2, got {k}")));
        }
        self.sigma_excl2(k as isize - 2, p, q)
    }

    /// Trace of the linearized operator, `(n - k + 1) sigma_{k-1}`.
    pub fn trace_f(&self, k: usize) -> f64 {
        let n = self.values.len();
        if k == 0 || k > n {
            return 0.0;
        }
        (n - k + 1) as f64 * self.sigma(k - 1)
    }

    pub fn gamma_membership(&self, k: usize) -> Membership {
        gamma_membership_of(&self.values, k)
    }
}
