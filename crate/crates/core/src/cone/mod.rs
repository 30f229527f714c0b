//! Garding-cone sampling and concavity-inequality margins.
//!
//! The feasible region for all experiments is
//! `Gamma_k ∩ {lambda_n > -A} ∩ {lo <= sigma_k <= hi}`. The sigma band
//! replaces a normalization `sigma_k = 1`: the floor `-A` is not scale
//! invariant, so rescaling a spectrum would change which constraints bind.

mod margins;
mod probe;
mod sampler;
mod search;

pub use margins::{
    algebraic_fact, iqc0_coefficient, iqc0_margin, key_form_matrix, key_margin, lu_margin, worst_xi, zhang_margin,
    AlgebraicFact, InequalityCase, MarginReport,
};
pub use probe::{semiconvex_probe, ProbeReport};
pub use sampler::{random_unit_real_xi, random_unit_xi, sample_gamma_k, sample_pinned, HitAndRun};
pub use search::{
    counterexample_search, level_statistics, threshold_search, LevelStats, SearchConfig, SearchOutcome, ThresholdReport,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symm::elementary_all;

/// A margin below this counts as a violation.
pub const VIOLATION_TOL: f64 = 1e-10;

/// Default `K = (k + 1)^2`.
pub fn default_big_k(k: usize) -> f64 {
    ((k + 1) * (k + 1)) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeConstraints {
    pub n: usize,
    pub k: usize,
    /// Semi-convexity floor: every eigenvalue must exceed `-floor`.
    pub floor: f64,
    /// Admissible range `[lo, hi]` for `sigma_k`.
    pub sigma_band: [f64; 2],
}

impl ConeConstraints {
    pub fn new(n: usize, k: usize, floor: f64, sigma_band: [f64; 2]) -> Result<Self> {
        let c = Self {
            n,
            k,
            floor,
            sigma_band,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Parameter(format!("n must be at least 2, got {}", self.n)));
        }
        if self.k < 1 || self.k > self.n {
            return Err(Error::Parameter(format!("need 1 <= k <= n, got k = {}, n = {}", self.k, self.n)));
        }
        if !(self.floor > 0.0 && self.floor.is_finite()) {
            return Err(Error::Parameter(format!("floor A must be positive, got {}", self.floor)));
        }
        let [lo, hi] = self.sigma_band;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::Infeasible(format!("sigma band [{lo}, {hi}] must satisfy 0 < lo <= hi")));
        }
        Ok(())
    }

    /// Geometric midpoint of the band.
    pub fn band_mid(&self) -> f64 {
        (self.sigma_band[0] * self.sigma_band[1]).sqrt()
    }

    /// Band membership with a relative slack of `1e-12` for values that were
    /// bisected onto an edge.
    pub fn in_band(&self, sigma_k: f64) -> bool {
        let [lo, hi] = self.sigma_band;
        sigma_k >= lo * (1.0 - 1e-12) && sigma_k <= hi * (1.0 + 1e-12)
    }

    /// Full constraint check on an unsorted vector. The band test allows a
    /// rounding slack scaled by `sigma_k(|lambda|)`, so the verdict does not
    /// depend on the order of the entries under heavy cancellation.
    pub fn admits(&self, values: &[f64]) -> bool {
        if values.len() != self.n || values.iter().any(|v| !v.is_finite()) {
            return false;
        }
        if values.iter().any(|&v| v <= -self.floor) {
            return false;
        }
        let coeffs = elementary_all(values, self.k);
        if !(1..=self.k).all(|i| coeffs[i] > 0.0) {
            return false;
        }
        let abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
        let slack = 1e-12 * elementary_all(&abs, self.k)[self.k];
        let [lo, hi] = self.sigma_band;
        let s = coeffs[self.k];
        self.in_band(s) || (s >= lo - slack && s <= hi + slack)
    }
}
