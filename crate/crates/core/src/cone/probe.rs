use serde::{Deserialize, Serialize};

use super::sampler::HitAndRun;
use crate::error::{Error, Result};
use crate::oracle::binomial;
use crate::symm::elementary_all;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub samples: usize,
    /// `None` when no samples were requested.
    pub min_lambda_n: Option<f64>,
}

/// Samples `lambda in Gamma_k` with `sigma_{k+1}(lambda) > -A` and
/// `sigma_k(lambda) <= sigma_k_cap`, and reports the smallest eigenvalue
/// seen. Evidence that the `sigma_{k+1}` floor forces semi-convexity.
pub fn semiconvex_probe(n: usize, k: usize, floor: f64, sigma_k_cap: f64, count: usize, seed: u64) -> Result<ProbeReport> {
    if k < 1 || k + 1 > n {
        return Err(Error::Parameter(format!("need 1 <= k and k + 1 <= n, got k = {k}, n = {n}")));
    }
    if !(floor > 0.0 && sigma_k_cap > 0.0) {
        return Err(Error::Infeasible(format!(
            "floor ({floor}) and sigma_k cap ({sigma_k_cap}) must be positive"
        )));
    }
    if count == 0 {
        return Ok(ProbeReport {
            samples: 0,
            min_lambda_n: None,
        });
    }
    let feasible = |x: &[f64]| {
        let c = elementary_all(x, k + 1);
        (1..=k).all(|i| c[i] > 0.0) && c[k] <= sigma_k_cap && c[k + 1] > -floor
    };
    let start = (0.5 * sigma_k_cap / binomial(n, k)).powf(1.0 / k as f64);
    let mut walk = HitAndRun::new(vec![start; n], (0..n).collect(), start, seed, feasible, Some)?;
    for _ in 0..50 {
        walk.step();
    }
    let mut min = f64::INFINITY;
    for _ in 0..count {
        let x = walk.draw(5);
        min = x.iter().fold(min, |m, &v| m.min(v));
    }
    Ok(ProbeReport {
        samples: count,
        min_lambda_n: Some(min),
    })
}
