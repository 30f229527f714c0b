//! Margin evaluators: left-hand side minus right-hand side of each
//! concavity inequality. A non-negative margin means the inequality holds
//! for that case.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symm::{hermitian_eigen, HermitianMatrix, Spectrum};

/// One configuration of the key inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityCase {
    pub spectrum: Spectrum,
    /// Third-derivative slot `omega_{p p-bar j}` for a fixed `j`.
    pub xi: Vec<Complex64>,
    pub k: usize,
    pub big_k: f64,
    pub eps0: f64,
    pub floor: f64,
}

impl InequalityCase {
    pub fn new(spectrum: Spectrum, xi: Vec<Complex64>, k: usize, big_k: f64, eps0: f64, floor: f64) -> Result<Self> {
        let case = Self {
            spectrum,
            xi,
            k,
            big_k,
            eps0,
            floor,
        };
        case.validate()?;
        Ok(case)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.spectrum.len();
        if self.xi.len() != n {
            return Err(Error::Dimension {
                expected: n,
                actual: self.xi.len(),
            });
        }
        if self.k < 1 || self.k > n {
            return Err(Error::Parameter(format!("need 1 <= k <= n, got k = {}", self.k)));
        }
        if !(self.eps0 > 0.0 && self.eps0 < 1.0) {
            return Err(Error::Parameter(format!("eps0 must lie in (0, 1), got {}", self.eps0)));
        }
        let membership = self.spectrum.gamma_membership(self.k);
        if !membership.inside {
            return Err(Error::Parameter(format!(
                "spectrum outside Gamma_{}: sigma_{} <= 0",
                self.k,
                membership.first_failure.unwrap_or(self.k)
            )));
        }
        if self.spectrum.smallest() <= -self.floor {
            return Err(Error::Parameter(format!(
                "smallest eigenvalue {} violates the floor -{}",
                self.spectrum.smallest(),
                self.floor
            )));
        }
        Ok(())
    }
}

/// The four terms of the key inequality and their combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginReport {
    /// `-sum_{p != q} sigma_k^{pp,qq} xi_p conj(xi_q) / sigma_k`.
    pub t1: f64,
    /// `K |D sigma_k|^2 / sigma_k^2`.
    pub t2: f64,
    /// `(1 - eps0) sum_{i > 1} sigma_k^{ii} |xi_i|^2 / (lambda_1 sigma_k)`.
    pub t3: f64,
    /// `(1 - eps0) sigma_k^{11} |xi_1|^2 / (lambda_1 sigma_k)`.
    pub rhs: f64,
    pub margin: f64,
    pub imag_residue: f64,
}

fn positive_sigma(spectrum: &Spectrum, k: usize) -> Result<f64> {
    let s = spectrum.sigma(k);
    if s > 0.0 {
        Ok(s)
    } else {
        Err(Error::NonPositiveSigma { k, value: s })
    }
}

fn check_len(spectrum: &Spectrum, len: usize) -> Result<()> {
    if spectrum.len() != len {
        return Err(Error::Dimension {
            expected: spectrum.len(),
            actual: len,
        });
    }
    Ok(())
}

/// `-sum_{p != q} sigma_{k-2}(lambda|pq) xi_p conj(xi_q)`, complex.
fn cross_sum(spectrum: &Spectrum, k: usize, xi: &[Complex64]) -> Complex64 {
    let n = spectrum.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for p in 0..n {
        for q in 0..n {
            if p != q {
                let coeff = spectrum.sigma_excl2(k as isize - 2, p, q).expect("indices in range");
                acc -= coeff * xi[p] * xi[q].conj();
            }
        }
    }
    acc
}

pub fn key_margin(case: &InequalityCase) -> Result<MarginReport> {
    let spectrum = &case.spectrum;
    check_len(spectrum, case.xi.len())?;
    let k = case.k;
    let sk = positive_sigma(spectrum, k)?;
    let lambda1 = spectrum.largest();
    let f = spectrum.sigma_grad(k);
    let xi = &case.xi;

    let cross = cross_sum(spectrum, k, xi);
    let t1 = cross.re / sk;
    let d_sigma: Complex64 = f.iter().zip(xi).map(|(fp, x)| fp * x).sum();
    let t2 = case.big_k * d_sigma.norm_sqr() / (sk * sk);
    let weight = (1.0 - case.eps0) / (lambda1 * sk);
    let t3 = weight * (1..f.len()).map(|i| f[i] * xi[i].norm_sqr()).sum::<f64>();
    let rhs = weight * f[0] * xi[0].norm_sqr();
    Ok(MarginReport {
        t1,
        t2,
        t3,
        rhs,
        margin: t1 + t2 + t3 - rhs,
        imag_residue: (cross.im / sk).abs(),
    })
}

/// Real symmetric `M` with `key_margin = xi^H M xi`, row-major.
///
/// This is a second evaluation route for the key margin, and its smallest
/// eigenvalue is the worst margin over unit `xi` for a fixed spectrum.
pub fn key_form_matrix(spectrum: &Spectrum, k: usize, big_k: f64, eps0: f64) -> Result<Vec<f64>> {
    let n = spectrum.len();
    let sk = positive_sigma(spectrum, k)?;
    let f = spectrum.sigma_grad(k);
    let lambda1 = spectrum.largest();
    let mut m = vec![0.0; n * n];
    for p in 0..n {
        for q in 0..n {
            let mut v = big_k * f[p] * f[q] / (sk * sk);
            if p != q {
                v -= spectrum.sigma_excl2(k as isize - 2, p, q)? / sk;
            }
            m[p * n + q] = v;
        }
    }
    let weight = (1.0 - eps0) / (lambda1 * sk);
    m[0] -= weight * f[0];
    for i in 1..n {
        m[i * n + i] += weight * f[i];
    }
    Ok(m)
}

/// Smallest eigenvalue of [`key_form_matrix`] and a unit minimizer.
pub fn worst_xi(spectrum: &Spectrum, k: usize, big_k: f64, eps0: f64) -> Result<(f64, Vec<Complex64>)> {
    let n = spectrum.len();
    let m = key_form_matrix(spectrum, k, big_k, eps0)?;
    let h = HermitianMatrix::from_upper(n, |i, j| {
        Complex64::new(0.5 * (m[i * n + j] + m[j * n + i]), 0.0)
    });
    let eig = hermitian_eigen(&h)?;
    let last = n - 1;
    let xi = (0..n).map(|i| eig.basis[(i, last)]).collect();
    Ok((eig.spectrum.smallest(), xi))
}

fn real_cross_sum(spectrum: &Spectrum, k: usize, xi: &[f64]) -> f64 {
    let n = spectrum.len();
    let mut acc = 0.0;
    for p in 0..n {
        for q in 0..n {
            if p != q {
                acc -= spectrum.sigma_excl2(k as isize - 2, p, q).expect("indices in range") * xi[p] * xi[q];
            }
        }
    }
    acc
}

/// Margin of the real-vector inequality with a `delta0 / lambda_1` weight
/// on indices past `l` and right-hand side `(1 - eps) sigma_k xi_1^2 /
/// lambda_1^2`. `l` counts leading entries excluded from the weighted sum,
/// so `l = 1` sums over every index but the first.
pub fn lu_margin(spectrum: &Spectrum, xi: &[f64], k: usize, delta0: f64, eps: f64, l: usize) -> Result<f64> {
    check_len(spectrum, xi.len())?;
    let sk = positive_sigma(spectrum, k)?;
    let f = spectrum.sigma_grad(k);
    let lambda1 = spectrum.largest();
    let cross = real_cross_sum(spectrum, k, xi);
    let dot: f64 = f.iter().zip(xi).map(|(a, b)| a * b).sum();
    let tail: f64 = (l.min(xi.len())..xi.len()).map(|i| f[i] * xi[i] * xi[i]).sum();
    let lhs = cross + dot * dot / sk + delta0 * tail / lambda1;
    let rhs = (1.0 - eps) * sk * xi[0] * xi[0] / (lambda1 * lambda1);
    Ok(lhs - rhs)
}

/// Margin of the real-vector inequality with weight `2 / (lambda_1 + A + 1)`
/// on the tail and right-hand side `(1 + delta0) sigma_k^{11} xi_1^2 / lambda_1`.
pub fn zhang_margin(spectrum: &Spectrum, xi: &[f64], k: usize, big_k: f64, floor: f64, delta0: f64) -> Result<f64> {
    check_len(spectrum, xi.len())?;
    let sk = positive_sigma(spectrum, k)?;
    let f = spectrum.sigma_grad(k);
    let lambda1 = spectrum.largest();
    let cross = real_cross_sum(spectrum, k, xi);
    let dot: f64 = f.iter().zip(xi).map(|(a, b)| a * b).sum();
    let tail: f64 = (1..xi.len()).map(|i| f[i] * xi[i] * xi[i]).sum();
    let lhs = cross + big_k * dot * dot / sk + 2.0 * tail / (lambda1 + floor + 1.0);
    let rhs = (1.0 + delta0) * f[0] * xi[0] * xi[0] / lambda1;
    Ok(lhs - rhs)
}

/// `(k + 2)^2 / ((k + 1)(k + 3))`.
pub fn iqc0_coefficient(k: usize) -> f64 {
    let k = k as f64;
    (k + 2.0).powi(2) / ((k + 1.0) * (k + 3.0))
}

/// Margin of the intermediate bound used for large `lambda_1`:
/// `t1 + t2 - [c(k) |xi_1|^2 / lambda_1^2
///   - C lambda_1^{-1/(k-1)} sum_{i > 1} sigma_k^{ii} |xi_i|^2 / (lambda_1 sigma_k)]`.
/// The constant `C` is left to the caller.
pub fn iqc0_margin(case: &InequalityCase, c: f64) -> Result<f64> {
    if case.k < 2 {
        return Err(Error::Parameter("iqc0 margin needs k >= 2".into()));
    }
    if c < 0.0 {
        return Err(Error::Parameter(format!("constant C must be non-negative, got {c}")));
    }
    let report = key_margin(case)?;
    let spectrum = &case.spectrum;
    let sk = spectrum.sigma(case.k);
    let lambda1 = spectrum.largest();
    let f = spectrum.sigma_grad(case.k);
    let tail: f64 = (1..f.len()).map(|i| f[i] * case.xi[i].norm_sqr()).sum::<f64>() / (lambda1 * sk);
    let decay = lambda1.powf(-1.0 / (case.k as f64 - 1.0));
    let bound = iqc0_coefficient(case.k) * case.xi[0].norm_sqr() / (lambda1 * lambda1) - c * decay * tail;
    Ok(report.t1 + report.t2 - bound)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgebraicFact {
    /// `a^2 + (1 - eps0)(1 + a)^2`.
    pub value: f64,
    /// `(1 - eps0) / (2 - eps0)`, attained at `a = -(1 - eps0) / (2 - eps0)`.
    pub lower_bound: f64,
}

pub fn algebraic_fact(eps0: f64, a: f64) -> AlgebraicFact {
    let c = 1.0 - eps0;
    AlgebraicFact {
        value: a * a + c * (1.0 + a) * (1.0 + a),
        lower_bound: c / (2.0 - eps0),
    }
}
