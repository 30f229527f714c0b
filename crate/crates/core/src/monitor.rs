//! Maximum-principle diagnostics on a computed solution: the test function
//! `Q = log lambda_1 + exp(N |Du|^2) + exp(Lambda (T - u))`, its discrete
//! maximum, the gradient there, and the sign condition on the weights.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solve::{chi_at, wirtinger, ProblemSpec, TorusSolution};
use crate::symm::{hermitian_eigen, HermitianMatrix, Spectrum};

/// Headroom factor applied to the automatically chosen `Lambda`.
pub const LAMBDA_HEADROOM: f64 = 1.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestFunctionParams {
    /// Exponent `N` of `exp(N s)`.
    #[serde(rename = "N", default = "default_n_exp")]
    pub n_exp: f64,
    /// Exponent `Lambda` of `exp(Lambda (T - t))`; chosen automatically
    /// when absent.
    #[serde(rename = "Lambda", default)]
    pub lambda: Option<f64>,
}

fn default_n_exp() -> f64 {
    2.0
}

impl Default for TestFunctionParams {
    fn default() -> Self {
        Self {
            n_exp: default_n_exp(),
            lambda: None,
        }
    }
}

/// Parameters after `S`, `T` and `Lambda` are fixed from the solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolvedParams {
    #[serde(rename = "N")]
    pub n_exp: f64,
    #[serde(rename = "Lambda")]
    pub lambda: f64,
    pub lambda_auto: bool,
    /// `sup |Du|^2 + 1`.
    #[serde(rename = "S")]
    pub s_const: f64,
    /// `sup |u| + 1`.
    #[serde(rename = "T")]
    pub t_const: f64,
}

/// Smallest `Lambda` with `Lambda (T - sup u) >= N S + log 2`, also above
/// `N`, times [`LAMBDA_HEADROOM`]. Since `s < S` and `T - t >= T - sup u`
/// everywhere, this makes the sign condition hold at every point.
pub fn auto_lambda(n_exp: f64, s_const: f64, t_const: f64, sup_u: f64) -> f64 {
    let needed = (n_exp * s_const + std::f64::consts::LN_2) / (t_const - sup_u);
    LAMBDA_HEADROOM * needed.max(n_exp)
}

impl TestFunctionParams {
    pub fn resolve(&self, u: &[f64], grad_sq: &[f64]) -> Result<ResolvedParams> {
        if !(self.n_exp > 1.0 && self.n_exp.is_finite()) {
            return Err(Error::Parameter(format!("N must exceed 1, got {}", self.n_exp)));
        }
        let s_const = grad_sq.iter().fold(0.0f64, |m, &v| m.max(v)) + 1.0;
        let t_const = u.iter().fold(0.0f64, |m, v| m.max(v.abs())) + 1.0;
        let sup_u = u.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let (lambda, lambda_auto) = match self.lambda {
            Some(l) if l > self.n_exp && l.is_finite() => (l, false),
            Some(l) => return Err(Error::Parameter(format!("Lambda must exceed N = {}, got {l}", self.n_exp))),
            None => (auto_lambda(self.n_exp, s_const, t_const, sup_u), true),
        };
        Ok(ResolvedParams {
            n_exp: self.n_exp,
            lambda,
            lambda_auto,
            s_const,
            t_const,
        })
    }
}

/// `lambda~_1 = lambda_1`, `lambda~_i = lambda_i - 1` for `i > 1`: the
/// spectrum of `chi - B` with `B = diag(0, 1, ..., 1)` in the eigenframe of
/// `chi`.
pub fn perturbed_lambda(chi: &HermitianMatrix) -> Result<Spectrum> {
    let eig = hermitian_eigen(chi)?;
    Ok(perturb_spectrum(&eig.spectrum))
}

pub fn perturb_spectrum(spectrum: &Spectrum) -> Spectrum {
    let values: Vec<f64> = spectrum
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| if i == 0 { v } else { v - 1.0 })
        .collect();
    Spectrum::new(values).expect("shifting the tail down keeps the order")
}

/// Index and value of the maximum, ties going to the smallest index.
pub fn argmax(values: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best
}

/// Pointwise fields needed by the test function.
struct Fields {
    lambda1: Vec<f64>,
    grad_sq: Vec<f64>,
    chi: Vec<HermitianMatrix>,
}

fn fields(solution: &TorusSolution, spec: &ProblemSpec) -> Result<Fields> {
    let grid = &solution.grid;
    spec.check_grid(grid)?;
    let u = &solution.u;
    let d = wirtinger(u, grid)?;
    let mut out = Fields {
        lambda1: Vec::with_capacity(grid.len()),
        grad_sq: Vec::with_capacity(grid.len()),
        chi: Vec::with_capacity(grid.len()),
    };
    for idx in 0..grid.len() {
        let chi = chi_at(spec, idx, u[idx], d.first(idx), d.second(idx));
        let l1 = hermitian_eigen(&chi)?.spectrum.largest();
        if !(l1 > 0.0) {
            return Err(Error::NonPositiveEigenvalue { index: idx, value: l1 });
        }
        out.lambda1.push(l1);
        out.grad_sq.push(d.grad_sq(idx));
        out.chi.push(chi);
    }
    Ok(out)
}

fn q_field(u: &[f64], f: &Fields, p: &ResolvedParams) -> Vec<f64> {
    (0..u.len())
        .map(|i| f.lambda1[i].ln() + (p.n_exp * f.grad_sq[i]).exp() + (p.lambda * (p.t_const - u[i])).exp())
        .collect()
}

/// `Q` at every grid point, together with the resolved parameters.
pub fn build_q(solution: &TorusSolution, spec: &ProblemSpec, params: &TestFunctionParams) -> Result<(Vec<f64>, ResolvedParams)> {
    let f = fields(solution, spec)?;
    let resolved = params.resolve(&solution.u, &f.grad_sq)?;
    Ok((q_field(&solution.u, &f, &resolved), resolved))
}

/// `phi''(s) - 2 phi'(s)^2 / varphi(t)` for `phi(s) = exp(N s)`,
/// `varphi(t) = exp(Lambda (T - t))`.
pub fn sign_condition(p: &ResolvedParams, s: f64, t: f64) -> f64 {
    let n = p.n_exp;
    n * n * (n * s).exp() - 2.0 * n * n * (2.0 * n * s).exp() / (p.lambda * (p.t_const - t)).exp()
}

/// The three terms of the final bound with unit constants:
/// `-C varphi'(u) = Lambda varphi`, `C phi'(|Du|^2) = N phi`, and `C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinalBoundTerms {
    pub neg_c_varphi_prime: f64,
    pub c_phi_prime: f64,
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorReport {
    pub params: ResolvedParams,
    pub argmax_index: Vec<usize>,
    pub argmax_flat: usize,
    pub q_max: f64,
    /// Sup-norm over the real axes of the central-difference gradient of
    /// `Q` at the argmax.
    pub grad_q_norm: f64,
    pub lambda1_at_max: f64,
    pub grad_sq_at_max: f64,
    pub u_at_max: f64,
    pub sign_condition: f64,
    /// `Lambda (T - t) - (N s + log 2)` at the argmax; positive whenever the
    /// sufficient condition for the sign condition holds there.
    pub sufficient_margin: f64,
    pub perturbed_spectrum: Spectrum,
    /// Smallest `lambda~_1 - lambda~_2` over all grid points.
    pub min_perturbed_gap: f64,
    pub final_bound_terms: FinalBoundTerms,
}

/// Locates the discrete maximum of `Q` and evaluates the diagnostics there.
pub fn critical_check(solution: &TorusSolution, spec: &ProblemSpec, params: &TestFunctionParams) -> Result<MonitorReport> {
    let grid = &solution.grid;
    let u = &solution.u;
    let f = fields(solution, spec)?;
    let p = params.resolve(u, &f.grad_sq)?;
    let q = q_field(u, &f, &p);
    let (z0, q_max) = argmax(&q).expect("grid is non-empty");
    let grad_q_norm = (0..grid.axes()).fold(0.0f64, |m, a| m.max(grid.d1(&q, z0, a).abs()));
    let (s, t) = (f.grad_sq[z0], u[z0]);
    let mut min_gap = f64::INFINITY;
    let mut perturbed = None;
    for (idx, chi) in f.chi.iter().enumerate() {
        let lt = perturbed_lambda(chi)?;
        min_gap = min_gap.min(lt.values()[0] - lt.values()[1]);
        if idx == z0 {
            perturbed = Some(lt);
        }
    }
    let varphi = (p.lambda * (p.t_const - t)).exp();
    Ok(MonitorReport {
        params: p,
        argmax_index: grid.multi_index(z0),
        argmax_flat: z0,
        q_max,
        grad_q_norm,
        lambda1_at_max: f.lambda1[z0],
        grad_sq_at_max: s,
        u_at_max: t,
        sign_condition: sign_condition(&p, s, t),
        sufficient_margin: p.lambda * (p.t_const - t) - (p.n_exp * s + std::f64::consts::LN_2),
        perturbed_spectrum: perturbed.expect("z0 is a grid point"),
        min_perturbed_gap: min_gap,
        final_bound_terms: FinalBoundTerms {
            neg_c_varphi_prime: p.lambda * varphi,
            c_phi_prime: p.n_exp * (p.n_exp * s).exp(),
            constant: 1.0,
        },
    })
}
