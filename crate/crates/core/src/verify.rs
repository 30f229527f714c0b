//! Property suites behind the `verify` command. Each property records its
//! sample count, the worst deviation observed and the tolerance it is held
//! to; a suite passes when every property does.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cone::{
    algebraic_fact, default_big_k, key_margin, random_unit_xi, sample_gamma_k, sample_pinned, threshold_search,
    ConeConstraints, InequalityCase,
};
use crate::error::{Error, Result};
use crate::oracle::{
    binomial, central_difference, random_hermitian, random_unitary, second_difference_five_point, subset_sigma, subset_sigma_abs,
};
use crate::solve::{
    assemble_chi, linearize_apply, manufactured_problem, newton_solve, residual, ManufacturedParams, NewtonConfig,
    TorusGrid,
};
use crate::symm::{
    elementary, hermitian_eigen, matrix_sigma_first, spectral_second_form, CMatrix, HermitianMatrix, Spectrum,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Symm,
    Spectral,
    Inequality,
    Algebraic,
    Solver,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Symm, Suite::Spectral, Suite::Inequality, Suite::Algebraic, Suite::Solver];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Symm => "symm",
            Suite::Spectral => "spectral",
            Suite::Inequality => "inequality",
            Suite::Algebraic => "algebraic",
            Suite::Solver => "solver",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown suite `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyResult {
    pub name: String,
    pub samples: usize,
    pub worst_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub seed: u64,
    pub count: usize,
    pub properties: Vec<PropertyResult>,
    pub passed: bool,
}

/// Running worst-deviation tracker for one property.
struct Tally {
    name: &'static str,
    samples: usize,
    worst: f64,
    tolerance: f64,
}

impl Tally {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            samples: 0,
            worst: 0.0,
            tolerance,
        }
    }

    fn record(&mut self, deviation: f64) {
        self.samples += 1;
        // NaN counts as a failure
        if !(deviation <= self.worst) {
            self.worst = if deviation.is_nan() { f64::INFINITY } else { deviation };
        }
    }

    fn finish(self) -> PropertyResult {
        PropertyResult {
            name: self.name.to_string(),
            samples: self.samples,
            worst_deviation: self.worst,
            tolerance: self.tolerance,
            passed: self.worst <= self.tolerance,
        }
    }
}

/// Runs one suite. `count` scales the sample sizes as described per suite.
pub fn run_suite(suite: Suite, seed: u64, count: usize) -> Result<VerifyReport> {
    let properties = match suite {
        Suite::Symm => symm_suite(seed, count)?,
        Suite::Spectral => spectral_suite(seed, count)?,
        Suite::Inequality => inequality_suite(seed, count)?,
        Suite::Algebraic => algebraic_suite(seed, count),
        Suite::Solver => solver_suite(seed, count)?,
    };
    let passed = properties.iter().all(|p| p.passed);
    Ok(VerifyReport {
        suite,
        seed,
        count,
        properties,
        passed,
    })
}

/// The `(n, k)` configurations used for cone properties.
pub const CONE_CONFIGS: [(usize, usize); 4] = [(3, 2), (4, 2), (4, 3), (5, 3)];

/// `(sigma_k / sigma_l)^(1 / (k - l))`.
fn quotient_root(values: &[f64], k: usize, l: usize) -> f64 {
    (elementary(values, k as isize) / elementary(values, l as isize)).powf(1.0 / (k - l) as f64)
}

/// `count` random vectors: oracle equivalence and the identities on them;
/// `count` cone samples per configuration for the inequalities.
fn symm_suite(seed: u64, count: usize) -> Result<Vec<PropertyResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut oracle = Tally::new("sigma_vs_subset_enumeration", 1e-12);
    let mut expansion = Tally::new("expansion_identity", 1e-11);
    let mut sum = Tally::new("gradient_sum_identity", 1e-12);
    for _ in 0..count {
        let n = rng.random_range(2..=10);
        let values: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let spectrum = Spectrum::from_unsorted(values.clone())?;
        let sorted = spectrum.values();
        for k in 0..=n {
            // error relative to sigma_k(|lambda|), the conditioning scale of the sum
            let scale = subset_sigma_abs(&values, k).max(f64::MIN_POSITIVE);
            oracle.record((elementary(&values, k as isize) - subset_sigma(&values, k)).abs() / scale);
            if k >= 1 {
                let ki = k as isize;
                let sk = spectrum.sigma(k);
                for i in 0..n {
                    let rhs = spectrum.sigma_excl(ki, i)? + sorted[i] * spectrum.sigma_excl(ki - 1, i)?;
                    expansion.record((sk - rhs).abs() / scale);
                }
                let total: f64 = spectrum.sigma_grad(k).iter().sum();
                let want = (n - k + 1) as f64 * spectrum.sigma(k - 1);
                let s2 = subset_sigma_abs(&values, k - 1).max(f64::MIN_POSITIVE) * n as f64;
                sum.record((total - want).abs().max((spectrum.trace_f(k) - want).abs()) / s2);
            }
        }
    }

    let mut positive = Tally::new("grad_positive_in_cone", 0.0);
    let mut ordered = Tally::new("grad_ordered_in_cone", 1e-12);
    let mut dominance = Tally::new("lambda1_grad1_dominance", 1e-12);
    let mut newton_mac = Tally::new("newton_maclaurin", 1e-12);
    let mut derivative_sum = Tally::new("quotient_derivative_sum", 1e-4);
    let mut concavity = Tally::new("quotient_midpoint_concavity", 1e-10);
    let per_config = count;
    for (ci, &(n, k)) in CONE_CONFIGS.iter().enumerate() {
        let constraints = ConeConstraints::new(n, k, 10.0, [0.5, 2.0])?;
        let samples = sample_gamma_k(&constraints, per_config, seed.wrapping_add(ci as u64))?;
        let mut pair_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        for (si, s) in samples.iter().enumerate() {
            let v = s.values();
            let grad = s.sigma_grad(k);
            positive.record(if grad.iter().all(|&g| g > 0.0) { 0.0 } else { 1.0 });
            let gscale = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
            ordered.record(grad.windows(2).map(|w| (w[0] - w[1]).max(0.0)).fold(0.0, f64::max) / gscale);
            let lhs = v[0] * grad[0];
            let rhs = k as f64 / n as f64 * s.sigma(k);
            dominance.record((rhs - lhs).max(0.0) / rhs);

            for m in 1..=k {
                for l in 0..m {
                    for r in 1..=m {
                        for q in 0..r.min(l + 1) {
                            let a = ((s.sigma(m) / binomial(n, m)) / (s.sigma(l) / binomial(n, l))).powf(1.0 / (m - l) as f64);
                            let b = ((s.sigma(r) / binomial(n, r)) / (s.sigma(q) / binomial(n, q))).powf(1.0 / (r - q) as f64);
                            newton_mac.record((a - b).max(0.0) / b);
                        }
                    }
                }
            }

            for l in 0..k {
                let bound = (binomial(n, k) / binomial(n, l)).powf(1.0 / (k - l) as f64);
                let total: f64 = (0..n)
                    .map(|i| {
                        central_difference(
                            |t| {
                                let mut x = v.to_vec();
                                x[i] += t;
                                quotient_root(&x, k, l)
                            },
                            0.0,
                            1e-6,
                        )
                    })
                    .sum();
                derivative_sum.record((bound - total).max(0.0));
            }

            if si + 1 < samples.len() {
                let mut other = samples[si + 1].values().to_vec();
                // pair with a random ordering of the next sample
                for i in (1..other.len()).rev() {
                    other.swap(i, pair_rng.random_range(0..=i));
                }
                let mid: Vec<f64> = v.iter().zip(&other).map(|(a, b)| 0.5 * (a + b)).collect();
                for l in 0..k {
                    let f_mid = quotient_root(&mid, k, l);
                    let avg = 0.5 * (quotient_root(v, k, l) + quotient_root(&other, k, l));
                    concavity.record((avg - f_mid).max(0.0));
                }
            }
        }
    }

    let mut eigen = Tally::new("eigen_reconstruction_and_unitarity", 1e-10);
    let mut invariance = Tally::new("unitary_invariance", 1e-9);
    for _ in 0..(count / 100).max(1) {
        let n = rng.random_range(2..=8);
        let h = random_hermitian(n, 2.0, &mut rng);
        let e = hermitian_eigen(&h)?;
        let recon = e.reconstruct().sub(h.matrix()).frobenius() / (1.0 + h.frobenius());
        let unit = e.basis.adjoint().matmul(&e.basis).sub(&CMatrix::identity(n)).frobenius();
        eigen.record(recon.max(unit / 10.0));
        let u = random_unitary(n, &mut rng);
        let moved = hermitian_eigen(&h.unitary_conjugate(&u))?.spectrum;
        for k in 1..=n {
            let scale = subset_sigma_abs(e.spectrum.values(), k).max(f64::MIN_POSITIVE);
            invariance.record((moved.sigma(k) - e.spectrum.sigma(k)).abs() / scale);
        }
    }

    Ok([oracle, expansion, sum, positive, ordered, dominance, newton_mac, derivative_sum, concavity, eigen, invariance]
        .into_iter()
        .map(Tally::finish)
        .collect())
}

fn random_direction(n: usize, rng: &mut ChaCha8Rng) -> HermitianMatrix {
    random_hermitian(n, 1.0, rng)
}

/// `count` random 4x4 Hermitian matrices, all `k`.
fn spectral_suite(seed: u64, count: usize) -> Result<Vec<PropertyResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 4;
    let mut first = Tally::new("first_derivative_vs_fd", 1e-6);
    let mut second = Tally::new("second_form_vs_fd", 1e-4);
    let mut divided = Tally::new("divided_difference_closed_form", 1e-12);
    let mut invariance = Tally::new("unitary_invariance", 1e-9);
    let sigma_of = |m: &HermitianMatrix, k: usize| -> f64 {
        hermitian_eigen(m).map(|e| e.spectrum.sigma(k)).unwrap_or(f64::NAN)
    };
    for _ in 0..count {
        let h = random_hermitian(n, 2.0, &mut rng);
        let e = random_direction(n, &mut rng);
        let eig = hermitian_eigen(&h)?;
        let w = eig.basis.adjoint().matmul(e.matrix()).matmul(&eig.basis);
        let u = random_unitary(n, &mut rng);
        let moved = hermitian_eigen(&h.unitary_conjugate(&u))?.spectrum;
        for k in 1..=n {
            let g = matrix_sigma_first(&h, k)?;
            let analytic = g.trace_product(&e);
            let fd = central_difference(|t| sigma_of(&h.add(&e.scale(t)), k), 0.0, 1e-5);
            first.record((fd - analytic).abs() / analytic.abs().max(f64::MIN_POSITIVE));

            if k >= 2 {
                let form = spectral_second_form(&eig.spectrum, k, &w)?;
                // sigma_k along a line is a polynomial of degree k <= 5
                let fd2 = second_difference_five_point(|t| sigma_of(&h.add(&e.scale(t)), k), 0.0, 1e-3);
                second.record((fd2 - form).abs() / form.abs().max(f64::MIN_POSITIVE));

                let v = eig.spectrum.values();
                for p in 0..n {
                    for q in 0..n {
                        if p != q {
                            let ki = k as isize;
                            let lhs = eig.spectrum.sigma_excl(ki - 1, p)? - eig.spectrum.sigma_excl(ki - 1, q)?;
                            let rhs = (v[q] - v[p]) * eig.spectrum.sigma_hess_offdiag(k, p, q)?;
                            let scale = subset_sigma_abs(v, k - 1).max(f64::MIN_POSITIVE);
                            divided.record((lhs - rhs).abs() / scale);
                        }
                    }
                }
            }
            let scale = subset_sigma_abs(eig.spectrum.values(), k).max(f64::MIN_POSITIVE);
            invariance.record((moved.sigma(k) - eig.spectrum.sigma(k)).abs() / scale);
        }
    }
    Ok([first, second, divided, invariance].into_iter().map(Tally::finish).collect())
}

/// Located threshold for one configuration.
pub fn located_threshold(n: usize, k: usize, eps0: f64, samples_per_level: usize, seed: u64) -> Result<f64> {
    let constraints = ConeConstraints::new(n, k, 1.0, [0.5, 2.0])?;
    Ok(threshold_search(&constraints, eps0, default_big_k(k), samples_per_level, seed)?.lambda1_star)
}

/// Log-spaced pinned levels in `[4 lambda*, 16 lambda*]`.
pub fn levels_above(threshold: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| 4.0 * threshold * 4f64.powf(i as f64 / count.max(2).saturating_sub(1) as f64))
        .collect()
}

/// `count` cases per `(n, k, eps0)` configuration, at `lambda_1` between 4
/// and 16 times the located threshold.
fn inequality_suite(seed: u64, count: usize) -> Result<Vec<PropertyResult>> {
    const LEVELS: usize = 8;
    let mut margins = Tally::new("key_margin_above_threshold", 1e-10);
    let mut homogeneity = Tally::new("xi_scaling_homogeneity", 1e-12);
    let mut realness = Tally::new("t1_imag_residue", 1e-12);
    let mut tail = Tally::new("tail_support_structure", 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (ci, &(n, k)) in CONE_CONFIGS.iter().enumerate() {
        for (ei, &eps0) in [0.1, 0.5].iter().enumerate() {
            let cfg_seed = seed.wrapping_add((10 * ci + ei) as u64 * 1000);
            let star = located_threshold(n, k, eps0, 200, cfg_seed)?;
            let constraints = ConeConstraints::new(n, k, 1.0, [0.5, 2.0])?;
            let big_k = default_big_k(k);
            let per_level = count.div_ceil(LEVELS);
            let mut done = 0;
            for (li, level) in levels_above(star, LEVELS).into_iter().enumerate() {
                let take = per_level.min(count - done);
                if take == 0 {
                    break;
                }
                done += take;
                for s in sample_pinned(&constraints, level, take, cfg_seed.wrapping_add(li as u64 + 1))? {
                    let xi = random_unit_xi(n, &mut rng);
                    let case = InequalityCase::new(s.clone(), xi.clone(), k, big_k, eps0, 1.0)?;
                    let r = key_margin(&case)?;
                    margins.record((-r.margin).max(0.0));
                    let mag = r.t1.abs() + r.t2.abs() + r.t3.abs() + r.rhs.abs();
                    realness.record(r.imag_residue / (mag + 1.0));

                    let c = Complex64::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
                    let scaled = InequalityCase::new(s.clone(), xi.iter().map(|z| z * c).collect(), k, big_k, eps0, 1.0)?;
                    let rs = key_margin(&scaled)?;
                    homogeneity.record((rs.margin - c.norm_sqr() * r.margin).abs() / (c.norm_sqr() * mag).max(f64::MIN_POSITIVE));

                    let mut xt = xi;
                    xt[0] = Complex64::new(0.0, 0.0);
                    let rt = key_margin(&InequalityCase::new(s, xt, k, big_k, eps0, 1.0)?)?;
                    tail.record(if rt.rhs == 0.0 && rt.t3 >= 0.0 { 0.0 } else { 1.0 });
                }
            }
        }
    }
    Ok([margins, homogeneity, realness, tail].into_iter().map(Tally::finish).collect())
}

/// Grid scan for `eps0 = 0.01, ..., 0.99` plus `count` random `a` with
/// `|a| <= 1e6`.
fn algebraic_suite(seed: u64, count: usize) -> Vec<PropertyResult> {
    let mut grid = Tally::new("grid_minimum_above_bound", 1e-12);
    let mut equality = Tally::new("equality_at_minimizer", 1e-9);
    let mut random = Tally::new("random_a_above_bound", 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for step in 1..=99 {
        let eps0 = step as f64 / 100.0;
        let bound = (1.0 - eps0) / (2.0 - eps0);
        let min = (0..=20_000)
            .map(|i| algebraic_fact(eps0, -10.0 + i as f64 * 1e-3).value)
            .fold(f64::INFINITY, f64::min);
        grid.record((bound - min).max(0.0));
        let at = algebraic_fact(eps0, -(1.0 - eps0) / (2.0 - eps0));
        equality.record((at.value - at.lower_bound).abs());
        for _ in 0..count / 99 + 1 {
            let a = rng.random_range(-1e6..1e6);
            let f = algebraic_fact(eps0, a);
            random.record((f.lower_bound - f.value).max(0.0) / f.value.abs().max(1.0));
        }
    }
    [grid, equality, random].into_iter().map(Tally::finish).collect()
}

/// Manufactured problem on the `n = 2`, `N = 8` grid; `count` random
/// directions for the Jacobian check.
fn solver_suite(seed: u64, count: usize) -> Result<Vec<PropertyResult>> {
    let grid = TorusGrid::new(2, 8)?;
    let params = ManufacturedParams {
        seed,
        ..Default::default()
    };
    let m = manufactured_problem(&grid, &params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut hermitian = Tally::new("chi_hermitian", 1e-12);
    for chi in assemble_chi(&m.u_star, &m.spec, &grid)? {
        hermitian.record(chi.matrix().hermitian_deviation());
    }
    let mut exact = Tally::new("discrete_manufactured_residual", 1e-12);
    for r in residual(&m.u_star, &m.spec, &grid)? {
        exact.record(r.abs());
    }

    let mut jacobian = Tally::new("jacobian_vs_fd", 1e-5);
    let u0: Vec<f64> = m.u_star.iter().map(|v| 0.5 * v).collect();
    for _ in 0..count {
        let v: Vec<f64> = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let eps = 1e-6;
        let shifted = |s: f64| -> Vec<f64> { u0.iter().zip(&v).map(|(a, b)| a + s * b).collect() };
        let rp = residual(&shifted(eps), &m.spec, &grid)?;
        let rm = residual(&shifted(-eps), &m.spec, &grid)?;
        let lin = linearize_apply(&u0, &m.spec, &grid, &v)?;
        let scale = lin.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let err = (0..grid.len()).fold(0.0f64, |a, i| a.max(((rp[i] - rm[i]) / (2.0 * eps) - lin[i]).abs()));
        jacobian.record(err / scale);
    }

    let mut converged = Tally::new("newton_residual_from_zero", 1e-8);
    let mut admissible = Tally::new("newton_iterates_admissible", 0.0);
    let run = newton_solve(&m.spec, &grid, vec![0.0; grid.len()], &NewtonConfig::default())?;
    converged.record(run.solution.diagnostics.residual_inf);
    for rec in &run.history {
        admissible.record(if rec.admissible && rec.min_ellipticity > 0.0 { 0.0 } else { 1.0 });
    }
    Ok([hermitian, exact, jacobian, converged, admissible]
        .into_iter()
        .map(Tally::finish)
        .collect())
}

/// Uniform spectrum `(1, ..., 1)`: the equality case of the dominance bound.
pub fn dominance_equality_gap(n: usize, k: usize) -> f64 {
    let s = Spectrum::new(vec![1.0; n]).expect("constant spectrum");
    let grad = s.sigma_grad(k);
    (s.values()[0] * grad[0] - k as f64 / n as f64 * s.sigma(k)).abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("bogus".parse::<Suite>().is_err());
    }

    #[test]
    fn small_suites_pass_and_repeat() {
        for suite in [Suite::Symm, Suite::Spectral, Suite::Algebraic] {
            let a = run_suite(suite, 3, 40).unwrap();
            assert!(a.passed, "{a:#?}");
            assert_eq!(a, run_suite(suite, 3, 40).unwrap());
        }
        assert!(dominance_equality_gap(5, 3) < 1e-12);
    }

    #[test]
    fn tally_treats_nan_as_failure() {
        let mut t = Tally::new("x", 1.0);
        t.record(0.5);
        t.record(f64::NAN);
        assert!(!t.finish().passed);
    }
}
