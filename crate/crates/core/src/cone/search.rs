//! Empirical threshold location and adversarial search for the key
//! inequality.
//!
//! Random streams: a batch or restart with index `i` under seed `s` uses
//! seed `s + i`; the spectrum walk and the `xi` draws use separate ChaCha
//! streams of that seed, so neither perturbs the other.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::margins::{key_margin, worst_xi, InequalityCase};
use super::sampler::{random_unit_xi, sample_pinned, shift_to_band, uniform_level};
use super::{ConeConstraints, VIOLATION_TOL};
use crate::error::{Error, Result};
use crate::symm::Spectrum;

const XI_STREAM: u64 = 1;
const ANNEAL_STREAM: u64 = 2;
const MAX_DOUBLINGS: usize = 60;
const MAX_BISECTIONS: usize = 40;
/// Bisection stops once consecutive levels differ by less than this factor.
const LEVEL_RATIO_TOL: f64 = 1.01;

fn xi_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(XI_STREAM);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    pub level: f64,
    pub cases: usize,
    pub violations: usize,
    pub min_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub lambda1_star: f64,
    pub levels_tested: Vec<LevelStats>,
}

/// Key margins of `cases` pinned spectra at `level`, each paired with a
/// random unit `xi`.
pub fn level_statistics(
    constraints: &ConeConstraints,
    eps0: f64,
    big_k: f64,
    level: f64,
    cases: usize,
    seed: u64,
) -> Result<LevelStats> {
    let spectra = sample_pinned(constraints, level, cases, seed)?;
    let mut rng = xi_rng(seed);
    let mut stats = LevelStats {
        level,
        cases,
        violations: 0,
        min_margin: f64::INFINITY,
    };
    for spectrum in spectra {
        let xi = random_unit_xi(constraints.n, &mut rng);
        let case = InequalityCase::new(spectrum, xi, constraints.k, big_k, eps0, constraints.floor)?;
        let m = key_margin(&case)?.margin;
        if m < -VIOLATION_TOL {
            stats.violations += 1;
        }
        stats.min_margin = stats.min_margin.min(m);
    }
    Ok(stats)
}

/// Bisects (in log scale) for the smallest `lambda_1` level at which a batch
/// of sampled cases shows no violation. The result is an empirical
/// statistic, not a proven constant.
pub fn threshold_search(
    constraints: &ConeConstraints,
    eps0: f64,
    big_k: f64,
    samples_per_level: usize,
    seed: u64,
) -> Result<ThresholdReport> {
    constraints.validate()?;
    let mut levels = Vec::new();
    let test = |level: f64, levels: &mut Vec<LevelStats>| -> Result<bool> {
        let idx = levels.len() as u64;
        let stats = level_statistics(constraints, eps0, big_k, level, samples_per_level, seed.wrapping_add(idx))?;
        levels.push(stats);
        Ok(stats.violations == 0)
    };

    let mut lo = uniform_level(constraints, constraints.band_mid());
    if test(lo, &mut levels)? {
        return Ok(ThresholdReport {
            lambda1_star: lo,
            levels_tested: levels,
        });
    }
    let mut hi = 2.0 * lo;
    let mut doublings = 0;
    while !test(hi, &mut levels)? {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_DOUBLINGS {
            return Err(Error::Infeasible(format!("violations persist up to lambda_1 = {hi:e}")));
        }
    }
    for _ in 0..MAX_BISECTIONS {
        if hi / lo < LEVEL_RATIO_TOL {
            break;
        }
        let mid = (lo * hi).sqrt();
        if test(mid, &mut levels)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(ThresholdReport {
        lambda1_star: hi,
        levels_tested: levels,
    })
}

/// Annealing parameters for [`counterexample_search`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    /// Number of starting cases drawn before any annealing.
    pub initial_samples: usize,
    pub iterations: usize,
    /// Multiplicative temperature decay per iteration.
    pub cooling: f64,
    /// Initial eigenvalue step as a fraction of `lambda_1`; halved on every
    /// infeasible proposal.
    pub eig_step: f64,
    pub xi_step: f64,
    /// Replace `xi` by the exact minimizer for the final spectrum of every
    /// restart.
    pub polish: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            initial_samples: 64,
            iterations: 150,
            cooling: 0.95,
            eig_step: 0.1,
            xi_step: 0.1,
            polish: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub worst_case: InequalityCase,
    pub worst_margin: f64,
    pub evaluations: usize,
    pub seed: u64,
}

struct Candidate {
    case: InequalityCase,
    margin: f64,
    evaluations: usize,
}

fn better(a: Candidate, b: Candidate) -> Candidate {
    let evaluations = a.evaluations + b.evaluations;
    let mut best = if b.margin < a.margin { b } else { a };
    best.evaluations = evaluations;
    best
}

fn perturb_spectrum(
    values: &[f64],
    step: f64,
    lambda1_floor: f64,
    constraints: &ConeConstraints,
    rng: &mut ChaCha8Rng,
) -> Option<Spectrum> {
    let mut y: Vec<f64> = values.iter().map(|v| v + step * rng.sample::<f64, _>(StandardNormal)).collect();
    y.sort_by(|a, b| b.total_cmp(a));
    if y[0] < lambda1_floor {
        return None;
    }
    let mut free = vec![true; y.len()];
    free[0] = false;
    let y = shift_to_band(y, &free, constraints)?;
    if y[1..].iter().any(|&v| v > y[0]) || !constraints.admits(&y) {
        return None;
    }
    Spectrum::new(y).ok()
}

fn perturb_xi(xi: &[Complex64], step: f64, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let v: Vec<Complex64> = xi
        .iter()
        .map(|z| z + step * Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm < 1e-12 {
        return xi.to_vec();
    }
    v.into_iter().map(|z| z / norm).collect()
}

/// Simulated-annealing descent on the key margin over `(lambda, xi)` with
/// `lambda_1 >= lambda1_floor`. A negative worst margin is reported, not
/// raised.
pub fn counterexample_search(
    constraints: &ConeConstraints,
    eps0: f64,
    big_k: f64,
    lambda1_floor: f64,
    restarts: usize,
    seed: u64,
    config: &SearchConfig,
) -> Result<SearchOutcome> {
    constraints.validate()?;
    if !(lambda1_floor > 0.0) {
        return Err(Error::Parameter(format!("lambda_1 floor must be positive, got {lambda1_floor}")));
    }
    let m = config.initial_samples.max(1);
    let mut xi_draws = xi_rng(seed);
    let mut starts = Vec::with_capacity(m);
    for i in 0..m {
        let level = lambda1_floor * 4f64.powf(i as f64 / m as f64);
        let spectrum = sample_pinned(constraints, level, 1, seed.wrapping_add(i as u64))?
            .pop()
            .expect("one sample requested");
        let xi = random_unit_xi(constraints.n, &mut xi_draws);
        let case = InequalityCase::new(spectrum, xi, constraints.k, big_k, eps0, constraints.floor)?;
        let margin = key_margin(&case)?.margin;
        starts.push(Candidate {
            case,
            margin,
            evaluations: 1,
        });
    }

    let anneal = |r: usize| -> Result<Candidate> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
        rng.set_stream(ANNEAL_STREAM);
        let start = &starts[r % m].case;
        let mut current = start.clone();
        let mut current_margin = key_margin(&current)?.margin;
        let mut best = Candidate {
            case: current.clone(),
            margin: current_margin,
            evaluations: 1,
        };
        let mut temperature = (0.1 * current_margin.abs()).max(1e-12);
        for _ in 0..config.iterations {
            let values = current.spectrum.values().to_vec();
            let mut step = config.eig_step * values[0];
            let mut proposal = None;
            for _ in 0..30 {
                if let Some(s) = perturb_spectrum(&values, step, lambda1_floor, constraints, &mut rng) {
                    proposal = Some(s);
                    break;
                }
                step *= 0.5;
            }
            let spectrum = proposal.unwrap_or_else(|| current.spectrum.clone());
            let xi = perturb_xi(&current.xi, config.xi_step, &mut rng);
            let candidate = InequalityCase {
                spectrum,
                xi,
                ..current.clone()
            };
            let margin = key_margin(&candidate)?.margin;
            best.evaluations += 1;
            let delta = margin - current_margin;
            if delta < 0.0 || rng.random::<f64>() < (-delta / temperature).exp() {
                current = candidate;
                current_margin = margin;
                if margin < best.margin {
                    best.case = current.clone();
                    best.margin = margin;
                }
            }
            temperature *= config.cooling;
        }
        if config.polish {
            let (_, xi) = worst_xi(&best.case.spectrum, constraints.k, big_k, eps0)?;
            let polished = InequalityCase {
                xi,
                ..best.case.clone()
            };
            let margin = key_margin(&polished)?.margin;
            best.evaluations += 1;
            if margin < best.margin {
                best.case = polished;
                best.margin = margin;
            }
        }
        Ok(best)
    };

    let annealed: Vec<Candidate> = (0..restarts).into_par_iter().map(anneal).collect::<Result<_>>()?;
    let winner = starts
        .into_iter()
        .chain(annealed)
        .reduce(better)
        .expect("at least one starting case");
    Ok(SearchOutcome {
        worst_margin: winner.margin,
        worst_case: winner.case,
        evaluations: winner.evaluations,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::default_big_k;

    fn constraints(n: usize, k: usize) -> ConeConstraints {
        ConeConstraints::new(n, k, 1.0, [0.5, 2.0]).unwrap()
    }

    #[test]
    fn threshold_is_deterministic_and_bracketed() {
        let c = constraints(4, 2);
        let a = threshold_search(&c, 0.1, default_big_k(2), 300, 5).unwrap();
        let b = threshold_search(&c, 0.1, default_big_k(2), 300, 5).unwrap();
        assert_eq!(a, b);
        let star = a.lambda1_star;
        assert!(a.levels_tested.iter().any(|l| l.level == star && l.violations == 0));
        // every clean level becomes the new upper bracket
        for l in a.levels_tested.iter().filter(|l| l.level < star) {
            assert!(l.violations > 0, "clean level {} below threshold {star}", l.level);
        }
    }

    #[test]
    fn restarts_zero_uses_initial_samples() {
        let c = constraints(3, 2);
        let cfg = SearchConfig {
            initial_samples: 8,
            ..SearchConfig::default()
        };
        let out = counterexample_search(&c, 0.1, 9.0, 5.0, 0, 3, &cfg).unwrap();
        assert_eq!(out.evaluations, 8);
        let again = key_margin(&out.worst_case).unwrap().margin;
        assert!((again - out.worst_margin).abs() <= 1e-12);
    }

    #[test]
    fn annealing_respects_constraints_and_is_consistent() {
        let c = constraints(4, 3);
        let cfg = SearchConfig {
            initial_samples: 8,
            iterations: 60,
            ..SearchConfig::default()
        };
        let out = counterexample_search(&c, 0.1, 16.0, 3.0, 16, 11, &cfg).unwrap();
        let case = &out.worst_case;
        assert!(case.spectrum.largest() >= 3.0);
        assert!(c.admits(case.spectrum.values()));
        let again = key_margin(case).unwrap().margin;
        assert!((again - out.worst_margin).abs() <= 1e-12);
        let rerun = counterexample_search(&c, 0.1, 16.0, 3.0, 16, 11, &cfg).unwrap();
        assert_eq!(rerun, out);
    }

    #[test]
    fn low_levels_can_violate() {
        // n = 4, k = 2, eps0 = 0.1 has negative margins just above the
        // smallest feasible lambda_1
        let c = constraints(4, 2);
        let cfg = SearchConfig {
            initial_samples: 16,
            iterations: 100,
            ..SearchConfig::default()
        };
        let out = counterexample_search(&c, 0.1, 9.0, 0.45, 64, 1, &cfg).unwrap();
        assert!(out.worst_margin < 0.0, "worst margin {}", out.worst_margin);
    }
}
