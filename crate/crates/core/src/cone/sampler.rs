//! Hit-and-run random walk over cone-constrained spectra.
//!
//! Each step draws a random direction over the free coordinates, proposes a
//! point uniformly on a bracket around the current state and shrinks the
//! bracket toward the current state on every rejection. When a sigma band
//! is active, proposals are first moved onto the band by a common shift of
//! the free coordinates; along that shift `sigma_k` is strictly increasing
//! inside `Gamma_k`, so the shift is found by bisection.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::ConeConstraints;
use crate::error::{Error, Result};
use crate::symm::{elementary_all, Spectrum};

const BURN_IN: usize = 50;
const THIN: usize = 5;
const MAX_SHRINKS: usize = 40;

type Feasible<'a> = Box<dyn Fn(&[f64]) -> bool + 'a>;
type Project<'a> = Box<dyn Fn(Vec<f64>) -> Option<Vec<f64>> + 'a>;

pub struct HitAndRun<'a> {
    feasible: Feasible<'a>,
    project: Project<'a>,
    free: Vec<usize>,
    width: f64,
    state: Vec<f64>,
    rng: ChaCha8Rng,
}

impl<'a> HitAndRun<'a> {
    pub fn new(
        start: Vec<f64>,
        free: Vec<usize>,
        width: f64,
        seed: u64,
        feasible: impl Fn(&[f64]) -> bool + 'a,
        project: impl Fn(Vec<f64>) -> Option<Vec<f64>> + 'a,
    ) -> Result<Self> {
        if !feasible(&start) {
            return Err(Error::Infeasible(format!("start point {start:?} violates the constraints")));
        }
        Ok(Self {
            feasible: Box::new(feasible),
            project: Box::new(project),
            free,
            width,
            state: start,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }

    /// One hit-and-run move. Returns whether the state changed.
    pub fn step(&mut self) -> bool {
        let mut dir: Vec<f64> = self.free.iter().map(|_| self.rng.sample(StandardNormal)).collect();
        let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
        if norm == 0.0 {
            return false;
        }
        dir.iter_mut().for_each(|d| *d /= norm);

        let (mut lo, mut hi) = (-self.width, self.width);
        for _ in 0..MAX_SHRINKS {
            let t = self.rng.random_range(lo..hi);
            let mut y = self.state.clone();
            for (&i, d) in self.free.iter().zip(&dir) {
                y[i] += t * d;
            }
            if let Some(y) = (self.project)(y) {
                if (self.feasible)(&y) {
                    self.state = y;
                    return true;
                }
            }
            if t < 0.0 {
                lo = t;
            } else {
                hi = t;
            }
        }
        false
    }

    /// Advances `thin` steps and returns a copy of the state.
    pub fn draw(&mut self, thin: usize) -> Vec<f64> {
        for _ in 0..thin {
            self.step();
        }
        self.state.clone()
    }
}

/// `sigma_k` along `y + t e_free`, or `-inf` outside `Gamma_k`.
fn shifted_sigma(y: &[f64], free: &[bool], k: usize, t: f64) -> f64 {
    let x: Vec<f64> = y.iter().zip(free).map(|(&v, &f)| if f { v + t } else { v }).collect();
    let c = elementary_all(&x, k);
    if (1..=k).all(|i| c[i] > 0.0) {
        c[k]
    } else {
        f64::NEG_INFINITY
    }
}

/// Moves `y` onto the sigma band by a common shift of the free coordinates.
/// Returns `None` when no bracket is found.
pub(crate) fn shift_to_band(y: Vec<f64>, free: &[bool], constraints: &ConeConstraints) -> Option<Vec<f64>> {
    let k = constraints.k;
    let [lo, hi] = constraints.sigma_band;
    let s0 = shifted_sigma(&y, free, k, 0.0);
    if s0.is_finite() && constraints.in_band(s0) {
        return Some(y);
    }
    let target = if s0 < lo { lo } else { hi };
    let g = |t: f64| shifted_sigma(&y, free, k, t);

    let scale = 1.0 + y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let (mut a, mut b);
    if s0 < target {
        a = 0.0;
        b = scale;
        let mut guard = 0;
        while g(b) < target {
            a = b;
            b *= 2.0;
            guard += 1;
            if guard > 200 {
                return None;
            }
        }
    } else {
        b = 0.0;
        a = -scale;
        let mut guard = 0;
        while g(a) >= target {
            b = a;
            a *= 2.0;
            guard += 1;
            if guard > 200 {
                return None;
            }
        }
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        if g(m) < target {
            a = m;
        } else {
            b = m;
        }
    }
    let t = if target == lo || !(g(a) > 0.0) { b } else { a };
    Some(y.iter().zip(free).map(|(&v, &f)| if f { v + t } else { v }).collect())
}

pub(crate) fn uniform_level(constraints: &ConeConstraints, target: f64) -> f64 {
    let binom = crate::oracle::binomial(constraints.n, constraints.k);
    (target / binom).powf(1.0 / constraints.k as f64)
}

/// `count` spectra from `Gamma_k ∩ {lambda_n > -A} ∩ {sigma_k in band}`,
/// deterministic in `seed`. The walk starts at the uniform spectrum scaled
/// to the geometric midpoint of the band.
pub fn sample_gamma_k(constraints: &ConeConstraints, count: usize, seed: u64) -> Result<Vec<Spectrum>> {
    constraints.validate()?;
    if count == 0 {
        return Ok(Vec::new());
    }
    let n = constraints.n;
    let c = uniform_level(constraints, constraints.band_mid());
    let free_mask = vec![true; n];
    let mut walk = HitAndRun::new(
        vec![c; n],
        (0..n).collect(),
        c.max(constraints.floor),
        seed,
        |x| constraints.admits(x),
        |y| shift_to_band(y, &free_mask, constraints),
    )?;
    for _ in 0..BURN_IN {
        walk.step();
    }
    (0..count).map(|_| Spectrum::from_unsorted(walk.draw(THIN))).collect()
}

/// Like [`sample_gamma_k`] but with the largest eigenvalue held at
/// `lambda1`; the other entries stay at or below it.
pub fn sample_pinned(constraints: &ConeConstraints, lambda1: f64, count: usize, seed: u64) -> Result<Vec<Spectrum>> {
    constraints.validate()?;
    if !(lambda1 > 0.0 && lambda1.is_finite()) {
        return Err(Error::Parameter(format!("pinned lambda_1 must be positive, got {lambda1}")));
    }
    if count == 0 {
        return Ok(Vec::new());
    }
    let n = constraints.n;
    let mut free_mask = vec![true; n];
    free_mask[0] = false;
    let feasible = |x: &[f64]| x[0] == lambda1 && x[1..].iter().all(|&v| v <= lambda1) && constraints.admits(x);

    let mut start = None;
    for target in [constraints.band_mid(), constraints.sigma_band[0]] {
        let mut narrowed = *constraints;
        narrowed.sigma_band = [target, target];
        let mut y = vec![0.0; n];
        y[0] = lambda1;
        if let Some(p) = shift_to_band(y, &free_mask, &narrowed) {
            if feasible(&p) {
                start = Some(p);
                break;
            }
        }
    }
    let start = start.ok_or_else(|| {
        Error::Infeasible(format!("no spectrum with lambda_1 = {lambda1} satisfies the constraints"))
    })?;
    let width = start[1..].iter().fold(constraints.floor, |m, v| m.max(v.abs()));
    let mut walk = HitAndRun::new(
        start,
        (1..n).collect(),
        width,
        seed,
        feasible,
        |y| shift_to_band(y, &free_mask, constraints),
    )?;
    for _ in 0..BURN_IN {
        walk.step();
    }
    (0..count).map(|_| Spectrum::from_unsorted(walk.draw(THIN))).collect()
}

/// Complex vector uniform on the unit sphere of `C^n`.
pub fn random_unit_xi(n: usize, rng: &mut impl Rng) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}

/// Real vector uniform on the unit sphere of `R^n`.
pub fn random_unit_real_xi(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}
