use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::grid::TorusGrid;
use super::operator::{chi_at, wirtinger};
use crate::error::{Error, Result};
use crate::symm::{hermitian_eigen, CMatrix, HermitianMatrix};

const P_MODES: usize = 2;
const A_MODES: usize = 2;
/// Trace of each positive semidefinite mode matrix in `P`.
const P_MODE_TRACE: f64 = 0.5;
const A_SCALE: f64 = 0.05;
const MAX_HALVINGS: usize = 10;

/// Right-hand side `psi(z, v, t) = g(z) + mu t + nu |v - w(z)|^2`, where `v`
/// is the complex gradient `(u_1, ..., u_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Forcing {
    pub g: Vec<f64>,
    /// `n` entries per grid point.
    pub w: Vec<Complex64>,
    pub mu: f64,
    pub nu: f64,
}

impl Forcing {
    pub fn value(&self, index: usize, v: &[Complex64], t: f64) -> f64 {
        let n = v.len();
        let w = &self.w[index * n..(index + 1) * n];
        let dist: f64 = v.iter().zip(w).map(|(a, b)| (a - b).norm_sqr()).sum();
        self.g[index] + self.mu * t + self.nu * dist
    }

    /// Wirtinger derivative `d psi / d v_l = nu conj(v_l - w_l)`, so that
    /// `d psi = 2 Re(sum_l psi_{v_l} dv_l)`.
    pub fn grad_v(&self, index: usize, v: &[Complex64]) -> Vec<Complex64> {
        let n = v.len();
        let w = &self.w[index * n..(index + 1) * n];
        v.iter().zip(w).map(|(a, b)| self.nu * (a - b).conj()).collect()
    }

    /// `(1 - s) self + s other`, which stays in the same family:
    /// `(1-s)|v-w0|^2 + s|v-w1|^2 = |v - w_s|^2 + s(1-s)|w1-w0|^2`.
    pub fn blend(&self, other: &Forcing, s: f64) -> Result<Forcing> {
        if self.g.len() != other.g.len() || self.w.len() != other.w.len() {
            return Err(Error::Dimension {
                expected: self.g.len(),
                actual: other.g.len(),
            });
        }
        if self.mu != other.mu || self.nu != other.nu {
            return Err(Error::Parameter("blended forcings must share mu and nu".into()));
        }
        let n = self.w.len() / self.g.len();
        let w: Vec<Complex64> = self.w.iter().zip(&other.w).map(|(a, b)| a * (1.0 - s) + b * s).collect();
        let g = (0..self.g.len())
            .map(|i| {
                let gap: f64 = (0..n).map(|l| (other.w[i * n + l] - self.w[i * n + l]).norm_sqr()).sum();
                (1.0 - s) * self.g[i] + s * other.g[i] + self.nu * s * (1.0 - s) * gap
            })
            .collect();
        Ok(Forcing {
            g,
            w,
            mu: self.mu,
            nu: self.nu,
        })
    }

    /// Exact lower bound of `psi` over all `v` and all `t >= t_lo`.
    pub fn lower_bound(&self, t_lo: f64) -> f64 {
        self.g.iter().fold(f64::INFINITY, |m, &g| m.min(g)) + self.mu * t_lo
    }
}

/// Discretized problem data on a fixed grid:
/// `chi'(z, u) = eps I + P(z) + q(u) I` with `q(u) = q2 u^2`, a (1,0)-form
/// `a(z)`, and the forcing `psi`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub k: usize,
    pub eps: f64,
    pub q2: f64,
    n: usize,
    points: usize,
    /// `P(z)`, `n * n` row-major entries per point.
    p: Vec<Complex64>,
    /// `a_i(z)`, `n` entries per point.
    a: Vec<Complex64>,
    pub forcing: Forcing,
    /// Short description used in reports and snapshots.
    pub label: String,
}

impl ProblemSpec {
    pub fn from_fields(
        grid: &TorusGrid,
        k: usize,
        eps: f64,
        q2: f64,
        p: Vec<Complex64>,
        a: Vec<Complex64>,
        forcing: Forcing,
    ) -> Result<Self> {
        let (n, points) = (grid.n(), grid.len());
        if k < 1 || k > n {
            return Err(Error::Parameter(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
        }
        if !(eps > 0.0) || !(q2 >= 0.0) {
            return Err(Error::Parameter(format!("need eps > 0 and q2 >= 0, got {eps}, {q2}")));
        }
        if !(forcing.mu > 0.0) || !(forcing.nu >= 0.0) {
            return Err(Error::Parameter(format!(
                "need mu > 0 and nu >= 0, got {}, {}",
                forcing.mu, forcing.nu
            )));
        }
        for (name, actual, expected) in [
            ("P", p.len(), points * n * n),
            ("a", a.len(), points * n),
            ("g", forcing.g.len(), points),
            ("w", forcing.w.len(), points * n),
        ] {
            if actual != expected {
                return Err(Error::Format(format!("{name} field has {actual} entries, expected {expected}")));
            }
        }
        Ok(Self {
            k,
            eps,
            q2,
            n,
            points,
            p,
            a,
            forcing,
            label: String::from("custom"),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn check_grid(&self, grid: &TorusGrid) -> Result<()> {
        if grid.n() != self.n || grid.len() != self.points {
            return Err(Error::Dimension {
                expected: self.points,
                actual: grid.len(),
            });
        }
        Ok(())
    }

    pub fn q(&self, t: f64) -> f64 {
        self.q2 * t * t
    }

    pub fn dq(&self, t: f64) -> f64 {
        2.0 * self.q2 * t
    }

    pub fn p_at(&self, index: usize) -> &[Complex64] {
        let m = self.n * self.n;
        &self.p[index * m..(index + 1) * m]
    }

    pub fn a_at(&self, index: usize) -> &[Complex64] {
        &self.a[index * self.n..(index + 1) * self.n]
    }

    /// `chi'(z, t)` at a grid point.
    pub fn chi_prime(&self, index: usize, t: f64) -> HermitianMatrix {
        let p = self.p_at(index);
        let diag = self.eps + self.q(t);
        HermitianMatrix::from_upper(self.n, |i, j| {
            let v = p[i * self.n + j];
            if i == j {
                Complex64::new(v.re + diag, 0.0)
            } else {
                v
            }
        })
    }

    /// Smallest eigenvalue of `chi'(z, t) - eps I` over the grid and the
    /// given sample of `t` values. Non-negative when the structural
    /// hypothesis `chi' >= eps` holds on that range.
    pub fn background_margin(&self, ts: &[f64]) -> Result<f64> {
        let mut min = f64::INFINITY;
        for idx in 0..self.points {
            for &t in ts {
                let m = self.chi_prime(idx, t).sub(&HermitianMatrix::identity(self.n).scale(self.eps));
                min = min.min(hermitian_eigen(&m)?.spectrum.smallest());
            }
        }
        Ok(min)
    }

    /// Same background and `a`, forcing replaced by
    /// `psi_0 = sigma_k(chi'(z, 0)) + mu t + nu |v|^2`, so `u = 0` solves it.
    pub fn trivial_start(&self) -> Result<ProblemSpec> {
        let g = (0..self.points)
            .map(|i| Ok(hermitian_eigen(&self.chi_prime(i, 0.0))?.spectrum.sigma(self.k)))
            .collect::<Result<Vec<_>>>()?;
        let mut out = self.clone();
        out.forcing = Forcing {
            g,
            w: vec![Complex64::new(0.0, 0.0); self.points * self.n],
            mu: self.forcing.mu,
            nu: self.forcing.nu,
        };
        out.label = format!("{} @ start", self.label);
        Ok(out)
    }

    /// Forcing `(1 - s) psi_start + s psi_self` over the same background.
    pub fn blend_from(&self, start: &ProblemSpec, s: f64) -> Result<ProblemSpec> {
        let mut out = self.clone();
        out.forcing = start.forcing.blend(&self.forcing, s)?;
        out.label = format!("{} @ s={s}", self.label);
        Ok(out)
    }
}

/// Which derivatives of `u*` build the forcing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Same difference stencils as the solver: `u*` solves the discrete
    /// equation exactly.
    Discrete,
    /// Analytic derivatives: `u*` solves the continuum equation, so the
    /// discrete solution differs from it by the truncation error.
    Continuum,
}

/// Parameters of the manufactured problem; together with the grid they
/// determine every field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManufacturedParams {
    pub k: usize,
    /// Requested amplitude of `u*`; halved until `chi[u*]` is admissible.
    pub amplitude: f64,
    pub mu: f64,
    pub nu: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_q2")]
    pub q2: f64,
    pub seed: u64,
    #[serde(default = "default_variant")]
    pub variant: Variant,
}

fn default_eps() -> f64 {
    1.0
}

fn default_q2() -> f64 {
    0.1
}

fn default_variant() -> Variant {
    Variant::Discrete
}

impl Default for ManufacturedParams {
    fn default() -> Self {
        Self {
            k: 2,
            amplitude: 0.05,
            mu: 1.0,
            nu: 0.1,
            eps: default_eps(),
            q2: default_q2(),
            seed: 0,
            variant: default_variant(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manufactured {
    pub spec: ProblemSpec,
    pub u_star: Vec<f64>,
    /// Amplitude actually used.
    pub amplitude: f64,
    pub halvings: usize,
}

fn random_wave(axes: usize, rng: &mut ChaCha8Rng) -> Vec<i32> {
    loop {
        let w: Vec<i32> = (0..axes).map(|_| rng.random_range(-1..=1)).collect();
        if w.iter().any(|&c| c != 0) {
            return w;
        }
    }
}

fn phase_at(wave: &[i32], x: &[f64]) -> f64 {
    2.0 * PI * wave.iter().zip(x).map(|(&c, &xi)| c as f64 * xi).sum::<f64>()
}

/// Random periodic `P` (a sum of `(1 + cos)` profiles times positive
/// semidefinite matrices, hence pointwise positive semidefinite) and `a`
/// (a sum of complex Fourier modes), deterministic in `seed`.
pub fn random_background(grid: &TorusGrid, seed: u64) -> (Vec<Complex64>, Vec<Complex64>) {
    let n = grid.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = |rng: &mut ChaCha8Rng| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));

    let mut p_modes = Vec::new();
    for _ in 0..P_MODES {
        let wave = random_wave(grid.axes(), &mut rng);
        let phase: f64 = rng.random_range(0.0..2.0 * PI);
        let r = CMatrix::from_rows(n, (0..n * n).map(|_| normal(&mut rng)).collect()).expect("square");
        let b = r.matmul(&r.adjoint());
        let trace: f64 = (0..n).map(|i| b[(i, i)].re).sum();
        p_modes.push((wave, phase, b.scale(P_MODE_TRACE / trace)));
    }
    let mut a_modes = Vec::new();
    for _ in 0..A_MODES {
        let wave = random_wave(grid.axes(), &mut rng);
        let coeffs: Vec<Complex64> = (0..n).map(|_| normal(&mut rng) * A_SCALE).collect();
        a_modes.push((wave, coeffs));
    }

    let mut p = vec![Complex64::new(0.0, 0.0); grid.len() * n * n];
    let mut a = vec![Complex64::new(0.0, 0.0); grid.len() * n];
    for idx in 0..grid.len() {
        let x = grid.position(idx);
        for (wave, phase, b) in &p_modes {
            let profile = 1.0 + (phase_at(wave, &x) + phase).cos();
            for i in 0..n {
                for j in 0..n {
                    p[idx * n * n + i * n + j] += b[(i, j)] * profile;
                }
            }
        }
        for (wave, coeffs) in &a_modes {
            let e = Complex64::from_polar(1.0, phase_at(wave, &x));
            for i in 0..n {
                a[idx * n + i] += coeffs[i] * e;
            }
        }
    }
    // exact Hermitian symmetry of P
    for idx in 0..grid.len() {
        let block = &mut p[idx * n * n..(idx + 1) * n * n];
        for i in 0..n {
            block[i * n + i].im = 0.0;
            for j in i + 1..n {
                block[j * n + i] = block[i * n + j].conj();
            }
        }
    }
    (p, a)
}

/// `u*(z) = alpha sum_i (cos 2 pi x_i + sin 2 pi y_i)`.
pub fn manufactured_field(grid: &TorusGrid, alpha: f64) -> Vec<f64> {
    (0..grid.len())
        .map(|idx| {
            let x = grid.position(idx);
            alpha * (0..grid.n()).map(|i| (2.0 * PI * x[2 * i]).cos() + (2.0 * PI * x[2 * i + 1]).sin()).sum::<f64>()
        })
        .collect()
}

/// Analytic `u*_i` and `u*_{i j-bar}` (diagonal) at a point.
fn manufactured_derivatives(x: &[f64], n: usize, alpha: f64) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut first = Vec::with_capacity(n);
    let mut second = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        let (sx, cx) = (2.0 * PI * x[2 * i]).sin_cos();
        let (sy, cy) = (2.0 * PI * x[2 * i + 1]).sin_cos();
        first.push(Complex64::new(-PI * alpha * sx, -PI * alpha * cy));
        second[i * n + i] = Complex64::new(-PI * PI * alpha * (cx + sy), 0.0);
    }
    (first, second)
}

struct Candidate {
    g: Vec<f64>,
    w: Vec<Complex64>,
    admissible: bool,
}

fn build_candidate(
    grid: &TorusGrid,
    params: &ManufacturedParams,
    base: &ProblemSpec,
    u: &[f64],
    alpha: f64,
) -> Result<Candidate> {
    let n = grid.n();
    let k = params.k;
    let discrete = wirtinger(u, grid)?;
    let mut g = Vec::with_capacity(grid.len());
    let mut w = Vec::with_capacity(grid.len() * n);
    let mut admissible = true;
    for idx in 0..grid.len() {
        let (cf, cs) = manufactured_derivatives(&grid.position(idx), n, alpha);
        let chi_d = chi_at(base, idx, u[idx], discrete.first(idx), discrete.second(idx));
        let chi_c = chi_at(base, idx, u[idx], &cf, &cs);
        let eig_d = hermitian_eigen(&chi_d)?.spectrum;
        let eig_c = hermitian_eigen(&chi_c)?.spectrum;
        admissible &= eig_d.gamma_membership(k).inside && eig_c.gamma_membership(k).inside;
        let (sigma, grad) = match params.variant {
            Variant::Discrete => (eig_d.sigma(k), discrete.first(idx).to_vec()),
            Variant::Continuum => (eig_c.sigma(k), cf),
        };
        g.push(sigma - params.mu * u[idx]);
        w.extend(grad);
    }
    Ok(Candidate { g, w, admissible })
}

/// Builds `(spec, u*)` with `psi(z, v, t) = sigma_k(chi[u*])(z) + mu (t - u*(z))
/// + nu |v - Du*(z)|^2`. The amplitude is halved (at most 10 times) until
/// `chi[u*]`, with both discrete and analytic derivatives, lies in
/// `Gamma_k` at every point and `psi` stays positive for
/// `t >= -2 sup|u*|`.
pub fn manufactured_problem(grid: &TorusGrid, params: &ManufacturedParams) -> Result<Manufactured> {
    let n = grid.n();
    let (p, a) = random_background(grid, params.seed);
    let placeholder = Forcing {
        g: vec![0.0; grid.len()],
        w: vec![Complex64::new(0.0, 0.0); grid.len() * n],
        mu: params.mu,
        nu: params.nu,
    };
    let mut spec = ProblemSpec::from_fields(grid, params.k, params.eps, params.q2, p, a, placeholder)?;
    if !(params.amplitude > 0.0 && params.amplitude.is_finite()) {
        return Err(Error::Parameter(format!("amplitude must be positive, got {}", params.amplitude)));
    }

    let mut alpha = params.amplitude;
    for halvings in 0..=MAX_HALVINGS {
        let u = manufactured_field(grid, alpha);
        let cand = build_candidate(grid, params, &spec, &u, alpha)?;
        let sup = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let forcing = Forcing {
            g: cand.g,
            w: cand.w,
            mu: params.mu,
            nu: params.nu,
        };
        if cand.admissible && forcing.lower_bound(-2.0 * sup) > 0.0 {
            spec.forcing = forcing;
            spec.label = format!(
                "manufactured(k={}, alpha={alpha:e}, mu={}, nu={}, seed={}, {:?})",
                params.k, params.mu, params.nu, params.seed, params.variant
            );
            return Ok(Manufactured {
                spec,
                u_star: u,
                amplitude: alpha,
                halvings,
            });
        }
        alpha *= 0.5;
    }
    Err(Error::Infeasible(format!(
        "manufactured solution not admissible after {MAX_HALVINGS} halvings of amplitude {}",
        params.amplitude
    )))
}
