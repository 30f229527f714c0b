//! Pointwise discrete operators: Wirtinger derivatives, `chi[u]`, the
//! residual and its exact linearization.

use num_complex::Complex64;
use rayon::prelude::*;

use super::grid::TorusGrid;
use super::problem::ProblemSpec;
use crate::error::{Error, Result};
use crate::symm::{hermitian_eigen, CMatrix, HermitianMatrix};

/// Discrete `u_i` and `u_{i j-bar}` on every grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivatives {
    n: usize,
    first: Vec<Complex64>,
    second: Vec<Complex64>,
}

impl Derivatives {
    pub fn first(&self, index: usize) -> &[Complex64] {
        &self.first[index * self.n..(index + 1) * self.n]
    }

    /// Row-major `n x n` block of `u_{i j-bar}`.
    pub fn second(&self, index: usize) -> &[Complex64] {
        let m = self.n * self.n;
        &self.second[index * m..(index + 1) * m]
    }

    /// `|Du|^2 = sum_i |u_i|^2` at a point.
    pub fn grad_sq(&self, index: usize) -> f64 {
        self.first(index).iter().map(|z| z.norm_sqr()).sum()
    }
}

fn check_len(u: &[f64], grid: &TorusGrid) -> Result<()> {
    if u.len() != grid.len() {
        return Err(Error::Dimension {
            expected: grid.len(),
            actual: u.len(),
        });
    }
    Ok(())
}

/// Real Hessian `d^2 u / d s_a d s_b` over the `2n` real axes at a point.
fn real_hessian(u: &[f64], grid: &TorusGrid, index: usize) -> Vec<f64> {
    let m = grid.axes();
    let mut hess = vec![0.0; m * m];
    for a in 0..m {
        for b in a..m {
            let v = grid.d2(u, index, a, b);
            hess[a * m + b] = v;
            hess[b * m + a] = v;
        }
    }
    hess
}

fn point_wirtinger(u: &[f64], grid: &TorusGrid, index: usize, first: &mut [Complex64], second: &mut [Complex64]) {
    let n = grid.n();
    let m = grid.axes();
    let hess = real_hessian(u, grid, index);
    let d = |a: usize, b: usize| hess[a * m + b];
    for i in 0..n {
        first[i] = Complex64::new(grid.d1(u, index, 2 * i), -grid.d1(u, index, 2 * i + 1)) * 0.5;
        for j in i..n {
            let (xi, yi, xj, yj) = (2 * i, 2 * i + 1, 2 * j, 2 * j + 1);
            let v = Complex64::new(d(xi, xj) + d(yi, yj), d(xi, yj) - d(yi, xj)) * 0.25;
            second[i * n + j] = if i == j { Complex64::new(v.re, 0.0) } else { v };
            second[j * n + i] = v.conj();
        }
    }
}

/// Central-difference Wirtinger derivatives
/// `u_i = (u_{x_i} - i u_{y_i}) / 2` and
/// `u_{i j-bar} = (u_{x_i x_j} + u_{y_i y_j} + i (u_{x_i y_j} - u_{y_i x_j})) / 4`.
/// The second-derivative blocks are Hermitian exactly.
pub fn wirtinger(u: &[f64], grid: &TorusGrid) -> Result<Derivatives> {
    check_len(u, grid)?;
    let n = grid.n();
    let mut first = vec![Complex64::new(0.0, 0.0); grid.len() * n];
    let mut second = vec![Complex64::new(0.0, 0.0); grid.len() * n * n];
    first
        .par_chunks_mut(n)
        .zip(second.par_chunks_mut(n * n))
        .enumerate()
        .for_each(|(idx, (f, s))| point_wirtinger(u, grid, idx, f, s));
    Ok(Derivatives { n, first, second })
}

/// Holomorphic Hessian `u_{ij} = (u_{x_i x_j} - u_{y_i y_j} - i (u_{x_i y_j} + u_{y_i x_j})) / 4`.
pub fn holomorphic_hessian(u: &[f64], grid: &TorusGrid, index: usize) -> CMatrix {
    let n = grid.n();
    let m = grid.axes();
    let hess = real_hessian(u, grid, index);
    let d = |a: usize, b: usize| hess[a * m + b];
    let mut out = CMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let (xi, yi, xj, yj) = (2 * i, 2 * i + 1, 2 * j, 2 * j + 1);
            out[(i, j)] = Complex64::new(d(xi, xj) - d(yi, yj), -(d(xi, yj) + d(yi, xj))) * 0.25;
        }
    }
    out
}

/// `chi_{i j-bar} = chi'_{i j-bar}(z, t) + u_{i j-bar} + a_i conj(u_j) + conj(a_j) u_i`
/// from given derivative values.
pub fn chi_at(spec: &ProblemSpec, index: usize, t: f64, first: &[Complex64], second: &[Complex64]) -> HermitianMatrix {
    let n = spec.n();
    let base = spec.chi_prime(index, t);
    let a = spec.a_at(index);
    HermitianMatrix::from_upper(n, |i, j| {
        let v = base.get(i, j) + second[i * n + j] + a[i] * first[j].conj() + a[j].conj() * first[i];
        if i == j {
            Complex64::new(v.re, 0.0)
        } else {
            v
        }
    })
}

/// `chi[u]` at every grid point.
pub fn assemble_chi(u: &[f64], spec: &ProblemSpec, grid: &TorusGrid) -> Result<Vec<HermitianMatrix>> {
    spec.check_grid(grid)?;
    let d = wirtinger(u, grid)?;
    Ok((0..grid.len())
        .into_par_iter()
        .map(|idx| chi_at(spec, idx, u[idx], d.first(idx), d.second(idx)))
        .collect())
}

/// `sigma_k(chi[u]) - psi(z, Du, u)` at every grid point.
pub fn residual(u: &[f64], spec: &ProblemSpec, grid: &TorusGrid) -> Result<Vec<f64>> {
    Ok(evaluate(u, spec, grid, false)?.residual)
}

/// Everything the solver needs from one pass over the grid.
#[derive(Debug, Clone)]
pub(crate) struct FieldEval {
    pub residual: Vec<f64>,
    pub residual_inf: f64,
    /// First inadmissible point and the first failing `sigma_j`.
    pub first_failure: Option<(usize, usize)>,
    pub max_lambda1: f64,
    pub min_lambda_n: f64,
    pub max_grad: f64,
    /// `min sigma_{k-1}(lambda|i)` over points and indices.
    pub min_ellipticity: f64,
    pub lambda1: Vec<f64>,
    pub operator: Option<LinearOperator>,
}

struct PointEval {
    residual: f64,
    failure: Option<usize>,
    lambda1: f64,
    lambda_n: f64,
    grad: f64,
    ellipticity: f64,
    coefficients: Vec<f64>,
}

/// Number of stored coefficients per point: the upper triangle of the
/// second-order part, one per first derivative, one zero-order term.
fn coefficient_stride(axes: usize) -> usize {
    axes * (axes + 1) / 2 + axes + 1
}

/// Real coefficients of the linearization at one point, from
/// `G = d sigma_k / d chi` (so that `d sigma_k = sum_{ij} G_{ji} d chi_{ij}`).
fn point_coefficients(spec: &ProblemSpec, index: usize, t: f64, v: &[Complex64], g: &CMatrix) -> Vec<f64> {
    let n = spec.n();
    let m = 2 * n;
    let mut second = vec![0.0; m * m];
    for i in 0..n {
        for j in 0..n {
            // g_ji * (D_{xi xj} + D_{yi yj} + i (D_{xi yj} - D_{yi xj})) / 4, real part
            let c = g[(j, i)] * 0.25;
            let (xi, yi, xj, yj) = (2 * i, 2 * i + 1, 2 * j, 2 * j + 1);
            second[xi * m + xj] += c.re;
            second[yi * m + yj] += c.re;
            second[xi * m + yj] -= c.im;
            second[yi * m + xj] += c.im;
        }
    }
    let mut out = Vec::with_capacity(coefficient_stride(m));
    for a in 0..m {
        out.push(second[a * m + a]);
        for b in a + 1..m {
            out.push(second[a * m + b] + second[b * m + a]);
        }
    }
    // 2 Re(c_i v_i) with c_i = sum_j g_ji conj(a_j) - psi_{v_i}
    let a = spec.a_at(index);
    let psi_v = spec.forcing.grad_v(index, v);
    for i in 0..n {
        let c: Complex64 = (0..n).map(|j| g[(j, i)] * a[j].conj()).sum::<Complex64>() - psi_v[i];
        out.push(c.re);
        out.push(c.im);
    }
    let trace: f64 = (0..n).map(|i| g[(i, i)].re).sum();
    out.push(spec.dq(t) * trace - spec.forcing.mu);
    out
}

pub(crate) fn evaluate(u: &[f64], spec: &ProblemSpec, grid: &TorusGrid, linearize: bool) -> Result<FieldEval> {
    spec.check_grid(grid)?;
    let d = wirtinger(u, grid)?;
    let k = spec.k;
    let points: Vec<PointEval> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let first = d.first(idx);
            let chi = chi_at(spec, idx, u[idx], first, d.second(idx));
            let eig = hermitian_eigen(&chi)?;
            let s = &eig.spectrum;
            let membership = s.gamma_membership(k);
            let f = s.sigma_grad(k);
            let psi = spec.forcing.value(idx, first, u[idx]);
            let coefficients = if linearize {
                let g = eig.basis.conjugate_diagonal(&f);
                point_coefficients(spec, idx, u[idx], first, &g)
            } else {
                Vec::new()
            };
            Ok(PointEval {
                residual: s.sigma(k) - psi,
                failure: membership.first_failure,
                lambda1: s.largest(),
                lambda_n: s.smallest(),
                grad: d.grad_sq(idx).sqrt(),
                ellipticity: f.iter().fold(f64::INFINITY, |m, &v| m.min(v)),
                coefficients,
            })
        })
        .collect::<Result<_>>()?;

    let mut eval = FieldEval {
        residual: Vec::with_capacity(points.len()),
        residual_inf: 0.0,
        first_failure: None,
        max_lambda1: f64::NEG_INFINITY,
        min_lambda_n: f64::INFINITY,
        max_grad: 0.0,
        min_ellipticity: f64::INFINITY,
        lambda1: Vec::with_capacity(points.len()),
        operator: None,
    };
    let mut coeffs = Vec::new();
    for (idx, p) in points.into_iter().enumerate() {
        eval.residual_inf = eval.residual_inf.max(p.residual.abs());
        eval.residual.push(p.residual);
        if eval.first_failure.is_none() {
            eval.first_failure = p.failure.map(|j| (idx, j));
        }
        eval.max_lambda1 = eval.max_lambda1.max(p.lambda1);
        eval.min_lambda_n = eval.min_lambda_n.min(p.lambda_n);
        eval.max_grad = eval.max_grad.max(p.grad);
        eval.min_ellipticity = eval.min_ellipticity.min(p.ellipticity);
        eval.lambda1.push(p.lambda1);
        coeffs.extend(p.coefficients);
    }
    if linearize {
        eval.operator = Some(LinearOperator {
            grid: *grid,
            stride: coefficient_stride(grid.axes()),
            coeffs,
        });
    }
    Ok(eval)
}

/// Frozen-coefficient linearization
/// `L v = sum_{a <= b} C_ab D_ab v + sum_a B_a D_a v + c_0 v`.
#[derive(Debug, Clone)]
pub struct LinearOperator {
    grid: TorusGrid,
    stride: usize,
    coeffs: Vec<f64>,
}

impl LinearOperator {
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        let m = g.axes();
        (0..g.len())
            .into_par_iter()
            .map(|idx| {
                let c = &self.coeffs[idx * self.stride..(idx + 1) * self.stride];
                let mut acc = 0.0;
                let mut pos = 0;
                for a in 0..m {
                    for b in a..m {
                        if c[pos] != 0.0 {
                            acc += c[pos] * g.d2(v, idx, a, b);
                        }
                        pos += 1;
                    }
                }
                for a in 0..m {
                    acc += c[pos] * g.d1(v, idx, a);
                    pos += 1;
                }
                acc + c[pos] * v[idx]
            })
            .collect()
    }

    /// Grid average of each coefficient, in storage order.
    pub fn mean_coefficients(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.stride];
        for chunk in self.coeffs.chunks(self.stride) {
            for (m, c) in mean.iter_mut().zip(chunk) {
                *m += c;
            }
        }
        let len = self.grid.len() as f64;
        mean.iter_mut().for_each(|m| *m /= len);
        mean
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }
}

/// Newton linearization of [`residual`] at `u` applied to `v`:
/// `G^{i j-bar} (v_{i j-bar} + a_i v_{j-bar} + conj(a_j) v_i + q'(u) delta_ij v)
///  - psi_t v - 2 Re(psi_{v_l} v_l)`. Requires `chi[u]` in `Gamma_k`.
pub fn linearize_apply(u: &[f64], spec: &ProblemSpec, grid: &TorusGrid, v: &[f64]) -> Result<Vec<f64>> {
    check_len(v, grid)?;
    let op = linearization(u, spec, grid)?;
    Ok(op.apply(v))
}

/// The frozen operator behind [`linearize_apply`].
pub fn linearization(u: &[f64], spec: &ProblemSpec, grid: &TorusGrid) -> Result<LinearOperator> {
    let eval = evaluate(u, spec, grid, true)?;
    if let Some((index, failed)) = eval.first_failure {
        return Err(Error::Inadmissible { index, failed });
    }
    Ok(eval.operator.expect("requested"))
}
