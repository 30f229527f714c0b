//! Restarted GMRES with a constant-coefficient FFT preconditioner.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::grid::TorusGrid;
use super::operator::LinearOperator;
use crate::error::{Error, Result};

/// Inverse of the grid-averaged operator, applied in Fourier space. The
/// averaged operator has constant coefficients on a periodic grid, so the
/// discrete Fourier basis diagonalizes it exactly.
pub struct FftPreconditioner {
    grid: TorusGrid,
    inverse_symbol: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    backward: Arc<dyn Fft<f64>>,
}

impl FftPreconditioner {
    pub fn new(op: &LinearOperator) -> Self {
        let grid = *op.grid();
        let mean = op.mean_coefficients();
        let m = grid.axes();
        let size = grid.size();
        let h = grid.h();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(size);
        let backward = planner.plan_fft_inverse(size);

        let scale = mean.iter().fold(0.0f64, |s, c| s.max(c.abs())) / (h * h);
        let inverse_symbol = (0..grid.len())
            .map(|idx| {
                let theta: Vec<f64> = (0..m).map(|a| 2.0 * PI * grid.coordinate(idx, a) as f64 / size as f64).collect();
                let mut s = Complex64::new(0.0, 0.0);
                let mut pos = 0;
                for a in 0..m {
                    for b in a..m {
                        let sym = if a == b {
                            (2.0 * theta[a].cos() - 2.0) / (h * h)
                        } else {
                            -theta[a].sin() * theta[b].sin() / (h * h)
                        };
                        s += mean[pos] * sym;
                        pos += 1;
                    }
                }
                for t in &theta {
                    s += Complex64::new(0.0, mean[pos] * t.sin() / h);
                    pos += 1;
                }
                s += mean[pos];
                if s.norm() <= 1e-14 * scale.max(1.0) {
                    Complex64::new(1.0, 0.0)
                } else {
                    1.0 / s
                }
            })
            .collect();
        Self {
            grid,
            inverse_symbol,
            forward,
            backward,
        }
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let g = &self.grid;
        let size = g.size();
        let mut line = vec![Complex64::new(0.0, 0.0); size];
        for axis in 0..g.axes() {
            let stride = g.stride(axis);
            for base in (0..g.len()).filter(|&i| g.coordinate(i, axis) == 0) {
                for (c, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + c * stride];
                }
                fft.process(&mut line);
                for (c, v) in line.iter().enumerate() {
                    data[base + c * stride] = *v;
                }
            }
        }
    }

    pub fn apply(&self, r: &[f64]) -> Vec<f64> {
        let mut data: Vec<Complex64> = r.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, &self.forward);
        for (d, s) in data.iter_mut().zip(&self.inverse_symbol) {
            *d *= s;
        }
        self.transform(&mut data, &self.backward);
        let len = self.grid.len() as f64;
        data.iter().map(|z| z.re / len).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovStats {
    pub iterations: usize,
    /// Final `||b - A x|| / ||b||` in the Euclidean norm.
    pub relative: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Right-preconditioned restarted GMRES for `A x = b` from `x = 0`.
pub fn gmres(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    precondition: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    tol: f64,
    restart: usize,
    max_iterations: usize,
) -> Result<(Vec<f64>, KrylovStats)> {
    let len = b.len();
    let b_norm = norm(b);
    let mut x = vec![0.0; len];
    if b_norm == 0.0 {
        return Ok((
            x,
            KrylovStats {
                iterations: 0,
                relative: 0.0,
            },
        ));
    }
    let restart = restart.max(1);
    let mut iterations = 0;
    let mut relative;
    while iterations < max_iterations {
        let ax = apply(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm(&r);
        relative = beta / b_norm;
        if relative <= tol {
            break;
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut hess: Vec<Vec<f64>> = Vec::new();
        let (mut cs, mut sn): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
        let mut g = vec![beta];
        let mut zs: Vec<Vec<f64>> = Vec::new();
        for j in 0..restart {
            if iterations >= max_iterations {
                break;
            }
            iterations += 1;
            let z = precondition(&basis[j]);
            let mut w = apply(&z);
            zs.push(z);
            let mut col = vec![0.0; j + 2];
            // modified Gram-Schmidt, two passes
            for _ in 0..2 {
                for (i, q) in basis.iter().enumerate() {
                    let c = dot(&w, q);
                    col[i] += c;
                    w.iter_mut().zip(q).for_each(|(wv, qv)| *wv -= c * qv);
                }
            }
            col[j + 1] = norm(&w);
            for i in 0..j {
                let t = cs[i] * col[i] + sn[i] * col[i + 1];
                col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let rho = col[j].hypot(col[j + 1]);
            let (c, s) = if rho == 0.0 { (1.0, 0.0) } else { (col[j] / rho, col[j + 1] / rho) };
            cs.push(c);
            sn.push(s);
            col[j] = rho;
            let next_norm = col[j + 1];
            col[j + 1] = 0.0;
            g.push(-s * g[j]);
            g[j] *= c;
            hess.push(col);
            relative = g[j + 1].abs() / b_norm;
            if relative <= tol || next_norm == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / next_norm).collect());
        }
        // back substitution for the least-squares coefficients
        let m = hess.len();
        let mut y = vec![0.0; m];
        for i in (0..m).rev() {
            let mut acc = g[i];
            for l in i + 1..m {
                acc -= hess[l][i] * y[l];
            }
            y[i] = acc / hess[i][i];
        }
        for (yi, z) in y.iter().zip(&zs) {
            x.iter_mut().zip(z).for_each(|(xv, zv)| *xv += yi * zv);
        }
    }
    let ax = apply(&x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    relative = norm(&r) / b_norm;
    if relative > tol {
        return Err(Error::LinearSolve { iterations, relative });
    }
    Ok((x, KrylovStats { iterations, relative }))
}
