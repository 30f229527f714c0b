use serde::{Deserialize, Serialize};

use super::grid::TorusGrid;
use super::operator::{holomorphic_hessian, wirtinger};
use super::problem::ProblemSpec;
use crate::error::Result;
use crate::symm::{hermitian_eigen, CMatrix};
use super::operator::chi_at;

/// Sup over the grid of the pointwise weighted norms, square-rooted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedNorms {
    /// `sup sqrt(sigma^{p q-bar} u_{mp} conj(u_{mq}))`.
    pub ddu_norm: f64,
    /// `sup sqrt(sigma^{p q-bar} u_{p m-bar} u_{m q-bar})`.
    pub ddbar_norm: f64,
}

/// Pointwise squared weighted norms for `G_{qp} = sigma^{p q-bar}`, the
/// holomorphic Hessian `H_{mp} = u_{mp}` and the complex Hessian
/// `W_{pq} = u_{p q-bar}`, evaluated as `tr(H G^T H^H)` and `tr(G W W)`.
pub fn pointwise_weighted(g: &CMatrix, hol: &CMatrix, mixed: &CMatrix) -> (f64, f64) {
    let n = g.dim();
    let gt = CMatrix::from_rows(n, (0..n * n).map(|i| g[(i % n, i / n)]).collect()).expect("square");
    let a = hol.matmul(&gt).matmul(&hol.adjoint());
    let b = g.matmul(mixed).matmul(mixed);
    let tr = |m: &CMatrix| (0..n).map(|i| m[(i, i)].re).sum::<f64>();
    (tr(&a).max(0.0), tr(&b).max(0.0))
}

pub fn weighted_norms(u: &[f64], spec: &ProblemSpec, grid: &TorusGrid) -> Result<WeightedNorms> {
    spec.check_grid(grid)?;
    let d = wirtinger(u, grid)?;
    let n = grid.n();
    let mut out = WeightedNorms {
        ddu_norm: 0.0,
        ddbar_norm: 0.0,
    };
    for idx in 0..grid.len() {
        let chi = chi_at(spec, idx, u[idx], d.first(idx), d.second(idx));
        let eig = hermitian_eigen(&chi)?;
        let g = eig.basis.conjugate_diagonal(&eig.spectrum.sigma_grad(spec.k));
        let mixed = CMatrix::from_rows(n, d.second(idx).to_vec())?;
        let (a, b) = pointwise_weighted(&g, &holomorphic_hessian(u, grid, idx), &mixed);
        out.ddu_norm = out.ddu_norm.max(a.sqrt());
        out.ddbar_norm = out.ddbar_norm.max(b.sqrt());
    }
    Ok(out)
}
