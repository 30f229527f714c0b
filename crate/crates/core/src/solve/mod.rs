//! Complex Hessian equation `sigma_k(chi[u]) = psi(z, Du, u)` on the flat
//! torus, discretized by central differences and solved by damped Newton
//! iteration with matrix-free GMRES.

mod grid;
mod krylov;
mod newton;
mod norms;
mod operator;
mod problem;

pub use grid::TorusGrid;
pub use krylov::{gmres, FftPreconditioner, KrylovStats};
pub use newton::{
    continuity_path, diagnostics, newton_solve, newton_solve_traced, Diagnostics, IterateRecord, NewtonConfig,
    NewtonRun, PathReport, PathRun, PathStep, TorusSolution,
};
pub use norms::{pointwise_weighted, weighted_norms, WeightedNorms};
pub use operator::{
    assemble_chi, chi_at, holomorphic_hessian, linearization, linearize_apply, residual, wirtinger, Derivatives,
    LinearOperator,
};
pub use problem::{
    manufactured_field, manufactured_problem, random_background, Forcing, Manufactured, ManufacturedParams,
    ProblemSpec, Variant,
};

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::symm::hermitian_eigen;

    fn zero_c(len: usize) -> Vec<Complex64> {
        vec![Complex64::new(0.0, 0.0); len]
    }

    /// `chi' = eps I`, `a = 0`, `psi = g + mu t`.
    fn flat_spec(grid: &TorusGrid, k: usize, g: f64) -> ProblemSpec {
        let n = grid.n();
        let len = grid.len();
        let forcing = Forcing {
            g: vec![g; len],
            w: zero_c(len * n),
            mu: 1.0,
            nu: 0.0,
        };
        ProblemSpec::from_fields(grid, k, 1.0, 0.0, zero_c(len * n * n), zero_c(len * n), forcing).unwrap()
    }

    #[test]
    fn wirtinger_examples() {
        let g = TorusGrid::new(2, 16).unwrap();
        let d = wirtinger(&vec![3.5; g.len()], &g).unwrap();
        assert!(d.first(5).iter().chain(d.second(77)).all(|z| z.norm() == 0.0));

        let u: Vec<f64> = (0..g.len()).map(|i| (2.0 * PI * g.position(i)[0]).cos()).collect();
        let d = wirtinger(&u, &g).unwrap();
        let h = g.h();
        for i in [0, 1000, 4321] {
            let want = -PI * PI * (2.0 * PI * g.position(i)[0]).cos();
            let got = d.second(i)[0];
            assert!(got.im == 0.0);
            assert!((got.re - want).abs() < 5.0 * h * h * PI.powi(4), "{} vs {want}", got.re);
        }
    }

    #[test]
    fn wirtinger_blocks_are_hermitian() {
        let g = TorusGrid::new(3, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u: Vec<f64> = (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let d = wirtinger(&u, &g).unwrap();
        for idx in [0, 999, g.len() - 1] {
            let s = d.second(idx);
            for i in 0..3 {
                for j in 0..3 {
                    assert_eq!(s[i * 3 + j], s[j * 3 + i].conj());
                }
            }
        }
    }

    #[test]
    fn assemble_examples() {
        let g = TorusGrid::new(2, 8).unwrap();
        let m = manufactured_problem(&g, &ManufacturedParams::default()).unwrap();
        let chi = assemble_chi(&vec![0.0; g.len()], &m.spec, &g).unwrap();
        for idx in [0, 100, 4095] {
            assert_eq!(chi[idx], m.spec.chi_prime(idx, 0.0));
        }
        let chi = assemble_chi(&m.u_star, &m.spec, &g).unwrap();
        assert!(chi.iter().all(|c| c.matrix().hermitian_deviation() <= 1e-12));

        let flat = flat_spec(&g, 2, 1.0);
        let chi = assemble_chi(&m.u_star, &flat, &g).unwrap();
        let d = wirtinger(&m.u_star, &g).unwrap();
        for idx in [3, 300] {
            for i in 0..2 {
                for j in 0..2 {
                    let want = d.second(idx)[i * 2 + j] + if i == j { 1.0 } else { 0.0 };
                    assert!((chi[idx].get(i, j) - want).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn trivial_start_is_solved_by_zero() {
        let g = TorusGrid::new(2, 8).unwrap();
        let m = manufactured_problem(&g, &ManufacturedParams::default()).unwrap();
        let start = m.spec.trivial_start().unwrap();
        let r = residual(&vec![0.0; g.len()], &start, &g).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn manufactured_discrete_is_exact() {
        let g = TorusGrid::new(2, 8).unwrap();
        let params = ManufacturedParams {
            nu: 0.0,
            ..Default::default()
        };
        let m = manufactured_problem(&g, &params).unwrap();
        let r = residual(&m.u_star, &m.spec, &g).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-13));
        let sup = m.u_star.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(m.spec.forcing.lower_bound(-2.0 * sup) > 0.0);
        assert!(m.spec.background_margin(&[-0.5, 0.0, 0.5]).unwrap() >= -1e-12);
        let chi = assemble_chi(&m.u_star, &m.spec, &g).unwrap();
        for c in &chi {
            assert!(hermitian_eigen(c).unwrap().spectrum.gamma_membership(2).inside);
        }
    }

    #[test]
    fn amplitude_is_halved_when_needed() {
        let g = TorusGrid::new(2, 8).unwrap();
        let params = ManufacturedParams {
            amplitude: 0.8,
            ..Default::default()
        };
        let m = manufactured_problem(&g, &params).unwrap();
        assert!(m.halvings > 0);
        assert_eq!(m.amplitude, 0.8 / 2f64.powi(m.halvings as i32));
        let huge = ManufacturedParams {
            amplitude: 1e6,
            ..Default::default()
        };
        assert!(manufactured_problem(&g, &huge).is_err());
    }

    #[test]
    fn continuum_residual_is_second_order() {
        let params = ManufacturedParams {
            variant: Variant::Continuum,
            ..Default::default()
        };
        let sup = |size: usize| {
            let g = TorusGrid::new(2, size).unwrap();
            let m = manufactured_problem(&g, &params).unwrap();
            residual(&m.u_star, &m.spec, &g).unwrap().iter().fold(0.0f64, |a, v| a.max(v.abs()))
        };
        let ratio = sup(8) / sup(16);
        assert!((3.2..=4.8).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn linearization_examples() {
        let g = TorusGrid::new(2, 8).unwrap();
        let m = manufactured_problem(&g, &ManufacturedParams::default()).unwrap();
        let zero = vec![0.0; g.len()];
        assert!(linearize_apply(&m.u_star, &m.spec, &g, &zero).unwrap().iter().all(|&v| v == 0.0));

        let flat = flat_spec(&g, 2, 1.0);
        let ones = vec![0.7; g.len()];
        let out = linearize_apply(&m.u_star, &flat, &g, &ones).unwrap();
        assert!(out.iter().all(|v| (v + 0.7).abs() < 1e-12));

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v: Vec<f64> = (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let eps = 1e-6;
        let plus: Vec<f64> = m.u_star.iter().zip(&v).map(|(a, b)| a + eps * b).collect();
        let minus: Vec<f64> = m.u_star.iter().zip(&v).map(|(a, b)| a - eps * b).collect();
        let rp = residual(&plus, &m.spec, &g).unwrap();
        let rm = residual(&minus, &m.spec, &g).unwrap();
        let lin = linearize_apply(&m.u_star, &m.spec, &g, &v).unwrap();
        let mut err = 0.0f64;
        let mut scale = 0.0f64;
        for i in 0..g.len() {
            err = err.max(((rp[i] - rm[i]) / (2.0 * eps) - lin[i]).abs());
            scale = scale.max(lin[i].abs());
        }
        assert!(err / scale < 1e-5, "relative {}", err / scale);
    }

    #[test]
    fn inadmissible_linearization_rejected() {
        let g = TorusGrid::new(2, 8).unwrap();
        let flat = flat_spec(&g, 2, 1.0);
        let u = manufactured_field(&g, 1.0);
        assert!(matches!(
            linearize_apply(&u, &flat, &g, &u),
            Err(crate::Error::Inadmissible { .. })
        ));
        assert!(newton_solve(&flat, &g, u, &NewtonConfig::default()).is_err());
    }

    #[test]
    fn newton_from_solution_and_from_zero() {
        let g = TorusGrid::new(2, 8).unwrap();
        let m = manufactured_problem(&g, &ManufacturedParams::default()).unwrap();
        let config = NewtonConfig::default();
        let run = newton_solve(&m.spec, &g, m.u_star.clone(), &config).unwrap();
        assert!(run.iterations() <= 2);

        let run = newton_solve(&m.spec, &g, vec![0.0; g.len()], &config).unwrap();
        assert!(run.solution.diagnostics.residual_inf <= 1e-8);
        assert!(run.history.iter().all(|r| r.admissible && r.min_ellipticity > 0.0));
        assert!(run.history.windows(2).all(|w| w[1].residual_inf < w[0].residual_inf));
        let err = run.solution.u.iter().zip(&m.u_star).fold(0.0f64, |e, (a, b)| e.max((a - b).abs()));
        assert!(err < 1e-8, "error {err}");
        // determinism
        let again = newton_solve(&m.spec, &g, vec![0.0; g.len()], &config).unwrap();
        assert_eq!(again.solution, run.solution);
    }

    #[test]
    fn trivial_path() {
        let g = TorusGrid::new(2, 8).unwrap();
        let m = manufactured_problem(&g, &ManufacturedParams::default()).unwrap();
        let start = m.spec.trivial_start().unwrap();
        let run = continuity_path(&start, &g, 1, &NewtonConfig::default()).unwrap();
        assert!(run.report.completed);
        assert_eq!(run.report.steps.len(), 1);
        assert!(run.solution.unwrap().u.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn weighted_norm_examples() {
        let g = TorusGrid::new(2, 8).unwrap();
        let m = manufactured_problem(&g, &ManufacturedParams::default()).unwrap();
        let w = weighted_norms(&vec![0.0; g.len()], &m.spec, &g).unwrap();
        assert_eq!((w.ddu_norm, w.ddbar_norm), (0.0, 0.0));

        let u = &m.u_star;
        let d = wirtinger(u, &g).unwrap();
        for idx in [0, 77, 2000] {
            let chi = chi_at(&m.spec, idx, u[idx], d.first(idx), d.second(idx));
            let eig = hermitian_eigen(&chi).unwrap();
            let gm = eig.basis.conjugate_diagonal(&eig.spectrum.sigma_grad(2));
            let hol = holomorphic_hessian(u, &g, idx);
            let mixed = crate::symm::CMatrix::from_rows(2, d.second(idx).to_vec()).unwrap();
            let (a, b) = pointwise_weighted(&gm, &hol, &mixed);
            // direct triple sums
            let mut a2 = Complex64::new(0.0, 0.0);
            let mut b2 = Complex64::new(0.0, 0.0);
            for mm in 0..2 {
                for p in 0..2 {
                    for q in 0..2 {
                        a2 += gm[(q, p)] * hol[(mm, p)] * hol[(mm, q)].conj();
                        b2 += gm[(q, p)] * mixed[(p, mm)] * mixed[(mm, q)];
                    }
                }
            }
            assert!((a - a2.re).abs() <= 1e-12 * (1.0 + a) && (b - b2.re).abs() <= 1e-12 * (1.0 + b));
            let gmin = hermitian_eigen(&crate::symm::HermitianMatrix::new(gm.clone()).unwrap())
                .unwrap()
                .spectrum
                .smallest();
            assert!(a >= gmin * hol.frobenius().powi(2) - 1e-12);
            assert!(b >= gmin * mixed.frobenius().powi(2) - 1e-12);
        }
    }
}
