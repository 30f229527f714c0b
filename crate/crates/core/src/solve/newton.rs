use serde::{Deserialize, Serialize};

use super::grid::TorusGrid;
use super::krylov::{gmres, FftPreconditioner};
use super::operator::{evaluate, FieldEval};
use super::problem::ProblemSpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NewtonConfig {
    /// Target sup-norm of the residual.
    pub residual_tol: f64,
    pub max_iters: usize,
    /// Step reduction factor of the backtracking line search.
    pub damping: f64,
    pub min_step: f64,
    /// Relative Euclidean tolerance of each linear solve.
    pub linear_tol: f64,
    pub krylov_restart: usize,
    pub krylov_max_iters: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            residual_tol: 1e-8,
            max_iters: 50,
            damping: 0.5,
            min_step: 1e-4,
            linear_tol: 1e-10,
            krylov_restart: 60,
            krylov_max_iters: 1200,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.residual_tol > 0.0
            && self.max_iters > 0
            && self.damping > 0.0
            && self.damping < 1.0
            && self.min_step > 0.0
            && self.min_step <= 1.0
            && self.linear_tol > 0.0
            && self.krylov_restart > 0
            && self.krylov_max_iters > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter(format!("invalid Newton configuration {self:?}")))
        }
    }
}

/// Field summaries of an admissible iterate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub max_lambda1: f64,
    /// `sup |Du|` with `|Du|^2 = sum_i |u_i|^2`.
    pub max_grad: f64,
    pub min_lambda_n: f64,
    pub residual_inf: f64,
    /// `min sigma_{k-1}(lambda|i)` over points and indices.
    pub min_ellipticity: f64,
    pub sup_u: f64,
}

impl Diagnostics {
    fn from_eval(eval: &FieldEval, u: &[f64]) -> Self {
        Self {
            max_lambda1: eval.max_lambda1,
            max_grad: eval.max_grad,
            min_lambda_n: eval.min_lambda_n,
            residual_inf: eval.residual_inf,
            min_ellipticity: eval.min_ellipticity,
            sup_u: u.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusSolution {
    pub grid: TorusGrid,
    pub u: Vec<f64>,
    pub spec_id: String,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterateRecord {
    pub iteration: usize,
    pub residual_inf: f64,
    /// Accepted step length; 0 for the initial guess.
    pub step: f64,
    pub linear_iterations: usize,
    pub admissible: bool,
    pub min_ellipticity: f64,
}

/// Outcome of [`newton_solve_traced`]: the last accepted iterate, its
/// history, and the failure if the solve did not converge.
#[derive(Debug)]
pub struct NewtonRun {
    pub solution: TorusSolution,
    pub history: Vec<IterateRecord>,
    pub failure: Option<Error>,
}

impl NewtonRun {
    pub fn converged(&self) -> bool {
        self.failure.is_none()
    }

    pub fn iterations(&self) -> usize {
        self.history.len().saturating_sub(1)
    }
}

/// Damped Newton iteration. Every accepted iterate keeps `chi[u]` in
/// `Gamma_k` at every point and strictly lowers the sup-norm residual.
/// Fails only on an inadmissible start; later failures are recorded in the
/// returned run.
pub fn newton_solve_traced(spec: &ProblemSpec, grid: &TorusGrid, u0: Vec<f64>, config: &NewtonConfig) -> Result<NewtonRun> {
    config.validate()?;
    let mut u = u0;
    let mut eval = evaluate(&u, spec, grid, true)?;
    if let Some((index, failed)) = eval.first_failure {
        return Err(Error::Inadmissible { index, failed });
    }
    let mut history = vec![IterateRecord {
        iteration: 0,
        residual_inf: eval.residual_inf,
        step: 0.0,
        linear_iterations: 0,
        admissible: true,
        min_ellipticity: eval.min_ellipticity,
    }];
    let mut failure = None;
    let mut iteration = 0;
    while eval.residual_inf > config.residual_tol {
        if iteration >= config.max_iters {
            failure = Some(Error::NewtonNotConverged {
                iterations: iteration,
                residual: eval.residual_inf,
            });
            break;
        }
        iteration += 1;
        let op = eval.operator.take().expect("linearized");
        let pre = FftPreconditioner::new(&op);
        let rhs: Vec<f64> = eval.residual.iter().map(|r| -r).collect();
        let (delta, stats) = match gmres(
            |v| op.apply(v),
            |v| pre.apply(v),
            &rhs,
            config.linear_tol,
            config.krylov_restart,
            config.krylov_max_iters,
        ) {
            Ok(out) => out,
            Err(e) => {
                failure = Some(e);
                break;
            }
        };

        let mut step = 1.0;
        let accepted = loop {
            let trial: Vec<f64> = u.iter().zip(&delta).map(|(a, d)| a + step * d).collect();
            let trial_eval = evaluate(&trial, spec, grid, true)?;
            if trial_eval.first_failure.is_none() && trial_eval.residual_inf < eval.residual_inf {
                break Some((trial, trial_eval));
            }
            step *= config.damping;
            if step < config.min_step {
                break None;
            }
        };
        let Some((trial, trial_eval)) = accepted else {
            failure = Some(Error::LineSearchStall {
                iteration,
                residual: eval.residual_inf,
            });
            break;
        };
        u = trial;
        eval = trial_eval;
        history.push(IterateRecord {
            iteration,
            residual_inf: eval.residual_inf,
            step,
            linear_iterations: stats.iterations,
            admissible: true,
            min_ellipticity: eval.min_ellipticity,
        });
    }
    let diagnostics = Diagnostics::from_eval(&eval, &u);
    Ok(NewtonRun {
        solution: TorusSolution {
            grid: *grid,
            u,
            spec_id: spec.label.clone(),
            diagnostics,
        },
        history,
        failure,
    })
}

/// [`newton_solve_traced`] with failures turned into errors.
pub fn newton_solve(spec: &ProblemSpec, grid: &TorusGrid, u0: Vec<f64>, config: &NewtonConfig) -> Result<NewtonRun> {
    let mut run = newton_solve_traced(spec, grid, u0, config)?;
    match run.failure.take() {
        Some(e) => Err(e),
        None => Ok(run),
    }
}

/// Diagnostics of an arbitrary field without solving.
pub fn diagnostics(u: &[f64], spec: &ProblemSpec, grid: &TorusGrid) -> Result<(Diagnostics, bool)> {
    let eval = evaluate(u, spec, grid, false)?;
    Ok((Diagnostics::from_eval(&eval, u), eval.first_failure.is_none()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathStep {
    pub s: f64,
    pub iterations: usize,
    pub residual_inf: f64,
    pub max_lambda1: f64,
    pub max_grad: f64,
    pub min_lambda_n: f64,
    pub sup_u: f64,
    /// `max lambda_1 / (1 + sup |Du|^2)`, tracked as a proxy for the
    /// unspecified constant of the second-order estimate.
    pub lambda1_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathReport {
    pub steps: Vec<PathStep>,
    pub completed: bool,
    pub failure: Option<String>,
}

#[derive(Debug)]
pub struct PathRun {
    pub report: PathReport,
    /// Solution of the last completed step.
    pub solution: Option<TorusSolution>,
}

/// Continuation from `psi_0 = sigma_k(chi'(z, 0)) + mu t + nu |v|^2` (solved
/// by `u = 0`) to the forcing of `spec_end` over `steps` uniform steps,
/// warm-starting each solve from the previous one. A failed step ends the
/// path with a partial report.
pub fn continuity_path(spec_end: &ProblemSpec, grid: &TorusGrid, steps: usize, config: &NewtonConfig) -> Result<PathRun> {
    if steps == 0 {
        return Err(Error::Parameter("continuity path needs at least one step".into()));
    }
    let start = spec_end.trivial_start()?;
    let mut u = vec![0.0; grid.len()];
    let (_, admissible) = diagnostics(&u, &start, grid)?;
    if !admissible {
        return Err(Error::Infeasible("trivial start u = 0 is not admissible".into()));
    }
    let mut report = PathReport {
        steps: Vec::with_capacity(steps),
        completed: false,
        failure: None,
    };
    let mut solution = None;
    for j in 1..=steps {
        let s = j as f64 / steps as f64;
        let spec = spec_end.blend_from(&start, s)?;
        match newton_solve(&spec, grid, u.clone(), config) {
            Ok(run) => {
                let d = run.solution.diagnostics;
                report.steps.push(PathStep {
                    s,
                    iterations: run.iterations(),
                    residual_inf: d.residual_inf,
                    max_lambda1: d.max_lambda1,
                    max_grad: d.max_grad,
                    min_lambda_n: d.min_lambda_n,
                    sup_u: d.sup_u,
                    lambda1_ratio: d.max_lambda1 / (1.0 + d.max_grad * d.max_grad),
                });
                u = run.solution.u.clone();
                solution = Some(run.solution);
            }
            Err(e) => {
                report.failure = Some(format!("step {j} (s = {s}): {e}"));
                return Ok(PathRun { report, solution });
            }
        }
    }
    report.completed = true;
    Ok(PathRun { report, solution })
}
