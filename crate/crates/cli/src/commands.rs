use std::fs;
use std::path::{Path, PathBuf};

use hesslab::cone::{
    counterexample_search, iqc0_margin, key_margin, lu_margin, random_unit_real_xi, random_unit_xi, sample_gamma_k,
    sample_pinned, threshold_search, zhang_margin, ConeConstraints, InequalityCase, SearchOutcome, ThresholdReport,
    VIOLATION_TOL,
};
use hesslab::io::{fmt_f64, to_json, to_json_line, ConeConfig, RunConfig, Snapshot};
use hesslab::monitor::{critical_check, MonitorReport, TestFunctionParams};
use hesslab::solve::{
    continuity_path, manufactured_problem, newton_solve_traced, Diagnostics, IterateRecord, PathReport, TorusGrid,
    TorusSolution,
};
use hesslab::verify::{run_suite, Suite};
use hesslab::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::table::{indexed, Table};
use crate::{Action, ConeOverrides, InequalityArgs, Mode, MonitorArgs, SampleArgs, SolveArgs, VerifyArgs};

/// Every structured report: the command, its seed, the resolved
/// configuration, and the result.
#[derive(Serialize)]
struct Report<'a, C: Serialize, R: Serialize> {
    command: &'a str,
    seed: u64,
    config: &'a C,
    result: R,
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(p, text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Format(format!("cannot read {}: {e}", path.display())))
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::parse(&read_text(p)?),
        None => Ok(RunConfig::default()),
    }
}

impl ConeOverrides {
    fn apply(&self, c: &mut ConeConfig) {
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field {
                    c.$field = v;
                }
            )*};
        }
        set!(n, k, floor, eps0, delta0, l, lu_eps, iqc0_c, samples, samples_per_level, restarts, threshold_factor);
        if let Some(band) = &self.sigma_band {
            c.sigma_band = [band[0], band[1]];
        }
        if self.big_k.is_some() {
            c.big_k = self.big_k;
        }
        if self.lambda1.is_some() {
            c.lambda1 = self.lambda1;
        }
    }
}

#[derive(Serialize)]
struct VerifyConfig {
    suite: Suite,
    seed: u64,
    count: usize,
}

pub fn verify(args: VerifyArgs) -> Result<bool> {
    let report = run_suite(args.suite, args.seed, args.count)?;
    for p in &report.properties {
        eprintln!(
            "{} {:<40} samples {:>8}  worst {:.3e}  tol {:.1e}",
            if p.passed { "PASS" } else { "FAIL" },
            p.name,
            p.samples,
            p.worst_deviation,
            p.tolerance
        );
    }
    let config = VerifyConfig {
        suite: args.suite,
        seed: args.seed,
        count: args.count,
    };
    let passed = report.passed;
    let text = to_json(&Report {
        command: "verify",
        seed: args.seed,
        config: &config,
        result: report,
    })?;
    write_out(args.out.as_deref(), &text)?;
    Ok(passed)
}

fn resolve_cone(config: Option<&Path>, seed: Option<u64>, overrides: &ConeOverrides) -> Result<RunConfig> {
    let mut config = load_config(config)?;
    if let Some(s) = seed {
        config.seed = s;
    }
    overrides.apply(&mut config.cone);
    config.cone.validate()?;
    Ok(config)
}

/// Pinned level: the configured `lambda1`, or `threshold_factor` times the
/// located threshold.
fn resolve_level(
    c: &ConeConfig,
    constraints: &ConeConstraints,
    seed: u64,
) -> Result<(f64, Option<ThresholdReport>)> {
    match c.lambda1 {
        Some(level) => Ok((level, None)),
        None => {
            let t = threshold_search(constraints, c.eps0, c.big_k(), c.samples_per_level, seed)?;
            Ok((c.threshold_factor * t.lambda1_star, Some(t)))
        }
    }
}

#[derive(Serialize)]
struct AdversarialResult {
    lambda1_floor: f64,
    threshold: Option<ThresholdReport>,
    outcome: SearchOutcome,
    violation_found: bool,
}

pub fn inequality(args: InequalityArgs) -> Result<bool> {
    let config = resolve_cone(args.config.as_deref(), args.seed, &args.cone)?;
    let c = &config.cone;
    let seed = config.seed;
    let constraints = c.constraints()?;
    if args.mode == Mode::Iqc0 && c.k < 2 {
        return Err(Error::Parameter("iqc0 mode needs k >= 2".into()));
    }
    if args.action != Action::Margins && args.mode != Mode::Key {
        return Err(Error::Parameter("threshold and adversarial actions apply to key mode only".into()));
    }
    match args.action {
        Action::Threshold => {
            let t = threshold_search(&constraints, c.eps0, c.big_k(), c.samples_per_level, seed)?;
            eprintln!("threshold lambda_1* = {:.6e} after {} levels", t.lambda1_star, t.levels_tested.len());
            let text = to_json(&Report {
                command: "inequality threshold",
                seed,
                config: &config,
                result: t,
            })?;
            write_out(args.out.as_deref(), &text)?;
        }
        Action::Adversarial => {
            let (level, threshold) = resolve_level(c, &constraints, seed)?;
            let outcome = counterexample_search(&constraints, c.eps0, c.big_k(), level, c.restarts, seed, &config.search)?;
            let violation_found = outcome.worst_margin < -VIOLATION_TOL;
            eprintln!(
                "adversarial search above lambda_1 = {level:.6e}: worst margin {:.6e} after {} evaluations",
                outcome.worst_margin, outcome.evaluations
            );
            let text = to_json(&Report {
                command: "inequality adversarial",
                seed,
                config: &config,
                result: AdversarialResult {
                    lambda1_floor: level,
                    threshold,
                    outcome,
                    violation_found,
                },
            })?;
            write_out(args.out.as_deref(), &text)?;
        }
        Action::Margins => {
            let (level, _) = resolve_level(c, &constraints, seed)?;
            let table = margin_table(args.mode, &config, &constraints, level)?;
            write_out(args.out.as_deref(), &table.render()?)?;
        }
    }
    Ok(true)
}

fn margin_table(mode: Mode, config: &RunConfig, constraints: &ConeConstraints, level: f64) -> Result<Table> {
    let c = &config.cone;
    let n = c.n;
    let mut header = indexed("lambda", n);
    match mode {
        Mode::Key | Mode::Iqc0 => {
            for i in 1..=n {
                header.push(format!("xi_re_{i}"));
                header.push(format!("xi_im_{i}"));
            }
        }
        Mode::Lu | Mode::Zhang => header.extend(indexed("xi", n)),
    }
    match mode {
        Mode::Key => header.extend(["t1", "t2", "t3", "rhs", "imag_residue"].map(String::from)),
        Mode::Iqc0 => header.extend(["t1", "t2"].map(String::from)),
        Mode::Lu | Mode::Zhang => {}
    }
    header.push("margin".into());
    let mut table = Table::new(header);
    let mode_name = match mode {
        Mode::Key => "key",
        Mode::Lu => "lu",
        Mode::Zhang => "zhang",
        Mode::Iqc0 => "iqc0",
    };
    table.comment(format!("hesslab inequality margins mode={mode_name} seed={}", config.seed));
    table.comment(format!("config {}", to_json_line(config)?));
    table.comment(format!("lambda1_level {}", fmt_f64(level)));

    let spectra = sample_pinned(constraints, level, c.samples, config.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut min_margin = f64::INFINITY;
    let mut violations = 0;
    for spectrum in spectra {
        let mut row: Vec<f64> = spectrum.values().to_vec();
        let margin = match mode {
            Mode::Key | Mode::Iqc0 => {
                let xi = random_unit_xi(n, &mut rng);
                row.extend(xi.iter().flat_map(|z| [z.re, z.im]));
                let case = InequalityCase::new(spectrum, xi, c.k, c.big_k(), c.eps0, c.floor)?;
                let r = key_margin(&case)?;
                if mode == Mode::Key {
                    row.extend([r.t1, r.t2, r.t3, r.rhs, r.imag_residue]);
                    r.margin
                } else {
                    row.extend([r.t1, r.t2]);
                    iqc0_margin(&case, c.iqc0_c)?
                }
            }
            Mode::Lu | Mode::Zhang => {
                let xi = random_unit_real_xi(n, &mut rng);
                row.extend(&xi);
                if mode == Mode::Lu {
                    lu_margin(&spectrum, &xi, c.k, c.delta0, c.lu_eps, c.l)?
                } else {
                    zhang_margin(&spectrum, &xi, c.k, c.big_k(), c.floor, c.delta0)?
                }
            }
        };
        row.push(margin);
        table.push(&row);
        min_margin = min_margin.min(margin);
        if margin < -VIOLATION_TOL {
            violations += 1;
        }
    }
    eprintln!(
        "{mode_name} margins at lambda_1 = {level:.6e}: {} cases, {violations} below -{VIOLATION_TOL:e}, min {min_margin:.6e}",
        c.samples
    );
    Ok(table)
}

#[derive(Serialize)]
struct SolveResult {
    grid: TorusGrid,
    amplitude_used: f64,
    halvings: usize,
    converged: bool,
    iterations: usize,
    history: Vec<IterateRecord>,
    diagnostics: Option<Diagnostics>,
    /// `sup |u - u*|` against the manufactured field.
    error_vs_manufactured: Option<f64>,
    path: Option<PathReport>,
    failure: Option<String>,
}

pub fn solve(args: SolveArgs) -> Result<bool> {
    let mut config = load_config(Some(&args.config))?;
    if args.continuity.is_some() {
        config.solve.continuity = args.continuity;
    }
    config.validate()?;
    let out_dir = args.out_dir.unwrap_or_else(|| PathBuf::from(&config.output.dir));
    let grid = config.grid()?;
    let params = config.manufactured_params();
    let m = manufactured_problem(&grid, &params)?;
    let mut result = SolveResult {
        grid,
        amplitude_used: m.amplitude,
        halvings: m.halvings,
        converged: false,
        iterations: 0,
        history: Vec::new(),
        diagnostics: None,
        error_vs_manufactured: None,
        path: None,
        failure: None,
    };

    let mut solution: Option<TorusSolution> = None;
    if let Some(steps) = config.solve.continuity {
        let run = continuity_path(&m.spec, &grid, steps, &config.newton)?;
        let mut table = Table::new(
            ["s", "iterations", "residual_inf", "max_lambda1", "max_grad", "min_lambda_n", "sup_u", "lambda1_ratio"]
                .map(String::from)
                .to_vec(),
        );
        table.comment(format!("hesslab solve continuity seed={}", config.seed));
        table.comment(format!("config {}", to_json_line(&config)?));
        for s in &run.report.steps {
            let mut row = vec![fmt_f64(s.s), s.iterations.to_string()];
            row.extend(
                [s.residual_inf, s.max_lambda1, s.max_grad, s.min_lambda_n, s.sup_u, s.lambda1_ratio].map(fmt_f64),
            );
            table.push_cells(row);
        }
        write_out(Some(&out_dir.join("path.csv")), &table.render()?)?;
        result.iterations = run.report.steps.iter().map(|s| s.iterations).sum();
        result.converged = run.report.completed;
        result.failure = run.report.failure.clone();
        result.path = Some(run.report);
        if result.converged {
            solution = run.solution;
        }
    } else {
        let u0: Vec<f64> = m.u_star.iter().map(|v| config.solve.initial_scale * v).collect();
        match newton_solve_traced(&m.spec, &grid, u0, &config.newton) {
            Ok(run) => {
                result.converged = run.converged();
                result.iterations = run.iterations();
                result.failure = run.failure.as_ref().map(|e| e.to_string());
                result.history = run.history;
                result.diagnostics = Some(run.solution.diagnostics);
                if result.converged {
                    solution = Some(run.solution);
                }
            }
            Err(e) => result.failure = Some(format!("initial guess rejected: {e}")),
        }
    }
    if let Some(sol) = &solution {
        result.diagnostics = Some(sol.diagnostics);
        result.error_vs_manufactured =
            Some(sol.u.iter().zip(&m.u_star).fold(0.0f64, |e, (a, b)| e.max((a - b).abs())));
        write_out(Some(&out_dir.join("snapshot.json")), &Snapshot::new(sol, &params, &m).to_json()?)?;
    }
    match &result.failure {
        Some(f) => eprintln!("error: solve failed: {f}"),
        None => eprintln!(
            "converged in {} iterations, residual {:.3e}",
            result.iterations,
            result.diagnostics.map_or(f64::NAN, |d| d.residual_inf)
        ),
    }
    let converged = result.converged;
    let text = to_json(&Report {
        command: "solve",
        seed: config.seed,
        config: &config,
        result,
    })?;
    write_out(Some(&out_dir.join("solve_report.json")), &text)?;
    Ok(converged)
}

#[derive(Serialize)]
struct MonitorConfig {
    solution: String,
    spec_id: String,
    params: TestFunctionParams,
}

pub fn monitor(args: MonitorArgs) -> Result<bool> {
    let snapshot = Snapshot::parse(&read_text(&args.solution)?)?;
    let mut params = load_config(args.config.as_deref())?.monitor;
    if let Some(n) = args.n_exp {
        params.n_exp = n;
    }
    if args.lambda.is_some() {
        params.lambda = args.lambda;
    }
    if !(params.n_exp > 1.0) || params.lambda.is_some_and(|l| !(l > params.n_exp)) {
        return Err(Error::Parameter(format!("monitor needs Lambda > N > 1, got {params:?}")));
    }
    let m = snapshot.rebuild()?;
    let report: MonitorReport = critical_check(&snapshot.solution()?, &m.spec, &params)?;
    eprintln!(
        "Q_max {:.6e} at {:?}, |grad Q| {:.3e}, sign condition {:.3e}, Lambda {:.4} ({})",
        report.q_max,
        report.argmax_index,
        report.grad_q_norm,
        report.sign_condition,
        report.params.lambda,
        if report.params.lambda_auto { "auto" } else { "given" }
    );
    let config = MonitorConfig {
        solution: args.solution.display().to_string(),
        spec_id: snapshot.spec_id.clone(),
        params,
    };
    let text = to_json(&Report {
        command: "monitor",
        seed: snapshot.problem.seed,
        config: &config,
        result: report,
    })?;
    write_out(args.out.as_deref(), &text)?;
    Ok(true)
}

pub fn sample(args: SampleArgs) -> Result<bool> {
    let mut config = resolve_cone(args.config.as_deref(), args.seed, &args.cone)?;
    if let Some(count) = args.count {
        config.cone.samples = count;
    }
    let c = &config.cone;
    let constraints = c.constraints()?;
    let spectra = sample_gamma_k(&constraints, c.samples, config.seed)?;
    let mut header = indexed("lambda", c.n);
    header.extend(indexed("sigma", c.k));
    header.push("lambda_n".into());
    let mut table = Table::new(header);
    table.comment(format!("hesslab sample seed={}", config.seed));
    table.comment(format!("config {}", to_json_line(&config)?));
    for s in &spectra {
        let mut row = s.values().to_vec();
        row.extend((1..=c.k).map(|j| s.sigma(j)));
        row.push(s.smallest());
        table.push(&row);
    }
    eprintln!("{} spectra sampled", spectra.len());
    write_out(args.out.as_deref(), &table.render()?)?;
    Ok(true)
}
