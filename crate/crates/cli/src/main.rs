//! `hesslab` command-line driver.
//!
//! Exit codes: 0 on success, 1 on runtime or assertion failure, 2 on usage
//! errors.

mod commands;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::builder::{PossibleValuesParser, TypedValueParser};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hesslab::verify::Suite;

#[derive(Parser)]
#[command(name = "hesslab", version, about = "Spectral calculus, cone experiments and a complex Hessian solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a property suite; exits 1 if any property fails.
    Verify(VerifyArgs),
    /// Margins, threshold location or adversarial search for a concavity
    /// inequality.
    Inequality(InequalityArgs),
    /// Solve the manufactured problem described by a config file.
    Solve(SolveArgs),
    /// Maximum-principle diagnostics on a solution snapshot.
    Monitor(MonitorArgs),
    /// Sample spectra from the constrained cone.
    Sample(SampleArgs),
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_parser = PossibleValuesParser::new(Suite::ALL.map(Suite::name))
        .map(|s| s.parse::<Suite>().expect("listed suite")))]
    suite: Suite,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    count: usize,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Key,
    Lu,
    Zhang,
    Iqc0,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Action {
    Margins,
    Threshold,
    Adversarial,
}

/// Overrides for the `[cone]` section of the config.
#[derive(Args, Default)]
struct ConeOverrides {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// Semi-convexity floor `A`.
    #[arg(long)]
    floor: Option<f64>,
    /// Band for `sigma_k` as `lo,hi`.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    sigma_band: Option<Vec<f64>>,
    #[arg(long)]
    eps0: Option<f64>,
    #[arg(long)]
    big_k: Option<f64>,
    #[arg(long)]
    delta0: Option<f64>,
    #[arg(long)]
    l: Option<usize>,
    #[arg(long)]
    lu_eps: Option<f64>,
    #[arg(long)]
    iqc0_c: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    samples_per_level: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    /// Pinned `lambda_1`; otherwise a multiple of the located threshold.
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    threshold_factor: Option<f64>,
}

#[derive(Args)]
struct InequalityArgs {
    #[arg(long, value_enum, default_value = "key")]
    mode: Mode,
    #[arg(long, value_enum, default_value = "margins")]
    action: Action,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    cone: ConeOverrides,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    config: PathBuf,
    /// Number of continuity steps from the trivial problem.
    #[arg(long)]
    continuity: Option<usize>,
    /// Output directory; defaults to `output.dir` from the config.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct MonitorArgs {
    #[arg(long)]
    solution: PathBuf,
    /// Config whose `[monitor]` section supplies defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "N")]
    n_exp: Option<f64>,
    #[arg(long = "Lambda")]
    lambda: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    count: Option<usize>,
    #[command(flatten)]
    cone: ConeOverrides,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code.clamp(0, 255) as u8);
        }
    };
    let outcome = match cli.command {
        Command::Verify(a) => commands::verify(a),
        Command::Inequality(a) => commands::inequality(a),
        Command::Solve(a) => commands::solve(a),
        Command::Monitor(a) => commands::monitor(a),
        Command::Sample(a) => commands::sample(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
