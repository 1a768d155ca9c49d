use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::Parser;

use fptt_cli::{
    load_config_file, resolve_config, run, summary_path, PartialConfig, Problem, RunConfig,
    RunSummary,
};

/// Run a packaged Fokker-Planck benchmark and record per-step diagnostics.
#[derive(Debug, Parser)]
#[command(name = "solve", version, about)]
struct Cli {
    /// Benchmark to run: oup1d, oup3d, oup5d, or dumbbell.
    #[arg(long, value_parser = Problem::from_str)]
    problem: Option<Problem>,

    /// Grid points along each spatial dimension.
    #[arg(long)]
    grid: Option<usize>,

    /// Number of time points M; the run takes M-1 steps.
    #[arg(long, visible_alias = "time-points")]
    steps: Option<usize>,

    /// Shared accuracy of rounding, interpolation, and cross reconstruction.
    #[arg(long)]
    eps: Option<f64>,

    /// Time horizon.
    #[arg(long)]
    t_final: Option<f64>,

    /// Seed for the randomized parts of the cross reconstruction; a fixed
    /// seed makes the CSV reproducible byte for byte (wall clock aside).
    #[arg(long)]
    seed: Option<u64>,

    /// CSV report path; the JSON summary goes next to it.
    #[arg(long)]
    output: Option<PathBuf>,

    /// JSON config file; explicit flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // Help and version requests arrive as "errors" but exit cleanly;
        // anything else is a usage problem. `err.print()` picks the right
        // stream and shrugs off closed pipes instead of panicking.
        Err(err) => {
            let ok = matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = err.print();
            return if ok { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };

    let file = match &cli.config {
        Some(path) => match load_config_file(path) {
            Ok(partial) => partial,
            Err(err) => {
                eprintln!("error: {err}");
                return ExitCode::from(1);
            }
        },
        None => PartialConfig::default(),
    };
    let flags = PartialConfig {
        problem: cli.problem,
        grid_points: cli.grid,
        time_points: cli.steps,
        eps: cli.eps,
        t_final: cli.t_final,
        seed: cli.seed,
        output_path: cli.output,
    };
    let config = match resolve_config(flags, file) {
        Ok(config) => config,
        Err(err) => {
            eprintln!("error: {err}");
            return ExitCode::from(1);
        }
    };

    match run(&config) {
        Ok(summary) => {
            use std::io::Write as _;
            let _ = writeln!(std::io::stdout(), "{}", describe(&config, &summary));
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn describe(config: &RunConfig, summary: &RunSummary) -> String {
    let mut note = format!("final erank {:.2}", summary.final_erank);
    if let Some(err) = summary.final_error {
        note += &format!(", final error {err:.3e}");
    }
    if let (Some(psi), Some(eta)) = (summary.psi, summary.eta) {
        note += &format!(", psi {psi:.6}, eta {eta:.6}");
    }
    format!(
        "{}: {} in {:.1} s -> {} + {}",
        config.problem,
        note,
        summary.total_seconds,
        config.output_path.display(),
        summary_path(&config.output_path).display(),
    )
}
