//! Benchmark driver for the tensor-train Fokker-Planck solver.
//!
//! Resolves a run configuration (flags over config file over per-problem
//! defaults), builds the requested benchmark problem, runs the solver, and
//! records results twice over:
//!
//! * a CSV report with one row per time step, flushed row by row so a
//!   failed run keeps the rows it completed, and
//! * a JSON summary of the final state written next to the CSV.
//!
//! Everything here is deterministic for a fixed configuration and seed;
//! only the wall-clock columns vary between identical runs.

use std::cell::RefCell;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use fptt::cheb::{ChebError, ChebGrid};
use fptt::cross::{cross_on_cheb_grid, CrossConfig, CrossError};
use fptt::models::{gaussian_ic, kramer_observables, DumbbellParams, ModelError, OuParams};
use fptt::solver::{solve, Observer, ObserverInput, ProblemDef, SolveReport, SolverError};
use fptt::tt::{
    tt_from_full, tt_rank1_random, tt_rel_diff, tt_round, tt_to_full, FullTensor, TTTensor,
    TtError,
};

/// The packaged benchmark problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    /// One-dimensional Ornstein-Uhlenbeck process.
    Oup1d,
    /// Three-dimensional Ornstein-Uhlenbeck process with coupled drift.
    Oup3d,
    /// Five-dimensional Ornstein-Uhlenbeck process with coupled drift.
    Oup5d,
    /// Two-bead dumbbell model under shear flow.
    Dumbbell,
}

impl Problem {
    pub const ALL: [Problem; 4] = [
        Problem::Oup1d,
        Problem::Oup3d,
        Problem::Oup5d,
        Problem::Dumbbell,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Problem::Oup1d => "oup1d",
            Problem::Oup3d => "oup3d",
            Problem::Oup5d => "oup5d",
            Problem::Dumbbell => "dumbbell",
        }
    }

    /// Grid points along each spatial dimension.
    pub fn default_grid_points(self) -> usize {
        match self {
            Problem::Oup1d => 50,
            Problem::Oup3d | Problem::Oup5d => 30,
            Problem::Dumbbell => 60,
        }
    }

    /// Number of time points M; a run takes M-1 steps.
    pub fn default_time_points(self) -> usize {
        match self {
            Problem::Oup1d => 1000,
            _ => 100,
        }
    }

    /// Shared accuracy of rounding, interpolation, and cross reconstruction.
    pub fn default_eps(self) -> f64 {
        match self {
            Problem::Oup1d => 1e-6,
            Problem::Oup3d | Problem::Oup5d => 1e-4,
            Problem::Dumbbell => 1e-5,
        }
    }

    /// Time horizon.
    pub fn default_t_final(self) -> f64 {
        match self {
            Problem::Oup1d | Problem::Dumbbell => 10.0,
            Problem::Oup3d | Problem::Oup5d => 5.0,
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Problem {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "oup1d" => Ok(Problem::Oup1d),
            "oup3d" => Ok(Problem::Oup3d),
            "oup5d" => Ok(Problem::Oup5d),
            "dumbbell" => Ok(Problem::Dumbbell),
            other => Err(format!(
                "unknown problem '{other}' (expected oup1d, oup3d, oup5d, or dumbbell)"
            )),
        }
    }
}

/// A fully resolved run configuration.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub problem: Problem,
    /// Grid points along each spatial dimension.
    pub grid_points: usize,
    /// Number of time points M; the run takes M-1 steps.
    pub time_points: usize,
    /// Shared accuracy of rounding, interpolation, and cross reconstruction.
    pub eps: f64,
    /// Time horizon.
    pub t_final: f64,
    /// Seed for the randomized parts of the cross reconstruction.
    pub seed: u64,
    /// CSV report path; the JSON summary goes next to it.
    pub output_path: PathBuf,
}

/// A partially specified configuration as read from flags or a JSON file.
/// Missing entries fall back to the next-lower layer, ultimately to the
/// per-problem defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub problem: Option<Problem>,
    pub grid_points: Option<usize>,
    pub time_points: Option<usize>,
    pub eps: Option<f64>,
    pub t_final: Option<f64>,
    pub seed: Option<u64>,
    pub output_path: Option<PathBuf>,
}

impl PartialConfig {
    /// Returns `self` with holes filled from `fallback`.
    pub fn or(self, fallback: PartialConfig) -> PartialConfig {
        PartialConfig {
            problem: self.problem.or(fallback.problem),
            grid_points: self.grid_points.or(fallback.grid_points),
            time_points: self.time_points.or(fallback.time_points),
            eps: self.eps.or(fallback.eps),
            t_final: self.t_final.or(fallback.t_final),
            seed: self.seed.or(fallback.seed),
            output_path: self.output_path.or(fallback.output_path),
        }
    }
}

/// A rejected or unreadable configuration. Exit code 1 territory.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("no problem selected: pass --problem or set \"problem\" in the config file")]
    MissingProblem,
    #[error("grid_points must be at least 2 (got {0})")]
    GridTooSmall(usize),
    #[error("time_points must be at least 2 (got {0})")]
    TooFewTimePoints(usize),
    #[error("eps must be positive and finite (got {0})")]
    BadEps(f64),
    #[error("t_final must be positive and finite (got {0})")]
    BadHorizon(f64),
    #[error("cannot read config file {path}: {source}")]
    FileRead {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config file {path}: {source}")]
    FileParse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

/// Reads a JSON config file into a partial configuration.
pub fn load_config_file(path: &Path) -> Result<PartialConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::FileRead {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| ConfigError::FileParse {
        path: path.to_path_buf(),
        source,
    })
}

/// Merges `flags` over `file`, fills per-problem defaults, validates.
pub fn resolve_config(flags: PartialConfig, file: PartialConfig) -> Result<RunConfig, ConfigError> {
    let merged = flags.or(file);
    let problem = merged.problem.ok_or(ConfigError::MissingProblem)?;
    let config = RunConfig {
        problem,
        grid_points: merged
            .grid_points
            .unwrap_or_else(|| problem.default_grid_points()),
        time_points: merged
            .time_points
            .unwrap_or_else(|| problem.default_time_points()),
        eps: merged.eps.unwrap_or_else(|| problem.default_eps()),
        t_final: merged.t_final.unwrap_or_else(|| problem.default_t_final()),
        seed: merged.seed.unwrap_or(0),
        output_path: merged
            .output_path
            .unwrap_or_else(|| PathBuf::from(format!("{problem}.csv"))),
    };
    if config.grid_points < 2 {
        return Err(ConfigError::GridTooSmall(config.grid_points));
    }
    if config.time_points < 2 {
        return Err(ConfigError::TooFewTimePoints(config.time_points));
    }
    if !(config.eps > 0.0 && config.eps.is_finite()) {
        return Err(ConfigError::BadEps(config.eps));
    }
    if !(config.t_final > 0.0 && config.t_final.is_finite()) {
        return Err(ConfigError::BadHorizon(config.t_final));
    }
    Ok(config)
}

/// Anything that can go wrong while executing a resolved run.
#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("solver failed: {0}")]
    Solver(#[from] SolverError),
    #[error("reference construction failed: {0}")]
    Cross(#[from] CrossError),
    #[error("reference construction failed: {0}")]
    Model(#[from] ModelError),
    #[error("grid construction failed: {0}")]
    Grid(#[from] ChebError),
    #[error("tensor operation failed: {0}")]
    Tensor(#[from] TtError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot encode summary: {0}")]
    Json(#[from] serde_json::Error),
}

impl RunError {
    /// Process exit code: 1 for configuration problems, 2 for runtime failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => 1,
            _ => 2,
        }
    }
}

/// End-of-run summary, also written as JSON next to the CSV. Values shared
/// with the CSV equal those of its last row.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    /// Final relative error: vs. the analytic density for the 1-D process,
    /// vs. the stationary density for the higher-dimensional ones; absent
    /// for the dumbbell, whose accuracy is judged by the observables below.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_error: Option<f64>,
    pub final_erank: f64,
    pub total_seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    pub config: RunConfig,
}

/// Header of the CSV report; inapplicable columns stay empty.
pub const CSV_HEADER: &str =
    "step,t,erank,err_analytic,err_stationary,psi,eta,mass,min_nodal,wall_seconds";

/// The JSON summary lands next to the CSV: `foo.csv` becomes
/// `foo.summary.json`.
pub fn summary_path(output: &Path) -> PathBuf {
    output.with_extension("summary.json")
}

/// Accuracy of the stationary reference density: far below every benchmark
/// tolerance, so measured error is attributable to the run itself.
const REFERENCE_EPS: f64 = 1e-8;
/// Compression of the stored reference, slightly below its accuracy.
const REFERENCE_ROUND: f64 = 1e-10;
/// Seed for the reference reconstruction; fixed (independent of the run
/// seed) so error columns stay comparable across differently seeded runs.
const REFERENCE_SEED: u64 = 7;

/// Executes a resolved configuration end to end and returns the summary.
pub fn run(config: &RunConfig) -> Result<RunSummary, RunError> {
    match config.problem {
        Problem::Oup1d => run_ou(config, OuParams::benchmark_1d()),
        Problem::Oup3d => run_ou(config, OuParams::benchmark_3d()),
        Problem::Oup5d => run_ou(config, OuParams::benchmark_5d()),
        Problem::Dumbbell => run_dumbbell(config),
    }
}

fn run_ou(config: &RunConfig, params: OuParams) -> Result<RunSummary, RunError> {
    let d = params.dims();
    let sizes = vec![config.grid_points; d];
    let domain = vec![params.bounds; d];
    let grid = ChebGrid::new(sizes.clone(), domain.clone())?;
    let stationary = stationary_reference(&params, &grid)?;
    let analytic = (d == 1).then(|| params.clone());

    let drift_params = params.clone();
    let div_params = params.clone();
    let ic_variance = params.s;
    let problem = ProblemDef {
        dim: d,
        drift: Box::new(move |x: &Array2<f64>, t| drift_params.drift(x, t)),
        drift_div_terms: Box::new(move |x, t| div_params.div_terms(x, t)),
        rho0: Box::new(move |x| gaussian_ic(ic_variance, x)),
        diffusion: params.d_c,
        domain,
        horizon: config.t_final,
    };
    let cross_cfg = CrossConfig {
        eps_ca: config.eps,
        seed: config.seed,
        ..CrossConfig::default()
    };

    let writer = RefCell::new(RowWriter::create(&config.output_path)?);
    let mut observers: Vec<Observer<'_>> = vec![Box::new(|input: &ObserverInput<'_>| {
        let err_stationary = tt_rel_diff(input.state, &stationary)?;
        let err_analytic = match &analytic {
            Some(p) => Some(analytic_error_1d(p, input)?),
            None => None,
        };
        let row = LastRow {
            erank: input.erank,
            err_analytic,
            err_stationary: Some(err_stationary),
            psi: None,
            eta: None,
        };
        writer
            .borrow_mut()
            .write_row(input, row)
            .map_err(SolverError::observer)?;
        Ok(Vec::new())
    })];

    let (_, report) = solve(
        &problem,
        &sizes,
        config.time_points,
        config.eps,
        &cross_cfg,
        &mut observers,
    )?;
    drop(observers);

    let last = writer
        .into_inner()
        .last
        .expect("a run of at least one step records a row");
    let final_error = if d == 1 {
        last.err_analytic
    } else {
        last.err_stationary
    };
    finish(config, &report, final_error, last)
}

fn run_dumbbell(config: &RunConfig) -> Result<RunSummary, RunError> {
    let params = DumbbellParams::default();
    let d = 3;
    let sizes = vec![config.grid_points; d];
    let domain = vec![params.bounds; d];

    let drift_params = params.clone();
    let div_params = params.clone();
    let problem = ProblemDef {
        dim: d,
        drift: Box::new(move |x: &Array2<f64>, t| drift_params.drift(x, t)),
        drift_div_terms: Box::new(move |x, t| div_params.div_terms(x, t)),
        rho0: Box::new(|x| gaussian_ic(1.0, x)),
        diffusion: params.d_c,
        domain,
        horizon: config.t_final,
    };
    let cross_cfg = CrossConfig {
        eps_ca: config.eps,
        seed: config.seed,
        ..CrossConfig::default()
    };

    let writer = RefCell::new(RowWriter::create(&config.output_path)?);
    let obs_params = params.clone();
    let obs_cfg = cross_cfg.clone();
    let mut observers: Vec<Observer<'_>> = vec![Box::new(|input: &ObserverInput<'_>| {
        let (psi, eta) = kramer_observables(input.state, input.grid, &obs_params, &obs_cfg)
            .map_err(SolverError::observer)?;
        let row = LastRow {
            erank: input.erank,
            err_analytic: None,
            err_stationary: None,
            psi: Some(psi),
            eta: Some(eta),
        };
        writer
            .borrow_mut()
            .write_row(input, row)
            .map_err(SolverError::observer)?;
        Ok(Vec::new())
    })];

    let (_, report) = solve(
        &problem,
        &sizes,
        config.time_points,
        config.eps,
        &cross_cfg,
        &mut observers,
    )?;
    drop(observers);

    let last = writer
        .into_inner()
        .last
        .expect("a run of at least one step records a row");
    finish(config, &report, None, last)
}

/// Builds the stationary density of an Ornstein-Uhlenbeck process on the
/// run's grid: dense for one dimension, cross reconstruction otherwise.
fn stationary_reference(params: &OuParams, grid: &ChebGrid) -> Result<TTTensor, RunError> {
    if grid.dims() == 1 {
        let nodes = grid.nodes(0);
        let mut points = Array2::zeros((nodes.len(), 1));
        for (i, &x) in nodes.iter().enumerate() {
            points[[i, 0]] = x;
        }
        let values = params.stationary(&points)?;
        let full = FullTensor::new(grid.sizes().to_vec(), values)?;
        return Ok(tt_from_full(&full, REFERENCE_ROUND)?);
    }
    let guess = tt_rank1_random(grid.sizes(), REFERENCE_SEED)?;
    let cfg = CrossConfig {
        eps_ca: REFERENCE_EPS,
        seed: REFERENCE_SEED,
        ..CrossConfig::default()
    };
    let outcome = cross_on_cheb_grid(
        |pts| params.stationary(pts).map_err(CrossError::oracle),
        grid,
        &guess,
        &cfg,
    )?;
    Ok(tt_round(&outcome.tensor, REFERENCE_ROUND)?)
}

/// Dense relative error of a 1-D state against the analytic density at the
/// current time.
fn analytic_error_1d(params: &OuParams, input: &ObserverInput<'_>) -> Result<f64, SolverError> {
    let state = tt_to_full(input.state)?;
    let nodes = input.grid.nodes(0);
    let mut num = 0.0;
    let mut den = 0.0;
    for (&value, &x) in state.data().iter().zip(nodes) {
        let truth = params.analytic_1d(x, input.t);
        num += (value - truth) * (value - truth);
        den += truth * truth;
    }
    Ok((num / den).sqrt())
}

fn finish(
    config: &RunConfig,
    report: &SolveReport,
    final_error: Option<f64>,
    last: LastRow,
) -> Result<RunSummary, RunError> {
    let summary = RunSummary {
        final_error,
        final_erank: last.erank,
        total_seconds: report.total_seconds,
        psi: last.psi,
        eta: last.eta,
        config: config.clone(),
    };
    let path = summary_path(&config.output_path);
    let text = serde_json::to_string_pretty(&summary)?;
    std::fs::write(&path, text + "\n").map_err(|source| RunError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(summary)
}

/// The optional columns of the most recent CSV row, kept so the JSON
/// summary can repeat exactly what the report ends with.
#[derive(Debug, Clone, Copy)]
struct LastRow {
    erank: f64,
    err_analytic: Option<f64>,
    err_stationary: Option<f64>,
    psi: Option<f64>,
    eta: Option<f64>,
}

/// Streams CSV rows, flushing after each so partial output survives a
/// failed run.
struct RowWriter {
    out: BufWriter<File>,
    last: Option<LastRow>,
}

impl RowWriter {
    fn create(path: &Path) -> Result<Self, RunError> {
        let io_err = |source| RunError::Io {
            path: path.to_path_buf(),
            source,
        };
        let file = File::create(path).map_err(io_err)?;
        let mut out = BufWriter::new(file);
        writeln!(out, "{CSV_HEADER}")
            .and_then(|()| out.flush())
            .map_err(io_err)?;
        Ok(RowWriter { out, last: None })
    }

    fn write_row(&mut self, input: &ObserverInput<'_>, row: LastRow) -> std::io::Result<()> {
        writeln!(
            self.out,
            "{},{},{},{},{},{},{},{},{},{}",
            input.step,
            input.t,
            row.erank,
            fmt_opt(row.err_analytic),
            fmt_opt(row.err_stationary),
            fmt_opt(row.psi),
            fmt_opt(row.eta),
            input.mass,
            input.min_nodal,
            input.wall_seconds,
        )?;
        self.out.flush()?;
        self.last = Some(row);
        Ok(())
    }
}

/// Shortest round-trip decimal, or the empty string for a missing value.
fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags_with_problem(problem: Problem) -> PartialConfig {
        PartialConfig {
            problem: Some(problem),
            ..PartialConfig::default()
        }
    }

    #[test]
    fn defaults_match_the_benchmark_settings() {
        let cases = [
            (Problem::Oup1d, 50, 1000, 1e-6, 10.0),
            (Problem::Oup3d, 30, 100, 1e-4, 5.0),
            (Problem::Oup5d, 30, 100, 1e-4, 5.0),
            (Problem::Dumbbell, 60, 100, 1e-5, 10.0),
        ];
        for (problem, n, m, eps, t_final) in cases {
            let config = resolve_config(flags_with_problem(problem), PartialConfig::default())
                .expect("defaults are valid");
            assert_eq!(config.grid_points, n, "{problem}");
            assert_eq!(config.time_points, m, "{problem}");
            assert_eq!(config.eps, eps, "{problem}");
            assert_eq!(config.t_final, t_final, "{problem}");
            assert_eq!(config.seed, 0, "{problem}");
            assert_eq!(config.output_path, PathBuf::from(format!("{problem}.csv")));
        }
    }

    #[test]
    fn flags_override_file_and_file_overrides_defaults() {
        let flags = PartialConfig {
            grid_points: Some(24),
            ..flags_with_problem(Problem::Oup3d)
        };
        let file = PartialConfig {
            problem: Some(Problem::Oup1d),
            grid_points: Some(99),
            eps: Some(1e-5),
            ..PartialConfig::default()
        };
        let config = resolve_config(flags, file).expect("valid");
        assert_eq!(config.problem, Problem::Oup3d);
        assert_eq!(config.grid_points, 24);
        assert_eq!(config.eps, 1e-5);
        assert_eq!(config.time_points, 100);
    }

    #[test]
    fn missing_problem_is_a_config_error() {
        let err = resolve_config(PartialConfig::default(), PartialConfig::default()).unwrap_err();
        assert!(matches!(err, ConfigError::MissingProblem));
    }

    #[test]
    fn invariants_reject_bad_values() {
        let bad = [
            PartialConfig {
                grid_points: Some(1),
                ..flags_with_problem(Problem::Oup1d)
            },
            PartialConfig {
                time_points: Some(1),
                ..flags_with_problem(Problem::Oup1d)
            },
            PartialConfig {
                eps: Some(0.0),
                ..flags_with_problem(Problem::Oup1d)
            },
            PartialConfig {
                eps: Some(-1e-6),
                ..flags_with_problem(Problem::Oup1d)
            },
            PartialConfig {
                eps: Some(f64::NAN),
                ..flags_with_problem(Problem::Oup1d)
            },
            PartialConfig {
                t_final: Some(0.0),
                ..flags_with_problem(Problem::Oup1d)
            },
        ];
        for flags in bad {
            assert!(resolve_config(flags, PartialConfig::default()).is_err());
        }
    }

    #[test]
    fn problem_names_round_trip_through_parse_and_serde() {
        for problem in Problem::ALL {
            assert_eq!(problem.name().parse::<Problem>().unwrap(), problem);
            let json = serde_json::to_string(&problem).unwrap();
            assert_eq!(json, format!("\"{problem}\""));
            let back: Problem = serde_json::from_str(&json).unwrap();
            assert_eq!(back, problem);
        }
        assert!("bogus".parse::<Problem>().is_err());
    }

    #[test]
    fn config_file_rejects_unknown_fields_and_bad_json() {
        let dir = tempfile::tempdir().unwrap();
        let good = dir.path().join("good.json");
        std::fs::write(&good, r#"{"problem": "oup3d", "grid_points": 12}"#).unwrap();
        let partial = load_config_file(&good).unwrap();
        assert_eq!(partial.problem, Some(Problem::Oup3d));
        assert_eq!(partial.grid_points, Some(12));

        let unknown = dir.path().join("unknown.json");
        std::fs::write(&unknown, r#"{"problem": "oup3d", "grid": 12}"#).unwrap();
        assert!(matches!(
            load_config_file(&unknown),
            Err(ConfigError::FileParse { .. })
        ));

        let broken = dir.path().join("broken.json");
        std::fs::write(&broken, "{not json").unwrap();
        assert!(matches!(
            load_config_file(&broken),
            Err(ConfigError::FileParse { .. })
        ));

        assert!(matches!(
            load_config_file(&dir.path().join("absent.json")),
            Err(ConfigError::FileRead { .. })
        ));
    }

    #[test]
    fn summary_sits_next_to_the_csv() {
        assert_eq!(
            summary_path(Path::new("results.csv")),
            PathBuf::from("results.summary.json")
        );
        assert_eq!(
            summary_path(Path::new("/tmp/run/out")),
            PathBuf::from("/tmp/run/out.summary.json")
        );
    }

    #[test]
    fn optional_fields_format_as_shortest_decimal_or_empty() {
        assert_eq!(fmt_opt(None), "");
        assert_eq!(fmt_opt(Some(0.1)), "0.1");
        assert_eq!(fmt_opt(Some(1.0 / 3.0)), "0.3333333333333333");
        assert_eq!(fmt_opt(Some(2e-12)), "0.000000000002");
    }

    #[test]
    fn exit_codes_separate_config_from_runtime_failures() {
        assert_eq!(RunError::Config(ConfigError::MissingProblem).exit_code(), 1);
        assert_eq!(
            RunError::Solver(SolverError::InvalidProblem("x")).exit_code(),
            2
        );
    }

    #[test]
    fn tiny_run_writes_one_row_per_step_and_a_matching_summary() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("run.csv");
        let flags = PartialConfig {
            grid_points: Some(16),
            time_points: Some(4),
            output_path: Some(out.clone()),
            ..flags_with_problem(Problem::Oup1d)
        };
        let config = resolve_config(flags, PartialConfig::default()).unwrap();
        let summary = run(&config).expect("tiny run succeeds");

        let csv = std::fs::read_to_string(&out).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 1 + 3, "header plus M-1 rows");
        for (i, line) in lines[1..].iter().enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields.len(), 10);
            assert_eq!(fields[0], (i + 1).to_string());
            assert!(fields[3].parse::<f64>().is_ok(), "err_analytic present");
            assert!(fields[4].parse::<f64>().is_ok(), "err_stationary present");
            assert_eq!(fields[5], "", "psi not applicable");
            assert_eq!(fields[6], "", "eta not applicable");
        }

        let json = std::fs::read_to_string(summary_path(&out)).unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        let last: Vec<&str> = lines.last().unwrap().split(',').collect();
        let erank_in_csv: f64 = last[2].parse().unwrap();
        assert_eq!(parsed["final_erank"].as_f64().unwrap(), erank_in_csv);
        assert_eq!(
            parsed["final_error"].as_f64().unwrap(),
            last[3].parse::<f64>().unwrap()
        );
        assert!(parsed.get("psi").is_none());
        assert_eq!(parsed["config"]["problem"], "oup1d");
        assert_eq!(parsed["config"]["grid_points"], 16);
        assert_eq!(summary.final_erank, erank_in_csv);
    }
}
