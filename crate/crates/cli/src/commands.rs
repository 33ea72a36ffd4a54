//! The subcommands, independent of argument parsing.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use nls_core::experiments::{
    measure_truncation_order, run_table1, write_convergence_csv, write_table1_csv, ConvergenceReport, Manufactured,
    TruncationReport, HALF_WIDTH, THETA,
};
use nls_core::grid::ComplexField;
use nls_core::operators::{assemble_scheme_matrices, deviation_from_i_identity, write_matrices_csv, SchemeWeights};
use nls_core::stepper::{evolve_observed, EvolveOptions, StepRecord};
use nls_core::sylvester::{solve_lyapunov, BackendPolicy, SolveReport, SolverConfig};
use nls_core::{sci, Complex64, NlsError};
use serde::Deserialize;
use thiserror::Error;

use crate::config::{parse_error, ConfigError, RunConfig, ScheduleConfig};

/// Environment variable that overrides the output directory of every command.
pub const OUTPUT_DIR_VAR: &str = "NLS_OUTPUT_DIR";

pub const EXIT_SUCCESS: u8 = 0;
pub const EXIT_IO_OR_CONFIG: u8 = 1;
pub const EXIT_SOLVER: u8 = 2;
pub const EXIT_BLOWUP: u8 = 3;

pub const STEPS_HEADER: &str = "n,t,backend,iterations,residual,norm";
pub const SNAPSHOT_HEADER: &str = "j,m,re,im";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Solver(NlsError),
    #[error("{} table row(s) failed: {}", .0.len(), .0.join("; "))]
    RowsFailed(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => EXIT_IO_OR_CONFIG,
            CliError::Solver(e) if matches!(e.root(), NlsError::Blowup { .. }) => EXIT_BLOWUP,
            CliError::Solver(_) | CliError::RowsFailed(_) => EXIT_SOLVER,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Command-line flag, then the environment override, then the configured value, then `out`.
pub fn resolve_output_dir(flag: Option<&Path>, env: Option<OsString>, configured: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(v) = env.filter(|v| !v.is_empty()) {
        return PathBuf::from(v);
    }
    configured.map_or_else(|| PathBuf::from("out"), Path::to_path_buf)
}

fn create_file(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>), CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join(name);
    let file = File::create(&path).map_err(io_err(&path))?;
    Ok((path, BufWriter::new(file)))
}

fn write_step(out: &mut impl Write, r: &StepRecord) -> io::Result<()> {
    writeln!(
        out,
        "{},{},{},{},{},{}",
        r.n,
        sci(r.t),
        r.backend.name(),
        r.iterations,
        sci(r.residual),
        sci(r.norm)
    )
}

pub fn write_snapshot_csv<W: Write>(field: &ComplexField, mut out: W) -> io::Result<()> {
    writeln!(out, "{SNAPSHOT_HEADER}")?;
    let side = field.side();
    for j in 0..side {
        for m in 0..side {
            let z = field.get(j, m);
            writeln!(out, "{j},{m},{},{}", sci(z.re), sci(z.im))?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub steps: usize,
    pub snapshots: Vec<PathBuf>,
    pub final_norm: f64,
    pub final_residual: Option<f64>,
}

/// Integrates the configured problem into `out`: `steps.csv` is streamed as
/// steps complete, so it survives a failed run; snapshots are written on success.
pub fn command_run(cfg: &RunConfig, out: &Path, dump_matrices: bool) -> Result<RunSummary, CliError> {
    let problem = cfg.problem()?;
    let opts: EvolveOptions = cfg.evolve_options()?;
    if dump_matrices {
        let weights = problem.schedule().weights(0);
        let m = assemble_scheme_matrices(problem.sigma(), weights, problem.space().nodes()).map_err(CliError::Solver)?;
        let (path, mut w) = create_file(out, "matrices.csv")?;
        write_matrices_csv(&m, &mut w).and_then(|_| w.flush()).map_err(io_err(&path))?;
    }

    let (steps_path, mut steps) = create_file(out, "steps.csv")?;
    writeln!(steps, "{STEPS_HEADER}").map_err(io_err(&steps_path))?;
    let mut write_failure = None;
    let result = evolve_observed(&problem, &opts, |record, _| {
        if write_failure.is_none() {
            write_failure = write_step(&mut steps, record).err();
        }
    });
    let flushed = steps.flush();
    if let Some(e) = write_failure {
        return Err(io_err(&steps_path)(e));
    }
    flushed.map_err(io_err(&steps_path))?;
    let evo = result.map_err(CliError::Solver)?;

    let mut snapshots = Vec::new();
    if cfg.snapshot_stride > 0 {
        for s in &evo.snapshots {
            let (path, mut w) = create_file(out, &format!("u_{}.csv", s.n))?;
            write_snapshot_csv(&s.field, &mut w).and_then(|_| w.flush()).map_err(io_err(&path))?;
            snapshots.push(path);
        }
    }
    Ok(RunSummary {
        steps: evo.records.len(),
        snapshots,
        final_norm: *evo.state.norm_history.last().expect("history holds the initial level"),
        final_residual: evo.records.last().map(|r| r.residual),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct LevelSpec {
    intervals: usize,
    step: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RowsFile {
    rows: Vec<LevelSpec>,
}

fn check_levels(levels: &[LevelSpec], min: usize) -> Result<Vec<(usize, f64)>, ConfigError> {
    if levels.len() < min {
        return Err(ConfigError::Validation(format!("need at least {min} entries, got {}", levels.len())));
    }
    levels
        .iter()
        .map(|lv| {
            if lv.intervals < 2 || !(lv.step.is_finite() && lv.step > 0.0) {
                Err(ConfigError::Validation(format!(
                    "bad level J={} l={}: need J >= 2 and l > 0",
                    lv.intervals, lv.step
                )))
            } else {
                Ok((lv.intervals, lv.step))
            }
        })
        .collect()
}

/// Parses a `[[rows]]` document of `intervals`/`step` pairs.
pub fn parse_rows(text: &str) -> Result<Vec<(usize, f64)>, ConfigError> {
    let file: RowsFile = toml::from_str(text).map_err(|e| parse_error(text, e))?;
    check_levels(&file.rows, 1)
}

/// Runs the error table over `rows` and writes `table1.csv` (completed rows only).
pub fn command_table1(rows: &[(usize, f64)], out: &Path) -> Result<ConvergenceReport, CliError> {
    let (path, mut w) = create_file(out, "table1.csv")?;
    let report = run_table1(rows, THETA, &EvolveOptions::default());
    write_table1_csv(&report.rows, &mut w).and_then(|_| w.flush()).map_err(io_err(&path))?;
    if !report.failures.is_empty() {
        let failed = report
            .failures
            .iter()
            .map(|f| format!("J={} l={}: {}", f.intervals, f.l, f.error))
            .collect();
        return Err(CliError::RowsFailed(failed));
    }
    Ok(report)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LevelsFile {
    #[serde(default = "default_theta")]
    theta: f64,
    horizon: f64,
    #[serde(default)]
    schedule: ScheduleConfig,
    levels: Vec<LevelSpec>,
}

fn default_theta() -> f64 {
    THETA
}

/// A parsed `convergence --levels` document.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelsSpec {
    pub theta: f64,
    pub horizon: f64,
    pub schedule: ScheduleConfig,
    pub levels: Vec<(usize, f64)>,
}

pub fn parse_levels(text: &str) -> Result<LevelsSpec, ConfigError> {
    let file: LevelsFile = toml::from_str(text).map_err(|e| parse_error(text, e))?;
    if !(file.horizon.is_finite() && file.horizon > 0.0) {
        return Err(ConfigError::Validation(format!("horizon must be positive, got {}", file.horizon)));
    }
    Ok(LevelsSpec {
        theta: file.theta,
        horizon: file.horizon,
        schedule: file.schedule,
        levels: check_levels(&file.levels, 3)?,
    })
}

/// Measures the truncation order of the test problem and writes `convergence.csv`.
pub fn command_convergence(spec: &LevelsSpec, out: &Path) -> Result<TruncationReport, CliError> {
    let schedule = match spec.schedule {
        ScheduleConfig::Geometric => nls_core::operators::WeightSchedule::Geometric,
        ScheduleConfig::Constant { alpha, beta, gamma } => nls_core::operators::WeightSchedule::Constant(
            SchemeWeights::new(alpha, beta, gamma).map_err(|e| ConfigError::Validation(e.to_string()))?,
        ),
    };
    let exact = Manufactured::reference(HALF_WIDTH, spec.theta);
    let report = measure_truncation_order(&exact, HALF_WIDTH, spec.theta, schedule, &spec.levels, spec.horizon)
        .map_err(|e| match e {
            NlsError::InvalidGrid(_) | NlsError::InvalidParameter(_) => ConfigError::Validation(e.to_string()).into(),
            other => CliError::Solver(other),
        })?;
    let (path, mut w) = create_file(out, "convergence.csv")?;
    write_convergence_csv(&report, &mut w).and_then(|_| w.flush()).map_err(io_err(&path))?;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SylvesterSummary {
    pub report: SolveReport,
    pub bound: f64,
}

/// Solves `L_A(X) = R` for the scheme matrix `A(σ, α)` of the given size and a
/// fixed smooth right-hand side.
pub fn command_solve_sylvester(
    size: usize,
    sigma: f64,
    alpha: f64,
    policy: BackendPolicy,
    matrices: Option<&Path>,
) -> Result<SylvesterSummary, CliError> {
    let invalid = |e: NlsError| CliError::Config(ConfigError::Validation(e.to_string()));
    let weights = SchemeWeights::new(alpha, 0.0, 1.0 - alpha).map_err(invalid)?;
    let m = assemble_scheme_matrices(sigma, weights, size).map_err(invalid)?;
    if let Some(path) = matrices {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
        let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
        write_matrices_csv(&m, &mut w).and_then(|_| w.flush()).map_err(io_err(path))?;
    }
    let n = size as f64;
    let rhs = ComplexField::from_fn(size, |(j, k)| Complex64::new(1.0 / (1.0 + (j + k) as f64), (j as f64 - k as f64) / n))
        .map_err(CliError::Solver)?;
    let cfg = SolverConfig {
        policy,
        ..SolverConfig::default()
    };
    let (_, report) = solve_lyapunov(&m.a, &rhs, &cfg).map_err(CliError::Solver)?;
    Ok(SylvesterSummary {
        report,
        bound: deviation_from_i_identity(&m.a),
    })
}
