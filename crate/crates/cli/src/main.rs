use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nls_cli::commands::*;
use nls_cli::config::{parse_config, preset, ConfigError, PRESETS};
use nls_cli::CliError;
use nls_core::experiments::TABLE1_ROWS;
use nls_core::sylvester::BackendPolicy;

#[derive(Parser)]
#[command(name = "nls", version, about = "Three-level Lyapunov scheme for the 2D singular NLS equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configured problem, writing steps.csv and snapshots.
    Run {
        /// TOML run configuration.
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        config: Option<PathBuf>,
        /// A shipped configuration instead of a file.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the n = 0 scheme matrices to matrices.csv.
        #[arg(long)]
        dump_matrices: bool,
    },
    /// Run the manufactured-solution error table and write table1.csv.
    Table1 {
        /// TOML `[[rows]]` list of `intervals`/`step`; defaults to the reference rows.
        #[arg(long)]
        rows: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Measure the truncation order and write convergence.csv.
    Convergence {
        #[arg(long)]
        levels: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve one Lyapunov system with the scheme matrix A(σ, α).
    SolveSylvester {
        #[arg(long)]
        size: usize,
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long, value_enum)]
        backend: BackendArg,
        /// Write the assembled matrices to this CSV file.
        #[arg(long)]
        matrices: Option<PathBuf>,
    },
    /// List the shipped configurations.
    Presets,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Fp,
    Direct,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn output_dir(flag: Option<&Path>, configured: Option<&Path>) -> PathBuf {
    resolve_output_dir(flag, std::env::var_os(OUTPUT_DIR_VAR), configured)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            config,
            preset: name,
            out,
            dump_matrices,
        } => {
            let text = match (config, name) {
                (Some(path), _) => read(&path)?,
                (None, Some(name)) => preset(&name)
                    .ok_or_else(|| ConfigError::Validation(format!("unknown preset `{name}`")))?
                    .to_string(),
                (None, None) => unreachable!("clap requires one of --config and --preset"),
            };
            let cfg = parse_config(&text)?;
            let dir = output_dir(out.as_deref(), Some(&cfg.output_dir));
            let summary = command_run(&cfg, &dir, dump_matrices)?;
            println!(
                "{} steps, final norm {:.6e}, {} snapshot file(s) in {}",
                summary.steps,
                summary.final_norm,
                summary.snapshots.len(),
                dir.display()
            );
        }
        Command::Table1 { rows, out } => {
            let rows = match rows {
                Some(path) => parse_rows(&read(&path)?)?,
                None => TABLE1_ROWS.to_vec(),
            };
            let dir = output_dir(out.as_deref(), None);
            let report = command_table1(&rows, &dir)?;
            for r in &report.rows {
                println!("J={:3} l={:.4e} Er={:.6e} Er/(l²+h²)={:.6e}", r.intervals, r.l, r.er, r.normalized_er);
            }
            if let Some(order) = report.fitted_order {
                println!("fitted order {order:.4}");
            }
        }
        Command::Convergence { levels, out } => {
            let spec = parse_levels(&read(&levels)?)?;
            let dir = output_dir(out.as_deref(), None);
            let report = command_convergence(&spec, &dir)?;
            match report.slope {
                Some(s) => println!("slope in h: {s:.4}"),
                None => println!("slope undefined (zero residuals)"),
            }
        }
        Command::SolveSylvester {
            size,
            sigma,
            alpha,
            backend,
            matrices,
        } => {
            let policy = match backend {
                BackendArg::Fp => BackendPolicy::FixedPointOnly,
                BackendArg::Direct => BackendPolicy::DirectOnly,
            };
            let s = command_solve_sylvester(size, sigma, alpha, policy, matrices.as_deref())?;
            println!(
                "backend={} iterations={} residual={:.6e} bound={:.6e}",
                s.report.backend.name(),
                s.report.iterations,
                s.report.residual,
                s.bound
            );
        }
        Command::Presets => {
            for (name, _) in PRESETS {
                println!("{name}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors are configuration errors; help and version are not errors
            return ExitCode::from(if e.use_stderr() { EXIT_IO_OR_CONFIG } else { EXIT_SUCCESS });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::from(EXIT_SUCCESS),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
