//! Run configuration documents (TOML).

use std::path::PathBuf;
use std::sync::Arc;

use nls_core::experiments::{exact_solution, forcing_g};
use nls_core::grid::{SpaceGrid, TimeGrid};
use nls_core::operators::{SchemeWeights, WeightSchedule};
use nls_core::stepper::{EvolveOptions, NlsProblem, Retention, StartMode};
use nls_core::sylvester::{BackendPolicy, SolverConfig};
use nls_core::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("parse error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse { line: Option<usize>, message: String },
    #[error("invalid configuration: {0}")]
    Validation(String),
}

/// Which initial datum and forcing to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    /// The closed-form test solution on a symmetric domain, with its forcing.
    Manufactured,
    /// `u0 ≡ 0`, no forcing.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScheduleConfig {
    #[default]
    Geometric,
    Constant { alpha: f64, beta: f64, gamma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyConfig {
    #[default]
    Auto,
    FixedPoint,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartConfig {
    #[default]
    Bootstrap,
    Taylor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub contraction_threshold: f64,
    #[serde(default)]
    pub policy: PolicyConfig,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            tolerance: d.tolerance,
            max_iterations: d.max_iterations,
            contraction_threshold: d.contraction_threshold,
            policy: PolicyConfig::Auto,
        }
    }
}

impl SolverSection {
    pub fn to_solver(&self) -> SolverConfig {
        SolverConfig {
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            contraction_threshold: self.contraction_threshold,
            policy: match self.policy {
                PolicyConfig::Auto => BackendPolicy::Auto,
                PolicyConfig::FixedPoint => BackendPolicy::FixedPointOnly,
                PolicyConfig::Direct => BackendPolicy::DirectOnly,
            },
        }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_blowup_factor() -> f64 {
    EvolveOptions::default().blowup_factor
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemKind,
    /// `[L0, L1]`, applied to both axes.
    pub domain: [f64; 2],
    /// `J`, the number of intervals per axis.
    pub intervals: usize,
    pub start_time: f64,
    pub final_time: f64,
    pub time_step: f64,
    pub theta: f64,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub start: StartConfig,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default = "default_blowup_factor")]
    pub blowup_factor: f64,
    /// Write `u_<n>.csv` every this many levels (and at the last); 0 disables snapshots.
    #[serde(default)]
    pub snapshot_stride: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn schedule(&self) -> Result<WeightSchedule, ConfigError> {
        match self.schedule {
            ScheduleConfig::Geometric => Ok(WeightSchedule::Geometric),
            ScheduleConfig::Constant { alpha, beta, gamma } => SchemeWeights::new(alpha, beta, gamma)
                .map(WeightSchedule::Constant)
                .map_err(|e| ConfigError::Validation(e.to_string())),
        }
    }

    pub fn problem(&self) -> Result<NlsProblem, ConfigError> {
        let invalid = |e: nls_core::NlsError| ConfigError::Validation(e.to_string());
        let [lower, upper] = self.domain;
        let space = SpaceGrid::new(lower, upper, self.intervals).map_err(invalid)?;
        let time = TimeGrid::spanning(self.start_time, self.final_time, self.time_step).map_err(invalid)?;
        let theta = self.theta;
        let problem = match self.problem {
            ProblemKind::Manufactured => {
                if lower != -upper {
                    return Err(ConfigError::Validation(format!(
                        "manufactured problem needs a symmetric domain, got [{lower}, {upper}]"
                    )));
                }
                NlsProblem::new(
                    theta,
                    space,
                    time,
                    Arc::new(move |x, y| exact_solution(x, y, 0.0, upper)),
                    Some(Arc::new(move |x, y, t| forcing_g(x, y, t, upper, theta))),
                )
            }
            ProblemKind::Zero => NlsProblem::new(theta, space, time, Arc::new(|_, _| Complex64::new(0.0, 0.0)), None),
        }
        .map_err(invalid)?;
        Ok(problem.with_schedule(self.schedule()?))
    }

    pub fn evolve_options(&self) -> Result<EvolveOptions, ConfigError> {
        let solver = self.solver.to_solver();
        solver.validate().map_err(|e| ConfigError::Validation(e.to_string()))?;
        if !(self.blowup_factor.is_finite() && self.blowup_factor > 1.0) {
            return Err(ConfigError::Validation(format!(
                "blowup_factor must be finite and > 1, got {}",
                self.blowup_factor
            )));
        }
        Ok(EvolveOptions {
            solver,
            retention: match self.snapshot_stride {
                0 => Retention::Last,
                k => Retention::Stride(k),
            },
            start: match self.start {
                StartConfig::Bootstrap => StartMode::Bootstrap,
                StartConfig::Taylor => StartMode::Taylor,
            },
            blowup_factor: self.blowup_factor,
        })
    }

    /// Checks every invariant that [`RunConfig::problem`] and
    /// [`RunConfig::evolve_options`] would check.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.problem()?;
        self.evolve_options()?;
        Ok(())
    }
}

pub(crate) fn parse_error(text: &str, err: toml::de::Error) -> ConfigError {
    let line = err.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
    ConfigError::Parse {
        line,
        message: err.message().to_string(),
    }
}

/// Parses and validates a run configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| parse_error(text, e))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn serialize_config(cfg: &RunConfig) -> String {
    toml::to_string(cfg).expect("run configs always serialize")
}

/// Configurations shipped with the binary, by name.
pub const PRESETS: [(&str, &str); 2] = [
    ("table1_row1", include_str!("../presets/table1_row1.toml")),
    ("zero_datum", include_str!("../presets/zero_datum.toml")),
];

pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}
