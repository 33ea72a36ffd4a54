//! Time integration of `i u_t + Δu + f(u) = g`, `f(u) = u − |u|^{−2θ} u`.
//!
//! Each step solves
//!
//! ```text
//! L_A(U^{n+1}) = −[L_B(U^n) + L_C(U^{n−1}) + F_n],   F_n = 2l (f̂^n − ĝ^n),
//! ```
//!
//! where `f̂^n` and `ĝ^n` average levels `n` and `n−1`. The scheme needs two
//! starting levels; the missing `U^{−1}` comes from a backward Taylor step.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{NlsError, Result};
use crate::grid::{check_same_side, discrete_l2_norm, sample_field, ComplexField, SpaceGrid, TimeGrid};
use crate::operators::{assemble_scheme_matrices, discrete_laplacian, lyapunov_apply, WeightSchedule};
use crate::sylvester::{solve_lyapunov, Backend, SolverConfig};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Moduli below this are treated as zero by [`nonlinearity`].
pub const ZERO_MODULUS: f64 = 1e-300;

pub type InitialDatum = Arc<dyn Fn(f64, f64) -> Complex64 + Send + Sync>;
pub type Forcing = Arc<dyn Fn(f64, f64, f64) -> Complex64 + Send + Sync>;

/// Initial-boundary value problem on a square with homogeneous Neumann data.
#[derive(Clone)]
pub struct NlsProblem {
    theta: f64,
    initial: InitialDatum,
    forcing: Option<Forcing>,
    space: SpaceGrid,
    time: TimeGrid,
    schedule: WeightSchedule,
}

impl std::fmt::Debug for NlsProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NlsProblem")
            .field("theta", &self.theta)
            .field("forced", &self.forcing.is_some())
            .field("space", &self.space)
            .field("time", &self.time)
            .field("schedule", &self.schedule)
            .finish()
    }
}

impl NlsProblem {
    /// Problem with the geometric weight schedule. `theta` must lie in
    /// `(0, 1/2)` so that `f` extends continuously to `f(0) = 0`.
    pub fn new(theta: f64, space: SpaceGrid, time: TimeGrid, initial: InitialDatum, forcing: Option<Forcing>) -> Result<Self> {
        if !(theta > 0.0 && theta < 0.5) {
            return Err(NlsError::InvalidParameter(format!(
                "theta = {theta} must lie in (0, 1/2)"
            )));
        }
        Ok(Self {
            theta,
            initial,
            forcing,
            space,
            time,
            schedule: WeightSchedule::Geometric,
        })
    }

    pub fn with_schedule(mut self, schedule: WeightSchedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn space(&self) -> &SpaceGrid {
        &self.space
    }

    pub fn time(&self) -> &TimeGrid {
        &self.time
    }

    pub fn schedule(&self) -> WeightSchedule {
        self.schedule
    }

    /// `σ = 2l/h²`.
    pub fn sigma(&self) -> f64 {
        let h = self.space.step();
        2.0 * self.time.step() / (h * h)
    }

    pub fn sample_initial(&self) -> Result<ComplexField> {
        sample_field(&self.space, |x, y| (self.initial)(x, y))
    }

    /// `g(·, t)` on the grid; zero when the problem is unforced.
    pub fn sample_forcing(&self, t: f64) -> Result<ComplexField> {
        match &self.forcing {
            Some(g) => sample_field(&self.space, |x, y| g(x, y, t)),
            None => Ok(ComplexField::zeros(self.space.nodes())),
        }
    }
}

/// `f(u) = u − |u|^{−2θ} u`, extended by `f(0) = 0`.
pub fn nonlinearity(u: Complex64, theta: f64) -> Complex64 {
    let r = u.norm();
    if r < ZERO_MODULUS {
        return Complex64::new(0.0, 0.0);
    }
    u * (1.0 - r.powf(-2.0 * theta))
}

pub fn apply_nonlinearity(u: &ComplexField, theta: f64) -> ComplexField {
    ComplexField::from_array_unchecked(u.values().mapv(|z| nonlinearity(z, theta)))
}

/// `f̂ = (f(Uⁿ) + f(Uⁿ⁻¹))/2` entrywise.
pub fn f_hat(current: &ComplexField, previous: &ComplexField, theta: f64) -> Result<ComplexField> {
    check_same_side(current, previous)?;
    let mut out = current.values().mapv(|z| nonlinearity(z, theta));
    out.zip_mut_with(previous.values(), |a, &b| *a = (*a + nonlinearity(b, theta)) * 0.5);
    Ok(ComplexField::from_array_unchecked(out))
}

/// `F_n = 2l (f̂^n − ĝ^n)` with `ĝ^n = (g(t_n) + g(t_{n−1}))/2`.
pub fn source_term(n: usize, current: &ComplexField, previous: &ComplexField, problem: &NlsProblem) -> Result<ComplexField> {
    let l = problem.time.step();
    let t = problem.time.time(n);
    let mut f = f_hat(current, previous, problem.theta)?.into_array();
    if problem.forcing.is_some() {
        let g_now = problem.sample_forcing(t)?;
        let g_prev = problem.sample_forcing(t - l)?;
        ndarray::Zip::from(&mut f)
            .and(g_now.values())
            .and(g_prev.values())
            .for_each(|fv, &a, &b| *fv -= (a + b) * 0.5);
    }
    f.mapv_inplace(|z| z * (2.0 * l));
    ComplexField::from_array(f)
}

/// `U0 + direction · i l (ΔU0 + f(U0) − g(t0))`.
fn taylor_level(u0: &ComplexField, problem: &NlsProblem, direction: f64) -> Result<ComplexField> {
    let l = problem.time.step();
    let lap = discrete_laplacian(u0, problem.space.step());
    let f = apply_nonlinearity(u0, problem.theta);
    let g = problem.sample_forcing(problem.time.start())?;
    let mut drift = lap.into_array();
    ndarray::Zip::from(&mut drift)
        .and(f.values())
        .and(g.values())
        .for_each(|d, &fv, &gv| *d += fv - gv);
    let mut out = u0.values().clone();
    out.zip_mut_with(&drift, |u, &d| *u += I * d * (direction * l));
    ComplexField::from_array(out)
}

/// Synthetic pre-initial level `U^{−1} = U0 − i l (ΔU0 + f(U0) − g(t0))`.
pub fn bootstrap_previous(u0: &ComplexField, problem: &NlsProblem) -> Result<ComplexField> {
    taylor_level(u0, problem, -1.0)
}

/// Forward Taylor level `U^1 = U0 + i l (ΔU0 + f(U0) − g(t0))`.
pub fn taylor_first_level(u0: &ComplexField, problem: &NlsProblem) -> Result<ComplexField> {
    taylor_level(u0, problem, 1.0)
}

/// How the second starting level is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StartMode {
    /// Build `U^{−1}` by [`bootstrap_previous`] and take the scheme step at `n = 0`.
    #[default]
    Bootstrap,
    /// Build `U^1` by [`taylor_first_level`] and start the scheme at `n = 1`.
    Taylor,
}

/// Which snapshots [`evolve`] keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Retention {
    #[default]
    All,
    /// Initial and final levels only.
    Last,
    /// Every `k`-th level plus the final one.
    Stride(usize),
}

impl Retention {
    fn keeps(&self, n: usize, last: usize) -> bool {
        match *self {
            Retention::All => true,
            Retention::Last => n == 0 || n == last,
            Retention::Stride(k) => n == last || (k > 0 && n.is_multiple_of(k)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub solver: SolverConfig,
    pub retention: Retention,
    pub start: StartMode,
    /// A level whose norm exceeds `blowup_factor · max(‖U^0‖, 1)` aborts the run.
    pub blowup_factor: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            retention: Retention::All,
            start: StartMode::Bootstrap,
            blowup_factor: 1e6,
        }
    }
}

/// Two most recent levels plus the norm of every level computed so far.
#[derive(Debug, Clone, PartialEq)]
pub struct StepState {
    pub n: usize,
    pub current: ComplexField,
    pub previous: ComplexField,
    pub norm_history: Vec<f64>,
}

/// Per-step log line: the level produced and how its linear system was solved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub n: usize,
    pub t: f64,
    pub backend: Backend,
    pub iterations: usize,
    pub residual: f64,
    pub norm: f64,
}

/// Advances `(Uⁿ, Uⁿ⁻¹)` to `(Uⁿ⁺¹, Uⁿ)`.
pub fn step(state: StepState, problem: &NlsProblem, opts: &EvolveOptions) -> Result<(StepState, StepRecord)> {
    let n = state.n;
    let side = problem.space.nodes();
    check_same_side(&state.current, &state.previous)?;
    if state.current.side() != side {
        return Err(NlsError::DimensionMismatch {
            expected: side,
            found: state.current.side(),
        });
    }
    let mats = assemble_scheme_matrices(problem.sigma(), problem.schedule.weights(n), side)?;
    let source = source_term(n, &state.current, &state.previous, problem)?;
    let mut rhs = lyapunov_apply(&mats.b, &state.current)?.into_array();
    rhs += lyapunov_apply(&mats.c, &state.previous)?.values();
    rhs += source.values();
    rhs.mapv_inplace(|z| -z);
    let rhs = ComplexField::from_array(rhs)?;

    let (next, report) = solve_lyapunov(&mats.a, &rhs, &opts.solver)?;
    if !report.converged {
        return Err(NlsError::ResidualNotCertified {
            residual: report.residual,
            tolerance: opts.solver.tolerance,
        });
    }
    let norm = discrete_l2_norm(&next);
    let limit = opts.blowup_factor * state.norm_history.first().copied().unwrap_or(0.0).max(1.0);
    if !(norm <= limit) {
        return Err(NlsError::Blowup { norm, limit });
    }
    let mut norm_history = state.norm_history;
    norm_history.push(norm);
    let record = StepRecord {
        n: n + 1,
        t: problem.time.time(n + 1),
        backend: report.backend,
        iterations: report.iterations,
        residual: report.residual,
        norm,
    };
    Ok((
        StepState {
            n: n + 1,
            current: next,
            previous: state.current,
            norm_history,
        },
        record,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub n: usize,
    pub t: f64,
    pub field: ComplexField,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evolution {
    pub snapshots: Vec<Snapshot>,
    pub records: Vec<StepRecord>,
    pub state: StepState,
}

/// Integrates from `t0` to `T`, keeping snapshots per `opts.retention`.
/// Errors from a step carry the level `n` at which it was attempted.
pub fn evolve(problem: &NlsProblem, opts: &EvolveOptions) -> Result<Evolution> {
    evolve_observed(problem, opts, |_, _| {})
}

/// As [`evolve`], additionally calling `observe` on every step record as it is produced.
pub fn evolve_observed(
    problem: &NlsProblem,
    opts: &EvolveOptions,
    mut observe: impl FnMut(&StepRecord, &ComplexField),
) -> Result<Evolution> {
    opts.solver.validate()?;
    let last = problem.time.steps();
    let u0 = problem.sample_initial()?;
    let norm0 = discrete_l2_norm(&u0);
    let mut snapshots = vec![Snapshot {
        n: 0,
        t: problem.time.start(),
        field: u0.clone(),
    }];
    let mut records = Vec::with_capacity(last);

    let mut state = match opts.start {
        StartMode::Bootstrap => StepState {
            n: 0,
            previous: bootstrap_previous(&u0, problem)?,
            current: u0,
            norm_history: vec![norm0],
        },
        StartMode::Taylor if last == 0 => StepState {
            n: 0,
            previous: u0.clone(),
            current: u0,
            norm_history: vec![norm0],
        },
        StartMode::Taylor => {
            let u1 = taylor_first_level(&u0, problem)?;
            let norm1 = discrete_l2_norm(&u1);
            if opts.retention.keeps(1, last) {
                snapshots.push(Snapshot {
                    n: 1,
                    t: problem.time.time(1),
                    field: u1.clone(),
                });
            }
            StepState {
                n: 1,
                current: u1,
                previous: u0,
                norm_history: vec![norm0, norm1],
            }
        }
    };

    while state.n < last {
        let n = state.n;
        let (next, record) = step(state, problem, opts).map_err(|e| NlsError::Step {
            n,
            source: Box::new(e),
        })?;
        observe(&record, &next.current);
        if opts.retention.keeps(record.n, last) {
            snapshots.push(Snapshot {
                n: record.n,
                t: record.t,
                field: next.current.clone(),
            });
        }
        records.push(record);
        state = next;
    }
    Ok(Evolution {
        snapshots,
        records,
        state,
    })
}
