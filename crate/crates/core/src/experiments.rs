//! Manufactured-solution verification on `]−2π, 2π[²`.
//!
//! The exact solution is `u = e^{−iωt} v(x) v(y)` with `v(x) = cos²(πx/(2L))`,
//! `ω = 2π²/L²`, and the forcing `g` is whatever makes `u` solve the forced
//! equation. `L` below is the half-width of the domain (`2π`).

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::{self, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{NlsError, Result};
use crate::grid::{discrete_l2_norm, sample_field, ComplexField, SpaceGrid, TimeGrid};
use crate::operators::{assemble_scheme_matrices, lyapunov_apply, WeightSchedule};
use crate::sci;
use crate::stepper::{evolve, source_term, EvolveOptions, Forcing, NlsProblem, Retention, Snapshot};

/// Half-width of the test domain.
pub const HALF_WIDTH: f64 = 2.0 * PI;
pub const THETA: f64 = 0.25;
pub const FINAL_TIME: f64 = 1.0;

/// `(J, l)` pairs of the reference error table.
pub const TABLE1_ROWS: [(usize, f64); 7] = [
    (10, 1.0 / 100.0),
    (16, 1.0 / 120.0),
    (20, 1.0 / 200.0),
    (24, 1.0 / 220.0),
    (30, 1.0 / 280.0),
    (40, 1.0 / 400.0),
    (50, 1.0 / 500.0),
];

/// Published `Er` for each entry of [`TABLE1_ROWS`].
pub const TABLE1_PUBLISHED_ER: [f64; 7] = [7.50e-4, 3.90e-4, 1.87e-4, 1.42e-4, 8.92e-5, 4.68e-5, 3.00e-5];

fn profile(x: f64, half_width: f64) -> f64 {
    let s = x / half_width;
    // inside the domain the sine form keeps the zeros at ±L exact
    let c = if s.abs() <= 1.0 {
        (FRAC_PI_2 * (1.0 - s.abs())).sin()
    } else {
        (FRAC_PI_2 * s).cos()
    };
    c * c
}

fn phase(t: f64, half_width: f64) -> Complex64 {
    Complex64::from_polar(1.0, -2.0 * PI * PI * t / (half_width * half_width))
}

/// `u(x, y, t) = exp(−2iπ²t/L²) cos²(πx/(2L)) cos²(πy/(2L))`.
pub fn exact_solution(x: f64, y: f64, t: f64, half_width: f64) -> Complex64 {
    phase(t, half_width) * (profile(x, half_width) * profile(y, half_width))
}

/// `g = exp(−2iπ²t/L²) [π²/(2L²)(v(x)+v(y)) + v(x)v(y) − v(x)^{1−2θ} v(y)^{1−2θ}]`.
pub fn forcing_g(x: f64, y: f64, t: f64, half_width: f64, theta: f64) -> Complex64 {
    let (vx, vy) = (profile(x, half_width), profile(y, half_width));
    let p = 1.0 - 2.0 * theta;
    let bracket = PI * PI / (2.0 * half_width * half_width) * (vx + vy) + vx * vy - vx.powf(p) * vy.powf(p);
    phase(t, half_width) * bracket
}

/// The forced test problem on `[−L, L]²` over `[0, T]`.
pub fn manufactured_problem(intervals: usize, l: f64, theta: f64, final_time: f64, half_width: f64) -> Result<NlsProblem> {
    let space = SpaceGrid::new(-half_width, half_width, intervals)?;
    let time = TimeGrid::spanning(0.0, final_time, l)?;
    NlsProblem::new(
        theta,
        space,
        time,
        Arc::new(move |x, y| exact_solution(x, y, 0.0, half_width)),
        Some(Arc::new(move |x, y, t| forcing_g(x, y, t, half_width, theta))),
    )
}

/// `Er = max_n ‖Uⁿ − uⁿ‖₂` over the snapshots.
pub fn compute_er(trajectory: &[Snapshot], grid: &SpaceGrid, half_width: f64) -> Result<f64> {
    er_against(trajectory, grid, |x, y, t| exact_solution(x, y, t, half_width))
}

/// `max_n ‖Uⁿ − uⁿ‖₂ / ‖uⁿ‖₂`.
pub fn compute_relative_er(trajectory: &[Snapshot], grid: &SpaceGrid, half_width: f64) -> Result<f64> {
    relative_er_against(trajectory, grid, |x, y, t| exact_solution(x, y, t, half_width))
}

/// [`compute_er`] against an arbitrary reference `u(x, y, t)`.
pub fn er_against<F>(trajectory: &[Snapshot], grid: &SpaceGrid, exact: F) -> Result<f64>
where
    F: Fn(f64, f64, f64) -> Complex64,
{
    let mut worst = 0.0f64;
    for s in trajectory {
        let reference = sample_field(grid, |x, y| exact(x, y, s.t))?;
        worst = worst.max(discrete_l2_norm(&s.field.sub(&reference)?));
    }
    Ok(worst)
}

/// [`compute_relative_er`] against an arbitrary reference `u(x, y, t)`.
pub fn relative_er_against<F>(trajectory: &[Snapshot], grid: &SpaceGrid, exact: F) -> Result<f64>
where
    F: Fn(f64, f64, f64) -> Complex64,
{
    let mut worst = 0.0f64;
    for s in trajectory {
        let reference = sample_field(grid, |x, y| exact(x, y, s.t))?;
        let denom = discrete_l2_norm(&reference);
        if denom == 0.0 {
            return Err(NlsError::DivisionByZero { n: s.n });
        }
        worst = worst.max(discrete_l2_norm(&s.field.sub(&reference)?) / denom);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorTableRow {
    pub intervals: usize,
    pub l: f64,
    pub h: f64,
    /// `log l / log h`.
    pub log_ratio: f64,
    pub er: f64,
    pub relative_er: f64,
    /// `Er / (l² + h²)`.
    pub normalized_er: f64,
    /// `max_n ‖Uⁿ‖₂ / ‖U⁰‖₂`.
    pub growth: f64,
}

#[derive(Debug, Clone)]
pub struct RowFailure {
    pub intervals: usize,
    pub l: f64,
    pub error: NlsError,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub rows: Vec<ErrorTableRow>,
    pub failures: Vec<RowFailure>,
    /// Least-squares slope of `log Er` against `log(l² + h²)`; `None` with fewer than two rows.
    pub fitted_order: Option<f64>,
}

/// Runs the manufactured problem for one `(J, l)` pair.
pub fn error_row(intervals: usize, l: f64, theta: f64, opts: &EvolveOptions) -> Result<ErrorTableRow> {
    let problem = manufactured_problem(intervals, l, theta, FINAL_TIME, HALF_WIDTH)?;
    let opts = EvolveOptions {
        retention: Retention::All,
        ..*opts
    };
    let evo = evolve(&problem, &opts)?;
    let grid = problem.space();
    let er = compute_er(&evo.snapshots, grid, HALF_WIDTH)?;
    let relative_er = compute_relative_er(&evo.snapshots, grid, HALF_WIDTH)?;
    let h = grid.step();
    let history = &evo.state.norm_history;
    let growth = history.iter().copied().fold(0.0, f64::max) / history[0];
    Ok(ErrorTableRow {
        intervals,
        l,
        h,
        log_ratio: l.ln() / h.ln(),
        er,
        relative_er,
        normalized_er: er / (l * l + h * h),
        growth,
    })
}

/// Runs every `(J, l)` pair (in parallel), keeping failed rows aside.
pub fn run_table1(rows: &[(usize, f64)], theta: f64, opts: &EvolveOptions) -> ConvergenceReport {
    let results: Vec<_> = rows
        .par_iter()
        .map(|&(j, l)| (j, l, error_row(j, l, theta, opts)))
        .collect();
    let mut ok = Vec::new();
    let mut failures = Vec::new();
    for (intervals, l, r) in results {
        match r {
            Ok(row) => ok.push(row),
            Err(error) => failures.push(RowFailure { intervals, l, error }),
        }
    }
    let xs: Vec<f64> = ok.iter().map(|r| (r.l * r.l + r.h * r.h).ln()).collect();
    let ys: Vec<f64> = ok.iter().map(|r| r.er.ln()).collect();
    ConvergenceReport {
        fitted_order: fit_slope(&xs, &ys),
        rows: ok,
        failures,
    }
}

/// Ordinary least-squares slope; `None` for fewer than two points or a degenerate abscissa.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    (sxx > 0.0 && slope.is_finite()).then_some(slope)
}

pub const TABLE1_HEADER: &str = "J,l,log_ratio,Er,relative_Er,normalized_Er";

pub fn write_table1_csv<W: Write>(rows: &[ErrorTableRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{TABLE1_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.intervals,
            sci(r.l),
            sci(r.log_ratio),
            sci(r.er),
            sci(r.relative_er),
            sci(r.normalized_er)
        )?;
    }
    Ok(())
}

/// A smooth solution paired with the forcing it satisfies.
#[derive(Clone)]
pub struct Manufactured {
    pub solution: Forcing,
    pub forcing: Forcing,
}

impl Manufactured {
    /// The exact solution and forcing of the test problem.
    pub fn reference(half_width: f64, theta: f64) -> Self {
        Self {
            solution: Arc::new(move |x, y, t| exact_solution(x, y, t, half_width)),
            forcing: Arc::new(move |x, y, t| forcing_g(x, y, t, half_width, theta)),
        }
    }

    /// `u ≡ 0`, `g ≡ 0`.
    pub fn zero() -> Self {
        let zero: Forcing = Arc::new(|_, _, _| Complex64::new(0.0, 0.0));
        Self {
            solution: zero.clone(),
            forcing: zero,
        }
    }
}

/// One refinement level of a truncation measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationLevel {
    pub intervals: usize,
    pub h: f64,
    pub l: f64,
    /// `max_n ‖R_n‖_F / ((J+1) · 2l)`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncationReport {
    pub levels: Vec<TruncationLevel>,
    /// Slope of `log residual` against `log h`; `None` when residuals vanish.
    pub slope: Option<f64>,
}

/// Scheme residual at level `n` with the exact solution injected:
/// `L_A(uⁿ⁺¹) + L_B(uⁿ) + L_C(uⁿ⁻¹) + F_n`. The problem's forcing enters `F_n`.
pub fn scheme_residual(problem: &NlsProblem, solution: &Forcing, n: usize) -> Result<ComplexField> {
    let grid = problem.space();
    let time = problem.time();
    let sample = |t: f64| sample_field(grid, |x, y| solution(x, y, t));
    let t = time.time(n);
    let l = time.step();
    let (next, now, prev) = (sample(t + l)?, sample(t)?, sample(t - l)?);
    let mats = assemble_scheme_matrices(problem.sigma(), problem.schedule().weights(n), grid.nodes())?;
    let mut r = lyapunov_apply(&mats.a, &next)?.into_array();
    r += lyapunov_apply(&mats.b, &now)?.values();
    r += lyapunov_apply(&mats.c, &prev)?.values();
    r += source_term(n, &now, &prev, problem)?.values();
    ComplexField::from_array(r)
}

/// Injects the exact solution into the scheme on each `(J, l)` level of
/// `[−L, L]²` over the steps covering `[0, horizon]` and fits the log-log
/// slope of the residual against `h`. The residual is divided by `2l` (the
/// scheme is the equation multiplied by `2l`) and by `J + 1` (RMS over nodes).
pub fn measure_truncation_order(
    exact: &Manufactured,
    half_width: f64,
    theta: f64,
    schedule: WeightSchedule,
    refinement: &[(usize, f64)],
    horizon: f64,
) -> Result<TruncationReport> {
    let levels = refinement
        .par_iter()
        .map(|&(intervals, l)| {
            let space = SpaceGrid::new(-half_width, half_width, intervals)?;
            let steps = ((horizon / l).round() as usize).max(1);
            let time = TimeGrid::new(0.0, l, steps)?;
            let solution = exact.solution.clone();
            let problem = NlsProblem::new(
                theta,
                space,
                time,
                Arc::new(move |x, y| solution(x, y, 0.0)),
                Some(exact.forcing.clone()),
            )?
            .with_schedule(schedule);
            let mut worst = 0.0f64;
            for n in 0..steps {
                let r = scheme_residual(&problem, &exact.solution, n)?;
                worst = worst.max(discrete_l2_norm(&r));
            }
            Ok(TruncationLevel {
                intervals,
                h: space.step(),
                l,
                residual: worst / (space.nodes() as f64 * 2.0 * l),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let slope = if levels.iter().all(|lv| lv.residual > 0.0) {
        let xs: Vec<f64> = levels.iter().map(|lv| lv.h.ln()).collect();
        let ys: Vec<f64> = levels.iter().map(|lv| lv.residual.ln()).collect();
        fit_slope(&xs, &ys)
    } else {
        None
    };
    Ok(TruncationReport { levels, slope })
}

/// `(J, l)` levels with `l = l₀ (h / h₀)²` on a fixed domain, where `h₀`
/// belongs to the first entry of `intervals`.
pub fn quadratic_refinement(intervals: &[usize], first_l: f64) -> Vec<(usize, f64)> {
    let Some(&j0) = intervals.first() else {
        return Vec::new();
    };
    intervals
        .iter()
        .map(|&j| {
            let ratio = j0 as f64 / j as f64;
            (j, first_l * ratio * ratio)
        })
        .collect()
}

pub const CONVERGENCE_HEADER: &str = "J,h,l,residual,slope";

pub fn write_convergence_csv<W: Write>(report: &TruncationReport, mut out: W) -> io::Result<()> {
    writeln!(out, "{CONVERGENCE_HEADER}")?;
    let slope = report.slope.map(sci).unwrap_or_else(|| "nan".to_string());
    for lv in &report.levels {
        writeln!(out, "{},{},{},{},{}", lv.intervals, sci(lv.h), sci(lv.l), sci(lv.residual), slope)?;
    }
    Ok(())
}
