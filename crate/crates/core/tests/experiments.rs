mod common;

use std::f64::consts::PI;
use std::sync::OnceLock;

use common::*;
use nls_core::experiments::*;
use nls_core::grid::{discrete_l2_norm, sample_field, SpaceGrid};
use nls_core::operators::{SchemeWeights, WeightSchedule};
use nls_core::stepper::{evolve, EvolveOptions, Snapshot};
use nls_core::NlsError;
use rand::Rng;

fn table() -> &'static ConvergenceReport {
    static REPORT: OnceLock<ConvergenceReport> = OnceLock::new();
    REPORT.get_or_init(|| run_table1(&TABLE1_ROWS, THETA, &EvolveOptions::default()))
}

fn exact_snapshots(grid: &SpaceGrid, times: &[f64]) -> Vec<Snapshot> {
    times
        .iter()
        .enumerate()
        .map(|(n, &t)| Snapshot {
            n,
            t,
            field: sample_field(grid, |x, y| exact_solution(x, y, t, HALF_WIDTH)).unwrap(),
        })
        .collect()
}

#[test]
fn exact_solution_examples() {
    assert!((exact_solution(0.0, 0.0, 0.0, 2.0 * PI) - c(1.0, 0.0)).norm() < 1e-15);
    let mut r = rng(40);
    for _ in 0..50 {
        let (y, t) = (r.gen_range(-6.0..6.0), r.gen_range(0.0..3.0));
        assert!(exact_solution(HALF_WIDTH, y, t, HALF_WIDTH).norm() < 1e-30);
        let x = r.gen_range(-6.0..6.0);
        let a = exact_solution(x, y, 0.0, HALF_WIDTH).norm();
        let b = exact_solution(x, y, t, HALF_WIDTH).norm();
        assert!((a - b).abs() < 1e-15);
        assert!((exact_solution(x, y, t, HALF_WIDTH) - exact_oracle(x, y, t, HALF_WIDTH)).norm() < 1e-15);
    }
}

#[test]
fn forcing_examples() {
    assert!((forcing_g(0.0, 0.0, 0.0, 2.0 * PI, 0.25) - c(0.25, 0.0)).norm() < 1e-15);
    let mut r = rng(41);
    for _ in 0..50 {
        let t = r.gen_range(0.0..2.0);
        let theta = r.gen_range(0.01..0.49);
        assert!(forcing_g(HALF_WIDTH, HALF_WIDTH, t, HALF_WIDTH, theta).norm() < 1e-15);
        let (x, y) = (r.gen_range(-6.0..6.0), r.gen_range(-6.0..6.0));
        let want = g_oracle(x, y, t, HALF_WIDTH, theta);
        assert!((forcing_g(x, y, t, HALF_WIDTH, theta) - want).norm() < 1e-13);
    }
}

#[test]
fn forcing_is_consistent_with_exact_solution() {
    let mut r = rng(42);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let (x, y) = (r.gen_range(-5.5..5.5), r.gen_range(-5.5..5.5));
        let t = r.gen_range(0.05..0.95);
        let res = pde_residual(
            |x, y, t| exact_solution(x, y, t, HALF_WIDTH),
            |x, y, t| forcing_g(x, y, t, HALF_WIDTH, THETA),
            x,
            y,
            t,
            THETA,
            1e-2,
        );
        worst = worst.max(res.norm());
    }
    assert!(worst <= 1e-6, "{worst}");
}

#[test]
fn er_of_exact_samples_is_zero_and_picks_up_a_single_perturbation() {
    let grid = SpaceGrid::new(-HALF_WIDTH, HALF_WIDTH, 8).unwrap();
    let snaps = exact_snapshots(&grid, &[0.0, 0.1, 0.2]);
    assert_eq!(compute_er(&snaps, &grid, HALF_WIDTH).unwrap(), 0.0);
    assert_eq!(compute_relative_er(&snaps, &grid, HALF_WIDTH).unwrap(), 0.0);

    let delta = c(3e-3, -4e-3);
    let mut one = exact_snapshots(&grid, &[0.3]);
    let mut a = one[0].field.clone().into_array();
    a[[2, 5]] += delta;
    one[0].field = nls_core::grid::ComplexField::from_array(a).unwrap();
    let er = compute_er(&one, &grid, HALF_WIDTH).unwrap();
    assert!((er - delta.norm()).abs() < 1e-15);
}

#[test]
fn relative_er_is_homogeneous() {
    let grid = SpaceGrid::new(-HALF_WIDTH, HALF_WIDTH, 10).unwrap();
    let mut snaps = exact_snapshots(&grid, &[0.0, 0.5, 1.0]);
    for s in &mut snaps {
        s.field = s.field.scaled(c(1.04, 0.0));
    }
    let rel = compute_relative_er(&snaps, &grid, HALF_WIDTH).unwrap();
    assert!((rel - 0.04).abs() < 1e-12);
}

#[test]
fn relative_er_rejects_vanishing_exact_norm() {
    let grid = SpaceGrid::new(-1.0, 1.0, 4).unwrap();
    let snaps = vec![Snapshot {
        n: 4,
        t: 0.0,
        field: nls_core::grid::ComplexField::zeros(5),
    }];
    let zero = |_: f64, _: f64, _: f64| c(0.0, 0.0);
    assert_eq!(er_against(&snaps, &grid, zero).unwrap(), 0.0);
    assert!(matches!(
        relative_er_against(&snaps, &grid, zero),
        Err(NlsError::DivisionByZero { n: 4 })
    ));
}

#[test]
fn exact_solution_vanishes_on_the_boundary_nodes() {
    let grid = SpaceGrid::new(-HALF_WIDTH, HALF_WIDTH, 24).unwrap();
    let u = sample_field(&grid, |x, y| exact_solution(x, y, 0.7, HALF_WIDTH)).unwrap();
    for k in 0..25 {
        for (j, m) in [(0, k), (24, k), (k, 0), (k, 24)] {
            assert_eq!(u.get(j, m), c(0.0, 0.0));
        }
    }
}

#[test]
fn relative_er_bounded_by_er_over_min_exact_norm() {
    let p = manufactured_problem(8, 0.02, THETA, 0.4, HALF_WIDTH).unwrap();
    let evo = evolve(&p, &EvolveOptions::default()).unwrap();
    let grid = p.space();
    let er = compute_er(&evo.snapshots, grid, HALF_WIDTH).unwrap();
    let rel = compute_relative_er(&evo.snapshots, grid, HALF_WIDTH).unwrap();
    let min_norm = exact_snapshots(grid, &evo.snapshots.iter().map(|s| s.t).collect::<Vec<_>>())
        .iter()
        .map(|s| discrete_l2_norm(&s.field))
        .fold(f64::INFINITY, f64::min);
    assert!(rel <= er / min_norm * (1.0 + 1e-12));
}

#[test]
fn exact_discrete_norm_is_time_independent() {
    let grid = SpaceGrid::new(-HALF_WIDTH, HALF_WIDTH, 20).unwrap();
    let times: Vec<f64> = (0..=50).map(|k| k as f64 * 0.02).collect();
    let norms: Vec<f64> = exact_snapshots(&grid, &times).iter().map(|s| discrete_l2_norm(&s.field)).collect();
    for v in &norms {
        assert!((v - norms[0]).abs() <= 1e-12 * norms[0]);
    }
}

#[test]
fn fit_slope_recovers_a_line() {
    let xs = [0.0, 1.0, 2.0, 5.0];
    let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x - 1.0).collect();
    assert!((fit_slope(&xs, &ys).unwrap() - 2.0).abs() < 1e-14);
    assert_eq!(fit_slope(&[1.0], &[1.0]), None);
    assert_eq!(fit_slope(&[1.0, 1.0], &[0.0, 2.0]), None);
}

#[test]
fn truncation_slope_with_equal_outer_weights() {
    let refine = quadratic_refinement(&[10, 14, 20, 28, 40], 0.01);
    let cn = WeightSchedule::Constant(SchemeWeights::new(0.5, 0.0, 0.5).unwrap());
    let report = measure_truncation_order(&Manufactured::reference(HALF_WIDTH, THETA), HALF_WIDTH, THETA, cn, &refine, 0.25).unwrap();
    let slope = report.slope.unwrap();
    assert!(slope >= 1.8, "{slope}");
}

#[test]
fn truncation_slope_with_geometric_schedule() {
    let refine = quadratic_refinement(&[10, 14, 20, 28, 40], 0.01);
    let report = measure_truncation_order(
        &Manufactured::reference(HALF_WIDTH, THETA),
        HALF_WIDTH,
        THETA,
        WeightSchedule::Geometric,
        &refine,
        0.25,
    )
    .unwrap();
    let slope = report.slope.unwrap();
    assert!(slope >= 1.8, "{slope}");
}

#[test]
fn zero_solution_has_zero_residual() {
    let refine = [(4, 0.1), (8, 0.05), (16, 0.02)];
    let report = measure_truncation_order(&Manufactured::zero(), HALF_WIDTH, THETA, WeightSchedule::Geometric, &refine, 0.2).unwrap();
    assert!(report.levels.iter().all(|lv| lv.residual == 0.0));
    assert_eq!(report.slope, None);
}

#[test]
fn quadratic_refinement_scales_time_step() {
    let r = quadratic_refinement(&[10, 20, 40], 0.01);
    assert_eq!(r[0], (10, 0.01));
    assert!((r[1].1 - 0.0025).abs() < 1e-18);
    assert!((r[2].1 - 0.000625).abs() < 1e-18);
    assert!(quadratic_refinement(&[], 0.1).is_empty());
}

#[test]
fn table_rows_satisfy_row_invariants() {
    let report = table();
    assert!(report.failures.is_empty());
    assert_eq!(report.rows.len(), 7);
    for (row, &(j, l)) in report.rows.iter().zip(TABLE1_ROWS.iter()) {
        assert_eq!((row.intervals, row.l), (j, l));
        assert!(row.er >= 0.0);
        let want = row.er / (row.l * row.l + row.h * row.h);
        assert!((row.normalized_er - want).abs() <= 1e-12 * want);
        assert!((row.log_ratio - row.l.ln() / row.h.ln()).abs() < 1e-14);
    }
    assert!(report.fitted_order.unwrap().is_finite());
}

/// Along rows ordered by decreasing `l² + h²`, Er does not increase.
#[test]
fn error_decays_monotonically_along_table_rows() {
    let mut rows = table().rows.clone();
    rows.sort_by(|a, b| (b.l * b.l + b.h * b.h).total_cmp(&(a.l * a.l + a.h * a.h)));
    let ers: Vec<f64> = rows.iter().map(|r| r.er).collect();
    assert!(ers.windows(2).all(|w| w[1] <= w[0]), "Er along rows: {ers:?}");
}

#[test]
fn table_csv_is_deterministic() {
    let rows = [(6, 0.05), (8, 0.04)];
    let csv = || {
        let report = run_table1(&rows, THETA, &EvolveOptions::default());
        let mut buf = Vec::new();
        write_table1_csv(&report.rows, &mut buf).unwrap();
        buf
    };
    let first = csv();
    assert_eq!(first, csv());
    let text = String::from_utf8(first).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(TABLE1_HEADER));
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 6);
        for f in &fields[1..] {
            let (mantissa, _) = f.split_once('e').unwrap();
            assert_eq!(mantissa.trim_start_matches('-').len(), 7, "{f}");
        }
    }
}

#[test]
fn convergence_csv_lists_every_level() {
    let refine = [(4, 0.1), (8, 0.025)];
    let report = measure_truncation_order(&Manufactured::reference(HALF_WIDTH, THETA), HALF_WIDTH, THETA, WeightSchedule::Geometric, &refine, 0.2).unwrap();
    let mut buf = Vec::new();
    write_convergence_csv(&report, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], CONVERGENCE_HEADER);
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("4,") && lines[2].starts_with("8,"));
}
