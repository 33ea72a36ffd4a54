//! Prints the manufactured-solution error table next to the published values.

use nls_core::experiments::{run_table1, TABLE1_PUBLISHED_ER, TABLE1_ROWS, THETA};
use nls_core::stepper::EvolveOptions;

fn main() {
    let report = run_table1(&TABLE1_ROWS, THETA, &EvolveOptions::default());
    println!("{:>4} {:>10} {:>12} {:>12} {:>8} {:>12} {:>10} {:>8}", "J", "l", "Er", "published", "ratio", "Er/(l2+h2)", "rel Er", "growth");
    for (row, published) in report.rows.iter().zip(TABLE1_PUBLISHED_ER) {
        println!(
            "{:>4} {:>10.3e} {:>12.4e} {:>12.4e} {:>8.3} {:>12.4e} {:>10.4e} {:>8.4}",
            row.intervals,
            row.l,
            row.er,
            published,
            row.er / published,
            row.normalized_er,
            row.relative_er,
            row.growth
        );
    }
    for f in &report.failures {
        println!("J={} l={:.3e} failed: {}", f.intervals, f.l, f.error);
    }
    println!("fitted order: {:?}", report.fitted_order);
}
