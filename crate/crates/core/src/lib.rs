//! Finite-difference solver for the two-dimensional nonlinear Schrödinger
//! equation with a singular nonlinearity,
//!
//! ```text
//! i u_t + Δu + u − |u|^{−2θ} u = g     on ]L0, L1[², homogeneous Neumann,
//! ```
//!
//! discretized by a three-level scheme whose Laplacian is a convex
//! (barycentric) combination of the levels `n+1`, `n`, `n−1`. Every time step
//! reduces to a Lyapunov–Sylvester matrix equation `A X + X Aᵀ = R` with a
//! tridiagonal `A`, solved either by a fixed-point iteration around `iI` or
//! by a banded LU factorization of the vectorized system.
//!
//! Module map:
//!
//! * [`grid`]: space/time grids, grid fields, discrete norm.
//! * [`operators`]: scheme matrices, Lyapunov operator, Neumann Laplacian.
//! * [`banded`]: complex banded LU with partial pivoting.
//! * [`sylvester`]: the two Lyapunov solvers and residual certification.
//! * [`stepper`]: nonlinearity, bootstrap and the time integrator.
//! * [`experiments`]: manufactured solution, error table, convergence orders.

pub mod banded;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod operators;
pub mod stepper;
pub mod sylvester;

pub use error::{NlsError, Result};
pub use num_complex::Complex64;

/// Formats a float with six significant digits in scientific notation,
/// the format used by every CSV the crate writes.
pub fn sci(value: f64) -> String {
    format!("{value:.5e}")
}
