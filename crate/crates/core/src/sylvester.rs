//! Solvers for the per-step Lyapunov equation `A X + X Aᵀ = R`.
//!
//! Two independent routes:
//!
//! * fixed point around the limiting operator `iI`: `X_{k+1} = −i(R − (L_A − iI) X_k)`,
//!   a contraction whenever `‖L_A − iI‖ < 1`;
//! * direct: the vectorized system `(I ⊗ A + A ⊗ I) vec(X) = vec(R)` is banded
//!   with bandwidth `J + 1` and is factorized by [`crate::banded`].
//!
//! `vec` stacks columns left to right, `vec(X)[j + m n] = X[j, m]`, so `A X`
//! maps to `(I ⊗ A) vec(X)` and `X Aᵀ` to `(A ⊗ I) vec(X)`.

use ndarray::Array2;
use num_complex::Complex64;

use crate::banded::BandedMatrix;
use crate::error::{NlsError, Result};
use crate::grid::{frobenius, ComplexField};
use crate::operators::{deviation_from_i_identity, lyapunov_apply_array, TridiagonalMatrix};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Relative pivot threshold of the banded factorization.
pub const PIVOT_RELATIVE_TOLERANCE: f64 = 1e-14;

/// Iterative-refinement sweeps applied by the direct backend when the first
/// solve misses the residual target.
const REFINEMENT_SWEEPS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    FixedPoint,
    DirectBanded,
}

impl Backend {
    pub fn name(&self) -> &'static str {
        match self {
            Backend::FixedPoint => "fixed-point",
            Backend::DirectBanded => "direct",
        }
    }
}

/// Which backend a caller allows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BackendPolicy {
    /// Fixed point when the deviation bound is below the contraction threshold, else direct.
    #[default]
    Auto,
    FixedPointOnly,
    DirectOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Target for `‖A X + X Aᵀ − R‖_F`.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Fixed point is admissible only when `8σα` (the deviation bound) is below this.
    pub contraction_threshold: f64,
    pub policy: BackendPolicy,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            max_iterations: 500,
            contraction_threshold: 0.9,
            policy: BackendPolicy::Auto,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance.is_finite() && self.tolerance >= 1e-15) {
            return Err(NlsError::InvalidParameter(format!(
                "tolerance {} must be at least 1e-15",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(NlsError::InvalidParameter("max_iterations must be positive".into()));
        }
        // 0 is accepted and disables the fixed-point backend
        if !(0.0..1.0).contains(&self.contraction_threshold) {
            return Err(NlsError::InvalidParameter(format!(
                "contraction_threshold {} must lie in [0, 1)",
                self.contraction_threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub backend: Backend,
    /// Applications of `L_A` for the fixed point; 0 for a direct solve without refinement.
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// `‖L_A(X) − R‖_F`.
pub fn residual_norm(a: &TridiagonalMatrix, x: &ComplexField, rhs: &ComplexField) -> Result<f64> {
    check_dims(a, x)?;
    check_dims(a, rhs)?;
    Ok(frobenius(&(lyapunov_apply_array(a, x.values()) - rhs.values())))
}

fn check_dims(a: &TridiagonalMatrix, x: &ComplexField) -> Result<()> {
    if a.size() != x.side() {
        return Err(NlsError::DimensionMismatch {
            expected: a.size(),
            found: x.side(),
        });
    }
    Ok(())
}

pub fn solve_fixed_point(
    a: &TridiagonalMatrix,
    rhs: &ComplexField,
    cfg: &SolverConfig,
) -> Result<(ComplexField, SolveReport)> {
    solve_fixed_point_observed(a, rhs, cfg, |_, _| {})
}

/// Fixed-point solve calling `observe(k, X_k)` on every iterate, starting
/// from `X_0 = −i R`, the solution for `L_A = iI`.
pub fn solve_fixed_point_observed(
    a: &TridiagonalMatrix,
    rhs: &ComplexField,
    cfg: &SolverConfig,
    mut observe: impl FnMut(usize, &ComplexField),
) -> Result<(ComplexField, SolveReport)> {
    check_dims(a, rhs)?;
    let bound = deviation_from_i_identity(a);
    if !(bound < cfg.contraction_threshold) {
        return Err(NlsError::NotContractive {
            bound,
            threshold: cfg.contraction_threshold,
        });
    }
    let mut x = rhs.values().mapv(|z| -I * z);
    for k in 0..cfg.max_iterations {
        observe(k, &ComplexField::from_array_unchecked(x.clone()));
        let r = lyapunov_apply_array(a, &x) - rhs.values();
        let residual = frobenius(&r);
        if residual <= cfg.tolerance {
            return Ok((
                ComplexField::from_array_unchecked(x),
                SolveReport {
                    backend: Backend::FixedPoint,
                    iterations: k + 1,
                    residual,
                    converged: true,
                },
            ));
        }
        if !residual.is_finite() {
            break;
        }
        // X − i(R − L_A X + iX) simplifies to X + i r
        x.zip_mut_with(&r, |xi, ri| *xi += I * ri);
    }
    let residual = residual_norm(a, &ComplexField::from_array_unchecked(x), rhs)?;
    Err(NlsError::MaxIterations {
        iterations: cfg.max_iterations,
        residual,
    })
}

/// Assembles `I ⊗ A + A ⊗ I` in band storage (`kl = ku = n`).
pub fn kronecker_band(a: &TridiagonalMatrix) -> BandedMatrix {
    let n = a.size();
    let mut band = BandedMatrix::zeros(n * n, n, n);
    for m in 0..n {
        for j in 0..n {
            let p = j + m * n;
            band.add(p, p, a.diag()[j] + a.diag()[m]);
            if j > 0 {
                band.add(p, p - 1, a.lower()[j - 1]);
            }
            if j + 1 < n {
                band.add(p, p + 1, a.upper()[j]);
            }
            if m > 0 {
                band.add(p, p - n, a.lower()[m - 1]);
            }
            if m + 1 < n {
                band.add(p, p + n, a.upper()[m]);
            }
        }
    }
    band
}

fn vec_columns(x: &Array2<Complex64>) -> Vec<Complex64> {
    let n = x.nrows();
    (0..n * n).map(|p| x[[p % n, p / n]]).collect()
}

fn unvec_columns(v: &[Complex64], n: usize) -> Array2<Complex64> {
    Array2::from_shape_fn((n, n), |(j, m)| v[j + m * n])
}

/// Direct solve by banded LU of the vectorized system, with up to two
/// refinement sweeps if the first residual exceeds `cfg.tolerance`.
pub fn solve_direct_banded(
    a: &TridiagonalMatrix,
    rhs: &ComplexField,
    cfg: &SolverConfig,
) -> Result<(ComplexField, SolveReport)> {
    check_dims(a, rhs)?;
    let n = a.size();
    let band = kronecker_band(a);
    let pivot_tolerance = PIVOT_RELATIVE_TOLERANCE * band.inf_norm();
    let lu = band.factorize(pivot_tolerance)?;

    let mut v = vec_columns(rhs.values());
    lu.solve_in_place(&mut v);
    let mut x = unvec_columns(&v, n);
    let mut r = rhs.values() - &lyapunov_apply_array(a, &x);
    let mut residual = frobenius(&r);
    let mut sweeps = 0;
    while residual > cfg.tolerance && sweeps < REFINEMENT_SWEEPS {
        let mut dv = vec_columns(&r);
        lu.solve_in_place(&mut dv);
        x += &unvec_columns(&dv, n);
        r = rhs.values() - &lyapunov_apply_array(a, &x);
        residual = frobenius(&r);
        sweeps += 1;
    }
    let x = ComplexField::from_array(x)?;
    Ok((
        x,
        SolveReport {
            backend: Backend::DirectBanded,
            iterations: sweeps,
            residual,
            converged: residual <= cfg.tolerance,
        },
    ))
}

/// Dispatches on `cfg.policy`.
pub fn solve_lyapunov(
    a: &TridiagonalMatrix,
    rhs: &ComplexField,
    cfg: &SolverConfig,
) -> Result<(ComplexField, SolveReport)> {
    match cfg.policy {
        BackendPolicy::FixedPointOnly => solve_fixed_point(a, rhs, cfg),
        BackendPolicy::DirectOnly => solve_direct_banded(a, rhs, cfg),
        BackendPolicy::Auto => {
            if deviation_from_i_identity(a) < cfg.contraction_threshold {
                solve_fixed_point(a, rhs, cfg)
            } else {
                solve_direct_banded(a, rhs, cfg)
            }
        }
    }
}
