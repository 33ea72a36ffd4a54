//! Uniform space and time grids and the complex fields that live on them.
//!
//! Fields are indexed `(j, m)` with `j` the x-index (row) and `m` the
//! y-index (column), so `field[[j, m]]` holds the value at `(x_j, y_m)`.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{NlsError, Result};

/// Uniform grid of `J + 1` nodes on `[L0, L1]`, shared by both axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceGrid {
    lower: f64,
    upper: f64,
    intervals: usize,
    step: f64,
}

impl SpaceGrid {
    /// Builds the grid with `intervals` subintervals. The five-point stencil
    /// needs at least one interior node, so `intervals >= 2`.
    pub fn new(lower: f64, upper: f64, intervals: usize) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite()) {
            return Err(NlsError::InvalidGrid("bounds must be finite".into()));
        }
        if upper <= lower {
            return Err(NlsError::InvalidGrid(format!(
                "upper bound {upper} must exceed lower bound {lower}"
            )));
        }
        if intervals < 2 {
            return Err(NlsError::InvalidGrid(format!(
                "need at least 2 subintervals, got {intervals}"
            )));
        }
        Ok(Self {
            lower,
            upper,
            intervals,
            step: (upper - lower) / intervals as f64,
        })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    /// Number of subintervals `J`.
    pub fn intervals(&self) -> usize {
        self.intervals
    }

    /// Number of nodes per axis, `J + 1`.
    pub fn nodes(&self) -> usize {
        self.intervals + 1
    }

    /// Space step `h`.
    pub fn step(&self) -> f64 {
        self.step
    }

    /// Node coordinate `L0 + j h`; the last node is pinned to `L1`.
    pub fn node(&self, j: usize) -> f64 {
        if j == self.intervals {
            self.upper
        } else {
            self.lower + j as f64 * self.step
        }
    }
}

/// Uniform time grid `t_n = t0 + n l`, `0 <= n <= N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    start: f64,
    step: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(start: f64, step: f64, steps: usize) -> Result<Self> {
        if !start.is_finite() {
            return Err(NlsError::InvalidGrid("initial time must be finite".into()));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(NlsError::InvalidGrid(format!(
                "time step must be positive, got {step}"
            )));
        }
        Ok(Self { start, step, steps })
    }

    /// Grid covering `[t0, T]` with step `l`; the step count is `round((T - t0) / l)`
    /// and must reproduce `T` to within a relative `1e-9`.
    pub fn spanning(start: f64, end: f64, step: f64) -> Result<Self> {
        if !(end >= start) {
            return Err(NlsError::InvalidGrid(format!(
                "final time {end} precedes initial time {start}"
            )));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(NlsError::InvalidGrid(format!(
                "time step must be positive, got {step}"
            )));
        }
        let count = ((end - start) / step).round();
        let reached = start + count * step;
        if (reached - end).abs() > 1e-9 * end.abs().max(1.0) {
            return Err(NlsError::InvalidGrid(format!(
                "time step {step} does not divide [{start}, {end}]"
            )));
        }
        Self::new(start, step, count as usize)
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    /// Time step `l`.
    pub fn step(&self) -> f64 {
        self.step
    }

    /// Number of steps `N`.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Final time `T = t0 + N l`.
    pub fn end(&self) -> f64 {
        self.time(self.steps)
    }

    pub fn time(&self, n: usize) -> f64 {
        self.start + n as f64 * self.step
    }
}

/// Square `(J+1) × (J+1)` complex snapshot with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField(Array2<Complex64>);

impl ComplexField {
    pub fn zeros(side: usize) -> Self {
        Self(Array2::zeros((side, side)))
    }

    /// Wraps an array after checking it is square with finite entries.
    pub fn from_array(values: Array2<Complex64>) -> Result<Self> {
        let (rows, cols) = values.dim();
        if rows != cols {
            return Err(NlsError::DimensionMismatch {
                expected: rows,
                found: cols,
            });
        }
        if let Some(((j, m), _)) = values
            .indexed_iter()
            .find(|(_, z)| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(NlsError::NonFinite { j, m });
        }
        Ok(Self(values))
    }

    /// Wraps an array produced by crate arithmetic on finite fields. Callers
    /// that can produce non-finite values must go through [`Self::from_array`].
    pub(crate) fn from_array_unchecked(values: Array2<Complex64>) -> Self {
        debug_assert_eq!(values.nrows(), values.ncols());
        Self(values)
    }

    pub fn from_fn(side: usize, f: impl FnMut((usize, usize)) -> Complex64) -> Result<Self> {
        Self::from_array(Array2::from_shape_fn((side, side), f))
    }

    /// Side length `J + 1`.
    pub fn side(&self) -> usize {
        self.0.nrows()
    }

    pub fn values(&self) -> &Array2<Complex64> {
        &self.0
    }

    pub fn into_array(self) -> Array2<Complex64> {
        self.0
    }

    pub fn get(&self, j: usize, m: usize) -> Complex64 {
        self.0[[j, m]]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self(&self.0 * c)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_same_side(self, other)?;
        Ok(Self(&self.0 - &other.0))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_same_side(self, other)?;
        Ok(Self(&self.0 + &other.0))
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }
}

pub(crate) fn check_same_side(a: &ComplexField, b: &ComplexField) -> Result<()> {
    if a.side() != b.side() {
        return Err(NlsError::DimensionMismatch {
            expected: a.side(),
            found: b.side(),
        });
    }
    Ok(())
}

/// Samples `f(x_j, y_m)` on every node; a non-finite sample is an error.
pub fn sample_field(grid: &SpaceGrid, mut f: impl FnMut(f64, f64) -> Complex64) -> Result<ComplexField> {
    ComplexField::from_fn(grid.nodes(), |(j, m)| f(grid.node(j), grid.node(m)))
}

/// Unweighted discrete L2 norm `(Σ |X_jm|²)^{1/2}` over all nodes.
///
/// There is no `h²` quadrature weight: error tables are computed with the raw sum.
pub fn discrete_l2_norm(field: &ComplexField) -> f64 {
    frobenius(&field.0)
}

pub(crate) fn frobenius(values: &Array2<Complex64>) -> f64 {
    // scaled accumulation avoids overflow for large entries
    let scale = values.iter().fold(0.0f64, |acc, z| acc.max(z.re.abs()).max(z.im.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let sum: f64 = values
        .iter()
        .map(|z| {
            let (a, b) = (z.re / scale, z.im / scale);
            a * a + b * b
        })
        .sum();
    scale * sum.sqrt()
}
