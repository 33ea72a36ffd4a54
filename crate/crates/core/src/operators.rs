//! Scheme matrices `A_n`, `B_n`, `C_n`, the Lyapunov operator
//! `L_W(X) = W X + X Wᵀ` and the ghost-reflected Neumann Laplacian.
//!
//! Multiplying the discrete equation at node `(j, m)` by `2l` gives
//!
//! ```text
//! i(U⁺ − U⁻) + σ[α S(U⁺) + β S(U⁰) + γ S(U⁻)] + 2l f̂ = 0,    σ = 2l/h²,
//! ```
//!
//! where `S` is the five-point stencil without the `1/h²` factor. Splitting
//! `S` into its x and y halves turns each level into `W X + X Wᵀ` with a
//! tridiagonal `W`. The homogeneous Neumann condition is imposed with mirror
//! ghosts `U_{−1} = U_1`, `U_{J+1} = U_{J−1}`, which doubles the single
//! off-diagonal entry of the first and last rows.

use std::io::{self, Write};

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{NlsError, Result};
use crate::grid::ComplexField;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Convex weights distributing the Laplacian over levels `n+1`, `n`, `n−1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl SchemeWeights {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        for (name, w) in [("alpha", alpha), ("beta", beta), ("gamma", gamma)] {
            if !(0.0..=1.0).contains(&w) {
                return Err(NlsError::InvalidParameter(format!(
                    "{name} = {w} must lie in [0, 1]"
                )));
            }
        }
        let sum = alpha + beta + gamma;
        if (sum - 1.0).abs() > 1e-15 {
            return Err(NlsError::InvalidParameter(format!(
                "weights must sum to 1, got {sum}"
            )));
        }
        Ok(Self { alpha, beta, gamma })
    }
}

/// How the weights evolve with the time level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightSchedule {
    /// `α_n = 1/4 + 2^{−(n+3)}`, `β_n = 1/4 − 2^{−(n+3)}`, `γ_n = 1/2`.
    Geometric,
    Constant(SchemeWeights),
}

impl WeightSchedule {
    pub fn weights(&self, n: usize) -> SchemeWeights {
        match self {
            WeightSchedule::Geometric => weight_schedule(n),
            WeightSchedule::Constant(w) => *w,
        }
    }
}

/// The geometric schedule. All terms are dyadic, so the sum is exactly 1.
pub fn weight_schedule(n: usize) -> SchemeWeights {
    // 2^-1100 is already below the smallest subnormal
    let eps = 0.5f64.powi((n.saturating_add(3)).min(1100) as i32);
    SchemeWeights {
        alpha: 0.25 + eps,
        beta: 0.25 - eps,
        gamma: 0.5,
    }
}

/// Complex tridiagonal matrix. `lower[k] = M(k+1, k)`, `upper[k] = M(k, k+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalMatrix {
    diag: Vec<Complex64>,
    lower: Vec<Complex64>,
    upper: Vec<Complex64>,
}

impl TridiagonalMatrix {
    pub fn new(diag: Vec<Complex64>, lower: Vec<Complex64>, upper: Vec<Complex64>) -> Result<Self> {
        let n = diag.len();
        if n == 0 {
            return Err(NlsError::InvalidParameter("empty tridiagonal matrix".into()));
        }
        for band in [&lower, &upper] {
            if band.len() != n - 1 {
                return Err(NlsError::DimensionMismatch {
                    expected: n - 1,
                    found: band.len(),
                });
            }
        }
        Ok(Self { diag, lower, upper })
    }

    /// Tridiagonal matrix with constant diagonal `center`, constant
    /// off-diagonals `off`, and the Neumann pattern `M(0,1) = M(J,J−1) = 2·off`.
    pub fn neumann(size: usize, center: Complex64, off: Complex64) -> Self {
        let mut lower = vec![off; size - 1];
        let mut upper = vec![off; size - 1];
        upper[0] = 2.0 * off;
        lower[size - 2] = 2.0 * off;
        Self {
            diag: vec![center; size],
            lower,
            upper,
        }
    }

    pub fn identity(size: usize) -> Self {
        Self {
            diag: vec![Complex64::new(1.0, 0.0); size],
            lower: vec![Complex64::new(0.0, 0.0); size.saturating_sub(1)],
            upper: vec![Complex64::new(0.0, 0.0); size.saturating_sub(1)],
        }
    }

    pub fn size(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[Complex64] {
        &self.diag
    }

    pub fn lower(&self) -> &[Complex64] {
        &self.lower
    }

    pub fn upper(&self) -> &[Complex64] {
        &self.upper
    }

    /// Entry `M(row, col)`, zero outside the band.
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        if row == col {
            self.diag[row]
        } else if col == row + 1 {
            self.upper[row]
        } else if row == col + 1 {
            self.lower[col]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let scale = |v: &[Complex64]| v.iter().map(|z| z * c).collect();
        Self {
            diag: scale(&self.diag),
            lower: scale(&self.lower),
            upper: scale(&self.upper),
        }
    }

    /// `M − c I`.
    pub fn shifted(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        out.diag.iter_mut().for_each(|d| *d -= c);
        out
    }

    pub fn to_dense(&self) -> Array2<Complex64> {
        let n = self.size();
        Array2::from_shape_fn((n, n), |(r, c)| self.get(r, c))
    }

    /// Induced infinity norm (maximum absolute row sum).
    pub fn inf_norm(&self) -> f64 {
        (0..self.size())
            .map(|r| {
                let mut s = self.diag[r].norm();
                if r > 0 {
                    s += self.lower[r - 1].norm();
                }
                if r + 1 < self.size() {
                    s += self.upper[r].norm();
                }
                s
            })
            .fold(0.0, f64::max)
    }
}

/// The three matrices of one time level together with the parameters that built them.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeMatrices {
    pub a: TridiagonalMatrix,
    pub b: TridiagonalMatrix,
    pub c: TridiagonalMatrix,
    pub sigma: f64,
    pub weights: SchemeWeights,
}

/// `φ = (i − 4σα)/2`, the diagonal of `A`.
pub fn phi(sigma: f64, alpha: f64) -> Complex64 {
    (I - 4.0 * sigma * alpha) / 2.0
}

/// `ψ = (i + 4σγ)/2`; the diagonal of `C` is `−ψ`.
pub fn psi(sigma: f64, gamma: f64) -> Complex64 {
    (I + 4.0 * sigma * gamma) / 2.0
}

/// Assembles `A`, `B`, `C` for a grid with `size = J + 1` nodes per axis.
///
/// The center coefficient of `U^{n−1}` in the grouped equation is
/// `−i − 4σγ = −2ψ`, so `C` carries `−ψ` on its diagonal.
pub fn assemble_scheme_matrices(sigma: f64, weights: SchemeWeights, size: usize) -> Result<SchemeMatrices> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(NlsError::InvalidParameter(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    if size < 3 {
        return Err(NlsError::InvalidGrid(format!(
            "need at least 3 nodes per axis, got {size}"
        )));
    }
    let real = |x: f64| Complex64::new(x, 0.0);
    let SchemeWeights { alpha, beta, gamma } = weights;
    Ok(SchemeMatrices {
        a: TridiagonalMatrix::neumann(size, phi(sigma, alpha), real(sigma * alpha)),
        b: TridiagonalMatrix::neumann(size, real(-2.0 * sigma * beta), real(sigma * beta)),
        c: TridiagonalMatrix::neumann(size, -psi(sigma, gamma), real(sigma * gamma)),
        sigma,
        weights,
    })
}

/// `L_W(X) = W X + X Wᵀ`.
pub fn lyapunov_apply(w: &TridiagonalMatrix, x: &ComplexField) -> Result<ComplexField> {
    if w.size() != x.side() {
        return Err(NlsError::DimensionMismatch {
            expected: w.size(),
            found: x.side(),
        });
    }
    Ok(ComplexField::from_array_unchecked(lyapunov_apply_array(w, x.values())))
}

pub(crate) fn lyapunov_apply_array(w: &TridiagonalMatrix, x: &Array2<Complex64>) -> Array2<Complex64> {
    let n = w.size();
    Array2::from_shape_fn((n, n), |(j, m)| {
        // row action W X
        let mut acc = w.diag[j] * x[[j, m]];
        if j > 0 {
            acc += w.lower[j - 1] * x[[j - 1, m]];
        }
        if j + 1 < n {
            acc += w.upper[j] * x[[j + 1, m]];
        }
        // column action X Wᵀ: (X Wᵀ)_{jm} = Σ_k X_{jk} W_{mk}
        acc += w.diag[m] * x[[j, m]];
        if m > 0 {
            acc += w.lower[m - 1] * x[[j, m - 1]];
        }
        if m + 1 < n {
            acc += w.upper[m] * x[[j, m + 1]];
        }
        acc
    })
}

/// Five-point stencil `S(X)` without the `1/h²` factor, closed by mirror ghosts.
pub fn neumann_stencil(x: &ComplexField) -> ComplexField {
    let n = x.side();
    let last = n - 1;
    let v = x.values();
    let reflect = |k: isize| -> usize {
        if k < 0 {
            1
        } else if k as usize > last {
            last - 1
        } else {
            k as usize
        }
    };
    ComplexField::from_array_unchecked(Array2::from_shape_fn((n, n), |(j, m)| {
        let (ji, mi) = (j as isize, m as isize);
        v[[reflect(ji - 1), m]] + v[[reflect(ji + 1), m]] + v[[j, reflect(mi - 1)]] + v[[j, reflect(mi + 1)]]
            - 4.0 * v[[j, m]]
    }))
}

/// Discrete Neumann Laplacian `S(X)/h²`.
pub fn discrete_laplacian(x: &ComplexField, h: f64) -> ComplexField {
    neumann_stencil(x).scaled(Complex64::new(1.0 / (h * h), 0.0))
}

/// Upper bound `2‖A − (i/2)I‖_∞` on `‖L_A − iI‖` in the induced max-entry
/// norm. Equals `8σα` for an assembled `A`.
pub fn deviation_from_i_identity(a: &TridiagonalMatrix) -> f64 {
    2.0 * a.shifted(I / 2.0).inf_norm()
}

/// Power-iteration estimate of the spectral radius of `L_A − iI`.
///
/// Iterates are normalized in the max-entry norm, so every ratio is bounded
/// by [`deviation_from_i_identity`]. Diagnostic only.
pub fn spectral_deviation_estimate(a: &TridiagonalMatrix, iterations: usize) -> f64 {
    let n = a.size();
    let shifted = a.shifted(I / 2.0);
    // deterministic start with components along every mode
    let mut x = Array2::from_shape_fn((n, n), |(j, m)| {
        Complex64::new(1.0 + (1.3 * j as f64 + 0.7 * m as f64).sin() * 0.5, 0.25 * (0.9 * m as f64).cos())
    });
    let max_abs = |v: &Array2<Complex64>| v.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
    let mut estimate = 0.0;
    for _ in 0..iterations.max(1) {
        let y = lyapunov_apply_array(&shifted, &x);
        let (ny, nx) = (max_abs(&y), max_abs(&x));
        if ny == 0.0 {
            return 0.0;
        }
        estimate = ny / nx;
        x = y.mapv(|z| z / ny);
    }
    estimate
}

/// Writes `matrix,row,col,re,im` for every stored entry of `A`, `B`, `C`.
pub fn write_matrices_csv<W: Write>(m: &SchemeMatrices, mut out: W) -> io::Result<()> {
    writeln!(out, "matrix,row,col,re,im")?;
    for (name, mat) in [("A", &m.a), ("B", &m.b), ("C", &m.c)] {
        let n = mat.size();
        for r in 0..n {
            for c in r.saturating_sub(1)..(r + 2).min(n) {
                let z = mat.get(r, c);
                writeln!(out, "{name},{r},{c},{},{}", crate::sci(z.re), crate::sci(z.im))?;
            }
        }
    }
    Ok(())
}
