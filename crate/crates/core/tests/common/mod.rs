//! Test-only oracles shared by the integration suites. Nothing here calls
//! into the solver paths it is used to check.

#![allow(dead_code)]

use nls_core::grid::ComplexField;
use nls_core::operators::TridiagonalMatrix;
use nls_core::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn random_complex(rng: &mut ChaCha8Rng) -> Complex64 {
    c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

pub fn random_field(rng: &mut ChaCha8Rng, side: usize) -> ComplexField {
    ComplexField::from_fn(side, |_| random_complex(rng)).unwrap()
}

pub fn frob(v: &[Vec<Complex64>]) -> f64 {
    v.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn field_to_rows(f: &ComplexField) -> Vec<Vec<Complex64>> {
    let n = f.side();
    (0..n).map(|j| (0..n).map(|m| f.get(j, m)).collect()).collect()
}

pub fn frob_diff(a: &ComplexField, b: &ComplexField) -> f64 {
    let (a, b) = (field_to_rows(a), field_to_rows(b));
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Dense copy of a tridiagonal matrix read entry by entry from its bands.
pub fn dense_of(t: &TridiagonalMatrix) -> Vec<Vec<Complex64>> {
    let n = t.size();
    let mut d = vec![vec![c(0.0, 0.0); n]; n];
    for k in 0..n {
        d[k][k] = t.diag()[k];
    }
    for k in 0..n.saturating_sub(1) {
        d[k + 1][k] = t.lower()[k];
        d[k][k + 1] = t.upper()[k];
    }
    d
}

pub fn matmul(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let n = a.len();
    let p = b[0].len();
    let mut out = vec![vec![c(0.0, 0.0); p]; n];
    for i in 0..n {
        for k in 0..b.len() {
            for j in 0..p {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

pub fn transpose(a: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let n = a.len();
    (0..a[0].len()).map(|j| (0..n).map(|i| a[i][j]).collect()).collect()
}

/// `W X + X Wᵀ` by dense multiplication.
pub fn dense_lyapunov(w: &[Vec<Complex64>], x: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let left = matmul(w, x);
    let right = matmul(x, &transpose(w));
    left.iter()
        .zip(&right)
        .map(|(a, b)| a.iter().zip(b).map(|(p, q)| p + q).collect())
        .collect()
}

/// Kronecker product of dense matrices.
pub fn kron(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let (ra, ca, rb, cb) = (a.len(), a[0].len(), b.len(), b[0].len());
    let mut out = vec![vec![c(0.0, 0.0); ca * cb]; ra * rb];
    for i in 0..ra {
        for j in 0..ca {
            for k in 0..rb {
                for l in 0..cb {
                    out[i * rb + k][j * cb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

pub fn identity(n: usize) -> Vec<Vec<Complex64>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) }).collect()).collect()
}

/// Dense Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<Complex64>>, mut b: Vec<Complex64>) -> Vec<Complex64> {
    let n = a.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].norm().partial_cmp(&a[j][k].norm()).unwrap()).unwrap();
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                let v = a[k][j];
                a[i][j] -= f * v;
            }
            let v = b[k];
            b[i] -= f * v;
        }
    }
    let mut x = vec![c(0.0, 0.0); n];
    for k in (0..n).rev() {
        let s: Complex64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    x
}

/// Solves `A X + X Aᵀ = R` through the dense `(I ⊗ A + A ⊗ I)` system under
/// column stacking.
pub fn kronecker_lyapunov_solve(a: &[Vec<Complex64>], rhs: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let n = a.len();
    let id = identity(n);
    let left = kron(&id, a);
    let right = kron(a, &id);
    let m: Vec<Vec<Complex64>> = left
        .iter()
        .zip(&right)
        .map(|(p, q)| p.iter().zip(q).map(|(x, y)| x + y).collect())
        .collect();
    let b: Vec<Complex64> = (0..n * n).map(|p| rhs[p % n][p / n]).collect();
    let v = dense_solve(m, b);
    (0..n).map(|j| (0..n).map(|mm| v[j + mm * n]).collect()).collect()
}

/// Ghost-reflected five-point stencil without the `1/h²` factor, written
/// directly from the node equations.
pub fn stencil_oracle(v: &ComplexField) -> Vec<Vec<Complex64>> {
    let n = v.side();
    let last = n as isize - 1;
    let at = |j: isize, m: isize| {
        let fold = |k: isize| if k < 0 { -k } else if k > last { 2 * last - k } else { k };
        v.get(fold(j) as usize, fold(m) as usize)
    };
    (0..n as isize)
        .map(|j| {
            (0..n as isize)
                .map(|m| at(j - 1, m) + at(j + 1, m) + at(j, m - 1) + at(j, m + 1) - 4.0 * at(j, m))
                .collect()
        })
        .collect()
}

/// `u − |u|^{−2θ} u` evaluated from the polar form.
pub fn f_oracle(u: Complex64, theta: f64) -> Complex64 {
    let (r, phi) = u.to_polar();
    if r == 0.0 {
        return c(0.0, 0.0);
    }
    Complex64::from_polar(r - r.powf(1.0 - 2.0 * theta), phi)
}

fn v_oracle(s: f64, l0: f64) -> f64 {
    let cs = (std::f64::consts::PI / (2.0 * l0) * s).cos();
    cs * cs
}

/// The printed exact solution, written out independently of the library.
pub fn exact_oracle(x: f64, y: f64, t: f64, l0: f64) -> Complex64 {
    let pi = std::f64::consts::PI;
    Complex64::new(0.0, -2.0 * pi * pi / (l0 * l0) * t).exp() * v_oracle(x, l0) * v_oracle(y, l0)
}

/// The printed forcing, written out independently of the library.
pub fn g_oracle(x: f64, y: f64, t: f64, l0: f64, theta: f64) -> Complex64 {
    let pi = std::f64::consts::PI;
    let (vx, vy) = (v_oracle(x, l0), v_oracle(y, l0));
    let e = Complex64::new(0.0, -2.0 * pi * pi / (l0 * l0) * t).exp();
    e * (pi * pi / (2.0 * l0 * l0) * (vx + vy) + vx * vy - (vx * vy).powf(1.0 - 2.0 * theta))
}

const D1: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
const D2: [f64; 5] = [-205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0];

/// Eighth-order central first derivative.
pub fn d1<F: Fn(f64) -> Complex64>(f: F, at: f64, step: f64) -> Complex64 {
    let mut s = c(0.0, 0.0);
    for (k, w) in D1.iter().enumerate() {
        let o = (k + 1) as f64 * step;
        s += (f(at + o) - f(at - o)) * *w;
    }
    s / step
}

/// Eighth-order central second derivative.
pub fn d2<F: Fn(f64) -> Complex64>(f: F, at: f64, step: f64) -> Complex64 {
    let mut s = f(at) * D2[0];
    for (k, w) in D2.iter().enumerate().skip(1) {
        let o = k as f64 * step;
        s += (f(at + o) + f(at - o)) * *w;
    }
    s / (step * step)
}

/// `i u_t + Δu + u − |u|^{−2θ} u − g` at one point, derivatives by finite differences.
pub fn pde_residual<U, G>(u: U, g: G, x: f64, y: f64, t: f64, theta: f64, step: f64) -> Complex64
where
    U: Fn(f64, f64, f64) -> Complex64,
    G: Fn(f64, f64, f64) -> Complex64,
{
    let ut = d1(|s| u(x, y, s), t, step);
    let uxx = d2(|s| u(s, y, t), x, step);
    let uyy = d2(|s| u(x, s, t), y, step);
    Complex64::i() * ut + uxx + uyy + f_oracle(u(x, y, t), theta) - g(x, y, t)
}
