//! Complex banded LU factorization with partial (row) pivoting.
//!
//! Rows are stored densely over the columns `i − kl ..= i + kl + ku`; the
//! extra `kl` columns on the right absorb the fill-in that row exchanges
//! push into `U`, as in LAPACK's `gbtrf`.

use num_complex::Complex64;

use crate::error::{NlsError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<Complex64>,
}

impl BandedMatrix {
    /// Zero `n × n` matrix with `kl` sub- and `ku` super-diagonals.
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![Complex64::new(0.0, 0.0); n * width],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    fn in_band(&self, row: usize, col: usize) -> bool {
        col + self.kl >= row && col <= row + self.ku
    }

    fn slot(&self, row: usize, col: usize) -> usize {
        row * self.width + (col + self.kl - row)
    }

    /// Sets an entry inside the band. Panics outside it.
    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        assert!(row < self.n && col < self.n && self.in_band(row, col), "({row}, {col}) outside band");
        let s = self.slot(row, col);
        self.data[s] = value;
    }

    pub fn add(&mut self, row: usize, col: usize, value: Complex64) {
        assert!(row < self.n && col < self.n && self.in_band(row, col), "({row}, {col}) outside band");
        let s = self.slot(row, col);
        self.data[s] += value;
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        if row < self.n && col < self.n && self.in_band(row, col) {
            self.data[self.slot(row, col)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    pub fn mat_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|r| {
                let lo = r.saturating_sub(self.kl);
                let hi = (r + self.ku).min(self.n - 1);
                (lo..=hi).map(|c| self.data[self.slot(r, c)] * x[c]).sum()
            })
            .collect()
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        (0..self.n)
            .map(|r| {
                let lo = r.saturating_sub(self.kl);
                let hi = (r + self.ku).min(self.n - 1);
                (lo..=hi).map(|c| self.data[self.slot(r, c)].norm()).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// Factorizes in place. A pivot with modulus at or below
    /// `pivot_tolerance` after row exchange is reported as singular.
    pub fn factorize(mut self, pivot_tolerance: f64) -> Result<BandedLu> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let mut pivots = Vec::with_capacity(n);
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.slot(k, k)].norm();
            for r in k + 1..=last_row {
                let v = self.data[self.slot(r, k)].norm();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if !(best > pivot_tolerance) {
                return Err(NlsError::Singular { row: k, pivot: best });
            }
            let last_col = (k + kl + ku).min(n - 1);
            if p != k {
                for c in k..=last_col {
                    let (sk, sp) = (self.slot(k, c), self.slot(p, c));
                    self.data.swap(sk, sp);
                }
            }
            pivots.push(p);
            let pivot = self.data[self.slot(k, k)];
            for r in k + 1..=last_row {
                let sr = self.slot(r, k);
                let factor = self.data[sr] / pivot;
                self.data[sr] = factor;
                if factor == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for c in k + 1..=last_col {
                    let upd = factor * self.data[self.slot(k, c)];
                    let s = self.slot(r, c);
                    self.data[s] -= upd;
                }
            }
        }
        Ok(BandedLu { lu: self, pivots })
    }
}

/// `P A = L U` in band storage, ready for repeated solves.
#[derive(Debug, Clone)]
pub struct BandedLu {
    lu: BandedMatrix,
    pivots: Vec<usize>,
}

impl BandedLu {
    pub fn dim(&self) -> usize {
        self.lu.n
    }

    /// Overwrites `rhs` with the solution of `A x = rhs`.
    pub fn solve_in_place(&self, rhs: &mut [Complex64]) {
        let m = &self.lu;
        let (n, kl, ku) = (m.n, m.kl, m.ku);
        assert_eq!(rhs.len(), n);
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                rhs.swap(k, p);
            }
            let bk = rhs[k];
            for r in k + 1..=(k + kl).min(n - 1) {
                rhs[r] -= m.data[m.slot(r, k)] * bk;
            }
        }
        for k in (0..n).rev() {
            let mut acc = rhs[k];
            for c in k + 1..=(k + kl + ku).min(n - 1) {
                acc -= m.data[m.slot(k, c)] * rhs[c];
            }
            rhs[k] = acc / m.data[m.slot(k, k)];
        }
    }
}
