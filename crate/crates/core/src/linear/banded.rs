//! Row-wise Givens QR for sparse banded least-squares problems.
//!
//! Rows may arrive in any order; each is rotated into an upper-triangular
//! factor whose rows span at most `w + 1` columns, where `w` is the widest
//! input row. Right-hand sides are carried along.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};

#[derive(Clone, Debug)]
struct Row<T> {
    start: usize,
    vals: Vec<T>,
    rhs: Vec<T>,
}

/// Sparse rows collected before factorization.
#[derive(Clone, Debug)]
pub struct BandedSystem<T: Real> {
    n: usize,
    nrhs: usize,
    rows: Vec<Row<T>>,
}

/// Solution and diagnostics.
#[derive(Clone, Debug)]
pub struct LsqSolution<T: Real> {
    /// `n x nrhs`.
    pub x: DMatrix<T>,
    /// `‖Ax - b‖₂` per right-hand side, recomputed from the rows.
    pub residual: Vec<T>,
    /// `‖b‖₂` per right-hand side.
    pub rhs_norm: Vec<T>,
    /// Columns whose pivot fell under the regularization floor.
    pub regularized: usize,
}

impl<T: Real> BandedSystem<T> {
    pub fn new(n: usize, nrhs: usize) -> Self {
        Self { n, nrhs, rows: Vec::new() }
    }

    pub fn unknowns(&self) -> usize {
        self.n
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    /// Adds the row `Σ_k vals[k] x[start + k] = rhs`.
    pub fn push(&mut self, start: usize, vals: &[T], rhs: &[T]) {
        assert_eq!(rhs.len(), self.nrhs);
        assert!(start + vals.len() <= self.n, "row exceeds unknowns");
        let first = vals.iter().position(|v| *v != T::zero());
        let (start, vals) = match first {
            None => (start, &vals[..0]),
            Some(f) => {
                let last = vals.iter().rposition(|v| *v != T::zero()).unwrap_or(f);
                (start + f, &vals[f..=last])
            }
        };
        self.rows.push(Row { start, vals: vals.to_vec(), rhs: rhs.to_vec() });
    }

    /// Adds a row given as `(column, value)` pairs.
    pub fn push_sparse(&mut self, entries: &[(usize, T)], rhs: &[T]) {
        if entries.is_empty() {
            self.push(0, &[], rhs);
            return;
        }
        let lo = entries.iter().map(|e| e.0).min().unwrap_or(0);
        let hi = entries.iter().map(|e| e.0).max().unwrap_or(0);
        let mut vals = vec![T::zero(); hi - lo + 1];
        for &(c, v) in entries {
            vals[c - lo] += v;
        }
        self.push(lo, &vals, rhs);
    }

    /// `A x` for an `n x nrhs` block.
    pub fn apply(&self, x: &DMatrix<T>) -> DMatrix<T> {
        let mut out = DMatrix::zeros(self.rows.len(), x.ncols());
        for (i, row) in self.rows.iter().enumerate() {
            for c in 0..x.ncols() {
                let mut acc = T::zero();
                for (k, &v) in row.vals.iter().enumerate() {
                    acc += v * x[(row.start + k, c)];
                }
                out[(i, c)] = acc;
            }
        }
        out
    }

    /// Least-squares solve. Columns whose pivot falls under `1e3 floor max|R_jj|`
    /// get a Tikhonov row of size `floor * max|R_jj|`.
    pub fn solve(&self, floor: T) -> Result<LsqSolution<T>> {
        let n = self.n;
        let nrhs = self.nrhs;
        let w = self.rows.iter().map(|r| r.vals.len()).max().unwrap_or(1).max(1);
        let bw = w;
        let mut r = vec![T::zero(); n * bw];
        let mut qtb = vec![T::zero(); n * nrhs];
        let mut filled = vec![false; n];
        let mut work = vec![T::zero(); bw];
        let mut wrhs = vec![T::zero(); nrhs];

        let mut rotate_in = |start: usize, vals: &[T], rhs: &[T], r: &mut [T], qtb: &mut [T], filled: &mut [bool]| {
            work.iter_mut().for_each(|v| *v = T::zero());
            work[..vals.len()].copy_from_slice(vals);
            wrhs.copy_from_slice(rhs);
            let mut j = start;
            // work[k] holds the coefficient of column j + k
            loop {
                if j >= n {
                    break;
                }
                let lead = work[0];
                if lead == T::zero() {
                    work.rotate_left(1);
                    work[bw - 1] = T::zero();
                    j += 1;
                    if work.iter().all(|v| *v == T::zero()) {
                        break;
                    }
                    continue;
                }
                let rrow = &mut r[j * bw..(j + 1) * bw];
                if !filled[j] {
                    rrow.copy_from_slice(&work);
                    qtb[j * nrhs..(j + 1) * nrhs].copy_from_slice(&wrhs);
                    filled[j] = true;
                    wrhs.iter_mut().for_each(|v| *v = T::zero());
                    break;
                }
                let a = rrow[0];
                let rad = a.hypot(lead);
                let (c, s) = (a / rad, lead / rad);
                for k in 0..bw {
                    let (p, q) = (rrow[k], work[k]);
                    rrow[k] = c * p + s * q;
                    work[k] = c * q - s * p;
                }
                let brow = &mut qtb[j * nrhs..(j + 1) * nrhs];
                for k in 0..nrhs {
                    let (p, q) = (brow[k], wrhs[k]);
                    brow[k] = c * p + s * q;
                    wrhs[k] = c * q - s * p;
                }
                work[0] = T::zero();
            }
        };

        for row in &self.rows {
            rotate_in(row.start, &row.vals, &row.rhs, &mut r, &mut qtb, &mut filled);
        }
        let dmax = (0..n).fold(T::zero(), |m, j| m.max(r[j * bw].abs()));
        if dmax == T::zero() {
            return Err(Error::LinearSolve { residual: f64::INFINITY, tolerance: 0.0 });
        }
        let lam = floor * dmax;
        let mut regularized = 0;
        let zeros = vec![T::zero(); nrhs];
        // a regularization row cascades fill through all later columns, so it
        // is only added where it can matter
        for j in 0..n {
            if r[j * bw].abs() < lit::<T>(1e3) * lam || !filled[j] {
                regularized += 1;
                rotate_in(j, &[lam], &zeros, &mut r, &mut qtb, &mut filled);
            }
        }
        // back substitution
        let mut x = DMatrix::zeros(n, nrhs);
        for j in (0..n).rev() {
            let rrow = &r[j * bw..(j + 1) * bw];
            let d = rrow[0];
            if d == T::zero() {
                return Err(Error::LinearSolve { residual: f64::INFINITY, tolerance: 0.0 });
            }
            for c in 0..nrhs {
                let mut acc = qtb[j * nrhs + c];
                for k in 1..bw.min(n - j) {
                    acc -= rrow[k] * x[(j + k, c)];
                }
                x[(j, c)] = acc / d;
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::LinearSolve { residual: f64::NAN, tolerance: to_f64(floor) });
        }
        let ax = self.apply(&x);
        let mut residual = vec![T::zero(); nrhs];
        let mut rhs_norm = vec![T::zero(); nrhs];
        for (i, row) in self.rows.iter().enumerate() {
            for c in 0..nrhs {
                let e = ax[(i, c)] - row.rhs[c];
                residual[c] += e * e;
                rhs_norm[c] += row.rhs[c] * row.rhs[c];
            }
        }
        residual.iter_mut().for_each(|v| *v = v.sqrt());
        rhs_norm.iter_mut().for_each(|v| *v = v.sqrt());
        Ok(LsqSolution { x, residual, rhs_norm, regularized })
    }
}
