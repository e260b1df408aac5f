//! Finite-difference weights on the uniform grid.

use crate::error::{Error, Result};
use crate::scalar::{from_usize, Real};

/// Highest derivative order supported.
pub const MAX_ORDER: usize = 6;

/// Fornberg's recursion: weights for derivatives `0..=m` at `z` using nodes
/// `xs`. Returns `c[k][j]`.
pub fn fornberg<T: Real>(z: T, xs: &[T], m: usize) -> Vec<Vec<T>> {
    let n = xs.len();
    let mut c = vec![vec![T::zero(); n]; m + 1];
    c[0][0] = T::one();
    let mut c1 = T::one();
    let mut c4 = xs[0] - z;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = T::one();
        let c5 = c4;
        c4 = xs[i] - z;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (from_usize::<T>(k) * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - from_usize::<T>(k) * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Stencil for `∂^k` on `m` uniform nodes with spacing `h`.
///
/// Central width `2⌊(k+1)/2⌋ + 3` (fourth order); the first and last few rows
/// use one-sided stencils of width `max(central, k + 4)`.
#[derive(Clone, Debug)]
pub struct DerivativeStencil<T> {
    pub order: usize,
    m: usize,
    half: usize,
    central: Vec<T>,
    edge_width: usize,
    /// `left[i]` is the row for node `i < half`; rows near the right end
    /// are mirrored with sign `(-1)^k`.
    left: Vec<Vec<T>>,
}

impl<T: Real> DerivativeStencil<T> {
    pub fn new(order: usize, m: usize, h: T) -> Result<Self> {
        if order > MAX_ORDER || m < 2 * order + 5 {
            return Err(Error::DerivativeOrder(order));
        }
        let width = 2 * order.div_ceil(2) + 3;
        let half = width / 2;
        let edge_width = width.max(order + 4);
        if m < edge_width {
            return Err(Error::DerivativeOrder(order));
        }
        let scale = h.powi(order as i32);
        let offsets: Vec<T> = (0..width).map(|j| from_usize::<T>(j) - from_usize::<T>(half)).collect();
        let central = fornberg(T::zero(), &offsets, order)[order].iter().map(|&w| w / scale).collect();
        let nodes: Vec<T> = (0..edge_width).map(from_usize::<T>).collect();
        let left = (0..half).map(|i| fornberg(from_usize::<T>(i), &nodes, order)[order].iter().map(|&w| w / scale).collect()).collect();
        Ok(Self { order, m, half, central, edge_width, left })
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    /// Row `i`: first column index and weights. Right-edge rows are produced
    /// into `buf`.
    pub fn row<'a>(&'a self, i: usize, buf: &'a mut Vec<T>) -> (usize, &'a [T]) {
        if i < self.half {
            (0, &self.left[i])
        } else if i + self.half >= self.m {
            let mirror = &self.left[self.m - 1 - i];
            buf.clear();
            let sign = if self.order % 2 == 1 { -T::one() } else { T::one() };
            buf.extend(mirror.iter().rev().map(|&w| w * sign));
            (self.m - self.edge_width, buf.as_slice())
        } else {
            (i - self.half, &self.central)
        }
    }

    /// Applies the stencil to one column.
    pub fn apply(&self, f: &[T]) -> Vec<T> {
        assert_eq!(f.len(), self.m);
        let mut buf = Vec::with_capacity(self.edge_width);
        (0..self.m)
            .map(|i| {
                let (s, w) = self.row(i, &mut buf);
                w.iter().zip(&f[s..s + w.len()]).fold(T::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    /// Maximum column reach `|j - i|` of any row.
    pub fn bandwidth(&self) -> usize {
        self.edge_width - 1
    }
}
