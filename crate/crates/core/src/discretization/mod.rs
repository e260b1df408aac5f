//! Uniform grids in the stretched variable `x̃ = εx`, derivative stencils,
//! scaled weighted Sobolev norms and the smoothing family `S_θ`.

mod smoothing;
pub mod stencil;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, to_f64, Real};
pub use smoothing::{smooth, smooth_odd, smoothstep, SmoothOutput, Window};
use stencil::{DerivativeStencil, MAX_ORDER};

/// Default half-width in `x̃`.
pub const DEFAULT_L_TILDE: f64 = 12.0;
/// Default spacing in `x̃`.
pub const DEFAULT_H_TILDE: f64 = 0.01;
/// Largest weight rate accepted by [`NormSpec`].
pub const DELTA0: f64 = 0.1;

/// Grid parameters in `x̃`, serializable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridParams {
    pub l_tilde: f64,
    pub h_tilde: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        Self { l_tilde: DEFAULT_L_TILDE, h_tilde: DEFAULT_H_TILDE }
    }
}

/// Odd uniform grid on `[-L̃, L̃]` with a node at `x = 0`.
#[derive(Clone, Debug)]
pub struct Grid<T: Real> {
    pub l_tilde: T,
    pub h_tilde: T,
    pub epsilon: T,
    m: usize,
    stencils: Arc<Vec<DerivativeStencil<T>>>,
}

impl<T: Real> Grid<T> {
    pub fn new(l_tilde: T, h_tilde: T, epsilon: T) -> Result<Self> {
        if !(h_tilde > T::zero() && l_tilde > h_tilde && epsilon > T::zero()) {
            return Err(Error::ParameterOutOfRange(format!(
                "grid L~={}, h~={}, eps={}",
                to_f64(l_tilde),
                to_f64(h_tilde),
                to_f64(epsilon)
            )));
        }
        let half = (to_f64(l_tilde) / to_f64(h_tilde)).round() as usize;
        let m = 2 * half + 1;
        let h = h_tilde / epsilon;
        let stencils = (1..=MAX_ORDER).map_while(|k| DerivativeStencil::new(k, m, h).ok()).collect::<Vec<_>>();
        if stencils.is_empty() {
            return Err(Error::DerivativeOrder(1));
        }
        Ok(Self { l_tilde, h_tilde, epsilon, m, stencils: Arc::new(stencils) })
    }

    pub fn from_params(p: &GridParams, epsilon: f64) -> Result<Self> {
        Self::new(lit(p.l_tilde), lit(p.h_tilde), lit(epsilon))
    }

    /// Node count `M`.
    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn center(&self) -> usize {
        self.m / 2
    }

    /// Physical spacing `h = h̃/ε`.
    pub fn h(&self) -> T {
        self.h_tilde / self.epsilon
    }

    pub fn x_tilde(&self, i: usize) -> T {
        (from_usize::<T>(i) - from_usize::<T>(self.center())) * self.h_tilde
    }

    pub fn x(&self, i: usize) -> T {
        self.x_tilde(i) / self.epsilon
    }

    pub fn x_tilde_all(&self) -> Vec<T> {
        (0..self.m).map(|i| self.x_tilde(i)).collect()
    }

    /// Derivative stencil in physical `x` (`1 <= k <= 6`).
    pub fn stencil(&self, k: usize) -> Result<&DerivativeStencil<T>> {
        if k == 0 {
            return Err(Error::DerivativeOrder(0));
        }
        self.stencils.get(k - 1).ok_or(Error::DerivativeOrder(k))
    }

    /// Same grid geometry, different `ε` (physical spacing changes).
    pub fn same_shape(&self, other: &Grid<T>) -> bool {
        self.m == other.m && self.h_tilde == other.h_tilde && self.epsilon == other.epsilon
    }

    /// Index of the node nearest to `x̃`, clamped.
    pub fn index_of(&self, x_tilde: T) -> usize {
        let k = (to_f64(x_tilde / self.h_tilde)).round() as i64 + self.center() as i64;
        k.clamp(0, self.m as i64 - 1) as usize
    }
}

/// Values of a `d`-component field at the grid nodes (`M x d`).
#[derive(Clone, Debug)]
pub struct GridProfile<T: Real> {
    pub grid: Grid<T>,
    pub values: DMatrix<T>,
}

impl<T: Real> GridProfile<T> {
    pub fn new(grid: Grid<T>, values: DMatrix<T>) -> Result<Self> {
        if values.nrows() != grid.len() {
            return Err(Error::Dimension(format!("{} rows for {} nodes", values.nrows(), grid.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format("non-finite profile entry".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid<T>, d: usize) -> Self {
        let m = grid.len();
        Self { grid, values: DMatrix::zeros(m, d) }
    }

    /// Samples `f(x̃)` (returning `d` components) at every node.
    pub fn from_fn<F: Fn(T) -> DVector<T>>(grid: Grid<T>, d: usize, f: F) -> Self {
        let mut values = DMatrix::zeros(grid.len(), d);
        for i in 0..grid.len() {
            let v = f(grid.x_tilde(i));
            values.row_mut(i).copy_from(&v.transpose());
        }
        Self { grid, values }
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn node(&self, i: usize) -> DVector<T> {
        self.values.row(i).transpose()
    }

    pub fn column(&self, c: usize) -> Vec<T> {
        self.values.column(c).iter().copied().collect()
    }

    pub fn with_values(&self, values: DMatrix<T>) -> Self {
        Self { grid: self.grid.clone(), values }
    }

    /// Columns `start..start+len` as a new profile.
    pub fn columns(&self, start: usize, len: usize) -> Self {
        self.with_values(self.values.columns(start, len).into_owned())
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |a, &b| a.max(b.abs()))
    }
}

/// `∂_x^k p` (physical `x`), column by column. `k = 0` returns a copy.
pub fn derivative<T: Real>(p: &GridProfile<T>, k: usize) -> Result<GridProfile<T>> {
    if k == 0 {
        return Ok(p.clone());
    }
    let st = p.grid.stencil(k)?;
    let mut out = DMatrix::zeros(p.values.nrows(), p.values.ncols());
    for c in 0..p.values.ncols() {
        let col: Vec<T> = p.values.column(c).iter().copied().collect();
        let d = st.apply(&col);
        out.column_mut(c).copy_from_slice(&d);
    }
    Ok(p.with_values(out))
}

/// Index `s`, scale `ε` and weight rate `δ` of `H^s_{ε,δ}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormSpec {
    pub s: usize,
    pub epsilon: f64,
    pub delta: f64,
}

impl NormSpec {
    pub fn new(s: usize, epsilon: f64, delta: f64) -> Result<Self> {
        if s > MAX_ORDER || !(0.0..=DELTA0).contains(&delta) || !(epsilon > 0.0) {
            return Err(Error::ParameterOutOfRange(format!("norm s={s}, eps={epsilon}, delta={delta}")));
        }
        Ok(Self { s, epsilon, delta })
    }

    pub fn unweighted(s: usize, epsilon: f64) -> Result<Self> {
        Self::new(s, epsilon, 0.0)
    }
}

fn trapezoid_l2<T: Real>(vals: &DMatrix<T>, weight: &[T], h: T) -> T {
    let m = vals.nrows();
    let mut acc = T::zero();
    for i in 0..m {
        let w = if i == 0 || i + 1 == m { lit::<T>(0.5) } else { T::one() };
        let row: T = (0..vals.ncols()).fold(T::zero(), |a, c| {
            let z = vals[(i, c)] * weight[i];
            a + z * z
        });
        acc += w * row;
    }
    (acc * h).sqrt()
}

/// Plain `L²(dx)` norm by the trapezoid rule.
pub fn l2_norm<T: Real>(p: &GridProfile<T>) -> T {
    let ones = vec![T::one(); p.grid.len()];
    trapezoid_l2(&p.values, &ones, p.grid.h())
}

/// `ε^{1/2} Σ_{k≤s} ε^{-k} ‖e^{δε⟨x⟩} ∂^k p‖_{L²}`, `⟨x⟩ = (x²+1)^{1/2}`.
pub fn weighted_norm<T: Real>(p: &GridProfile<T>, ns: &NormSpec) -> Result<T> {
    let eps = p.grid.epsilon;
    if (to_f64(eps) - ns.epsilon).abs() > 1e-12 * ns.epsilon.max(1.0) {
        return Err(Error::ParameterOutOfRange(format!("norm epsilon {} differs from grid epsilon {}", ns.epsilon, to_f64(eps))));
    }
    if ns.s > MAX_ORDER {
        return Err(Error::DerivativeOrder(ns.s));
    }
    let delta = lit::<T>(ns.delta);
    let m = p.grid.len();
    let mut weight = Vec::with_capacity(m);
    for i in 0..m {
        let x = p.grid.x(i);
        let e = delta * eps * (x * x + T::one()).sqrt();
        if to_f64(e) > 700.0 {
            return Err(Error::WeightOverflow(to_f64(e)));
        }
        weight.push(e.exp());
    }
    let h = p.grid.h();
    let mut total = T::zero();
    let mut scale = T::one();
    for k in 0..=ns.s {
        let dk = derivative(p, k)?;
        total += scale * trapezoid_l2(&dk.values, &weight, h);
        scale /= eps;
    }
    Ok(eps.sqrt() * total)
}

/// `H^s_ε` norm with `δ = 0`, taking `ε` from the grid.
pub fn sobolev_norm<T: Real>(p: &GridProfile<T>, s: usize) -> Result<T> {
    weighted_norm(p, &NormSpec::unweighted(s, to_f64(p.grid.epsilon))?)
}

/// Sup norm over nodes with `|x̃| <= limit`.
pub fn sup_norm_within<T: Real>(p: &GridProfile<T>, limit: T) -> T {
    let mut best = T::zero();
    for i in 0..p.grid.len() {
        if p.grid.x_tilde(i).abs() <= limit {
            for c in 0..p.dim() {
                best = best.max(p.values[(i, c)].abs());
            }
        }
    }
    best
}
