//! Scalar reduced profile by quadrature of `dx = b*(u) du / (f*(u) - f*(u±))`.

use nalgebra::DVector;

use crate::chapman_enskog::ShockPair;
use crate::discretization::{Grid, GridProfile};
use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};
use crate::structure::ReducedSystem;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, 8 points.
const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
];
/// Panel width in the substitution variable `t`.
const PANEL: f64 = 0.05;
/// Largest `t`; `e^{-t}` is then below the roundoff of `u - u±`.
const T_MAX: f64 = 34.0;

/// One side of the connection: `w(t) = e + (c - e) e^{-t}` from the center
/// value `c` to the end state `e`, with `x(t) = ∫_0^t g`.
struct Side<T: Real> {
    rs: ReducedSystem<T>,
    end: f64,
    center: f64,
    f_ref: f64,
    /// Orientation: `+1` when the connection runs towards `e` as `x → +∞`.
    sign: f64,
    /// `x` at panel boundaries `t_k = k PANEL`.
    table: Vec<f64>,
}

impl<T: Real> Side<T> {
    fn new(rs: &ReducedSystem<T>, end: f64, center: f64, f_ref: f64, sign: f64) -> Self {
        Self { rs: rs.clone(), end, center, f_ref, sign, table: vec![0.0] }
    }

    fn w(&self, t: f64) -> f64 {
        self.end + (self.center - self.end) * (-t).exp()
    }

    /// `dx/dt`.
    fn g(&self, t: f64) -> Result<f64> {
        let w = self.w(t);
        let u = DVector::from_element(1, lit::<T>(w));
        let b = to_f64(self.rs.b_star(&u)[(0, 0)]);
        if !(b > 0.0) {
            return Err(Error::Quadrature(format!("b* = {b:e} is not positive at u = {w}")));
        }
        let f = to_f64(self.rs.f_star(&u)[0]) - self.f_ref;
        let dw = -(self.center - self.end) * (-t).exp();
        if f == 0.0 {
            return Err(Error::Quadrature(format!("f* - f*(u±) vanishes at u = {w}")));
        }
        Ok(self.sign * b * dw / f)
    }

    fn integrate(&self, a: f64, b: f64) -> Result<f64> {
        let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
        GL8.iter().try_fold(0.0, |acc, &(z, wt)| Ok(acc + wt * half * self.g(mid + half * z)?))
    }

    /// Extends the panel table until `x` reaches `x_max`.
    fn extend(&mut self, x_max: f64) -> Result<()> {
        while *self.table.last().unwrap() < x_max {
            let k = self.table.len() - 1;
            let t0 = k as f64 * PANEL;
            if t0 >= T_MAX {
                return Err(Error::Quadrature(format!("x(t) stays below {x_max} up to t = {T_MAX}")));
            }
            let dx = self.integrate(t0, t0 + PANEL)?;
            if !(dx > 0.0) {
                return Err(Error::Quadrature("the connection does not run towards the end state".into()));
            }
            self.table.push(self.table[k] + dx);
        }
        Ok(())
    }

    /// `u` at distance `x >= 0` from the center.
    fn value_at(&mut self, x: f64) -> Result<f64> {
        if x == 0.0 {
            return Ok(self.center);
        }
        self.extend(x)?;
        let k = self.table.partition_point(|&v| v <= x) - 1;
        let t0 = k as f64 * PANEL;
        let mut t = t0 + PANEL * (x - self.table[k]) / (self.table[k + 1] - self.table[k]);
        for _ in 0..50 {
            let fx = self.table[k] + self.integrate(t0, t)? - x;
            let step = fx / self.g(t)?;
            t = (t - step).clamp(t0, t0 + PANEL);
            if step.abs() <= 1e-15 * t.max(1.0) {
                break;
            }
        }
        Ok(self.w(t))
    }
}

/// Reduced profile of a scalar (`n = 1`) system on `grid`, centered so that
/// `ū(0)` is the midpoint of the pair. For a pair whose connection runs from
/// `u+` to `u-` the profile of the reflected problem `x → -x` is returned.
pub fn quadrature_profile<T: Real>(rs: &ReducedSystem<T>, pair: &ShockPair<T>, grid: &Grid<T>) -> Result<GridProfile<T>> {
    if rs.n() != 1 {
        return Err(Error::Unsupported(format!("quadrature oracle needs n = 1, got n = {}", rs.n())));
    }
    let (um, up) = (to_f64(pair.u_minus[0]), to_f64(pair.u_plus[0]));
    if um == up {
        return Ok(GridProfile::from_fn(grid.clone(), 1, |_| pair.u_minus.clone()));
    }
    let center = 0.5 * (um + up);
    // each side subtracts its own end flux so f* - f*(e) vanishes exactly at e
    let (fm, fp) = (to_f64(rs.f_star(&pair.u_minus)[0]), to_f64(rs.f_star(&pair.u_plus)[0]));
    // orientation from the sign of dx/dt at the center towards u+
    let sign = if Side::new(rs, up, center, fp, 1.0).g(0.0)? > 0.0 { 1.0 } else { -1.0 };
    let mut right = Side::new(rs, up, center, fp, sign);
    let mut left = Side::new(rs, um, center, fm, -sign);
    let mut vals = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let x = to_f64(grid.x(i));
        let v = if x >= 0.0 { right.value_at(x)? } else { left.value_at(-x)? };
        vals.push(lit::<T>(v));
    }
    GridProfile::new(grid.clone(), nalgebra::DMatrix::from_column_slice(grid.len(), 1, &vals))
}
