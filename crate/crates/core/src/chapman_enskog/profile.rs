//! Reduced profile `b*(u) u' = f*(u) - f*(u-)`.
//!
//! With constant left kernel `L` of `b*`, the algebraic part
//! `L^T (f*(u) - f*(u-)) = 0` fixes `u` on a curve parametrized by one scalar
//! `s` (`u = m + R a(s) + W s`), and `s` obeys a scalar ODE. The ODE is
//! integrated with RK4 outward from the center node in both directions.

use nalgebra::{DMatrix, DVector};

use super::ShockPair;
use crate::discretization::{Grid, GridProfile};
use crate::error::{Error, Result};
use crate::linear::banded::BandedSystem;
use crate::scalar::{from_usize, lit, to_f64, Real};
use crate::structure::ReducedSystem;

#[derive(Clone, Copy, Debug)]
pub struct ProfileOptions {
    /// RK4 substeps per grid interval.
    pub substeps: usize,
    /// Node where the phase condition is imposed (default: `x = 0`).
    pub center_node: Option<usize>,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self { substeps: 4, center_node: None }
    }
}

/// Reduced profile and its `x`-derivative (from the ODE, not a stencil).
#[derive(Clone, Debug)]
pub struct ReducedProfile<T: Real> {
    pub u: GridProfile<T>,
    pub du: GridProfile<T>,
}

struct Curve<'a, T: Real> {
    rs: &'a ReducedSystem<T>,
    mid: DVector<T>,
    f_minus: DVector<T>,
    kern: DMatrix<T>,
    left: DMatrix<T>,
    w: DVector<T>,
}

impl<'a, T: Real> Curve<'a, T> {
    fn new(rs: &'a ReducedSystem<T>, pair: &ShockPair<T>) -> Result<Self> {
        let n = rs.n();
        let k = rs.kernel.ncols();
        if n - k != 1 {
            return Err(Error::Unsupported(format!("reduced profile with {}-dimensional nondegenerate part (only 1 supported)", n - k)));
        }
        // unit vector orthogonal to ker b*
        let mut w = rs.r_vec.clone();
        for j in 0..k {
            let c = rs.kernel.column(j);
            w -= c * c.dot(&w);
        }
        if to_f64(w.norm()) < 1e-8 {
            return Err(Error::Profile("r lies in ker b*".into()));
        }
        let w = w.normalize();
        Ok(Self { rs, mid: pair.midpoint(), f_minus: rs.f_star(&pair.u_minus), kern: rs.kernel.clone(), left: rs.left_kernel.clone(), w })
    }

    fn residual(&self, u: &DVector<T>) -> DVector<T> {
        self.rs.f_star(u) - &self.f_minus
    }

    /// Point on the algebraic curve for parameter `s`; `a` is a warm start.
    fn point(&self, s: T, a: &mut DVector<T>) -> Result<DVector<T>> {
        let base = &self.mid + &self.w * s;
        if self.kern.ncols() == 0 {
            return Ok(base);
        }
        for _ in 0..30 {
            let u = &base + &self.kern * &*a;
            let g = self.left.transpose() * self.residual(&u);
            let jac = self.left.transpose() * self.rs.df_star(&u) * &self.kern;
            let da = jac.lu().solve(&g).ok_or_else(|| Error::Profile("a* singular on the curve".into()))?;
            *a -= &da;
            if to_f64(da.norm()) <= 1e-15 * (1.0 + to_f64(a.norm())) {
                break;
            }
        }
        Ok(&base + &self.kern * &*a)
    }

    /// Tangent `du/ds` at `u`.
    fn tangent(&self, u: &DVector<T>) -> Result<DVector<T>> {
        if self.kern.ncols() == 0 {
            return Ok(self.w.clone());
        }
        let df = self.rs.df_star(u);
        let jac = self.left.transpose() * &df * &self.kern;
        let rhs = self.left.transpose() * &df * &self.w;
        let da = jac.lu().solve(&rhs).ok_or_else(|| Error::Profile("a* singular on the curve".into()))?;
        Ok(&self.w - &self.kern * da)
    }

    /// `ds/dx` at `u` (least squares on `b* T s' = F`).
    fn rate(&self, u: &DVector<T>) -> Result<(T, DVector<T>)> {
        let t = self.tangent(u)?;
        let bt = self.rs.b_star(u) * &t;
        let denom = bt.dot(&bt);
        if !(denom > T::zero()) {
            return Err(Error::Profile("b* vanishes along the connection".into()));
        }
        Ok((bt.dot(&self.residual(u)) / denom, t))
    }
}

/// Solves the reduced profile on `grid` with phase `l·(u(x_c) - mid) = 0`.
pub fn solve_reduced_profile<T: Real>(
    rs: &ReducedSystem<T>,
    pair: &ShockPair<T>,
    grid: &Grid<T>,
    opts: &ProfileOptions,
) -> Result<ReducedProfile<T>> {
    let n = rs.n();
    let m = grid.len();
    if pair.epsilon == T::zero() {
        let u = GridProfile::from_fn(grid.clone(), n, |_| pair.u_minus.clone());
        return Ok(ReducedProfile { du: GridProfile::zeros(grid.clone(), n), u });
    }
    let curve = Curve::new(rs, pair)?;
    let mut a = DVector::zeros(rs.kernel.ncols());
    // phase: l·(u(s) - mid) = 0, scalar Newton in s from s = 0
    let l = &rs.l_vec;
    let mut s0 = T::zero();
    for _ in 0..50 {
        let u = curve.point(s0, &mut a)?;
        let g = l.dot(&(&u - &curve.mid));
        let dg = l.dot(&curve.tangent(&u)?);
        let ds = g / dg;
        s0 -= ds;
        if to_f64(ds.abs()) <= 1e-16 * to_f64(pair.epsilon) {
            break;
        }
    }
    let c = opts.center_node.unwrap_or(grid.center()).min(m - 1);
    let sub = opts.substeps.max(1);
    let dxt = grid.h_tilde / from_usize::<T>(sub);
    let inv_eps = T::one() / grid.epsilon;
    let mut u_vals = DMatrix::zeros(m, n);
    let mut du_vals = DMatrix::zeros(m, n);
    let mut store = |i: usize, s: T, a: &mut DVector<T>| -> Result<()> {
        let u = curve.point(s, a)?;
        let (rate, t) = curve.rate(&u)?;
        u_vals.row_mut(i).copy_from(&u.transpose());
        du_vals.row_mut(i).copy_from(&(t * rate).transpose());
        Ok(())
    };
    let a_center = a.clone();
    store(c, s0, &mut a)?;
    let six = lit::<T>(6.0);
    let two = lit::<T>(2.0);
    for dir in [1i64, -1] {
        let h = if dir > 0 { dxt } else { -dxt };
        let mut s = s0;
        let mut a = a_center.clone();
        let f = |s: T, a: &mut DVector<T>| -> Result<T> {
            let u = curve.point(s, a)?;
            Ok(curve.rate(&u)?.0 * inv_eps)
        };
        let mut i = c as i64;
        loop {
            let next = i + dir;
            if next < 0 || next >= m as i64 {
                break;
            }
            for _ in 0..sub {
                let k1 = f(s, &mut a)?;
                let k2 = f(s + h * k1 / two, &mut a)?;
                let k3 = f(s + h * k2 / two, &mut a)?;
                let k4 = f(s + h * k3, &mut a)?;
                s += h * (k1 + two * k2 + two * k3 + k4) / six;
            }
            if !s.is_finite() {
                return Err(Error::Profile("profile integration blew up".into()));
            }
            store(next as usize, s, &mut a)?;
            i = next;
        }
    }
    Ok(ReducedProfile { u: GridProfile::new(grid.clone(), u_vals)?, du: GridProfile::new(grid.clone(), du_vals)? })
}

/// Second-order box scheme with Newton, scalar case only; a cross-check for
/// [`solve_reduced_profile`].
pub fn solve_reduced_profile_box<T: Real>(rs: &ReducedSystem<T>, pair: &ShockPair<T>, grid: &Grid<T>) -> Result<GridProfile<T>> {
    if rs.n() != 1 {
        return Err(Error::Unsupported("box scheme implemented for n = 1".into()));
    }
    let m = grid.len();
    if pair.epsilon == T::zero() {
        return Ok(GridProfile::from_fn(grid.clone(), 1, |_| pair.u_minus.clone()));
    }
    let mid = pair.midpoint()[0];
    let half_jump = (pair.u_plus[0] - pair.u_minus[0]) * lit::<T>(0.5);
    let b0 = rs.b_star(&rs.u0)[(0, 0)];
    let kappa = rs.gnl.abs() / (lit::<T>(4.0) * b0);
    let mut u: Vec<T> = (0..m).map(|i| mid + half_jump * (kappa * grid.x_tilde(i)).tanh()).collect();
    let fm = rs.f_star(&pair.u_minus)[0];
    let h = grid.h();
    let c = grid.center();
    let scal = |x: T| DVector::from_element(1, x);
    for _ in 0..50 {
        let mut sys = BandedSystem::new(m, 1);
        for i in 0..m - 1 {
            let um = (u[i] + u[i + 1]) * lit::<T>(0.5);
            let b = rs.b_star(&scal(um))[(0, 0)];
            let db = rs.db_star(&scal(um), &scal(T::one()))[(0, 0)];
            let df = rs.df_star(&scal(um))[(0, 0)];
            let slope = (u[i + 1] - u[i]) / h;
            let g = b * slope - (rs.f_star(&scal(um))[0] - fm);
            let dmid = (db * slope - df) * lit::<T>(0.5);
            sys.push(i, &[-b / h + dmid, b / h + dmid], &[-g]);
        }
        sys.push(c, &[T::one()], &[-(u[c] - mid)]);
        let sol = sys.solve(lit(1e-14))?;
        let mut dn = T::zero();
        for i in 0..m {
            u[i] += sol.x[(i, 0)];
            dn = dn.max(sol.x[(i, 0)].abs());
        }
        if to_f64(dn) <= 1e-14 * to_f64(pair.epsilon) {
            return GridProfile::new(grid.clone(), DMatrix::from_column_slice(m, 1, &u));
        }
    }
    Err(Error::Profile("box scheme Newton did not converge".into()))
}
