//! Standing-shock end states `f*(u-) = f*(u+)` with `|u+ - u-| = ε`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};
use crate::structure::ReducedSystem;

/// Largest amplitude accepted.
pub const EPS_MAX: f64 = 0.2;

#[derive(Clone, Debug)]
pub struct ShockPair<T: Real> {
    pub u_minus: DVector<T>,
    pub u_plus: DVector<T>,
    pub epsilon: T,
    /// `(u+ - u-)/ε`.
    pub direction: DVector<T>,
}

impl<T: Real> ShockPair<T> {
    pub fn midpoint(&self) -> DVector<T> {
        (&self.u_minus + &self.u_plus) * lit::<T>(0.5)
    }

    pub fn summary(&self) -> PairSummary {
        PairSummary {
            u_minus: self.u_minus.iter().map(|&v| to_f64(v)).collect(),
            u_plus: self.u_plus.iter().map(|&v| to_f64(v)).collect(),
            epsilon: to_f64(self.epsilon),
            direction: self.direction.iter().map(|&v| to_f64(v)).collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PairSummary {
    pub u_minus: Vec<f64>,
    pub u_plus: Vec<f64>,
    pub epsilon: f64,
    pub direction: Vec<f64>,
}

/// Orthonormal basis of `r^⊥` (columns).
fn complement<T: Real>(r: &DVector<T>) -> DMatrix<T> {
    let n = r.len();
    let mut cols: Vec<DVector<T>> = vec![r.normalize()];
    for i in 0..n {
        let mut e = DVector::zeros(n);
        e[i] = T::one();
        for c in &cols {
            e -= c * c.dot(&e);
        }
        if e.norm() > lit(1e-8) {
            cols.push(e.normalize());
        }
        if cols.len() == n {
            break;
        }
    }
    DMatrix::from_fn(n, n - 1, |i, j| cols[j + 1][i])
}

/// Pair with `u± = u0 + τ r ± ε d/2`, `d = normalize(r + Σ β_j e⊥_j)`; Newton in
/// `(τ, β)` on `(f*(u+) - f*(u-))/ε = 0`.
pub fn hugoniot_pair<T: Real>(rs: &ReducedSystem<T>, epsilon: T) -> Result<ShockPair<T>> {
    let n = rs.n();
    if epsilon < T::zero() || to_f64(epsilon) > EPS_MAX {
        return Err(Error::ParameterOutOfRange(format!("amplitude {} not in [0, {EPS_MAX}]", to_f64(epsilon))));
    }
    if epsilon == T::zero() {
        return Ok(ShockPair { u_minus: rs.u0.clone(), u_plus: rs.u0.clone(), epsilon, direction: rs.r_vec.clone() });
    }
    let r = rs.r_vec.clone();
    let perp = complement(&r);
    let half = lit::<T>(0.5);
    let build = |p: &DVector<T>| {
        let mid = &rs.u0 + &r * p[0];
        let mut d = r.clone();
        for j in 0..n - 1 {
            d += perp.column(j) * p[j + 1];
        }
        let d = d.normalize();
        let um = &mid - &d * (epsilon * half);
        let up = &mid + &d * (epsilon * half);
        (um, up, d)
    };
    let g = |p: &DVector<T>| {
        let (um, up, _) = build(p);
        (rs.f_star(&up) - rs.f_star(&um)) / epsilon
    };
    let mut p = DVector::zeros(n);
    let scale = to_f64(rs.df_star(&rs.u0).norm()).max(1.0);
    let mut res = g(&p);
    for _ in 0..50 {
        if to_f64(res.norm()) * to_f64(epsilon) <= 1e-14 * scale {
            break;
        }
        let hstep = lit::<T>(1e-7);
        let mut jac = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut pp = p.clone();
            let mut pm = p.clone();
            pp[j] += hstep;
            pm[j] -= hstep;
            jac.set_column(j, &((g(&pp) - g(&pm)) / (hstep + hstep)));
        }
        let step = jac.lu().solve(&res).ok_or(Error::Hugoniot { residual: to_f64(res.norm()) })?;
        let mut t = T::one();
        let mut accepted = false;
        for _ in 0..20 {
            let trial = &p - &step * t;
            let r2 = g(&trial);
            if r2.norm() < res.norm() || t < lit(1e-3) {
                p = trial;
                res = r2;
                accepted = true;
                break;
            }
            t *= half;
        }
        if !accepted {
            break;
        }
    }
    let (um, up, d) = build(&p);
    let rh = to_f64((rs.f_star(&up) - rs.f_star(&um)).norm());
    if rh > 1e-10 * scale * to_f64(epsilon).max(1e-3) {
        return Err(Error::Hugoniot { residual: rh });
    }
    let angle = to_f64(d.dot(&r).min(T::one())).acos();
    if angle > 0.2 {
        return Err(Error::Hugoniot { residual: angle });
    }
    Ok(ShockPair { u_minus: um, u_plus: up, epsilon, direction: d })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_builtin, BuiltinModelId};
    use crate::structure::reduce;

    fn rs(id: BuiltinModelId) -> ReducedSystem<f64> {
        reduce(&make_builtin(id).unwrap()).unwrap()
    }

    #[test]
    fn burgers_pair() {
        let r = rs(BuiltinModelId::JinXinBurgers { a: 1.0 });
        for &e in &[0.2, 0.05] {
            let p = hugoniot_pair(&r, e).unwrap();
            assert!((p.u_minus[0] - e / 2.0).abs() < 1e-14);
            assert!((p.u_plus[0] + e / 2.0).abs() < 1e-14);
        }
        let z = hugoniot_pair(&r, 0.0).unwrap();
        assert_eq!(z.u_minus, z.u_plus);
        assert!(hugoniot_pair(&r, 0.3).is_err());
    }

    #[test]
    fn bgk_and_synthetic_pairs() {
        for id in [BuiltinModelId::Broadwell, BuiltinModelId::SyntheticQuasilinearDegenerate { mu: 0.1 }] {
            let r = rs(id);
            let p = hugoniot_pair(&r, 0.05).unwrap();
            let rh = (r.f_star(&p.u_minus) - r.f_star(&p.u_plus)).norm();
            assert!(rh < 1e-10, "{rh}");
            assert!(((&p.u_plus - &p.u_minus).norm() - 0.05).abs() < 1e-12);
            // Lax: α decreases from u- to u+
            let a = |u: &DVector<f64>| {
                let ev = r.df_star(u).symmetric_eigenvalues();
                ev.iter().copied().min_by(|x, y| x.abs().total_cmp(&y.abs())).unwrap()
            };
            assert!(a(&p.u_minus) > 0.0 && a(&p.u_plus) < 0.0);
        }
    }
}
