//! Residuals of an approximate profile and the linearized Chapman–Enskog
//! correction step.
//!
//! Given `Ū = (ū, v̄)` with residuals `R_u = f(Ū) - f*(u-)` and
//! `R_v = A21 ū' + A22 v̄' - q`, the step eliminates `δv` through the source
//! (dropping `A22 δv'`):
//!
//! ```text
//! δv = dq_v^{-1} (R_v + A21 δu' + (E - dq_u) δu),   E δu = dA[δu]_{21,22} Ū'
//! b̃ δu' - P δu = R_u + A12 dq_v^{-1} R_v,          P = A11 + A12 dq_v^{-1} (E - dq_u)
//! ```
//!
//! with `b̃ = -A12 dq_v^{-1} A21`, all at `Ū`. The `δu` equation is solved on
//! the whole grid (fourth-order stencils, banded least squares) together with
//! the phase condition `ℓ·δu(0) = 0`.

use nalgebra::{DMatrix, DVector};

use crate::discretization::{derivative, GridProfile};
use crate::error::{Error, Result};
use crate::linear::banded::BandedSystem;
use crate::model::ModelSpec;
use crate::scalar::{lit, Real};

/// `(R_u, R_v)` on the grid.
#[derive(Clone, Debug)]
pub struct Residual<T: Real> {
    pub r_u: GridProfile<T>,
    pub r_v: GridProfile<T>,
}

impl<T: Real> Residual<T> {
    /// `(R_u, R_v)` side by side (`n + r` columns).
    pub fn stacked(&self) -> GridProfile<T> {
        let m = self.r_u.grid.len();
        let (n, r) = (self.r_u.dim(), self.r_v.dim());
        let mut v = DMatrix::zeros(m, n + r);
        v.columns_mut(0, n).copy_from(&self.r_u.values);
        v.columns_mut(n, r).copy_from(&self.r_v.values);
        self.r_u.with_values(v)
    }
}

/// Residual of a full state profile `Ū` (`n + r` columns); derivatives by
/// stencils.
pub fn state_residual<T: Real>(m: &ModelSpec<T>, f_minus: &DVector<T>, state: &GridProfile<T>) -> Result<Residual<T>> {
    let (n, r) = (m.n(), m.r());
    let d = derivative(state, 1)?;
    let rows = state.grid.len();
    let mut ru = DMatrix::zeros(rows, n);
    let mut rv = DMatrix::zeros(rows, r);
    for i in 0..rows {
        let s = state.node(i);
        let ds = d.node(i);
        let f = m.flux(&s) - f_minus;
        ru.row_mut(i).copy_from(&f.transpose());
        let a = m.matrix_a(&s);
        let g = a.rows(n, r) * &ds - m.source(&s);
        rv.row_mut(i).copy_from(&g.transpose());
    }
    Ok(Residual { r_u: state.with_values(ru), r_v: state.with_values(rv) })
}

/// Coefficients of the correction step at one node.
struct NodeCoefficients<T: Real> {
    b: DMatrix<T>,
    p: DMatrix<T>,
    h: DVector<T>,
    dqv_inv: DMatrix<T>,
    a21: DMatrix<T>,
    e_minus_dqu: DMatrix<T>,
}

fn node_coefficients<T: Real>(
    m: &ModelSpec<T>,
    s: &DVector<T>,
    ds: &DVector<T>,
    ru: &DVector<T>,
    rv: &DVector<T>,
) -> Result<NodeCoefficients<T>> {
    let (n, r) = (m.n(), m.r());
    let blocks = m.evaluate_blocks(s);
    let dqv_inv = blocks.dq_v.clone().try_inverse().ok_or_else(|| Error::Profile("dq_v singular along the profile".into()))?;
    let dq = m.source_jacobian(s);
    let mut e = DMatrix::zeros(r, n);
    for j in 0..n {
        let mut dir = DVector::zeros(n + r);
        dir[j] = T::one();
        let da = m.matrix_a_directional(s, &dir);
        let col = da.rows(n, r) * ds;
        e.set_column(j, &col);
    }
    let e_minus_dqu = e - dq.columns(0, n);
    let a12_inv = &blocks.a12 * &dqv_inv;
    let p = &blocks.a11 + &a12_inv * &e_minus_dqu;
    let b = -(&a12_inv * &blocks.a21);
    let h = ru + &a12_inv * rv;
    Ok(NodeCoefficients { b, p, h, dqv_inv, a21: blocks.a21, e_minus_dqu })
}

/// One linearized correction `(δu, δv)` (`n + r` columns) for `state`.
///
/// `ell` is the phase direction (length `n`), imposed at node `center`.
pub fn correction_step<T: Real>(
    m: &ModelSpec<T>,
    state: &GridProfile<T>,
    res: &Residual<T>,
    ell: &DVector<T>,
    center: usize,
) -> Result<GridProfile<T>> {
    let (n, r) = (m.n(), m.r());
    let grid = state.grid.clone();
    let rows = grid.len();
    let d = derivative(state, 1)?;
    let st = grid.stencil(1)?;
    let coeffs: Vec<NodeCoefficients<T>> =
        (0..rows).map(|i| node_coefficients(m, &state.node(i), &d.node(i), &res.r_u.node(i), &res.r_v.node(i))).collect::<Result<_>>()?;
    let mut sys = BandedSystem::new(rows * n, 1);
    let mut buf = Vec::new();
    let mut entries: Vec<(usize, T)> = Vec::new();
    for (i, c) in coeffs.iter().enumerate() {
        let (start, w) = st.row(i, &mut buf);
        for a in 0..n {
            entries.clear();
            for (k, &wk) in w.iter().enumerate() {
                let j = start + k;
                for bcol in 0..n {
                    let v = c.b[(a, bcol)] * wk;
                    if v != T::zero() {
                        entries.push((j * n + bcol, v));
                    }
                }
            }
            for bcol in 0..n {
                entries.push((i * n + bcol, -c.p[(a, bcol)]));
            }
            sys.push_sparse(&entries, &[c.h[a]]);
        }
    }
    let phase: Vec<(usize, T)> = (0..n).map(|a| (center * n + a, ell[a])).collect();
    sys.push_sparse(&phase, &[T::zero()]);
    let sol = sys.solve(lit(1e-14))?;
    let du = DMatrix::from_fn(rows, n, |i, a| sol.x[(i * n + a, 0)]);
    let du_prof = state.with_values(du.clone());
    let ddu = derivative(&du_prof, 1)?;
    let mut out = DMatrix::zeros(rows, n + r);
    for (i, c) in coeffs.iter().enumerate() {
        let dui = du.row(i).transpose();
        let rhs = res.r_v.node(i) + &c.a21 * ddu.node(i) + &c.e_minus_dqu * &dui;
        let dv = &c.dqv_inv * rhs;
        for a in 0..n {
            out[(i, a)] = dui[a];
        }
        for b in 0..r {
            out[(i, n + b)] = dv[b];
        }
    }
    Ok(state.with_values(out))
}
