//! Built-in relaxation systems with closed-form derivatives.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{ModelSpec, RelaxationModel};
use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Identifier of a shipped model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum BuiltinModelId {
    /// Jin–Xin relaxation of Burgers, `a >= 1`.
    JinXinBurgers { a: f64 },
    /// Three-velocity `{-1, 0, 1}` discrete-kinetic BGK model.
    Broadwell,
    /// Degenerate quasilinear model, `0 <= mu <= 0.2`.
    SyntheticQuasilinearDegenerate { mu: f64 },
}

pub(super) fn make<T: Real>(id: BuiltinModelId) -> Result<ModelSpec<T>> {
    match id {
        BuiltinModelId::JinXinBurgers { a } => {
            if !(a >= 1.0) || !a.is_finite() {
                return Err(Error::ParameterOutOfRange(format!("Jin-Xin wave speed a = {a} < 1")));
            }
            ModelSpec::new(format!("jin_xin_burgers(a={a})"), Arc::new(JinXinBurgers { a: lit::<T>(a) }), DVector::zeros(1))
        }
        BuiltinModelId::Broadwell => ModelSpec::new("broadwell_bgk3", Arc::new(BgkThreeVelocity), DVector::zeros(1)),
        BuiltinModelId::SyntheticQuasilinearDegenerate { mu } => {
            if !(0.0..=0.2).contains(&mu) {
                return Err(Error::ParameterOutOfRange(format!("synthetic coupling mu = {mu} not in [0, 0.2]")));
            }
            ModelSpec::new(format!("synthetic_degenerate(mu={mu})"), Arc::new(SyntheticDegenerate { mu: lit::<T>(mu) }), DVector::zeros(2))
        }
    }
}

/// Jin–Xin relaxation `u_t + v_x = 0`, `v_t + a² u_x = u²/2 - v`, written in
/// `w = v - u²/2` so that the equilibrium is `w = 0`:
///
/// ```text
/// u_t + (w + u²/2)_x = 0
/// w_t + (a² - u²) u_x - u w_x = -w
/// ```
///
/// Symmetrizer `S = diag(a² - u², 1)`; reduced viscosity `b* = a² - u²`.
#[derive(Clone, Debug)]
pub struct JinXinBurgers<T> {
    pub a: T,
}

impl<T: Real> RelaxationModel<T> for JinXinBurgers<T> {
    fn n(&self) -> usize {
        1
    }
    fn r(&self) -> usize {
        1
    }
    fn flux(&self, s: &DVector<T>) -> DVector<T> {
        DVector::from_element(1, s[1] + s[0] * s[0] * lit::<T>(0.5))
    }
    fn matrix_a(&self, s: &DVector<T>) -> DMatrix<T> {
        let u = s[0];
        DMatrix::from_row_slice(2, 2, &[u, T::one(), self.a * self.a - u * u, -u])
    }
    fn source(&self, s: &DVector<T>) -> DVector<T> {
        DVector::from_element(1, -s[1])
    }
    fn symmetrizer(&self, s: &DVector<T>) -> DMatrix<T> {
        let u = s[0];
        DMatrix::from_diagonal(&DVector::from_vec(vec![self.a * self.a - u * u, T::one()]))
    }
    fn source_jacobian(&self, _s: &DVector<T>) -> DMatrix<T> {
        DMatrix::from_row_slice(1, 2, &[T::zero(), -T::one()])
    }
    fn matrix_a_directional(&self, s: &DVector<T>, dir: &DVector<T>) -> DMatrix<T> {
        let du = dir[0];
        let two = lit::<T>(2.0);
        DMatrix::from_row_slice(2, 2, &[du, T::zero(), -two * s[0] * du, -du])
    }
    fn analytic_derivatives(&self) -> bool {
        true
    }
}

/// Discrete-kinetic BGK model with velocities `{-1, 0, 1}`:
/// `g_t + C g_x = M(ρ) - g`, one conserved density `ρ = Σ g = 1 + u` and
/// equilibrium `M_± = ρ/4 ± F(u)/2`, `M_0 = ρ/2`, `F(u) = u²/4`.
///
/// Coordinates are `u` and `v = (m - F(u), z - (1+u)/2)` with momentum
/// `m = g_+ - g_-` and `z = g_+ + g_-`. In those coordinates
///
/// ```text
/// A = [[F',        1,   0],
///      [1/2 - F'², -F', 1],
///      [F'/2,      1/2, 0]],   q = -v,
/// ```
///
/// which is similar to `C = diag(-1, 0, 1)`, so `det A = 0`. The symmetrizer is
/// `J^T diag(1/M'_i) J` with `J = ∂g/∂(u, v)`; it is block diagonal with
/// `S11 = 1`.
#[derive(Clone, Debug)]
pub struct BgkThreeVelocity;

impl BgkThreeVelocity {
    fn slope<T: Real>(u: T) -> T {
        u * lit::<T>(0.5)
    }
}

impl<T: Real> RelaxationModel<T> for BgkThreeVelocity {
    fn n(&self) -> usize {
        1
    }
    fn r(&self) -> usize {
        2
    }
    fn flux(&self, s: &DVector<T>) -> DVector<T> {
        DVector::from_element(1, s[0] * s[0] * lit::<T>(0.25) + s[1])
    }
    fn matrix_a(&self, s: &DVector<T>) -> DMatrix<T> {
        let fp = Self::slope(s[0]);
        let half = lit::<T>(0.5);
        let (o, z) = (T::one(), T::zero());
        DMatrix::from_row_slice(3, 3, &[fp, o, z, half - fp * fp, -fp, o, fp * half, half, z])
    }
    fn source(&self, s: &DVector<T>) -> DVector<T> {
        DVector::from_vec(vec![-s[1], -s[2]])
    }
    fn symmetrizer(&self, s: &DVector<T>) -> DMatrix<T> {
        let fp = Self::slope(s[0]);
        let quarter = lit::<T>(0.25);
        let m_minus = quarter - fp * lit::<T>(0.5);
        let m_plus = quarter + fp * lit::<T>(0.5);
        let (im, ip) = (T::one() / m_minus, T::one() / m_plus);
        let a = quarter * (im + ip);
        let b = quarter * (ip - im);
        let c = a + lit::<T>(2.0);
        let z = T::zero();
        DMatrix::from_row_slice(3, 3, &[T::one(), z, z, z, a, b, z, b, c])
    }
    fn source_jacobian(&self, _s: &DVector<T>) -> DMatrix<T> {
        let (o, z) = (T::one(), T::zero());
        DMatrix::from_row_slice(2, 3, &[z, -o, z, z, z, -o])
    }
    fn matrix_a_directional(&self, s: &DVector<T>, dir: &DVector<T>) -> DMatrix<T> {
        let dfp = dir[0] * lit::<T>(0.5);
        let fp = Self::slope(s[0]);
        let z = T::zero();
        let two = lit::<T>(2.0);
        DMatrix::from_row_slice(3, 3, &[dfp, z, z, -two * fp * dfp, -dfp, z, dfp * lit::<T>(0.5), z, z])
    }
    fn analytic_derivatives(&self) -> bool {
        true
    }
}

/// Symmetric degenerate model with `n = r = 2` and `S = I`:
///
/// ```text
/// f(u, v) = ∇φ(u) + B v,  φ = u1²/2 + u1 u2 + u2²/2 + u2³/6 + u2⁴/24,
/// B = e2 e1^T,
/// A = [[Hess φ, B], [B^T, D(u)]],  D = diag(1/2 + μ u1, 0),
/// q = -K v,  K = [[1, 1/2], [1/2, 1]].
/// ```
///
/// The last row of `A` vanishes (a zero-speed microscopic mode), so
/// `det A = 0` everywhere; `μ` makes `A22` depend on `u` while keeping `A`
/// symmetric. `b* = (4/3) e2 e2^T` has constant kernel `span(e1)`.
#[derive(Clone, Debug)]
pub struct SyntheticDegenerate<T> {
    pub mu: T,
}

impl<T: Real> RelaxationModel<T> for SyntheticDegenerate<T> {
    fn n(&self) -> usize {
        2
    }
    fn r(&self) -> usize {
        2
    }
    fn flux(&self, s: &DVector<T>) -> DVector<T> {
        let (u1, u2, v1) = (s[0], s[1], s[2]);
        let sixth = lit::<T>(1.0 / 6.0);
        DVector::from_vec(vec![u1 + u2, u1 + u2 + u2 * u2 * lit::<T>(0.5) + u2 * u2 * u2 * sixth + v1])
    }
    fn matrix_a(&self, s: &DVector<T>) -> DMatrix<T> {
        let (u1, u2) = (s[0], s[1]);
        let (o, z) = (T::one(), T::zero());
        let h22 = o + u2 + u2 * u2 * lit::<T>(0.5);
        let d11 = lit::<T>(0.5) + self.mu * u1;
        DMatrix::from_row_slice(4, 4, &[o, o, z, z, o, h22, o, z, z, o, d11, z, z, z, z, z])
    }
    fn source(&self, s: &DVector<T>) -> DVector<T> {
        let half = lit::<T>(0.5);
        DVector::from_vec(vec![-(s[2] + half * s[3]), -(half * s[2] + s[3])])
    }
    fn symmetrizer(&self, _s: &DVector<T>) -> DMatrix<T> {
        DMatrix::identity(4, 4)
    }
    fn source_jacobian(&self, _s: &DVector<T>) -> DMatrix<T> {
        let (o, z, h) = (T::one(), T::zero(), lit::<T>(0.5));
        DMatrix::from_row_slice(2, 4, &[z, z, -o, -h, z, z, -h, -o])
    }
    fn matrix_a_directional(&self, s: &DVector<T>, dir: &DVector<T>) -> DMatrix<T> {
        let mut da = DMatrix::zeros(4, 4);
        da[(1, 1)] = dir[1] * (T::one() + s[1]);
        da[(2, 2)] = self.mu * dir[0];
        da
    }
    fn analytic_derivatives(&self) -> bool {
        true
    }
}
