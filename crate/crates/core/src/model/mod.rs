//! Relaxation systems `A(U) U' = Q(U)` in normalized block form.
//!
//! A state is the stacked vector `U = (u, v)` with `u` in `R^n` (fluid part)
//! and `v` in `R^r` (microscopic part). Models are expected in the frame where
//! the equilibrium manifold is `v = 0`, i.e. `q(u, 0) = 0`.

mod builtin;

pub use builtin::{BgkThreeVelocity, BuiltinModelId, JinXinBurgers, SyntheticDegenerate};

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Half-width of the working box around `(u0, 0)` in model units.
pub const NEIGHBORHOOD_RADIUS: f64 = 0.5;

/// Evaluators of a relaxation system.
///
/// Only `flux`, `matrix_a`, `source` and `symmetrizer` are required; the
/// derivative evaluators fall back to 4th-order central finite differences
/// with step `1e-5 * max(1, |U|)`.
pub trait RelaxationModel<T: Real>: Send + Sync {
    fn n(&self) -> usize;
    fn r(&self) -> usize;

    /// First-block flux `f(u, v)` in `R^n`.
    fn flux(&self, state: &DVector<T>) -> DVector<T>;
    /// Full `(n+r) x (n+r)` matrix `A(U)`.
    fn matrix_a(&self, state: &DVector<T>) -> DMatrix<T>;
    /// Source `q(u, v)` in `R^r`.
    fn source(&self, state: &DVector<T>) -> DVector<T>;
    /// Block-diagonal symmetric positive definite symmetrizer `S(U)`.
    fn symmetrizer(&self, state: &DVector<T>) -> DMatrix<T>;

    /// `r x (n+r)` Jacobian of `q`.
    fn source_jacobian(&self, state: &DVector<T>) -> DMatrix<T> {
        let d = self.n() + self.r();
        let mut jac = DMatrix::zeros(self.r(), d);
        for j in 0..d {
            let mut e = DVector::zeros(d);
            e[j] = T::one();
            let col = central_difference(state, &e, |s| self.source(s));
            jac.set_column(j, &col);
        }
        jac
    }

    /// Directional derivative `dA(U)[dir]`.
    fn matrix_a_directional(&self, state: &DVector<T>, dir: &DVector<T>) -> DMatrix<T> {
        let d = self.n() + self.r();
        let flat = central_difference(state, dir, |s| {
            let a = self.matrix_a(s);
            DVector::from_column_slice(a.as_slice())
        });
        DMatrix::from_column_slice(d, d, flat.as_slice())
    }

    /// Whether the derivative evaluators are closed-form.
    fn analytic_derivatives(&self) -> bool {
        false
    }
}

/// Fourth-order central difference of `g` at `x` in direction `dir`.
pub fn central_difference<T: Real, F>(x: &DVector<T>, dir: &DVector<T>, g: F) -> DVector<T>
where
    F: Fn(&DVector<T>) -> DVector<T>,
{
    let scale = x.amax().max(T::one());
    let h = lit::<T>(1e-5) * scale;
    let at = |k: f64| g(&(x + dir * (h * lit::<T>(k))));
    let (p1, m1, p2, m2) = (at(1.0), at(-1.0), at(2.0), at(-2.0));
    ((p1 - m1) * lit::<T>(8.0) - (p2 - m2)) / (lit::<T>(12.0) * h)
}

/// Block partition of the model matrices at one state.
#[derive(Clone, Debug)]
pub struct Blocks<T: Real> {
    pub a11: DMatrix<T>,
    pub a12: DMatrix<T>,
    pub a21: DMatrix<T>,
    pub a22: DMatrix<T>,
    /// `∂_v q`.
    pub dq_v: DMatrix<T>,
    pub s11: DMatrix<T>,
    pub s22: DMatrix<T>,
    /// Largest real part of the spectrum of `∂_v q`.
    pub dq_v_max_re: f64,
    /// Set when the state is outside the working box or `∂_v q` is not dissipative.
    pub flagged: bool,
}

/// An immutable relaxation system together with its base state `u0`.
#[derive(Clone)]
pub struct ModelSpec<T: Real> {
    name: String,
    model: Arc<dyn RelaxationModel<T>>,
    base_state: DVector<T>,
}

impl<T: Real> fmt::Debug for ModelSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSpec")
            .field("name", &self.name)
            .field("n", &self.n())
            .field("r", &self.r())
            .field("analytic_derivatives", &self.model.analytic_derivatives())
            .finish()
    }
}

impl<T: Real> ModelSpec<T> {
    /// Registers a user model. `base_state` is `u0` (length `n`).
    pub fn new(name: impl Into<String>, model: Arc<dyn RelaxationModel<T>>, base_state: DVector<T>) -> Result<Self> {
        if base_state.len() != model.n() {
            return Err(Error::Dimension(format!("base state has length {}, model has n = {}", base_state.len(), model.n())));
        }
        Ok(Self { name: name.into(), model, base_state })
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn n(&self) -> usize {
        self.model.n()
    }
    pub fn r(&self) -> usize {
        self.model.r()
    }
    pub fn dim(&self) -> usize {
        self.n() + self.r()
    }
    /// Column names `u`, `v` (or `u1, u2, ...` when a block has more than one
    /// component).
    pub fn component_names(&self) -> Vec<String> {
        let block = |p: &str, k: usize| -> Vec<String> {
            if k == 1 {
                vec![p.to_string()]
            } else {
                (1..=k).map(|i| format!("{p}{i}")).collect()
            }
        };
        let mut names = block("u", self.n());
        names.extend(block("v", self.r()));
        names
    }
    pub fn base_state(&self) -> &DVector<T> {
        &self.base_state
    }
    pub fn analytic_derivatives(&self) -> bool {
        self.model.analytic_derivatives()
    }

    /// Equilibrium state `(u, 0)`.
    pub fn equilibrium(&self, u: &DVector<T>) -> DVector<T> {
        let mut s = DVector::zeros(self.dim());
        s.rows_mut(0, self.n()).copy_from(u);
        s
    }

    pub fn flux(&self, state: &DVector<T>) -> DVector<T> {
        self.model.flux(state)
    }
    pub fn matrix_a(&self, state: &DVector<T>) -> DMatrix<T> {
        self.model.matrix_a(state)
    }
    pub fn source(&self, state: &DVector<T>) -> DVector<T> {
        self.model.source(state)
    }
    pub fn symmetrizer(&self, state: &DVector<T>) -> DMatrix<T> {
        self.model.symmetrizer(state)
    }
    pub fn source_jacobian(&self, state: &DVector<T>) -> DMatrix<T> {
        self.model.source_jacobian(state)
    }
    pub fn matrix_a_directional(&self, state: &DVector<T>, dir: &DVector<T>) -> DMatrix<T> {
        self.model.matrix_a_directional(state, dir)
    }

    /// Full `(n+r) x (n+r)` Jacobian `dQ` with `Q = (0, q)`.
    pub fn dq_full(&self, state: &DVector<T>) -> DMatrix<T> {
        let (n, d) = (self.n(), self.dim());
        let mut dq = DMatrix::zeros(d, d);
        dq.rows_mut(n, self.r()).copy_from(&self.source_jacobian(state));
        dq
    }

    /// Whether the state lies in the working box `|u-u0| <= 0.5`, `|v| <= 0.5`.
    pub fn in_neighborhood(&self, state: &DVector<T>) -> bool {
        let n = self.n();
        let radius = lit::<T>(NEIGHBORHOOD_RADIUS);
        let du = (state.rows(0, n) - &self.base_state).amax();
        let dv = state.rows(n, self.r()).amax();
        du <= radius && dv <= radius
    }

    /// Splits `A`, `S`, and `∂_v q` at `state` into their blocks.
    pub fn evaluate_blocks(&self, state: &DVector<T>) -> Blocks<T> {
        let (n, r) = (self.n(), self.r());
        let a = self.matrix_a(state);
        let s = self.symmetrizer(state);
        let dq_v = self.source_jacobian(state).columns(n, r).into_owned();
        let dq_v_max_re = crate::scalar::spectrum(&dq_v).iter().map(|z| z.0).fold(f64::NEG_INFINITY, f64::max);
        let flagged = !self.in_neighborhood(state) || !(dq_v_max_re < 0.0);
        Blocks {
            a11: a.view((0, 0), (n, n)).into_owned(),
            a12: a.view((0, n), (n, r)).into_owned(),
            a21: a.view((n, 0), (r, n)).into_owned(),
            a22: a.view((n, n), (r, r)).into_owned(),
            dq_v,
            s11: s.view((0, 0), (n, n)).into_owned(),
            s22: s.view((n, n), (r, r)).into_owned(),
            dq_v_max_re,
            flagged,
        }
    }
}

impl<T: Real> Blocks<T> {
    /// Reassembles `A` from its four blocks.
    pub fn assemble_a(&self) -> DMatrix<T> {
        let (n, r) = (self.a11.nrows(), self.a22.nrows());
        let mut a = DMatrix::zeros(n + r, n + r);
        a.view_mut((0, 0), (n, n)).copy_from(&self.a11);
        a.view_mut((0, n), (n, r)).copy_from(&self.a12);
        a.view_mut((n, 0), (r, n)).copy_from(&self.a21);
        a.view_mut((n, n), (r, r)).copy_from(&self.a22);
        a
    }
}

/// Builds a built-in model in normalized coordinates.
pub fn make_builtin<T: Real>(id: BuiltinModelId) -> Result<ModelSpec<T>> {
    builtin::make(id)
}
