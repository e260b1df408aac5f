//! Nonlinear residual `Φ^ε` and its Nash–Moser / Newton solution.
//!
//! The unknown is the perturbation `U` of the Chapman–Enskog approximant:
//! the full profile is `Ū = Ū_CE^N + U`. One step is
//! `U_{j+1} = U_j + t S_{θ_j} V_j` with `Φ'(U_j) V_j = -Φ(U_j)` and
//! `θ_j = θ0 κ^j` (capped at the grid Nyquist frequency, after which the step
//! is plain Newton). `t` is the first of `1, 1/2, ...` that decreases
//! `‖Φ‖_{H^3_{ε,0}}` (strict mode: `t = 1`); if none does, the undamped step
//! is taken and recorded as not accepted.

pub mod fit;
mod sweep;
mod uniqueness;

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::chapman_enskog::{state_residual, CeApproximation};
use crate::discretization::{smooth_odd, weighted_norm, GridProfile, NormSpec};
use crate::error::{Error, Result};
use crate::linear::{assemble, S0};
use crate::model::ModelSpec;
use crate::scalar::{lit, to_f64, Real};

pub use sweep::{closeness, decay_rate, sweep, Closeness, DecayCheck, RateFit, SweepOptions, SweepPoint, SweepReport};
pub use uniqueness::{uniqueness_probe, Restart, UniquenessReport};

/// Residual growth over the initial residual treated as divergence.
pub const DIVERGENCE_FACTOR: f64 = 1e3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    NashMoser,
    Newton,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IterationConfig {
    pub theta0: f64,
    pub kappa: f64,
    pub max_iters: usize,
    /// Target for `‖Φ‖_{H^{s0}_{ε,0}}`.
    pub tol_residual: f64,
    pub mode: Mode,
    /// Maximum number of step halvings.
    pub max_halvings: usize,
    /// Undamped steps (scheme-fidelity runs).
    pub strict: bool,
    /// Relative size of `‖V‖_sup` under which the discretization floor is
    /// considered reached.
    pub step_floor: f64,
}

impl Default for IterationConfig {
    fn default() -> Self {
        Self {
            theta0: 2.0,
            kappa: 2.0,
            max_iters: 30,
            tol_residual: 1e-10,
            mode: Mode::NashMoser,
            max_halvings: 5,
            strict: false,
            step_floor: 1e-11,
        }
    }
}

impl IterationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta0 >= 1.0) || !(self.kappa > 1.0) || !(self.tol_residual > 0.0) || !(self.step_floor > 0.0) {
            return Err(Error::ParameterOutOfRange(format!(
                "iteration: theta0={} kappa={} tol={} step_floor={}",
                self.theta0, self.kappa, self.tol_residual, self.step_floor
            )));
        }
        Ok(())
    }

    /// `θ_j`, capped at `π/h̃`.
    pub fn theta(&self, j: usize, h_tilde: f64) -> f64 {
        (self.theta0 * self.kappa.powi(j as i32)).min(PI / h_tilde)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IterationRecord {
    pub j: usize,
    pub theta: f64,
    /// `‖Φ(U_j)‖` in `H^{s0}_{ε,0}`, `L²_{ε,0}` and sup.
    pub residual_hs0: f64,
    pub residual_l2: f64,
    pub residual_sup: f64,
    /// `‖V_j‖_sup` before smoothing.
    pub step_sup: f64,
    /// `‖S_θ V_j - V_j‖_sup`.
    pub smoothing_defect: f64,
    pub damping: f64,
    pub accepted: bool,
    /// `‖Φ(U_{j+1})‖_{H^{s0}}`.
    pub new_residual_hs0: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// `‖Φ‖ <= tol`.
    Converged,
    /// Newton steps dropped to round-off level before reaching `tol`.
    Floor,
    MaxIterations,
}

impl Status {
    pub fn ok(self) -> bool {
        matches!(self, Status::Converged | Status::Floor)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IterationTrace {
    pub mode: Mode,
    pub epsilon: f64,
    pub records: Vec<IterationRecord>,
    pub status: Status,
    pub iterations: usize,
    pub initial_residual: f64,
    pub final_residual: f64,
}

/// `Φ(U)`: `(f(W) - f*(u-), A_2(W) W' - q(W))` with `W = Ū_CE + U`.
pub fn nonlinear_residual<T: Real>(m: &ModelSpec<T>, ce: &CeApproximation<T>, u: &GridProfile<T>) -> Result<GridProfile<T>> {
    if u.dim() != m.dim() || u.grid.len() != ce.state.grid.len() {
        return Err(Error::Dimension(format!("perturbation has {} columns, expected {}", u.dim(), m.dim())));
    }
    let w = ce.state.with_values(&ce.state.values + &u.values);
    check_neighborhood(m, &w)?;
    Ok(state_residual(m, &ce.f_minus, &w)?.stacked())
}

fn check_neighborhood<T: Real>(m: &ModelSpec<T>, w: &GridProfile<T>) -> Result<()> {
    for i in 0..w.grid.len() {
        let s = w.node(i);
        if s.iter().any(|v| !v.is_finite()) || !m.in_neighborhood(&s) {
            let vals: Vec<f64> = s.iter().map(|&v| to_f64(v)).collect();
            return Err(Error::OutsideNeighborhood { node: i, detail: format!("state {vals:?}") });
        }
    }
    Ok(())
}

fn hs0<T: Real>(p: &GridProfile<T>) -> Result<f64> {
    Ok(to_f64(weighted_norm(p, &NormSpec::unweighted(S0, to_f64(p.grid.epsilon))?)?))
}

/// Iterates from `U = 0`.
pub fn iterate<T: Real>(m: &ModelSpec<T>, ce: &CeApproximation<T>, cfg: &IterationConfig) -> Result<(GridProfile<T>, IterationTrace)> {
    let zero = GridProfile::zeros(ce.grid().clone(), m.dim());
    iterate_from(m, ce, zero, cfg)
}

/// Iterates from a given perturbation `U_0`.
pub fn iterate_from<T: Real>(
    m: &ModelSpec<T>,
    ce: &CeApproximation<T>,
    u0: GridProfile<T>,
    cfg: &IterationConfig,
) -> Result<(GridProfile<T>, IterationTrace)> {
    cfg.validate()?;
    let grid = ce.grid().clone();
    let eps = to_f64(grid.epsilon);
    let h_tilde = to_f64(grid.h_tilde);
    let n = m.n();
    let mut u = u0;
    let mut phi = nonlinear_residual(m, ce, &u)?;
    let mut res = hs0(&phi)?;
    let initial = res;
    let mut records = Vec::new();
    let mut status = Status::MaxIterations;
    let scale = to_f64(ce.state.values.amax()).max(1.0);
    for j in 0..cfg.max_iters {
        if res <= cfg.tol_residual {
            status = Status::Converged;
            break;
        }
        let ls = assemble(m, ce, &u)?;
        let phase: T = (0..n).fold(T::zero(), |acc, a| acc + ce.ell[a] * u.values[(ce.center, a)]);
        let rhs = phi.with_values(-&phi.values);
        let v = ls.solve(&rhs, -phase)?.solution;
        let step_sup = to_f64(v.max_abs());
        let theta = cfg.theta(j, h_tilde);
        let smoothing = cfg.mode == Mode::NashMoser && theta < PI / h_tilde;
        // below the cutoff cap a tiny step can still carry residual at
        // frequency θ, so the floor applies to Newton steps only
        if !smoothing && step_sup <= cfg.step_floor * scale {
            status = Status::Floor;
            break;
        }
        let vs = if smoothing { smooth_odd(&v, lit(theta))? } else { v.clone() };
        let smoothing_defect = to_f64((&vs.values - &v.values).amax());
        let halvings = if cfg.strict { 0 } else { cfg.max_halvings };
        let mut t = 1.0f64;
        let mut best: Option<(GridProfile<T>, GridProfile<T>, f64, f64)> = None;
        for _ in 0..=halvings {
            let trial = u.with_values(&u.values + &vs.values * lit::<T>(t));
            if let Ok(p) = nonlinear_residual(m, ce, &trial) {
                let r = hs0(&p)?;
                if r < res {
                    best = Some((trial, p, r, t));
                    break;
                }
                // no damped step decreases the residual: keep the undamped one
                if best.is_none() {
                    best = Some((trial, p, r, t));
                }
            }
            t *= 0.5;
        }
        let Some((trial, p, r, t)) = best else {
            return Err(Error::Divergence(format!("iteration {j}: every damped step leaves the working neighborhood")));
        };
        let accepted = r < res;
        records.push(IterationRecord {
            j,
            theta,
            residual_hs0: res,
            residual_l2: to_f64(weighted_norm(&phi, &NormSpec::unweighted(0, eps)?)?),
            residual_sup: to_f64(phi.max_abs()),
            step_sup,
            smoothing_defect,
            damping: t,
            accepted,
            new_residual_hs0: r,
        });
        if !r.is_finite() || r > DIVERGENCE_FACTOR * initial.max(cfg.tol_residual) {
            return Err(Error::Divergence(format!(
                "iteration {j}: residual {r:e} exceeds {DIVERGENCE_FACTOR:e} times the initial {initial:e}"
            )));
        }
        u = trial;
        phi = p;
        res = r;
    }
    if status == Status::MaxIterations && res <= cfg.tol_residual {
        status = Status::Converged;
    }
    let trace = IterationTrace {
        mode: cfg.mode,
        epsilon: eps,
        iterations: records.len(),
        records,
        status,
        initial_residual: initial,
        final_residual: res,
    };
    Ok((u, trace))
}

/// `Ū = Ū_CE + U`.
pub fn full_profile<T: Real>(ce: &CeApproximation<T>, u: &GridProfile<T>) -> GridProfile<T> {
    ce.state.with_values(&ce.state.values + &u.values)
}

/// Shifts a profile by `k` nodes to the right (`k < 0`: left), repeating the
/// boundary node.
pub fn shift_nodes<T: Real>(p: &GridProfile<T>, k: i64) -> GridProfile<T> {
    let m = p.grid.len() as i64;
    let d = p.dim();
    let vals = DMatrix::from_fn(m as usize, d, |i, c| {
        let src = (i as i64 - k).clamp(0, m - 1) as usize;
        p.values[(src, c)]
    });
    p.with_values(vals)
}
