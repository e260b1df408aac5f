//! Chapman–Enskog approximate profiles `Ū_CE^N` and their residuals.

mod correctors;
mod hugoniot;
mod profile;

use nalgebra::{DMatrix, DVector};

use crate::discretization::{Grid, GridProfile};
use crate::error::{Error, Result};
use crate::scalar::{to_f64, Real};
use crate::structure::ReducedSystem;
pub use correctors::{correction_step, state_residual, Residual};
pub use hugoniot::{hugoniot_pair, PairSummary, ShockPair, EPS_MAX};
pub use profile::{solve_reduced_profile, solve_reduced_profile_box, ProfileOptions, ReducedProfile};

/// Highest corrector order implemented.
pub const MAX_ORDER: usize = 2;

/// Order-`N` approximant. `N = 0` is `(ū, c*(ū) ū')`; each further order adds
/// one linearized correction pair `(δu, δv)`.
#[derive(Clone, Debug)]
pub struct CeApproximation<T: Real> {
    pub order: usize,
    pub pair: ShockPair<T>,
    pub reduced: ReducedProfile<T>,
    /// `v̄_CE = c*(ū) ū'`.
    pub v_bar: GridProfile<T>,
    /// `(δu, δv)` per order, `n + r` columns each.
    pub correctors: Vec<GridProfile<T>>,
    /// Assembled `Ū_CE^N`, `n + r` columns.
    pub state: GridProfile<T>,
    pub residual: Residual<T>,
    /// Phase direction `ℓ_ε = ū'(0)/|ū'(0)|`.
    pub ell: DVector<T>,
    /// Node where the phase condition is imposed.
    pub center: usize,
    /// `f*(u-)`, the flux level of the first block.
    pub f_minus: DVector<T>,
}

impl<T: Real> CeApproximation<T> {
    pub fn grid(&self) -> &Grid<T> {
        &self.state.grid
    }

    /// `(R_u, R_v)` stacked.
    pub fn residual_profile(&self) -> GridProfile<T> {
        self.residual.stacked()
    }
}

/// Phase direction from the reduced profile derivative at the center.
pub fn phase_direction<T: Real>(reduced: &ReducedProfile<T>, rs: &ReducedSystem<T>, center: usize) -> DVector<T> {
    let d = reduced.du.node(center);
    if to_f64(d.norm()) > 0.0 {
        d.normalize()
    } else {
        rs.r_vec.clone()
    }
}

/// Builds `Ū_CE^N` on `grid`.
pub fn build_ce<T: Real>(
    rs: &ReducedSystem<T>,
    pair: &ShockPair<T>,
    grid: &Grid<T>,
    order: usize,
    opts: &ProfileOptions,
) -> Result<CeApproximation<T>> {
    if order > MAX_ORDER {
        return Err(Error::Unsupported(format!("corrector order {order} > {MAX_ORDER}")));
    }
    let m = &rs.model;
    let (n, r) = (m.n(), m.r());
    let reduced = solve_reduced_profile(rs, pair, grid, opts)?;
    let rows = grid.len();
    let mut v = DMatrix::zeros(rows, r);
    let mut full = DMatrix::zeros(rows, n + r);
    for i in 0..rows {
        let u = reduced.u.node(i);
        let vi = rs.c_star(&u) * reduced.du.node(i);
        v.row_mut(i).copy_from(&vi.transpose());
        full.view_mut((i, 0), (1, n)).copy_from(&u.transpose());
        full.view_mut((i, n), (1, r)).copy_from(&vi.transpose());
    }
    let v_bar = GridProfile::new(grid.clone(), v)?;
    let mut state = GridProfile::new(grid.clone(), full)?;
    let f_minus = rs.f_star(&pair.u_minus);
    let center = opts.center_node.unwrap_or(grid.center()).min(rows - 1);
    let ell = phase_direction(&reduced, rs, center);
    let mut residual = state_residual(m, &f_minus, &state)?;
    let mut correctors = Vec::with_capacity(order);
    for _ in 0..order {
        let corr = correction_step(m, &state, &residual, &ell, center)?;
        state = state.with_values(&state.values + &corr.values);
        residual = state_residual(m, &f_minus, &state)?;
        correctors.push(corr);
    }
    Ok(CeApproximation { order, pair: pair.clone(), reduced, v_bar, correctors, state, residual, ell, center, f_minus })
}
