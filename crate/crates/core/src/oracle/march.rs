//! Steady states of `U_t + (A(U) - s) U_x = Q(U)` by implicit pseudo-time
//! marching, with the frame speed `s` as a bordered unknown.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::chapman_enskog::ShockPair;
use crate::discretization::{Grid, GridProfile};
use crate::error::{Error, Result};
use crate::linear::banded::BandedSystem;
use crate::model::ModelSpec;
use crate::scalar::{lit, spectrum, to_f64, Real};

/// Regularization floor of the banded solves.
const SOLVE_FLOOR: f64 = 1e-14;
/// Largest time step relative to `h / λ`.
const DT_MAX_FACTOR: f64 = 1e12;
/// Largest growth of the time step per accepted step.
const DT_GROWTH: f64 = 10.0;
/// Smallest growth of the time step per accepted step; a too large step is
/// caught by the rejection test and cut by 4.
const DT_GROWTH_MIN: f64 = 2.0;
/// Residual growth that rejects a step.
const REJECT_GROWTH: f64 = 10.0;
/// Safety factor on the largest characteristic speed.
const SPEED_MARGIN: f64 = 1.1;

/// Spatial discretization of the transport part.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeId {
    /// Unlimited Fromm reconstruction, Rusanov dissipation (second order).
    Fromm2,
    /// Piecewise-constant states, Rusanov dissipation (first order).
    Rusanov1,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarchConfig {
    /// Courant number of the first step.
    pub cfl: f64,
    pub max_steps: usize,
    /// Steady tolerance on `‖U_t‖_sup`.
    pub tol: f64,
    pub scheme: SchemeId,
}

impl Default for MarchConfig {
    fn default() -> Self {
        Self { cfl: 0.45, max_steps: 2000, tol: 1e-9, scheme: SchemeId::Fromm2 }
    }
}

impl MarchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl < 0.5) {
            return Err(Error::ParameterOutOfRange(format!("cfl {} not in (0, 0.5)", self.cfl)));
        }
        if !(self.tol > 0.0) || self.max_steps == 0 {
            return Err(Error::ParameterOutOfRange(format!("tol {}, max_steps {}", self.tol, self.max_steps)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct MarchResult<T: Real> {
    pub profile: GridProfile<T>,
    /// Frame speed of the steady state.
    pub speed: f64,
    pub steps: usize,
    pub rejected: usize,
    /// Pseudo-time reached.
    pub time: f64,
    /// `‖U_t‖_sup` at the end.
    pub residual: f64,
    /// Frame displacement `∫ s dt` in cells.
    pub drift_cells: f64,
}

/// Semi-discrete right-hand side `U_t = R(U, s)` with equilibrium ghost states.
#[derive(Clone, Debug)]
pub struct MarchScheme<T: Real> {
    model: ModelSpec<T>,
    left: DVector<T>,
    right: DVector<T>,
    h: T,
    /// Rusanov dissipation speed.
    pub lambda: T,
    scheme: SchemeId,
}

impl<T: Real> MarchScheme<T> {
    pub fn new(m: &ModelSpec<T>, pair: &ShockPair<T>, grid: &Grid<T>, scheme: SchemeId) -> Self {
        let left = m.equilibrium(&pair.u_minus);
        let right = m.equilibrium(&pair.u_plus);
        let mid = (&left + &right) * lit::<T>(0.5);
        let speed = [&left, &right, &mid].iter().flat_map(|s| spectrum(&m.matrix_a(s))).map(|(re, im)| re.hypot(im)).fold(0.0f64, f64::max);
        Self { model: m.clone(), left, right, h: grid.h(), lambda: lit(SPEED_MARGIN * speed.max(1e-3)), scheme }
    }

    fn node(&self, u: &DMatrix<T>, i: isize) -> DVector<T> {
        let m = u.nrows() as isize;
        if i < 0 {
            self.left.clone()
        } else if i >= m {
            self.right.clone()
        } else {
            u.row(i as usize).transpose()
        }
    }

    /// Left and right states at the interface between nodes `k - 1` and `k`.
    fn interface(&self, u: &DMatrix<T>, k: isize) -> (DVector<T>, DVector<T>) {
        match self.scheme {
            SchemeId::Rusanov1 => (self.node(u, k - 1), self.node(u, k)),
            SchemeId::Fromm2 => {
                let q = lit::<T>(0.25);
                let ul = self.node(u, k - 1) + (self.node(u, k) - self.node(u, k - 2)) * q;
                let ur = self.node(u, k) - (self.node(u, k + 1) - self.node(u, k - 1)) * q;
                (ul, ur)
            }
        }
    }

    /// Interface averages and jumps for `k = 0..=M`.
    fn interfaces(&self, u: &DMatrix<T>) -> (Vec<DVector<T>>, Vec<DVector<T>>, Vec<(DVector<T>, DVector<T>)>) {
        let m = u.nrows() as isize;
        let states: Vec<_> = (0..=m).map(|k| self.interface(u, k)).collect();
        let half = lit::<T>(0.5);
        let avg = states.iter().map(|(l, r)| (l + r) * half).collect();
        let jump = states.iter().map(|(l, r)| r - l).collect();
        (avg, jump, states)
    }

    /// Conservative interface fluxes of the first block, `k = 0..=M`.
    pub fn fluxes(&self, u: &GridProfile<T>, s: T) -> Vec<DVector<T>> {
        let n = self.model.n();
        let (avg, jump, states) = self.interfaces(&u.values);
        let half = lit::<T>(0.5);
        states
            .iter()
            .zip(avg.iter().zip(&jump))
            .map(|((l, r), (a, j))| {
                (self.model.flux(l) + self.model.flux(r)) * half - a.rows(0, n) * s - j.rows(0, n) * (half * self.lambda)
            })
            .collect()
    }

    /// `R(U, s)`.
    pub fn residual(&self, u: &GridProfile<T>, s: T) -> GridProfile<T> {
        let (n, r) = (self.model.n(), self.model.r());
        let m = u.grid.len();
        let fl = self.fluxes(u, s);
        let (avg, jump, _) = self.interfaces(&u.values);
        let half = lit::<T>(0.5);
        let mut out = DMatrix::zeros(m, n + r);
        for i in 0..m {
            let fu = -(&fl[i + 1] - &fl[i]) / self.h;
            let w = u.node(i);
            let da = &avg[i + 1] - &avg[i];
            let dj = (jump[i + 1].rows(n, r) - jump[i].rows(n, r)) * (half * self.lambda);
            let a2 = self.model.matrix_a(&w).rows(n, r).into_owned();
            let fv = -(a2 * &da - da.rows(n, r) * s - dj) / self.h + self.model.source(&w);
            for c in 0..n {
                out[(i, c)] = fu[c];
            }
            for c in 0..r {
                out[(i, n + c)] = fv[c];
            }
        }
        u.with_values(out)
    }

    /// `∂R/∂s`: the interface-average difference quotient.
    pub fn speed_derivative(&self, u: &GridProfile<T>) -> GridProfile<T> {
        let (avg, _, _) = self.interfaces(&u.values);
        let d = u.dim();
        u.with_values(DMatrix::from_fn(u.grid.len(), d, |i, c| (avg[i + 1][c] - avg[i][c]) / self.h))
    }

    /// Banded central-difference Jacobian `∂R/∂U` as rows
    /// `(column, value)`; nodes interact within distance 2.
    fn jacobian(&self, u: &GridProfile<T>, s: T) -> Vec<Vec<(usize, T)>> {
        let m = u.grid.len();
        let d = u.dim();
        let mut rows = vec![Vec::new(); m * d];
        let step = T::default_epsilon().cbrt();
        for color in 0..5 {
            for c in 0..d {
                let mut plus = u.values.clone();
                let mut minus = u.values.clone();
                let mut deltas = vec![T::zero(); m];
                for j in (color..m).step_by(5) {
                    let dl = step * u.values[(j, c)].abs().max(T::one());
                    deltas[j] = dl;
                    plus[(j, c)] += dl;
                    minus[(j, c)] -= dl;
                }
                let rp = self.residual(&u.with_values(plus), s);
                let rm = self.residual(&u.with_values(minus), s);
                for i in 0..m {
                    let lo = i.saturating_sub(2);
                    let hi = (i + 2).min(m - 1);
                    let Some(j) = (lo..=hi).find(|j| j % 5 == color) else { continue };
                    let inv = T::one() / (deltas[j] + deltas[j]);
                    for ci in 0..d {
                        let v = (rp.values[(i, ci)] - rm.values[(i, ci)]) * inv;
                        if v != T::zero() {
                            rows[i * d + ci].push((j * d + c, v));
                        }
                    }
                }
            }
        }
        rows
    }
}

/// Marches from a `tanh` step between `(u-, 0)` and `(u+, 0)` to a steady
/// state, with the phase `ℓ·(u(0) - mid) = 0` pinned at the center node by
/// the frame speed. `ℓ` defaults to the pair direction.
pub fn march_to_steady<T: Real>(m: &ModelSpec<T>, pair: &ShockPair<T>, grid: &Grid<T>, cfg: &MarchConfig) -> Result<MarchResult<T>> {
    march_to_steady_with_phase(m, pair, grid, &pair.direction, cfg)
}

pub fn march_to_steady_with_phase<T: Real>(
    m: &ModelSpec<T>,
    pair: &ShockPair<T>,
    grid: &Grid<T>,
    ell: &DVector<T>,
    cfg: &MarchConfig,
) -> Result<MarchResult<T>> {
    cfg.validate()?;
    let (n, d) = (m.n(), m.dim());
    if ell.len() != n {
        return Err(Error::Dimension(format!("phase direction has length {}, expected {n}", ell.len())));
    }
    let scheme = MarchScheme::new(m, pair, grid, cfg.scheme);
    let left = m.equilibrium(&pair.u_minus);
    let right = m.equilibrium(&pair.u_plus);
    let mid = pair.midpoint();
    let half = lit::<T>(0.5);
    let mut u = GridProfile::from_fn(grid.clone(), d, |xt| {
        let w = (T::one() + xt.tanh()) * half;
        &left * (T::one() - w) + &right * w
    });
    let c = grid.center();
    let mut s = T::zero();
    let h = to_f64(grid.h());
    let lambda = to_f64(scheme.lambda);
    let mut dt = cfg.cfl * h / lambda;
    let dt_max = DT_MAX_FACTOR * h / lambda;
    let mut r = scheme.residual(&u, s);
    let mut res = to_f64(r.max_abs());
    let (mut steps, mut rejected, mut time, mut drift) = (0usize, 0usize, 0.0f64, 0.0f64);
    while res > cfg.tol {
        if steps + rejected >= cfg.max_steps {
            return Err(Error::March(format!("not steady after {} steps: ‖U_t‖ = {res:e}", cfg.max_steps)));
        }
        let jac = scheme.jacobian(&u, s);
        let rs = scheme.speed_derivative(&u);
        let mut sys = BandedSystem::new(grid.len() * d, 2);
        let inv_dt = lit::<T>(1.0 / dt);
        for (k, row) in jac.iter().enumerate() {
            let mut entries: Vec<(usize, T)> = row.iter().map(|&(j, v)| (j, -v)).collect();
            entries.push((k, inv_dt));
            sys.push_sparse(&entries, &[r.values[(k / d, k % d)], rs.values[(k / d, k % d)]]);
        }
        let sol = sys.solve(lit(SOLVE_FLOOR))?;
        let (a, b) = (sol.x.column(0), sol.x.column(1));
        let proj = |v: &nalgebra::DVectorView<T>| (0..n).fold(T::zero(), |acc, k| acc + ell[k] * v[c * d + k]);
        let g = (0..n).fold(T::zero(), |acc, k| acc + ell[k] * (u.values[(c, k)] - mid[k]));
        let lb = proj(&b);
        if lb == T::zero() {
            return Err(Error::March("the frame speed does not move the phase".into()));
        }
        let ds = -(g + proj(&a)) / lb;
        let du = a + b * ds;
        let trial = u.with_values(DMatrix::from_fn(grid.len(), d, |i, k| u.values[(i, k)] + du[i * d + k]));
        let inside = (0..grid.len()).all(|i| m.in_neighborhood(&trial.node(i)));
        let rt = scheme.residual(&trial, s + ds);
        let rn = to_f64(rt.max_abs());
        if !inside || !rn.is_finite() || rn > REJECT_GROWTH * res {
            rejected += 1;
            dt *= 0.25;
            continue;
        }
        steps += 1;
        time += dt;
        drift += to_f64(s + ds) * dt / h;
        dt = (dt * (res / rn).clamp(DT_GROWTH_MIN, DT_GROWTH)).min(dt_max);
        u = trial;
        s += ds;
        r = rt;
        res = rn;
    }
    Ok(MarchResult { profile: u, speed: to_f64(s), steps, rejected, time, residual: res, drift_cells: drift })
}
