//! ε-sweeps and fitted rates against the closeness and decay claims.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::{loglog, ols};
use super::{full_profile, hs0, iterate, IterationConfig, IterationTrace, Status};
use crate::chapman_enskog::{build_ce, hugoniot_pair, CeApproximation, ProfileOptions};
use crate::discretization::{derivative, sup_norm_within, Grid, GridParams, GridProfile};
use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};
use crate::structure::ReducedSystem;

/// Default pass band for fitted exponents.
pub const RATE_BAND: f64 = 0.3;
/// Pass band for the zeroth-order fluid exponent.
pub const FLUID_BAND: f64 = 0.2;
/// Minimum `R²` for a rate claim.
pub const MIN_R2: f64 = 0.98;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepOptions {
    /// Chapman–Enskog order `N`.
    pub order: usize,
    pub grid: GridParams,
    pub iteration: IterationConfig,
    /// Sup norms are taken on `|x̃| <= window`.
    pub window: f64,
    /// `x̃` range of the decay fit.
    pub decay_range: [f64; 2],
    /// Required decay rate is `decay_delta · ε`.
    pub decay_delta: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            order: 0,
            grid: GridParams::default(),
            iteration: IterationConfig::default(),
            window: 8.0,
            decay_range: [3.0, 8.0],
            decay_delta: 0.05,
        }
    }
}

/// Sup-norm measurements at one sweep point.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Closeness {
    /// `sup|∂^k (Ū - Ū_CE^N)|`, `k = 0, 1`.
    pub profile: [f64; 2],
    /// `sup|ū - u±|` (side-wise) and `sup|ū'|`.
    pub fluid: [f64; 2],
    /// `sup|∂^k v̄|`.
    pub micro: [f64; 2],
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayCheck {
    /// Fitted rates of `|ū - u±|` in `x` (left, right).
    pub rates: [f64; 2],
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    pub epsilon: f64,
    pub ce_residual_hs0: f64,
    pub closeness: Option<Closeness>,
    pub decay: Option<DecayCheck>,
    pub trace: Option<IterationTrace>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RateFit {
    pub name: String,
    pub epsilons: Vec<f64>,
    pub values: Vec<f64>,
    pub claim: f64,
    pub band: f64,
    /// Only `fitted >= claim - band` is required.
    pub one_sided: bool,
    pub fitted: Option<f64>,
    pub r2: Option<f64>,
    pub pass: bool,
}

impl RateFit {
    pub fn new(name: &str, epsilons: Vec<f64>, values: Vec<f64>, claim: f64, band: f64, one_sided: bool) -> Self {
        let fit = loglog(&epsilons, &values);
        let pass = fit.is_some_and(|f| {
            let close = if one_sided { f.slope >= claim - band } else { (f.slope - claim).abs() <= band };
            close && f.r2 >= MIN_R2
        });
        Self { name: name.to_string(), epsilons, values, claim, band, one_sided, fitted: fit.map(|f| f.slope), r2: fit.map(|f| f.r2), pass }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub model: String,
    pub order: usize,
    pub points: Vec<SweepPoint>,
    pub fits: Vec<RateFit>,
    pub decay_pass: bool,
    pub all_pass: bool,
}

/// Closeness measurements for the converged perturbation `u`.
pub fn closeness<T: Real>(ce: &CeApproximation<T>, u: &GridProfile<T>, window: f64) -> Result<Closeness> {
    let n = ce.pair.u_minus.len();
    let full = full_profile(ce, u);
    let grid = &full.grid;
    let lim = lit::<T>(window);
    let du = derivative(u, 1)?;
    let dfull = derivative(&full, 1)?;
    let xc = grid.x_tilde(ce.center);
    let mut fluid0 = 0.0f64;
    for i in 0..grid.len() {
        if grid.x_tilde(i).abs() > lim {
            continue;
        }
        let end = if grid.x_tilde(i) < xc { &ce.pair.u_minus } else { &ce.pair.u_plus };
        let diff = full.node(i).rows(0, n) - end;
        fluid0 = fluid0.max(to_f64(diff.norm()));
    }
    let r = full.dim() - n;
    Ok(Closeness {
        profile: [to_f64(sup_norm_within(u, lim)), to_f64(sup_norm_within(&du, lim))],
        fluid: [fluid0, to_f64(sup_norm_within(&dfull.columns(0, n), lim))],
        micro: [to_f64(sup_norm_within(&full.columns(n, r), lim)), to_f64(sup_norm_within(&dfull.columns(n, r), lim))],
    })
}

/// Fitted exponential rates (in `x`) of `|ū - u±|` on `x̃ ∈ range`, left and
/// right.
pub fn decay_rate<T: Real>(ce: &CeApproximation<T>, u: &GridProfile<T>, range: [f64; 2]) -> Result<[f64; 2]> {
    let n = ce.pair.u_minus.len();
    let full = full_profile(ce, u);
    let grid = &full.grid;
    let mut rates = [0.0; 2];
    for (side, end) in [(-1.0, &ce.pair.u_minus), (1.0, &ce.pair.u_plus)] {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..grid.len() {
            let xt = side * to_f64(grid.x_tilde(i));
            if xt >= range[0] && xt <= range[1] {
                let dist = to_f64((full.node(i).rows(0, n) - end).norm());
                if dist > 0.0 {
                    xs.push(to_f64(grid.x(i)).abs());
                    ys.push(dist.ln());
                }
            }
        }
        let fit = ols(&xs, &ys).ok_or_else(|| Error::Profile("decay fit needs two points".into()))?;
        rates[usize::from(side > 0.0)] = -fit.slope;
    }
    Ok(rates)
}

fn run_point<T: Real>(rs: &ReducedSystem<T>, opts: &SweepOptions, eps: f64) -> SweepPoint {
    let mut point = SweepPoint { epsilon: eps, ce_residual_hs0: f64::NAN, closeness: None, decay: None, trace: None, error: None };
    let run = |point: &mut SweepPoint| -> Result<()> {
        let pair = hugoniot_pair(rs, lit(eps))?;
        let grid = Grid::new(lit(opts.grid.l_tilde), lit(opts.grid.h_tilde), lit(eps))?;
        let ce = build_ce(rs, &pair, &grid, opts.order, &ProfileOptions::default())?;
        point.ce_residual_hs0 = hs0(&ce.residual_profile())?;
        let (u, trace) = iterate(&rs.model, &ce, &opts.iteration)?;
        let ok = trace.status.ok();
        point.trace = Some(trace);
        if !ok {
            return Err(Error::Divergence("iteration did not converge within max_iters".into()));
        }
        point.closeness = Some(closeness(&ce, &u, opts.window)?);
        let rates = decay_rate(&ce, &u, opts.decay_range)?;
        let threshold = opts.decay_delta * eps;
        point.decay = Some(DecayCheck { rates, threshold, pass: rates.iter().all(|&r| r >= threshold) });
        Ok(())
    };
    if let Err(e) = run(&mut point) {
        point.error = Some(e.to_string());
    }
    point
}

/// Runs every `ε` independently (in parallel) and fits the rates.
pub fn sweep<T: Real>(rs: &ReducedSystem<T>, opts: &SweepOptions, epsilons: &[f64]) -> Result<SweepReport> {
    if epsilons.len() < 4 || epsilons.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::ParameterOutOfRange(format!("sweep needs >= 4 strictly descending epsilons, got {epsilons:?}")));
    }
    opts.iteration.validate()?;
    let points: Vec<SweepPoint> = epsilons.par_iter().map(|&e| run_point(rs, opts, e)).collect();
    let ok: Vec<&SweepPoint> = points.iter().filter(|p| p.error.is_none()).collect();
    let eps: Vec<f64> = ok.iter().map(|p| p.epsilon).collect();
    let pick = |f: &dyn Fn(&Closeness) -> f64| -> Vec<f64> { ok.iter().map(|p| f(p.closeness.as_ref().unwrap())).collect() };
    let nn = opts.order as f64;
    let ce_eps: Vec<f64> = points.iter().filter(|p| p.ce_residual_hs0.is_finite()).map(|p| p.epsilon).collect();
    let ce_vals: Vec<f64> = points.iter().filter(|p| p.ce_residual_hs0.is_finite()).map(|p| p.ce_residual_hs0).collect();
    let mut fits = vec![RateFit::new("ce_residual_hs0", ce_eps, ce_vals, nn + 2.0, RATE_BAND, true)];
    for k in 0..2 {
        let kf = k as f64;
        fits.push(RateFit::new(&format!("closeness_k{k}"), eps.clone(), pick(&|c| c.profile[k]), kf + nn + 2.0, RATE_BAND, false));
        let band = if k == 0 { FLUID_BAND } else { RATE_BAND };
        fits.push(RateFit::new(&format!("fluid_k{k}"), eps.clone(), pick(&|c| c.fluid[k]), kf + 1.0, band, false));
        fits.push(RateFit::new(&format!("micro_k{k}"), eps.clone(), pick(&|c| c.micro[k]), kf + 2.0, RATE_BAND, false));
    }
    let decay_pass = ok.len() == points.len() && ok.iter().all(|p| p.decay.as_ref().is_some_and(|d| d.pass));
    let converged = points.iter().all(|p| p.trace.as_ref().is_some_and(|t| t.status != Status::MaxIterations) && p.error.is_none());
    let all_pass = converged && decay_pass && fits.iter().all(|f| f.pass);
    Ok(SweepReport { model: rs.model.name().to_string(), order: opts.order, points, fits, decay_pass, all_pass })
}
