//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs with `cargo test --test acceptance` (add `--release` for timings that
//! reflect the runtime budgets). Exits nonzero on a failure only when
//! `RELAXPROF_ACCEPTANCE_STRICT` is set.

use std::time::{Duration, Instant};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relaxprof::chapman_enskog::{build_ce, hugoniot_pair, state_residual, CeApproximation, ProfileOptions};
use relaxprof::discretization::{derivative, smooth, sobolev_norm, weighted_norm, Grid, GridParams, GridProfile, NormSpec, Window};
use relaxprof::linear::{assemble, assemble_at, second_variation, S0};
use relaxprof::model::{make_builtin, BuiltinModelId};
use relaxprof::oracle::{march_to_steady_with_phase, quadrature_profile, MarchConfig};
use relaxprof::solver::fit::loglog;
use relaxprof::solver::{full_profile, iterate, sweep, uniqueness_probe, IterationConfig, Mode, SweepOptions};
use relaxprof::structure::{check_structure, construct_kawashima, reduce, KawashimaOptions, ReducedSystem};
use relaxprof::{ModelSpec64, Result};

const EPSILONS: [f64; 4] = [0.2, 0.1, 0.05, 0.025];
const L_TILDE: f64 = 12.0;
const H_TILDE: f64 = 0.01;

// criterion 1
const THETA_K_JIN_XIN_MIN: f64 = 0.45;
const BUDGET_1: Duration = Duration::from_secs(10);
// criterion 2
const CE_ORDER_SLACK: f64 = 0.3;
const MIN_R2: f64 = 0.98;
/// Spacing for the residual norms: on the desk grid the third derivative of
/// an O(ε^3) residual reaches the f64 roundoff floor at the smallest ε.
const CE_H_TILDE: f64 = 0.04;
const BUDGET_2: Duration = Duration::from_secs(60);
// criterion 3
const CLOSENESS_CLAIM: f64 = 2.0;
const CLOSENESS_BAND: f64 = 0.3;
const FLUID_CLAIM: f64 = 1.0;
const FLUID_BAND: f64 = 0.2;
const MICRO_CLAIM: f64 = 2.0;
const MICRO_BAND: f64 = 0.3;
const DECAY_DELTA: f64 = 0.05;
const DECAY_RANGE: [f64; 2] = [3.0, 8.0];
const BUDGET_3: Duration = Duration::from_secs(300);
// criterion 4
const TAME_SPREAD: f64 = 3.0;
const BUDGET_4: Duration = Duration::from_secs(60);
// criterion 5
const SMOOTHING_CONST: f64 = 2.0;
const INTERPOLATION_CONST: f64 = 1.5;
const BUDGET_5: Duration = Duration::from_secs(10);
// criterion 6
const ORACLE_EPS: f64 = 0.05;
const ORACLE_TOL: f64 = 5e-4;
const QUADRATURE_TOL: f64 = 1e-8;
const ORACLE_GRID: GridParams = GridParams { l_tilde: 24.0, h_tilde: 0.02 };
const BUDGET_6: Duration = Duration::from_secs(120);
// criterion 7
const SCHEME_TOL: f64 = 1e-7;
const MAX_ITERS: usize = 15;
// criterion 8
const RESTART_RADIUS: f64 = 0.1;
const RESTART_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];
const UNIQUENESS_EPS: f64 = 0.1;
// criterion 9
const FIRST_ORDER_MIN: f64 = 1.9;
const SECOND_ORDER_MIN: f64 = 2.9;
const STENCIL_ORDER_MIN: f64 = 3.8;

fn models() -> Vec<(&'static str, BuiltinModelId)> {
    vec![
        ("jin_xin", BuiltinModelId::JinXinBurgers { a: 1.0 }),
        ("broadwell", BuiltinModelId::Broadwell),
        ("synthetic", BuiltinModelId::SyntheticQuasilinearDegenerate { mu: 0.1 }),
    ]
}

fn setup(id: BuiltinModelId) -> Result<(ModelSpec64, ReducedSystem<f64>)> {
    let m = make_builtin::<f64>(id)?;
    let rs = reduce(&m)?;
    Ok((m, rs))
}

fn ce_at(rs: &ReducedSystem<f64>, eps: f64, grid: GridParams, order: usize) -> Result<CeApproximation<f64>> {
    let pair = hugoniot_pair(rs, eps)?;
    let g = Grid::from_params(&grid, eps)?;
    build_ce(rs, &pair, &g, order, &ProfileOptions::default())
}

fn desk() -> GridParams {
    GridParams { l_tilde: L_TILDE, h_tilde: H_TILDE }
}

fn hs0(p: &GridProfile<f64>) -> Result<f64> {
    weighted_norm(p, &NormSpec::unweighted(S0, p.grid.epsilon)?)
}

fn within(t: Duration, budget: Duration) -> bool {
    t <= budget
}

/// Sum of Gaussians in `x̃` with random vector amplitudes.
fn bumps(grid: &Grid<f64>, d: usize, seed: u64, amp: f64) -> GridProfile<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b: Vec<(f64, f64, DVector<f64>)> =
        (0..3).map(|_| (rng.gen_range(-2.0..2.0), rng.gen_range(0.7..1.5), DVector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0)))).collect();
    GridProfile::from_fn(grid.clone(), d, |xt| {
        b.iter().fold(DVector::zeros(d), |acc, (c, w, a)| acc + a * (amp * (-((xt - c) / w).powi(2)).exp()))
    })
}

type Check = Result<(bool, String)>;

fn structure_suite() -> Check {
    let start = Instant::now();
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, id) in models() {
        let m = make_builtin::<f64>(id)?;
        let rep = check_structure(&m, 64, 1, &KawashimaOptions::default())?;
        ok &= rep.ok && rep.kawashima.theta_k > 0.0;
        notes.push(format!("{name} ok={} theta_K={:.3}", rep.ok, rep.kawashima.theta_k));
    }
    let jx = make_builtin::<f64>(BuiltinModelId::JinXinBurgers { a: 1.0 })?;
    let origin = jx.equilibrium(&DVector::zeros(1));
    let k = construct_kawashima(&jx, &origin, &KawashimaOptions::default())?;
    ok &= k.theta_k >= THETA_K_JIN_XIN_MIN;
    notes.push(format!("jin_xin origin theta_K={:.4} (>= {THETA_K_JIN_XIN_MIN})", k.theta_k));
    let t = start.elapsed();
    ok &= within(t, BUDGET_1);
    notes.push(format!("{:.1}s", t.as_secs_f64()));
    Ok((ok, notes.join("; ")))
}

fn ce_orders() -> Check {
    let start = Instant::now();
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, id) in models().into_iter().take(2) {
        let (_, rs) = setup(id)?;
        for order in 0..2 {
            let norms = |h_tilde: f64| {
                let grid = GridParams { l_tilde: L_TILDE, h_tilde };
                EPSILONS.iter().map(|&e| hs0(&ce_at(&rs, e, grid, order)?.residual_profile())).collect::<Result<Vec<f64>>>()
            };
            let fit = loglog(&EPSILONS, &norms(CE_H_TILDE)?);
            let fine = loglog(&EPSILONS, &norms(H_TILDE)?);
            let claim = order as f64 + 2.0;
            let pass = fit.is_some_and(|f| f.slope >= claim - CE_ORDER_SLACK && f.r2 >= MIN_R2);
            ok &= pass;
            let fine = fine.map_or("no fit".to_string(), |f| format!("slope {:.2} R2 {:.4}", f.slope, f.r2));
            notes.push(match fit {
                Some(f) => format!(
                    "{name} N={order} slope {:.2} (>= {:.1}) R2 {:.4} [h~={H_TILDE}: {fine}]",
                    f.slope,
                    claim - CE_ORDER_SLACK,
                    f.r2
                ),
                None => format!("{name} N={order} no fit"),
            });
        }
    }
    let t = start.elapsed();
    ok &= within(t, BUDGET_2);
    notes.push(format!("{:.1}s", t.as_secs_f64()));
    Ok((ok, notes.join("; ")))
}

fn closeness_rates() -> Check {
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, id) in models() {
        let start = Instant::now();
        let (_, rs) = setup(id)?;
        let opts = SweepOptions { order: 0, grid: desk(), decay_range: DECAY_RANGE, decay_delta: DECAY_DELTA, ..Default::default() };
        let rep = sweep(&rs, &opts, &EPSILONS)?;
        let claims = [
            ("closeness_k0", CLOSENESS_CLAIM, CLOSENESS_BAND),
            ("fluid_k0", FLUID_CLAIM, FLUID_BAND),
            ("micro_k0", MICRO_CLAIM, MICRO_BAND),
        ];
        let mut parts = Vec::new();
        for (fit_name, claim, band) in claims {
            let f = rep.fits.iter().find(|f| f.name == fit_name);
            let (slope, r2) = f.map_or((f64::NAN, f64::NAN), |f| (f.fitted.unwrap_or(f64::NAN), f.r2.unwrap_or(f64::NAN)));
            let pass = (slope - claim).abs() <= band && r2 >= MIN_R2;
            ok &= pass;
            parts.push(format!("{fit_name} {slope:.2} ({claim}+-{band}){}", if pass { "" } else { " !" }));
        }
        let failed = rep.points.iter().filter(|p| p.error.is_some()).count();
        ok &= rep.decay_pass && failed == 0;
        let t = start.elapsed();
        ok &= within(t, BUDGET_3);
        notes.push(format!("{name}: {}, decay {}, {:.1}s", parts.join(", "), rep.decay_pass, t.as_secs_f64()));
    }
    Ok((ok, notes.join("; ")))
}

fn tame_estimate() -> Check {
    let start = Instant::now();
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, id) in models() {
        let (m, rs) = setup(id)?;
        let mut rhos = Vec::new();
        for &eps in &EPSILONS {
            let ce = ce_at(&rs, eps, desk(), 0)?;
            let zero = GridProfile::zeros(ce.grid().clone(), m.dim());
            let ls = assemble(&m, &ce, &zero)?;
            let f = bumps(ce.grid(), m.dim(), 99, 1.0);
            let sol = ls.solve(&f, 0.0)?;
            rhos.push(ls.tame_ratio(&zero, &sol.solution, &f, S0 + 1)?.rho);
        }
        let spread = rhos.iter().cloned().fold(0.0, f64::max) / rhos.iter().cloned().fold(f64::INFINITY, f64::min);
        ok &= spread <= TAME_SPREAD;
        notes.push(format!("{name} spread {spread:.2}"));
    }
    let t = start.elapsed();
    ok &= within(t, BUDGET_4);
    notes.push(format!("(<= {TAME_SPREAD}) {:.1}s", t.as_secs_f64()));
    Ok((ok, notes.join("; ")))
}

fn smoothing_axioms() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let g = Grid::new(L_TILDE, 0.02, 0.1)?;
    let mut worst_approx: f64 = 0.0;
    let mut worst_smooth: f64 = 0.0;
    let mut worst_interp: f64 = 0.0;
    for _ in 0..20 {
        let b: Vec<(f64, f64, f64)> =
            (0..4).map(|_| (rng.gen_range(-3.0..3.0), rng.gen_range(0.7..2.0), rng.gen_range(-1.0..1.0))).collect();
        let p = GridProfile::from_fn(g.clone(), 1, |x| {
            DVector::from_element(1, b.iter().map(|&(c, w, a)| a * (-((x - c) / w).powi(2)).exp()).sum())
        });
        for &theta in &[2.0, 4.0, 8.0] {
            let sp = smooth(&p, theta, Window::Reject)?.profile;
            let diff = sp.with_values(&sp.values - &p.values);
            for &(s, s2) in &[(0usize, 2usize), (1, 3)] {
                let gap = (s2 - s) as f64;
                worst_approx = worst_approx.max(sobolev_norm(&diff, s)? / (theta.powf(-gap) * sobolev_norm(&p, s2)?));
                worst_smooth = worst_smooth.max(sobolev_norm(&sp, s2)? / (theta.powf(gap) * sobolev_norm(&p, s)?));
            }
        }
        let n: Vec<f64> = (0..=4).map(|s| sobolev_norm(&p, s)).collect::<Result<_>>()?;
        for s in 0..3 {
            worst_interp = worst_interp.max(n[s + 1] / (n[s] * n[s + 2]).sqrt());
        }
    }
    let t = start.elapsed();
    let ok =
        worst_approx <= SMOOTHING_CONST && worst_smooth <= SMOOTHING_CONST && worst_interp <= INTERPOLATION_CONST && within(t, BUDGET_5);
    Ok((
        ok,
        format!(
            "constants: approximation {worst_approx:.3}, smoothing {worst_smooth:.3} (<= {SMOOTHING_CONST}), interpolation {worst_interp:.3} (<= {INTERPOLATION_CONST}); {:.1}s",
            t.as_secs_f64()
        ),
    ))
}

fn oracle_equivalence() -> Check {
    let start = Instant::now();
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, id) in models() {
        let (m, rs) = setup(id)?;
        let ce = ce_at(&rs, ORACLE_EPS, ORACLE_GRID, 0)?;
        let (u, trace) = iterate(&m, &ce, &IterationConfig::default())?;
        let march = march_to_steady_with_phase(&m, &ce.pair, ce.grid(), &ce.ell, &MarchConfig::default())?;
        let d = (&full_profile(&ce, &u).values - &march.profile.values).amax();
        ok &= trace.status.ok() && d <= ORACLE_TOL;
        notes.push(format!("{name} {d:.2e}"));
    }
    let (_, rs) = setup(BuiltinModelId::JinXinBurgers { a: 1.0 })?;
    let ce = ce_at(&rs, ORACLE_EPS, desk(), 0)?;
    let q = quadrature_profile(&rs, &ce.pair, ce.grid())?;
    let dq = (&ce.reduced.u.values - &q.values).amax();
    ok &= dq <= QUADRATURE_TOL;
    notes.push(format!("reduced vs quadrature {dq:.2e} (<= {QUADRATURE_TOL:e})"));
    let t = start.elapsed();
    ok &= within(t, BUDGET_6);
    notes.push(format!("march tol {ORACLE_TOL:e}; {:.1}s", t.as_secs_f64()));
    Ok((ok, notes.join("; ")))
}

fn scheme_behavior() -> Check {
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, id) in models() {
        let (m, rs) = setup(id)?;
        let (mut dmax, mut itmax, mut monotone, mut rejected): (f64, usize, bool, usize) = (0.0, 0, true, 0);
        for &eps in &EPSILONS {
            let ce = ce_at(&rs, eps, desk(), 0)?;
            let (u_nm, t_nm) = iterate(&m, &ce, &IterationConfig::default())?;
            let (u_nt, t_nt) = iterate(&m, &ce, &IterationConfig { mode: Mode::Newton, ..Default::default() })?;
            ok &= t_nm.status.ok() && t_nt.status.ok();
            dmax = dmax.max((&u_nm.values - &u_nt.values).amax());
            itmax = itmax.max(t_nm.iterations);
            let accepted: Vec<f64> = t_nm.records.iter().filter(|r| r.accepted).map(|r| r.new_residual_hs0).collect();
            let mut prev = t_nm.initial_residual;
            for r in accepted {
                monotone &= r < prev;
                prev = r;
            }
            rejected += t_nm.records.iter().filter(|r| !r.accepted).count();
        }
        ok &= dmax <= SCHEME_TOL && itmax <= MAX_ITERS && monotone;
        notes.push(format!("{name} |NM-Newton| {dmax:.1e}, max its {itmax}, monotone {monotone}, undamped fallbacks {rejected}"));
    }
    Ok((ok, notes.join("; ")))
}

fn uniqueness() -> Check {
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, id) in models() {
        let (m, rs) = setup(id)?;
        let ce = ce_at(&rs, UNIQUENESS_EPS, desk(), 0)?;
        let cfg = IterationConfig::default();
        let (u, _) = iterate(&m, &ce, &cfg)?;
        let rep = uniqueness_probe(&m, &ce, &u, RESTART_RADIUS, &RESTART_SEEDS, &cfg)?;
        ok &= rep.pass && rep.restarts.len() == RESTART_SEEDS.len() + 1;
        notes.push(format!("{name} max distance {:.1e}", rep.max_distance));
    }
    Ok((ok, notes.join("; ")))
}

fn orders(errs: &[f64], taus: &[f64]) -> f64 {
    (0..errs.len() - 1).map(|k| (errs[k] / errs[k + 1]).ln() / (taus[k] / taus[k + 1]).ln()).fold(f64::INFINITY, f64::min)
}

fn taylor_checks() -> Check {
    let mut first: f64 = f64::INFINITY;
    let mut second: f64 = f64::INFINITY;
    for (k, (_, id)) in models().into_iter().enumerate() {
        let (m, rs) = setup(id)?;
        let ce = ce_at(&rs, 0.1, GridParams { l_tilde: L_TILDE, h_tilde: 0.05 }, 0)?;
        let d = m.dim();
        let phi = |w: &GridProfile<f64>| -> Result<DVectorProfile> { Ok(state_residual(&m, &ce.f_minus, w)?.stacked().values) };
        for trial in 0..3u64 {
            let seed = 10 * k as u64 + trial;
            let base = ce.state.with_values(&ce.state.values + &bumps(ce.grid(), d, seed, 0.01).values);
            let v = bumps(ce.grid(), d, seed + 100, 0.1);
            let w = bumps(ce.grid(), d, seed + 200, 0.1);
            let ls = assemble_at(&m, &base, &ce.ell, ce.center)?;
            let phi0 = phi(&base)?;
            let lin = ls.apply(&v).values;
            let taus = [1e-2, 1e-3, 1e-4];
            let errs = taus
                .iter()
                .map(|&t| Ok((phi(&base.with_values(&base.values + &v.values * t))? - &phi0 - &lin * t).amax()))
                .collect::<Result<Vec<f64>>>()?;
            first = first.min(orders(&errs, &taus));
            // mixed second difference against Φ''(V, W)
            let q = second_variation(&m, &base, &v, &w, 1e-4)?.values;
            let taus = [4e-2, 2e-2, 1e-2];
            let errs = taus
                .iter()
                .map(|&t| {
                    let at = |a: f64, b: f64| phi(&base.with_values(&base.values + &v.values * a + &w.values * b));
                    Ok((at(t, t)? - at(t, 0.0)? - at(0.0, t)? + &phi0 - &q * (t * t)).amax())
                })
                .collect::<Result<Vec<f64>>>()?;
            second = second.min(orders(&errs, &taus));
        }
    }
    let mut stencil: f64 = f64::INFINITY;
    let eps: f64 = 0.1;
    // asymptotic order from the finest pair; finer grids reach roundoff for k >= 3
    for k in 1..=4usize {
        let errs = [0.05, 0.025]
            .iter()
            .map(|&h| {
                let g = Grid::new(L_TILDE, h, eps)?;
                let p = GridProfile::from_fn(g.clone(), 1, |xt: f64| DVector::from_element(1, xt.sin()));
                let dk = derivative(&p, k)?;
                let exact = |xt: f64| eps.powi(k as i32) * (xt + k as f64 * std::f64::consts::FRAC_PI_2).sin();
                Ok((0..g.len()).map(|i| (dk.values[(i, 0)] - exact(g.x_tilde(i))).abs()).fold(0.0, f64::max))
            })
            .collect::<Result<Vec<f64>>>()?;
        stencil = stencil.min(orders(&errs, &[0.05, 0.025]));
    }
    let ok = first >= FIRST_ORDER_MIN && second >= SECOND_ORDER_MIN && stencil >= STENCIL_ORDER_MIN;
    Ok((
        ok,
        format!(
            "Phi' order {first:.2} (>= {FIRST_ORDER_MIN}), Phi'' remainder order {second:.2} (>= {SECOND_ORDER_MIN}), stencil order {stencil:.2} (>= {STENCIL_ORDER_MIN})"
        ),
    ))
}

type DVectorProfile = nalgebra::DMatrix<f64>;

fn main() {
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let criteria: [(&str, fn() -> Check); 9] = [
        ("structure suite", structure_suite),
        ("CE residual orders", ce_orders),
        ("closeness and decay rates", closeness_rates),
        ("tame linear estimate", tame_estimate),
        ("smoothing axioms", smoothing_axioms),
        ("oracle equivalence", oracle_equivalence),
        ("scheme behavior", scheme_behavior),
        ("uniqueness probe", uniqueness),
        ("Taylor and consistency checks", taylor_checks),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match f() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!("{} {}. {name} [{:.1}s]: {detail}", if pass { "PASS" } else { "FAIL" }, i + 1, start.elapsed().as_secs_f64());
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 && std::env::var_os("RELAXPROF_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
