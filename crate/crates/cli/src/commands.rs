//! One function per subcommand. Each writes its artifacts into the output
//! directory and returns a one-line summary.

use std::fs;
use std::path::{Path, PathBuf};

use relaxprof::chapman_enskog::{build_ce, hugoniot_pair, state_residual, CeApproximation, PairSummary, ProfileOptions};
use relaxprof::discretization::{weighted_norm, Grid, GridProfile, NormSpec};
use relaxprof::io::{gnuplot, profile_csv, read_profile_csv, write_artifact};
use relaxprof::linear::{assemble, assemble_at, EnergyReport, TameRatio, S0};
use relaxprof::model::make_builtin;
use relaxprof::oracle::{march_to_steady_with_phase, quadrature_profile};
use relaxprof::solver::{closeness, decay_rate, full_profile, iterate, sweep, uniqueness_probe, Closeness, DecayCheck, SweepOptions};
use relaxprof::structure::{check_structure, reduce, KawashimaOptions, ReducedSystem, StructureReport};
use relaxprof::{Error, ModelSpec64};
use serde::Serialize;

use crate::config::RunConfig;

/// Failure classes, mapped to exit codes 1, 2 and 3.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Numerical(String),
    Claim(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Format(_) => Failure::Usage(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

pub type Outcome = Result<String, Failure>;

/// Shared state of a configured run.
pub struct Ctx {
    pub cfg: RunConfig,
    pub hash: String,
    pub model: ModelSpec64,
}

impl Ctx {
    pub fn new(cfg: RunConfig) -> Result<Self, Failure> {
        let model = make_builtin::<f64>(cfg.model).map_err(|e| Failure::Usage(e.to_string()))?;
        let hash = cfg.hash();
        Ok(Self { cfg, hash, model })
    }

    pub fn out(&self) -> &Path {
        &self.cfg.output_dir
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.cfg.output_dir.join(name)
    }

    pub fn prepare(&self) -> Result<(), Failure> {
        fs::create_dir_all(self.out()).map_err(|e| Failure::Usage(format!("{}: {e}", self.out().display())))
    }

    fn artifact<P: Serialize>(&self, name: &str, kind: &str, payload: &P) -> Result<(), Failure> {
        write_artifact(&self.path(name), kind, &self.hash, payload).map_err(|e| Failure::Usage(e.to_string()))
    }

    fn text(&self, name: &str, body: &str) -> Result<(), Failure> {
        fs::write(self.path(name), body).map_err(|e| Failure::Usage(format!("{name}: {e}")))
    }

    fn reduced(&self) -> Result<ReducedSystem<f64>, Failure> {
        Ok(reduce(&self.model)?)
    }

    fn ce(&self, rs: &ReducedSystem<f64>) -> Result<CeApproximation<f64>, Failure> {
        let eps = self.cfg.epsilon;
        let pair = hugoniot_pair(rs, eps)?;
        let grid = Grid::from_params(&self.cfg.grid, eps)?;
        Ok(build_ce(rs, &pair, &grid, self.cfg.order, &ProfileOptions::default())?)
    }

    fn norm(&self, p: &GridProfile<f64>, weighted: bool) -> Result<f64, Failure> {
        let eps = self.cfg.epsilon;
        let spec = if weighted { NormSpec::new(self.cfg.norm.s, eps, self.cfg.norm.delta)? } else { NormSpec::unweighted(S0, eps)? };
        Ok(weighted_norm(p, &spec)?)
    }
}

#[derive(Serialize)]
struct CheckPayload<'a> {
    sd_ok: bool,
    gc_ok: bool,
    theta_k: f64,
    ok: bool,
    report: &'a StructureReport,
}

pub fn check(ctx: &Ctx) -> Outcome {
    let s = &ctx.cfg.structure;
    let kopts = KawashimaOptions {
        seeds: s.kawashima_seeds,
        iterations: s.kawashima_iterations,
        seed: KawashimaOptions::default().seed.wrapping_add(ctx.cfg.seed),
    };
    let rep = check_structure(&ctx.model, s.samples, ctx.cfg.seed, &kopts)?;
    let payload = CheckPayload { sd_ok: rep.sd.ok, gc_ok: rep.gc.ok, theta_k: rep.kawashima.theta_k, ok: rep.ok, report: &rep };
    ctx.artifact("structure.json", "structure", &payload)?;
    let line = format!("{}: sd_ok={} gc_ok={} theta_K={:.4e}", rep.model, rep.sd.ok, rep.gc.ok, rep.kawashima.theta_k);
    if rep.ok {
        Ok(line)
    } else {
        Err(Failure::Numerical(format!("structural assumptions fail: {line}")))
    }
}

#[derive(Serialize)]
struct CePayload {
    model: String,
    pair: PairSummary,
    order: usize,
    grid_nodes: usize,
    /// `‖Φ(0)‖` in `H^s_{ε,δ}` of the configured norm.
    residual_weighted: f64,
    /// `‖Φ(0)‖` in `H^3_{ε,0}`.
    residual_hs0: f64,
    residual_sup: [f64; 2],
    ell: Vec<f64>,
    center: usize,
}

pub fn ce(ctx: &Ctx) -> Outcome {
    let rs = ctx.reduced()?;
    let ce = ctx.ce(&rs)?;
    let res = ce.residual_profile();
    let names = ctx.model.component_names();
    ctx.text("ce_profile.csv", &profile_csv(&ce.state, &names, Some((&ce.residual.r_u, &ce.residual.r_v)))?)?;
    let payload = CePayload {
        model: ctx.model.name().to_string(),
        pair: ce.pair.summary(),
        order: ce.order,
        grid_nodes: ce.grid().len(),
        residual_weighted: ctx.norm(&res, true)?,
        residual_hs0: ctx.norm(&res, false)?,
        residual_sup: [ce.residual.r_u.max_abs(), ce.residual.r_v.max_abs()],
        ell: ce.ell.iter().copied().collect(),
        center: ce.center,
    };
    ctx.artifact("ce.json", "chapman_enskog", &payload)?;
    Ok(format!("eps={} N={} ||Phi(0)||_H3={:.4e}", ctx.cfg.epsilon, ce.order, payload.residual_hs0))
}

#[derive(Serialize)]
struct LinsolvePayload {
    base: String,
    rhs: String,
    lsq_residual: f64,
    rhs_norm: f64,
    phase_value: f64,
    solution_sup: f64,
    tame: TameRatio,
    energy: EnergyReport,
}

/// Solves `Φ'(W) V = F`. `W` defaults to the Chapman–Enskog profile and
/// `F` to `-Φ(W)`; either can be read from a profile CSV.
pub fn linsolve(ctx: &Ctx, base: Option<&Path>, rhs: Option<&Path>) -> Outcome {
    let rs = ctx.reduced()?;
    let ce = ctx.ce(&rs)?;
    let names = ctx.model.component_names();
    let read = |p: &Path| -> Result<GridProfile<f64>, Failure> {
        let text = fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
        read_profile_csv(&text, ce.grid(), &names).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))
    };
    let (w, ls) = match base {
        Some(p) => {
            let w = read(p)?;
            let ls = assemble_at(&ctx.model, &w, &ce.ell, ce.center)?;
            (w, ls)
        }
        None => {
            let zero = GridProfile::zeros(ce.grid().clone(), ctx.model.dim());
            (ce.state.clone(), assemble(&ctx.model, &ce, &zero)?)
        }
    };
    let f = match rhs {
        Some(p) => read(p)?,
        None => {
            let phi = state_residual(&ctx.model, &ce.f_minus, &w)?.stacked();
            phi.with_values(-&phi.values)
        }
    };
    let rep = ls.solve(&f, 0.0)?;
    let u_tilde = w.with_values(&w.values - &ce.state.values);
    let payload = LinsolvePayload {
        base: base.map_or("chapman_enskog".into(), |p| p.display().to_string()),
        rhs: rhs.map_or("negative_residual".into(), |p| p.display().to_string()),
        lsq_residual: rep.lsq_residual,
        rhs_norm: rep.rhs_norm,
        phase_value: rep.phase_value,
        solution_sup: rep.solution.max_abs(),
        tame: ls.tame_ratio(&u_tilde, &rep.solution, &f, ctx.cfg.norm.s + 1)?,
        energy: ls.energy_diagnostics(&rep.solution, &f, ctx.cfg.norm.delta)?,
    };
    ctx.text("linsolve_solution.csv", &profile_csv(&rep.solution, &names, None)?)?;
    ctx.artifact("linsolve.json", "linear_solve", &payload)?;
    Ok(format!("lsq residual {:.4e}, rho {:.4e}", payload.lsq_residual, payload.tame.rho))
}

#[derive(Serialize)]
struct SolvePayload<'a> {
    model: String,
    pair: PairSummary,
    order: usize,
    trace: &'a relaxprof::solver::IterationTrace,
    closeness: Option<Closeness>,
    decay: Option<DecayCheck>,
    final_residual_sup: [f64; 2],
}

pub fn solve(ctx: &Ctx) -> Outcome {
    let rs = ctx.reduced()?;
    let ce = ctx.ce(&rs)?;
    let (u, trace) = iterate(&ctx.model, &ce, &ctx.cfg.iteration)?;
    let full = full_profile(&ce, &u);
    let res = state_residual(&ctx.model, &ce.f_minus, &full)?;
    let names = ctx.model.component_names();
    ctx.text("profile.csv", &profile_csv(&full, &names, Some((&res.r_u, &res.r_v)))?)?;
    let ok = trace.status.ok();
    let (cl, decay) = if ok {
        let rates = decay_rate(&ce, &u, ctx.cfg.sweep.decay_range)?;
        let threshold = ctx.cfg.sweep.decay_delta * ctx.cfg.epsilon;
        (
            Some(closeness(&ce, &u, ctx.cfg.sweep.window)?),
            Some(DecayCheck { rates, threshold, pass: rates.iter().all(|&r| r >= threshold) }),
        )
    } else {
        (None, None)
    };
    let payload = SolvePayload {
        model: ctx.model.name().to_string(),
        pair: ce.pair.summary(),
        order: ce.order,
        trace: &trace,
        closeness: cl,
        decay,
        final_residual_sup: [res.r_u.max_abs(), res.r_v.max_abs()],
    };
    ctx.artifact("trace.json", "iteration_trace", &payload)?;
    if !ok {
        return Err(Failure::Numerical(format!("iteration ended with status {:?} at residual {:e}", trace.status, trace.final_residual)));
    }
    let mut line = format!("{:?} in {} iterations, ||Phi||_H3 {:.3e}", trace.status, trace.iterations, trace.final_residual);
    if ctx.cfg.uniqueness.enabled {
        let seeds: Vec<u64> = (0..ctx.cfg.uniqueness.restarts as u64).map(|k| ctx.cfg.seed.wrapping_add(k)).collect();
        let rep = uniqueness_probe(&ctx.model, &ce, &u, ctx.cfg.uniqueness.radius, &seeds, &ctx.cfg.iteration)?;
        ctx.artifact("uniqueness.json", "uniqueness", &rep)?;
        line.push_str(&format!("; restarts max distance {:.3e}", rep.max_distance));
        if !rep.pass {
            return Err(Failure::Numerical(format!("uniqueness probe failed: max distance {:e}", rep.max_distance)));
        }
    }
    Ok(line)
}

fn slug(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect()
}

pub fn run_sweep(ctx: &Ctx, strict: bool) -> Outcome {
    let rs = ctx.reduced()?;
    let sc = &ctx.cfg.sweep;
    let opts = SweepOptions {
        order: ctx.cfg.order,
        grid: ctx.cfg.grid,
        iteration: ctx.cfg.iteration.clone(),
        window: sc.window,
        decay_range: sc.decay_range,
        decay_delta: sc.decay_delta,
    };
    let rep = sweep(&rs, &opts, &ctx.cfg.epsilons)?;
    ctx.artifact("sweep.json", "sweep", &rep)?;
    ctx.artifact("rates.json", "rate_fits", &rep.fits)?;
    for fit in &rep.fits {
        let header = vec![
            format!("{} vs epsilon, log-log", fit.name),
            format!("claim {} band {} fitted {}", fit.claim, fit.band, fit.fitted.map_or("none".into(), |v| v.to_string())),
            "epsilon value".to_string(),
        ];
        ctx.text(&format!("fit_{}.dat", slug(&fit.name)), &gnuplot(&header, &fit.epsilons, &fit.values)?)?;
    }
    let mut table = format!("{:<28} {:>8} {:>10} {:>8} {:>6}\n", "claim", "expected", "fitted", "R2", "pass");
    for f in &rep.fits {
        table.push_str(&format!(
            "{:<28} {:>8.2} {:>10} {:>8} {:>6}\n",
            f.name,
            f.claim,
            f.fitted.map_or("-".into(), |v| format!("{v:.3}")),
            f.r2.map_or("-".into(), |v| format!("{v:.4}")),
            f.pass
        ));
    }
    table.push_str(&format!("{:<28} {:>8} {:>10} {:>8} {:>6}\n", "decay_rate", "", "", "", rep.decay_pass));
    if let Some(p) = rep.points.iter().find(|p| p.error.is_some()) {
        table.push_str(&format!("point eps={} failed: {}\n", p.epsilon, p.error.as_deref().unwrap_or("")));
    }
    if strict && !rep.all_pass {
        return Err(Failure::Claim(table));
    }
    Ok(table)
}

#[derive(Serialize)]
struct OraclePayload {
    model: String,
    pair: PairSummary,
    scheme: relaxprof::oracle::SchemeId,
    steps: usize,
    rejected: usize,
    pseudo_time: f64,
    residual: f64,
    speed: f64,
    drift_cells: f64,
    /// Sup distance to the Chapman–Enskog profile.
    ce_distance: f64,
    /// Sup distance of the `u` block to the quadrature profile (`n = 1`).
    quadrature_distance: Option<f64>,
}

pub fn oracle(ctx: &Ctx) -> Outcome {
    let rs = ctx.reduced()?;
    let ce = ctx.ce(&rs)?;
    let res = march_to_steady_with_phase(&ctx.model, &ce.pair, ce.grid(), &ce.ell, &ctx.cfg.oracle)?;
    let names = ctx.model.component_names();
    ctx.text("oracle_march.csv", &profile_csv(&res.profile, &names, None)?)?;
    let n = ctx.model.n();
    let quadrature_distance = if n == 1 {
        let q = quadrature_profile(&rs, &ce.pair, ce.grid())?;
        let qn = vec![names[0].clone()];
        ctx.text("oracle_quadrature.csv", &profile_csv(&q, &qn, None)?)?;
        Some((res.profile.values.column(0) - q.values.column(0)).amax())
    } else {
        None
    };
    let payload = OraclePayload {
        model: ctx.model.name().to_string(),
        pair: ce.pair.summary(),
        scheme: ctx.cfg.oracle.scheme,
        steps: res.steps,
        rejected: res.rejected,
        pseudo_time: res.time,
        residual: res.residual,
        speed: res.speed,
        drift_cells: res.drift_cells,
        ce_distance: (&res.profile.values - &ce.state.values).amax(),
        quadrature_distance,
    };
    ctx.artifact("oracle.json", "oracle", &payload)?;
    Ok(format!(
        "steady after {} steps, speed {:.3e}, distance to CE {:.3e}{}",
        res.steps,
        res.speed,
        payload.ce_distance,
        quadrature_distance.map_or(String::new(), |d| format!(", to quadrature {d:.3e}"))
    ))
}
