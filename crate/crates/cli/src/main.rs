//! `relaxprof`: structure checks, Chapman–Enskog profiles, Nash–Moser solves,
//! ε-sweeps and oracle runs driven by a TOML configuration.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure
//! (an `error.json` artifact is written), 3 claim failure under
//! `sweep --strict`.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use commands::{Ctx, Failure};
use config::{Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "relaxprof", version, about = "Shock profiles of hyperbolic relaxation systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML run configuration.
    config: PathBuf,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Chapman–Enskog order.
    #[arg(long)]
    order: Option<usize>,
    /// Output directory.
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Structural assumptions and the Kawashima compensator.
    Check(Common),
    /// Chapman–Enskog approximant and its residual.
    Ce(Common),
    /// Linearized solve about a base profile.
    Linsolve {
        #[command(flatten)]
        common: Common,
        /// Base profile CSV (default: the Chapman–Enskog profile).
        #[arg(long)]
        base: Option<PathBuf>,
        /// Right-hand side CSV (default: minus the residual at the base).
        #[arg(long)]
        rhs: Option<PathBuf>,
    },
    /// Nash–Moser or Newton solve at one amplitude.
    Solve(Common),
    /// Independent solves over the amplitude list and rate fits.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Exit with status 3 when a rate claim fails.
        #[arg(long)]
        strict: bool,
    },
    /// Time-marched and quadrature reference profiles.
    Oracle(Common),
    /// Summary table of every JSON artifact in a directory.
    Report { dir: PathBuf },
}

#[derive(Serialize)]
struct ErrorPayload<'a> {
    subcommand: &'a str,
    message: &'a str,
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("RELAXPROF_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| format!("RELAXPROF_THREADS = {v:?} is not a positive integer"))?;
    if n == 0 {
        return Err("RELAXPROF_THREADS must be positive".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn usage(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(1)
}

fn run(name: &str, common: &Common, f: impl FnOnce(&Ctx) -> commands::Outcome) -> ExitCode {
    let ov = Overrides { epsilon: common.epsilon, order: common.order, output_dir: common.out.clone(), seed: common.seed };
    let cfg = match RunConfig::load(&common.config, &ov) {
        Ok(c) => c,
        Err(e) => return usage(&e),
    };
    let ctx = match Ctx::new(cfg) {
        Ok(c) => c,
        Err(Failure::Usage(e) | Failure::Numerical(e) | Failure::Claim(e)) => return usage(&e),
    };
    if let Err(Failure::Usage(e) | Failure::Numerical(e) | Failure::Claim(e)) = ctx.prepare() {
        return usage(&e);
    }
    match f(&ctx) {
        Ok(line) => {
            println!("{name}: {line}");
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(e)) => usage(&e),
        Err(Failure::Numerical(e)) => {
            eprintln!("{name}: numerical failure: {e}");
            let payload = ErrorPayload { subcommand: name, message: &e };
            if let Err(w) = relaxprof::io::write_artifact(&ctx.path("error.json"), "error", &ctx.hash, &payload) {
                eprintln!("could not write error artifact: {w}");
            }
            ExitCode::from(2)
        }
        Err(Failure::Claim(table)) => {
            print!("{table}");
            eprintln!("{name}: at least one claim failed");
            ExitCode::from(3)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = configure_threads() {
        return usage(&e);
    }
    match &cli.command {
        Command::Check(c) => run("check", c, commands::check),
        Command::Ce(c) => run("ce", c, commands::ce),
        Command::Linsolve { common, base, rhs } => run("linsolve", common, |ctx| commands::linsolve(ctx, base.as_deref(), rhs.as_deref())),
        Command::Solve(c) => run("solve", c, commands::solve),
        Command::Sweep { common, strict } => run("sweep", common, |ctx| commands::run_sweep(ctx, *strict)),
        Command::Oracle(c) => run("oracle", c, commands::oracle),
        Command::Report { dir } => match report::collect(dir) {
            Ok(rows) => {
                let table = report::render(&rows);
                print!("{table}");
                match std::fs::write(dir.join("report.txt"), &table) {
                    Ok(()) => ExitCode::SUCCESS,
                    Err(e) => usage(&format!("report.txt: {e}")),
                }
            }
            Err(e) => usage(&e),
        },
    }
}
