//! Restarts from perturbed and translated profiles.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{full_profile, iterate_from, shift_nodes, IterationConfig, Status};
use crate::chapman_enskog::CeApproximation;
use crate::discretization::{weighted_norm, GridProfile, NormSpec};
use crate::error::Result;
use crate::model::ModelSpec;
use crate::scalar::{lit, to_f64, Real};

/// Recovered distance accepted as "same profile".
pub const RECOVERY_TOL: f64 = 1e-6;

#[derive(Clone, Debug, Serialize)]
pub struct Restart {
    /// `"random"` or `"shift"`.
    pub kind: String,
    pub seed: Option<u64>,
    /// `‖U_0 - U*‖_sup`.
    pub initial_distance: f64,
    /// `‖U - U*‖_sup` after convergence.
    pub final_distance: f64,
    pub iterations: usize,
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct UniquenessReport {
    pub radius: f64,
    pub restarts: Vec<Restart>,
    pub max_distance: f64,
    pub pass: bool,
}

/// Smooth random perturbation with `‖·‖_{H^4_{ε,0}} = size`.
fn random_perturbation<T: Real>(grid: &crate::discretization::Grid<T>, d: usize, seed: u64, size: f64) -> Result<GridProfile<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bumps: Vec<(f64, f64, DVector<f64>)> =
        (0..4).map(|_| (rng.gen_range(-3.0..3.0), rng.gen_range(0.7..1.5), DVector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0)))).collect();
    let p = GridProfile::from_fn(grid.clone(), d, |xt| {
        let x = to_f64(xt);
        let v = bumps.iter().fold(DVector::<f64>::zeros(d), |acc, (c, w, a)| acc + a * (-((x - c) / w).powi(2)).exp());
        v.map(lit::<T>)
    });
    let norm = to_f64(weighted_norm(&p, &NormSpec::unweighted(4, to_f64(grid.epsilon))?)?);
    Ok(p.with_values(&p.values * lit::<T>(size / norm)))
}

/// Restarts the iteration from `U* + P` for `seeds` random `P` of size
/// `c ε` and from `U*` translated by one node.
pub fn uniqueness_probe<T: Real>(
    m: &ModelSpec<T>,
    ce: &CeApproximation<T>,
    u_star: &GridProfile<T>,
    c: f64,
    seeds: &[u64],
    cfg: &IterationConfig,
) -> Result<UniquenessReport> {
    let grid = ce.grid();
    let eps = to_f64(grid.epsilon);
    let d = m.dim();
    let mut starts: Vec<(String, Option<u64>, GridProfile<T>)> = Vec::new();
    for &s in seeds {
        let p = if c == 0.0 { GridProfile::zeros(grid.clone(), d) } else { random_perturbation(grid, d, s, c * eps)? };
        starts.push(("random".into(), Some(s), u_star.with_values(&u_star.values + &p.values)));
    }
    let shifted = shift_nodes(&full_profile(ce, u_star), 1);
    starts.push(("shift".into(), None, shifted.with_values(&shifted.values - &ce.state.values)));
    let mut restarts = Vec::new();
    let mut max_distance = 0.0f64;
    for (kind, seed, u0) in starts {
        let initial_distance = to_f64((&u0.values - &u_star.values).amax());
        let r = match iterate_from(m, ce, u0, cfg) {
            Ok((u, trace)) => {
                let dist = to_f64((&u.values - &u_star.values).amax());
                Restart {
                    kind,
                    seed,
                    initial_distance,
                    final_distance: dist,
                    iterations: trace.iterations,
                    converged: trace.status != Status::MaxIterations,
                    error: None,
                }
            }
            Err(e) => Restart {
                kind,
                seed,
                initial_distance,
                final_distance: f64::INFINITY,
                iterations: 0,
                converged: false,
                error: Some(e.to_string()),
            },
        };
        max_distance = max_distance.max(r.final_distance);
        restarts.push(r);
    }
    let pass = restarts.iter().all(|r| r.converged) && max_distance <= RECOVERY_TOL;
    Ok(UniquenessReport { radius: c * eps, restarts, max_distance, pass })
}
