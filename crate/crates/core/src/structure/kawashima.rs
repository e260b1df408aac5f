//! Compensating matrix `K` by maximizing `λ_min(Re(K SA) - S dQ)` over skew `K`.
//!
//! The objective is concave in `K`. Ascent runs on the soft-min
//! `-μ log Σ exp(-λ_i/μ)` with `μ` shrinking across stages; the best true
//! `λ_min` seen is kept, so the reported value never decreases.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::scalar::{lit, to_f64, Real};

/// Optimizer budget.
#[derive(Clone, Copy, Debug)]
pub struct KawashimaOptions {
    pub seeds: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for KawashimaOptions {
    fn default() -> Self {
        Self { seeds: 8, iterations: 500, seed: 0x6b61_7761 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct KawashimaResult {
    /// Row-major skew matrix.
    pub k: Vec<Vec<f64>>,
    pub theta_k: f64,
    pub iterations: usize,
    /// Best-so-far objective after each iteration of the winning start.
    #[serde(skip)]
    pub history: Vec<f64>,
}

fn sym<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    (m + m.transpose()) * lit::<T>(0.5)
}

fn skew_from(params: &[f64], d: usize) -> DMatrix<f64> {
    let mut k = DMatrix::zeros(d, d);
    let mut p = 0;
    for i in 0..d {
        for j in (i + 1)..d {
            k[(i, j)] = params[p];
            k[(j, i)] = -params[p];
            p += 1;
        }
    }
    k
}

struct Objective {
    sa: DMatrix<f64>,
    base: DMatrix<f64>,
    d: usize,
}

impl Objective {
    fn matrix(&self, params: &[f64]) -> DMatrix<f64> {
        sym(&(skew_from(params, self.d) * &self.sa)) + &self.base
    }

    fn lambda_min(&self, params: &[f64]) -> f64 {
        self.matrix(params).symmetric_eigenvalues().min()
    }

    /// Soft-min value and gradient in the skew parameters.
    fn soft(&self, params: &[f64], mu: f64) -> (f64, Vec<f64>) {
        let eig = self.matrix(params).symmetric_eigen();
        let lmin = eig.eigenvalues.min();
        let weights: Vec<f64> = eig.eigenvalues.iter().map(|&l| (-(l - lmin) / mu).exp()).collect();
        let total: f64 = weights.iter().sum();
        let value = lmin - mu * total.ln();
        let mut grad_m = DMatrix::<f64>::zeros(self.d, self.d);
        for (i, w) in weights.iter().enumerate() {
            let v = eig.eigenvectors.column(i);
            let y = &self.sa * v;
            grad_m += (v * y.transpose()) * (w / total);
        }
        let mut g = Vec::with_capacity(self.d * (self.d - 1) / 2);
        for i in 0..self.d {
            for j in (i + 1)..self.d {
                // ∂/∂p of tr(G^T K) with K_ij = p, K_ji = -p
                g.push(grad_m[(i, j)] - grad_m[(j, i)]);
            }
        }
        (value, g)
    }
}

/// Maximizes `λ_min(Re(K·SA) - S·dQ)` over skew-symmetric `K`.
pub fn maximize<T: Real>(sa: &DMatrix<T>, s_dq: &DMatrix<T>, opts: &KawashimaOptions) -> KawashimaResult {
    let d = sa.nrows();
    let sa64 = sa.map(to_f64);
    let base = sym(&s_dq.map(to_f64)) * -1.0;
    let obj = Objective { sa: sa64.clone(), base, d };
    let dim = d * (d - 1) / 2;
    if dim == 0 {
        let theta = obj.lambda_min(&[]);
        return KawashimaResult { k: vec![vec![0.0]], theta_k: theta, iterations: 0, history: vec![theta] };
    }
    let scale = sa64.norm().max(obj.base.norm()).max(1e-300);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<(Vec<f64>, f64, Vec<f64>)> = None;
    let stages = 5usize;
    for start in 0..opts.seeds.max(1) {
        let mut p: Vec<f64> = if start == 0 {
            vec![0.0; dim]
        } else {
            (0..dim).map(|_| rng.gen_range(-1.0..1.0) * obj.base.norm() / sa64.norm().max(1e-300)).collect()
        };
        let mut best_p = p.clone();
        let mut best_val = obj.lambda_min(&p);
        let mut history = Vec::with_capacity(opts.iterations);
        let per_stage = opts.iterations.div_ceil(stages).max(1);
        let mut step = 1.0 / scale;
        for it in 0..opts.iterations {
            let mu = scale * 0.1 * 10f64.powi(-((it / per_stage) as i32));
            let (f0, g) = obj.soft(&p, mu);
            let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            if gn > 0.0 {
                let mut t = step * 2.0;
                let mut moved = false;
                for _ in 0..40 {
                    let trial: Vec<f64> = p.iter().zip(&g).map(|(a, b)| a + t * b).collect();
                    let (f1, _) = obj.soft(&trial, mu);
                    if f1 >= f0 + 1e-4 * t * gn * gn {
                        p = trial;
                        step = t;
                        moved = true;
                        break;
                    }
                    t *= 0.5;
                }
                if !moved {
                    step *= 0.5;
                }
            }
            let val = obj.lambda_min(&p);
            if val > best_val {
                best_val = val;
                best_p.clone_from(&p);
            }
            history.push(best_val);
        }
        if best.as_ref().is_none_or(|b| best_val > b.1) {
            best = Some((best_p, best_val, history));
        }
    }
    let (p, theta, history) = best.expect("at least one start");
    let k = skew_from(&p, d);
    KawashimaResult {
        k: (0..d).map(|i| (0..d).map(|j| k[(i, j)]).collect()).collect(),
        theta_k: theta,
        iterations: opts.iterations,
        history,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jin_xin_closed_form_half() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let sdq = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, -1.0]);
        let res = maximize(&a, &sdq, &KawashimaOptions::default());
        assert!(res.theta_k > 0.49 && res.theta_k <= 0.5 + 1e-12, "{}", res.theta_k);
        assert!((res.k[0][1] + res.k[1][0]).abs() < 1e-15);
        assert!(res.history.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn deterministic() {
        let a = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.5, 0.0, 1.0, 0.0, 0.5, 0.0]);
        let sdq = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.0, -1.0, -1.0]));
        let sa = sym(&a);
        let r1 = maximize(&sa, &sdq, &KawashimaOptions::default());
        let r2 = maximize(&sa, &sdq, &KawashimaOptions::default());
        assert_eq!(r1.theta_k, r2.theta_k);
        assert!(r1.theta_k > 0.0);
    }
}
