//! Structural checks (symmetric dissipativity, genuine coupling, reduced
//! system, genuine nonlinearity) and the compensating matrix `K`.

pub mod kawashima;
mod reduced;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ModelSpec, NEIGHBORHOOD_RADIUS};
use crate::scalar::{lit, to_f64, Real};
pub use kawashima::{KawashimaOptions, KawashimaResult};
pub use reduced::{check_reduced, reduce, ReducedCheck, ReducedSystem, KERNEL_TOL};
pub(crate) use reduced::{null_basis, spd_sqrt};

/// Sample state with a tag telling whether it lies on `v = 0`.
#[derive(Clone, Debug)]
pub struct Sample<T: Real> {
    pub state: DVector<T>,
    pub equilibrium: bool,
}

/// Deterministic samples in the box `|u - u0| <= radius`; every other one has
/// a small random `v`.
pub fn sample_states<T: Real>(m: &ModelSpec<T>, count: usize, radius: f64, seed: u64) -> Vec<Sample<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radius = radius.min(NEIGHBORHOOD_RADIUS);
    (0..count)
        .map(|k| {
            let mut s = DVector::zeros(m.dim());
            for i in 0..m.n() {
                s[i] = m.base_state()[i] + lit::<T>(rng.gen_range(-radius..radius));
            }
            let equilibrium = k % 2 == 0;
            if !equilibrium {
                for i in m.n()..m.dim() {
                    s[i] = lit(rng.gen_range(-0.1 * radius..0.1 * radius));
                }
            }
            Sample { state: s, equilibrium }
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct SdReport {
    pub ok: bool,
    /// `min eig S` over samples.
    pub min_eig_s: f64,
    /// `max |SA - (SA)^T|`, relative to `max(1, |SA|)`.
    pub max_asymmetry: f64,
    /// Largest eigenvalue of `Re(S dQ)` (should vanish on the kernel).
    pub max_eig_re_sdq: f64,
    /// Largest eigenvalue of `Re(S dQ)` on the kernel complement (negative).
    pub max_eig_re_sdq_complement: f64,
    /// `dim ker Re(S dQ) = dim ker dQ = n` at every equilibrium sample.
    pub rank_ok: bool,
    pub samples: usize,
}

pub fn check_symmetric_dissipative<T: Real>(m: &ModelSpec<T>, samples: &[Sample<T>]) -> SdReport {
    let n = m.n();
    let mut min_eig_s = f64::INFINITY;
    let mut asym = 0.0f64;
    let mut top = f64::NEG_INFINITY;
    let mut comp = f64::NEG_INFINITY;
    let mut rank_ok = true;
    for smp in samples {
        let s = m.symmetrizer(&smp.state);
        let a = m.matrix_a(&smp.state);
        let sym_err = to_f64((&s - s.transpose()).abs().max());
        let se = ((&s + s.transpose()) * lit::<T>(0.5)).symmetric_eigenvalues();
        min_eig_s = min_eig_s.min(to_f64(se.min()));
        let sa = &s * &a;
        let scale = to_f64(sa.abs().max()).max(1.0);
        asym = asym.max(to_f64((&sa - sa.transpose()).abs().max()) / scale).max(sym_err);
        if smp.equilibrium {
            let dq = m.dq_full(&smp.state);
            let sdq = &s * &dq;
            let re = (&sdq + sdq.transpose()) * lit::<T>(0.5);
            let mut ev: Vec<f64> = re.symmetric_eigenvalues().iter().map(|&v| to_f64(v)).collect();
            ev.sort_by(|a, b| b.total_cmp(a));
            let sc = ev.iter().fold(1.0f64, |a, v| a.max(v.abs()));
            top = top.max(ev[0]);
            if ev.len() > n {
                comp = comp.max(ev[n]);
            }
            let ker_re = ev.iter().filter(|v| v.abs() <= 1e-10 * sc).count();
            let ker_dq = null_basis(&dq, 1e-10).ncols();
            if ker_re != n || ker_dq != n {
                rank_ok = false;
            }
        }
    }
    let ok = min_eig_s > 0.0 && asym <= 1e-10 && top <= 1e-10 && comp < 0.0 && rank_ok;
    SdReport { ok, min_eig_s, max_asymmetry: asym, max_eig_re_sdq: top, max_eig_re_sdq_complement: comp, rank_ok, samples: samples.len() }
}

#[derive(Clone, Debug, Serialize)]
pub struct GcReport {
    pub ok: bool,
    /// Smallest norm of the `(ker dQ)^⊥` component over unit eigenvectors of `A`.
    pub margin: f64,
    /// Eigenvalues of `A` that were grouped into multidimensional eigenspaces.
    pub repeated_eigenvalues: usize,
    /// `A` could not be diagonalized through the symmetrizer.
    pub defective: bool,
}

/// Tolerance on the genuine-coupling margin.
pub const GC_TOL: f64 = 1e-8;

/// Genuine coupling at the equilibrium state `(u, 0)`.
pub fn check_genuine_coupling<T: Real>(m: &ModelSpec<T>, u: &DVector<T>) -> GcReport {
    let st = m.equilibrium(u);
    let a = m.matrix_a(&st);
    let s = m.symmetrizer(&st);
    let dq = m.dq_full(&st);
    let d = m.dim();
    let ker = null_basis(&dq, 1e-10);
    let proj_c = DMatrix::<T>::identity(d, d) - &ker * ker.transpose();
    let Ok((sh, sih)) = spd_sqrt(&s) else {
        return GcReport { ok: false, margin: 0.0, repeated_eigenvalues: 0, defective: true };
    };
    let m_sym = &sh * &a * &sih;
    let m_sym = (&m_sym + m_sym.transpose()) * lit::<T>(0.5);
    let eig = m_sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| to_f64(eig.eigenvalues[i]).total_cmp(&to_f64(eig.eigenvalues[j])));
    let scale = to_f64(a.abs().max()).max(1.0);
    let mut margin = f64::INFINITY;
    let mut repeated = 0;
    let mut k = 0;
    while k < d {
        let mut group = vec![order[k]];
        while k + group.len() < d
            && (to_f64(eig.eigenvalues[order[k + group.len()]]) - to_f64(eig.eigenvalues[order[k]])).abs() <= 1e-8 * scale
        {
            group.push(order[k + group.len()]);
        }
        if group.len() > 1 {
            repeated += 1;
        }
        // eigenspace of A in original coordinates, orthonormalized
        let cols: Vec<DVector<T>> = group.iter().map(|&i| &sih * eig.eigenvectors.column(i)).collect();
        let basis = DMatrix::from_columns(&cols).qr().q();
        let comp = &proj_c * &basis;
        let sv = comp.singular_values();
        let smin = sv.iter().fold(f64::INFINITY, |acc, &v| acc.min(to_f64(v)));
        margin = margin.min(smin);
        k += group.len();
    }
    GcReport { ok: margin > GC_TOL, margin, repeated_eigenvalues: repeated, defective: false }
}

/// `K` and `θ_K` at `U`; errors when no positive `θ_K` was found.
pub fn construct_kawashima<T: Real>(m: &ModelSpec<T>, state: &DVector<T>, opts: &KawashimaOptions) -> Result<KawashimaResult> {
    let s = m.symmetrizer(state);
    let sa = &s * m.matrix_a(state);
    let sdq = &s * m.dq_full(state);
    let res = kawashima::maximize(&sa, &sdq, opts);
    if res.theta_k > 0.0 {
        return Ok(res);
    }
    let n = m.n();
    let u = state.rows(0, n).into_owned();
    let gc = check_genuine_coupling(m, &u);
    let why = if gc.ok { "optimizer budget exhausted" } else { "genuine coupling fails" };
    Err(Error::Kawashima(format!("{why}: best theta_K = {:e}, gc margin = {:e}", res.theta_k, gc.margin)))
}

/// Full structural report at the base state.
#[derive(Clone, Debug, Serialize)]
pub struct StructureReport {
    pub model: String,
    pub n: usize,
    pub r: usize,
    pub sd: SdReport,
    pub gc: GcReport,
    pub kawashima: KawashimaResult,
    pub reduced: ReducedCheck,
    pub alpha_u0: f64,
    pub r_vec: Vec<f64>,
    pub l_vec: Vec<f64>,
    pub ok: bool,
}

pub fn check_structure<T: Real>(m: &ModelSpec<T>, samples: usize, seed: u64, kopts: &KawashimaOptions) -> Result<StructureReport> {
    let smp = sample_states(m, samples, 0.3, seed);
    let sd = check_symmetric_dissipative(m, &smp);
    let u0 = m.base_state().clone();
    let gc = check_genuine_coupling(m, &u0);
    let kawashima = match construct_kawashima(m, &m.equilibrium(&u0), kopts) {
        Ok(k) => k,
        Err(Error::Kawashima(_)) => {
            let s = m.symmetrizer(&m.equilibrium(&u0));
            kawashima::maximize(&(&s * m.matrix_a(&m.equilibrium(&u0))), &(&s * m.dq_full(&m.equilibrium(&u0))), kopts)
        }
        Err(e) => return Err(e),
    };
    let rs = reduce(m)?;
    let us: Vec<DVector<T>> = smp.iter().filter(|s| s.equilibrium).map(|s| s.state.rows(0, m.n()).into_owned()).collect();
    let reduced = check_reduced(&rs, &us);
    let ok = sd.ok && gc.ok && kawashima.theta_k > 0.0 && reduced.ok;
    Ok(StructureReport {
        model: m.name().to_string(),
        n: m.n(),
        r: m.r(),
        sd,
        gc,
        kawashima,
        reduced,
        alpha_u0: to_f64(rs.alpha),
        r_vec: rs.r_vec.iter().map(|&v| to_f64(v)).collect(),
        l_vec: rs.l_vec.iter().map(|&v| to_f64(v)).collect(),
        ok,
    })
}

#[cfg(test)]
mod tests;
