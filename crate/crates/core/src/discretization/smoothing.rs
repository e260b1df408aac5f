//! Fourier cutoff `S_θ` in the `x̃` frequency.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use nalgebra::{DMatrix, DVector};

use super::{derivative, GridProfile};
use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, to_f64, Real};

/// Boundary/interior magnitude ratio above which input counts as
/// non-decaying.
pub const DECAY_RATIO: f64 = 1e-6;
/// Fraction of each side tapered when windowing is allowed.
pub const TAPER_FRACTION: f64 = 0.05;

/// What to do with input that does not decay at the ends.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Window {
    Reject,
    Allow,
}

#[derive(Clone, Debug)]
pub struct SmoothOutput<T: Real> {
    pub profile: GridProfile<T>,
    /// A cosine taper was applied before filtering.
    pub windowed: bool,
}

/// `χ(t)`: 1 on `[0,1]`, 0 on `[2,∞)`, septic blend with three vanishing
/// derivatives at both ends.
pub fn smoothstep<T: Real>(t: T) -> T {
    if t <= T::one() {
        return T::one();
    }
    if t >= lit(2.0) {
        return T::zero();
    }
    let s = t - T::one();
    let s4 = s * s * s * s;
    let poly = s4 * (lit::<T>(35.0) - s * (lit::<T>(84.0) - s * (lit::<T>(70.0) - s * lit::<T>(20.0))));
    T::one() - poly
}

fn boundary_ratio<T: Real>(p: &GridProfile<T>) -> f64 {
    let m = p.grid.len();
    let interior = to_f64(p.max_abs());
    if interior == 0.0 {
        return 0.0;
    }
    let mut edge = 0.0f64;
    for c in 0..p.dim() {
        edge = edge.max(to_f64(p.values[(0, c)].abs())).max(to_f64(p.values[(m - 1, c)].abs()));
    }
    edge / interior
}

fn taper<T: Real>(p: &mut GridProfile<T>) {
    let m = p.grid.len();
    let w = ((m as f64) * TAPER_FRACTION).ceil().max(1.0) as usize;
    for j in 0..w {
        // 0 at the outermost node, 1 at the inner end of the band
        let t = (j as f64) / (w as f64);
        let f = lit::<T>(0.5 - 0.5 * (PI * t).cos());
        for c in 0..p.dim() {
            p.values[(j, c)] *= f;
            p.values[(m - 1 - j, c)] *= f;
        }
    }
}

/// `S_θ p`: zero-pad to twice the length, multiply the transform by
/// `χ(|ξ̃|/θ)` and transform back. Identity once `θ` reaches the grid
/// Nyquist frequency `π/h̃`.
pub fn smooth<T: Real>(p: &GridProfile<T>, theta: T, window: Window) -> Result<SmoothOutput<T>> {
    if !(theta > T::zero()) {
        return Err(Error::ParameterOutOfRange(format!("smoothing cutoff {}", to_f64(theta))));
    }
    let mut input = p.clone();
    let mut windowed = false;
    let ratio = boundary_ratio(p);
    if ratio > DECAY_RATIO {
        match window {
            Window::Reject => return Err(Error::NonDecaying { ratio }),
            Window::Allow => {
                taper(&mut input);
                windowed = true;
            }
        }
    }
    let nyquist = lit::<T>(PI) / p.grid.h_tilde;
    if theta >= nyquist {
        return Ok(SmoothOutput { profile: input, windowed });
    }
    let m = p.grid.len();
    let n = 2 * m;
    let mut planner = FftPlanner::<T>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let dxi = lit::<T>(2.0 * PI) / (from_usize::<T>(n) * p.grid.h_tilde);
    let mask: Vec<T> = (0..n)
        .map(|k| {
            let kk = if k <= n / 2 { k } else { n - k };
            smoothstep(from_usize::<T>(kk) * dxi / theta)
        })
        .collect();
    let norm = T::one() / from_usize::<T>(n);
    let mut out = input.values.clone();
    let mut buf = vec![Complex::new(T::zero(), T::zero()); n];
    for c in 0..p.dim() {
        for (k, b) in buf.iter_mut().enumerate() {
            let re = if k < m { input.values[(k, c)] } else { T::zero() };
            *b = Complex::new(re, T::zero());
        }
        fwd.process(&mut buf);
        for (b, &w) in buf.iter_mut().zip(&mask) {
            *b *= w * norm;
        }
        inv.process(&mut buf);
        for i in 0..m {
            out[(i, c)] = buf[i].re;
        }
    }
    Ok(SmoothOutput { profile: input.with_values(out), windowed })
}

/// Quintic in `t = (x - x_0)/(x_end - x_0)` with prescribed value, second
/// and fourth `t`-derivatives at `t = 0` and `t = 1`.
fn end_quintic<T: Real>(ends: [[T; 3]; 2]) -> Result<DVector<T>> {
    // rows: value, 2nd, 4th derivative of t^i at t = 0 and t = 1
    let mut a = DMatrix::<T>::zeros(6, 6);
    let mut rhs = DVector::<T>::zeros(6);
    for (e, t) in [T::zero(), T::one()].into_iter().enumerate() {
        for (q, k) in [0usize, 2, 4].into_iter().enumerate() {
            let row = 3 * e + q;
            rhs[row] = ends[e][q];
            for i in k..6 {
                let fall = ((i - k + 1)..=i).fold(T::one(), |acc, f| acc * from_usize::<T>(f));
                a[(row, i)] = fall * t.powi((i - k) as i32);
            }
        }
    }
    a.lu().solve(&rhs).ok_or_else(|| Error::Dimension("singular end-matching system".into()))
}

/// `S_θ` on the odd periodic extension of `p` (period `4L̃`) after removing a
/// quintic that carries the end values and the second and fourth end
/// derivatives, so the extension is `C^5`. For input that does not decay
/// towards the ends. Identity once `θ` reaches `π/h̃`.
pub fn smooth_odd<T: Real>(p: &GridProfile<T>, theta: T) -> Result<GridProfile<T>> {
    if !(theta > T::zero()) {
        return Err(Error::ParameterOutOfRange(format!("smoothing cutoff {}", to_f64(theta))));
    }
    let m = p.grid.len();
    if theta >= lit::<T>(PI) / p.grid.h_tilde || m < 8 {
        return Ok(p.clone());
    }
    let span = p.grid.x(m - 1) - p.grid.x(0);
    let d2 = derivative(p, 2)?;
    let d4 = derivative(p, 4)?;
    let (s2, s4) = (span * span, span * span * span * span);
    let n = 2 * (m - 1);
    let mut planner = FftPlanner::<T>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let dxi = lit::<T>(2.0 * PI) / (from_usize::<T>(n) * p.grid.h_tilde);
    let norm = T::one() / from_usize::<T>(n);
    let tm = from_usize::<T>(m - 1);
    let mut out = p.values.clone();
    let mut buf = vec![Complex::new(T::zero(), T::zero()); n];
    for c in 0..p.dim() {
        let end = |i: usize| [p.values[(i, c)], d2.values[(i, c)] * s2, d4.values[(i, c)] * s4];
        let coef = end_quintic([end(0), end(m - 1)])?;
        let poly = |i: usize| {
            let t = from_usize::<T>(i) / tm;
            coef.iter().rev().fold(T::zero(), |acc, &k| acc * t + k)
        };
        let g: Vec<T> = (0..m).map(|i| p.values[(i, c)] - poly(i)).collect();
        for (k, x) in buf.iter_mut().enumerate() {
            let re = if k < m { g[k] } else { -g[n - k] };
            *x = Complex::new(re, T::zero());
        }
        fwd.process(&mut buf);
        for (k, x) in buf.iter_mut().enumerate() {
            let kk = if k <= n / 2 { k } else { n - k };
            *x *= smoothstep(from_usize::<T>(kk) * dxi / theta) * norm;
        }
        inv.process(&mut buf);
        for i in 0..m {
            out[(i, c)] = buf[i].re + poly(i);
        }
    }
    Ok(p.with_values(out))
}
