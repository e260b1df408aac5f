//! Scalar abstraction shared by all numerics.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating point scalar the library is generic over (`f32` or `f64`).
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + rustfft::FftNum {}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into the working scalar.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}

/// Converts a working scalar back to `f64` (for reporting).
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[inline]
pub fn from_usize<T: Real>(k: usize) -> T {
    T::from_usize(k).expect("index representable in scalar type")
}

/// Eigenvalues `(re, im)` of a general square matrix, computed in `f64`.
///
/// The plain Schur iteration can stall on permutation-like matrices; on
/// stall the matrix is conjugated by a fixed rotation and retried.
pub fn spectrum<T: Real>(m: &nalgebra::DMatrix<T>) -> Vec<(f64, f64)> {
    use nalgebra::{DMatrix, Schur};
    let a: DMatrix<f64> = m.map(to_f64);
    let n = a.nrows();
    if n == 0 {
        return Vec::new();
    }
    let mut work = a.clone();
    for attempt in 0..4 {
        if let Some(s) = Schur::try_new(work.clone(), f64::EPSILON, 2000) {
            return s.complex_eigenvalues().iter().map(|z| (z.re, z.im)).collect();
        }
        let q = rotation(n, 0.37 + 0.11 * attempt as f64);
        work = q.transpose() * &a * &q;
    }
    vec![(f64::NAN, f64::NAN); n]
}

fn rotation(n: usize, angle: f64) -> nalgebra::DMatrix<f64> {
    let mut q = nalgebra::DMatrix::<f64>::identity(n, n);
    for i in 0..n.saturating_sub(1) {
        let (s, c) = (angle * (i + 1) as f64).sin_cos();
        let mut g = nalgebra::DMatrix::<f64>::identity(n, n);
        g[(i, i)] = c;
        g[(i + 1, i + 1)] = c;
        g[(i, i + 1)] = -s;
        g[(i + 1, i)] = s;
        q *= g;
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn spectrum_of_permutation() {
        let m = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0]);
        let mut re: Vec<f64> = spectrum(&m).iter().map(|z| z.0).collect();
        re.sort_by(f64::total_cmp);
        for (a, b) in re.iter().zip([-1.0, 1.0, 1.0]) {
            assert!((a - b).abs() < 1e-12, "{re:?}");
        }
    }
}
