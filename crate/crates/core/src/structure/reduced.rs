//! Reduced viscous system `f*(u)' = (b*(u) u')'` obtained by eliminating `v`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{central_difference, ModelSpec};
use crate::scalar::{lit, to_f64, Real};

/// `M^{1/2}` and `M^{-1/2}` of a symmetric positive definite matrix.
pub(crate) fn spd_sqrt<T: Real>(m: &DMatrix<T>) -> Result<(DMatrix<T>, DMatrix<T>)> {
    let sym = (m + m.transpose()) * lit::<T>(0.5);
    let eig = sym.symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| !(l > T::zero())) {
        return Err(Error::ParameterOutOfRange("symmetrizer block not positive definite".into()));
    }
    let q = &eig.eigenvectors;
    let root = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.sqrt()));
    let inv_root = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| T::one() / l.sqrt()));
    Ok((q * root * q.transpose(), q * inv_root * q.transpose()))
}

/// Orthonormal basis of the numerical null space of `m` (columns).
pub(crate) fn null_basis<T: Real>(m: &DMatrix<T>, rel_tol: f64) -> DMatrix<T> {
    let n = m.ncols();
    // pad to square so the SVD reports all right singular vectors
    let mut padded = DMatrix::zeros(m.nrows().max(n), n);
    padded.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let smax = svd.singular_values.iter().fold(T::zero(), |a, &b| a.max(b));
    let tol = lit::<T>(rel_tol) * smax.max(T::one());
    let cols: Vec<DVector<T>> = (0..n).filter(|&i| svd.singular_values[i] <= tol).map(|i| vt.row(i).transpose()).collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Relative tolerance for numerical kernels.
pub const KERNEL_TOL: f64 = 1e-9;

/// Coefficients of the reduced system, bound to its model.
#[derive(Clone, Debug)]
pub struct ReducedSystem<T: Real> {
    pub model: ModelSpec<T>,
    pub u0: DVector<T>,
    /// Near-zero eigenvalue of `df*(u0)`.
    pub alpha: T,
    /// Oriented right eigenvector (unit length).
    pub r_vec: DVector<T>,
    /// Left eigenvector with `l·r = 1`.
    pub l_vec: DVector<T>,
    /// `∇α·r` at `u0` after orientation (negative).
    pub gnl: T,
    /// Orientation of `r` was reversed.
    pub flipped: bool,
    /// Eigenprojector onto `ker b*(u0)` along its range.
    pub pi_star: DMatrix<T>,
    /// Right kernel basis of `b*(u0)`.
    pub kernel: DMatrix<T>,
    /// Left kernel basis of `b*(u0)`.
    pub left_kernel: DMatrix<T>,
    /// Smallest gap between `α` and the other eigenvalues.
    pub gap: T,
}

impl<T: Real> ReducedSystem<T> {
    pub fn n(&self) -> usize {
        self.model.n()
    }

    fn state(&self, u: &DVector<T>) -> DVector<T> {
        self.model.equilibrium(u)
    }

    pub fn f_star(&self, u: &DVector<T>) -> DVector<T> {
        self.model.flux(&self.state(u))
    }

    pub fn df_star(&self, u: &DVector<T>) -> DMatrix<T> {
        let n = self.n();
        self.model.matrix_a(&self.state(u)).view((0, 0), (n, n)).into_owned()
    }

    /// `d(df*)[du]`.
    pub fn d2f_star(&self, u: &DVector<T>, du: &DVector<T>) -> DMatrix<T> {
        let n = self.n();
        let dir = self.model.equilibrium(du);
        self.model.matrix_a_directional(&self.state(u), &dir).view((0, 0), (n, n)).into_owned()
    }

    /// `b* = -A12 dq_v^{-1} A21` at `(u, 0)`.
    pub fn b_star(&self, u: &DVector<T>) -> DMatrix<T> {
        let b = self.model.evaluate_blocks(&self.state(u));
        let inv = b.dq_v.clone().try_inverse().expect("dq_v invertible on the equilibrium manifold");
        -(&b.a12 * inv * &b.a21)
    }

    /// `c* = dq_v^{-1} A21` at `(u, 0)`, so that `v ≈ c* u'`.
    pub fn c_star(&self, u: &DVector<T>) -> DMatrix<T> {
        let b = self.model.evaluate_blocks(&self.state(u));
        let inv = b.dq_v.clone().try_inverse().expect("dq_v invertible on the equilibrium manifold");
        inv * &b.a21
    }

    /// Directional derivative `db*[du]` (fourth-order central difference).
    pub fn db_star(&self, u: &DVector<T>, du: &DVector<T>) -> DMatrix<T> {
        let n = self.n();
        let flat = central_difference(u, du, |x| {
            let b = self.b_star(x);
            DVector::from_iterator(n * n, b.iter().copied())
        });
        DMatrix::from_iterator(n, n, flat.iter().copied())
    }

    /// Directional derivative `dc*[du]`.
    pub fn dc_star(&self, u: &DVector<T>, du: &DVector<T>) -> DMatrix<T> {
        let (n, r) = (self.n(), self.model.r());
        let flat = central_difference(u, du, |x| {
            let c = self.c_star(x);
            DVector::from_iterator(n * r, c.iter().copied())
        });
        DMatrix::from_iterator(r, n, flat.iter().copied())
    }

    /// `a* = (L^T R)^{-1} L^T df* R` on `ker b*`; `None` when the kernel is trivial.
    pub fn a_star(&self, u: &DVector<T>) -> Option<DMatrix<T>> {
        if self.kernel.ncols() == 0 {
            return None;
        }
        let lr = self.left_kernel.transpose() * &self.kernel;
        let inv = lr.try_inverse()?;
        Some(inv * self.left_kernel.transpose() * self.df_star(u) * &self.kernel)
    }

    /// Symmetric reduced symmetrizer `s = S11(u, 0)`.
    pub fn s(&self, u: &DVector<T>) -> DMatrix<T> {
        self.model.evaluate_blocks(&self.state(u)).s11
    }
}

/// Builds the reduced system at the model's base state.
pub fn reduce<T: Real>(m: &ModelSpec<T>) -> Result<ReducedSystem<T>> {
    let n = m.n();
    let u0 = m.base_state().clone();
    let st0 = m.equilibrium(&u0);
    let blocks = m.evaluate_blocks(&st0);
    if blocks.dq_v.clone().try_inverse().is_none() {
        return Err(Error::ParameterOutOfRange("dq_v singular at the base state".into()));
    }
    let df = blocks.a11.clone();
    let (sh, sih) = spd_sqrt(&blocks.s11)?;
    let symm = &sh * &df * &sih;
    let eig = ((&symm + symm.transpose()) * lit::<T>(0.5)).symmetric_eigen();
    let scale = df.norm().max(T::one());
    let (mut idx, mut best) = (0usize, lit::<T>(1e300));
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        if l.abs() < best {
            best = l.abs();
            idx = i;
        }
    }
    let alpha = eig.eigenvalues[idx];
    if to_f64(alpha.abs()) > 1e-8 * to_f64(scale) {
        return Err(Error::ParameterOutOfRange(format!("base state is not sonic: alpha(u0) = {:e}", to_f64(alpha))));
    }
    let mut gap = lit::<T>(1e300);
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        if i != idx {
            gap = gap.min((l - alpha).abs());
        }
    }
    if n > 1 && to_f64(gap) < 1e-6 * to_f64(df.norm()) {
        return Err(Error::NotSimple(format!("eigenvalue gap {:e}", to_f64(gap))));
    }
    let z = eig.eigenvectors.column(idx).into_owned();
    let mut r_vec = &sih * &z;
    let rn = r_vec.norm();
    r_vec /= rn;
    let mut l_vec = &sh * &z * rn;
    // ∇α·r = l^T (d df*[r]) r / (l^T r)
    let dd = m.matrix_a_directional(&st0, &m.equilibrium(&r_vec)).view((0, 0), (n, n)).into_owned();
    let mut gnl = l_vec.dot(&(dd * &r_vec)) / l_vec.dot(&r_vec);
    let tol = lit::<T>(1e-10) * scale;
    if gnl.abs() <= tol {
        return Err(Error::NotSimple("genuine nonlinearity fails: grad(alpha).r = 0".into()));
    }
    let flipped = gnl > T::zero();
    if flipped {
        r_vec = -r_vec;
        l_vec = -l_vec;
        gnl = -gnl;
    }
    let inv = blocks.dq_v.clone().try_inverse().expect("checked");
    let b0 = -(&blocks.a12 * inv * &blocks.a21);
    let kernel = null_basis(&b0, KERNEL_TOL);
    let left_kernel = null_basis(&b0.transpose(), KERNEL_TOL);
    if kernel.ncols() != left_kernel.ncols() {
        return Err(Error::Dimension("left and right kernels of b* differ in dimension".into()));
    }
    let pi_star = if kernel.ncols() == 0 {
        DMatrix::zeros(n, n)
    } else {
        let lr = (left_kernel.transpose() * &kernel)
            .try_inverse()
            .ok_or_else(|| Error::Dimension("zero eigenvalue of b* is not semisimple".into()))?;
        &kernel * lr * left_kernel.transpose()
    };
    Ok(ReducedSystem { model: m.clone(), u0, alpha, r_vec, l_vec, gnl, flipped, pi_star, kernel, left_kernel, gap })
}

/// Verification flags for the reduced system.
#[derive(Clone, Debug, Serialize)]
pub struct ReducedCheck {
    pub ok: bool,
    pub kernel_dim: usize,
    /// Largest principal angle between `ker b*(u)^T` and `ker b*(u0)^T`.
    pub max_kernel_angle: f64,
    pub kernel_constant: bool,
    /// Smallest singular value of `a*` (absent for trivial kernel).
    pub a_star_min_sv: Option<f64>,
    /// Oriented `∇α·r(u0)`.
    pub gnl: f64,
    pub orientation_flipped: bool,
    /// `max |s df* - (s df*)^T|`.
    pub s_df_asymmetry: f64,
    /// Smallest eigenvalue of `Re(s b*)`.
    pub s_b_min_eig: f64,
    /// Absent for `n = 1`.
    pub eigen_gap: Option<f64>,
}

pub fn check_reduced<T: Real>(rs: &ReducedSystem<T>, samples: &[DVector<T>]) -> ReducedCheck {
    let k = rs.kernel.ncols();
    let mut max_angle = 0.0f64;
    let mut kernel_constant = true;
    let mut asym = 0.0f64;
    let mut min_eig = f64::INFINITY;
    let mut a_min: Option<f64> = None;
    let mut all = vec![rs.u0.clone()];
    all.extend(samples.iter().cloned());
    for u in &all {
        let b = rs.b_star(u);
        let lk = null_basis(&b.transpose(), KERNEL_TOL);
        if lk.ncols() != k {
            kernel_constant = false;
        } else if k > 0 {
            // cos of principal angles are singular values of L0^T L
            let sv = (rs.left_kernel.transpose() * &lk).singular_values();
            let cmin = sv.iter().fold(1.0f64, |a, &s| a.min(to_f64(s)));
            max_angle = max_angle.max(cmin.clamp(-1.0, 1.0).acos());
        }
        let s = rs.s(u);
        let sdf = &s * rs.df_star(u);
        asym = asym.max(to_f64((&sdf - sdf.transpose()).abs().max()));
        let sb = &s * &b;
        let re = (&sb + sb.transpose()) * lit::<T>(0.5);
        min_eig = min_eig.min(to_f64(re.symmetric_eigenvalues().min()));
        if let Some(a) = rs.a_star(u) {
            let sv = a.singular_values().iter().fold(f64::INFINITY, |m, &v| m.min(to_f64(v)));
            a_min = Some(a_min.map_or(sv, |m: f64| m.min(sv)));
        }
    }
    if max_angle > 1e-8 {
        kernel_constant = false;
    }
    let a_ok = a_min.is_none_or(|v| v > 1e-8);
    let gnl = to_f64(rs.gnl);
    ReducedCheck {
        ok: kernel_constant && a_ok && gnl < 0.0 && asym <= 1e-10 && min_eig >= -1e-12,
        kernel_dim: k,
        max_kernel_angle: max_angle,
        kernel_constant,
        a_star_min_sv: a_min,
        gnl,
        orientation_flipped: rs.flipped,
        s_df_asymmetry: asym,
        s_b_min_eig: min_eig,
        eigen_gap: (rs.n() > 1).then(|| to_f64(rs.gap)),
    }
}
