use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::model::{make_builtin, BuiltinModelId, RelaxationModel};

fn builtin(id: BuiltinModelId) -> ModelSpec<f64> {
    make_builtin(id).unwrap()
}

fn all() -> Vec<ModelSpec<f64>> {
    vec![
        builtin(BuiltinModelId::JinXinBurgers { a: 1.0 }),
        builtin(BuiltinModelId::Broadwell),
        builtin(BuiltinModelId::SyntheticQuasilinearDegenerate { mu: 0.1 }),
    ]
}

/// Jin–Xin with `A12` scaled but `S` left alone.
struct Corrupted;

impl RelaxationModel<f64> for Corrupted {
    fn n(&self) -> usize {
        1
    }
    fn r(&self) -> usize {
        1
    }
    fn flux(&self, s: &DVector<f64>) -> DVector<f64> {
        DVector::from_element(1, 1.3 * s[1] + s[0] * s[0] / 2.0)
    }
    fn matrix_a(&self, s: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[s[0], 1.3, 1.0 - s[0] * s[0], -s[0]])
    }
    fn source(&self, s: &DVector<f64>) -> DVector<f64> {
        DVector::from_element(1, -s[1])
    }
    fn symmetrizer(&self, s: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_vec(vec![1.0 - s[0] * s[0], 1.0]))
    }
}

/// Decoupled: `u_t + (u²/2)_x = 0`, `v_t + v_x = -v`.
struct Decoupled;

impl RelaxationModel<f64> for Decoupled {
    fn n(&self) -> usize {
        1
    }
    fn r(&self) -> usize {
        1
    }
    fn flux(&self, s: &DVector<f64>) -> DVector<f64> {
        DVector::from_element(1, s[0] * s[0] / 2.0)
    }
    fn matrix_a(&self, s: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[s[0], 0.0, 0.0, 1.0])
    }
    fn source(&self, s: &DVector<f64>) -> DVector<f64> {
        DVector::from_element(1, -s[1])
    }
    fn symmetrizer(&self, _s: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::identity(2, 2)
    }
}

#[test]
fn builtins_pass_all_checks() {
    for m in all() {
        let rep = check_structure(&m, 40, 1, &KawashimaOptions::default()).unwrap();
        assert!(rep.sd.ok, "{}: {:?}", m.name(), rep.sd);
        assert!(rep.gc.ok, "{}: {:?}", m.name(), rep.gc);
        assert!(rep.kawashima.theta_k > 0.0, "{}", m.name());
        assert!(rep.reduced.ok, "{}: {:?}", m.name(), rep.reduced);
        assert!(rep.ok);
        for i in 0..rep.kawashima.k.len() {
            for j in 0..rep.kawashima.k.len() {
                assert!((rep.kawashima.k[i][j] + rep.kawashima.k[j][i]).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn jin_xin_kawashima_optimum() {
    let m = builtin(BuiltinModelId::JinXinBurgers { a: 1.0 });
    let k = construct_kawashima(&m, &DVector::zeros(2), &KawashimaOptions::default()).unwrap();
    assert!(k.theta_k >= 0.45 && k.theta_k <= 0.5 + 1e-9, "{}", k.theta_k);
}

#[test]
fn corrupted_model_fails_sd() {
    let m = ModelSpec::new("corrupted", Arc::new(Corrupted), DVector::zeros(1)).unwrap();
    let rep = check_symmetric_dissipative(&m, &sample_states(&m, 10, 0.3, 2));
    assert!(!rep.ok);
    assert!(rep.max_asymmetry > 0.1);
}

#[test]
fn decoupled_model_fails_gc() {
    let m = ModelSpec::new("decoupled", Arc::new(Decoupled), DVector::zeros(1)).unwrap();
    let gc = check_genuine_coupling(&m, &DVector::zeros(1));
    assert!(!gc.ok);
    assert!(gc.margin < 1e-12);
    assert!(construct_kawashima(&m, &DVector::zeros(2), &KawashimaOptions::default()).is_err());
    let jx = builtin(BuiltinModelId::JinXinBurgers { a: 1.0 });
    let g = check_genuine_coupling(&jx, &DVector::zeros(1));
    // eigenvectors (1, ±1)/√2
    assert!((g.margin - 0.5f64.sqrt()).abs() < 1e-12);
}

#[test]
fn jin_xin_reduction_closed_form() {
    let a = 1.5;
    let m = builtin(BuiltinModelId::JinXinBurgers { a });
    let rs = reduce(&m).unwrap();
    assert_eq!(rs.r_vec[0], -1.0);
    assert!((rs.gnl + 1.0).abs() < 1e-12);
    assert!(rs.flipped);
    assert_eq!(rs.kernel.ncols(), 0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let u = rng.gen_range(-0.3..0.3);
        let uv = DVector::from_element(1, u);
        assert!((rs.f_star(&uv)[0] - u * u / 2.0).abs() < 1e-10);
        assert!((rs.b_star(&uv)[(0, 0)] - (a * a - u * u)).abs() < 1e-10);
        assert!((rs.c_star(&uv)[(0, 0)] + (a * a - u * u)).abs() < 1e-10);
        assert!((rs.df_star(&uv)[(0, 0)] - u).abs() < 1e-12);
        assert!((rs.db_star(&uv, &DVector::from_element(1, 1.0))[(0, 0)] + 2.0 * u).abs() < 1e-8);
    }
}

#[test]
fn bgk_reduction() {
    let m = builtin(BuiltinModelId::Broadwell);
    let rs = reduce(&m).unwrap();
    for &u in &[-0.2, 0.0, 0.25] {
        let uv = DVector::from_element(1, u);
        let fp = u / 2.0;
        assert!((rs.b_star(&uv)[(0, 0)] - (0.5 - fp * fp)).abs() < 1e-12);
        let c = rs.c_star(&uv);
        assert!((c[(0, 0)] + (0.5 - fp * fp)).abs() < 1e-12);
        assert!((c[(1, 0)] + fp / 2.0).abs() < 1e-12);
    }
    assert!(rs.gnl < 0.0);
}

#[test]
fn synthetic_reduction_and_projector() {
    let m = builtin(BuiltinModelId::SyntheticQuasilinearDegenerate { mu: 0.2 });
    let rs = reduce(&m).unwrap();
    assert_eq!(rs.kernel.ncols(), 1);
    let s2 = 0.5f64.sqrt();
    assert!((rs.r_vec.abs() - DVector::from_vec(vec![s2, s2])).norm() < 1e-12);
    assert!(rs.r_vec[0] * rs.r_vec[1] < 0.0);
    assert!((rs.l_vec.dot(&rs.r_vec) - 1.0).abs() < 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        let u = DVector::from_vec(vec![rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)]);
        let b = rs.b_star(&u);
        assert!((&b - DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 4.0 / 3.0])).norm() < 1e-12);
        assert!((&rs.pi_star * &rs.pi_star - &rs.pi_star).norm() < 1e-12);
        assert!((&rs.pi_star * &b).norm() < 1e-12);
        let astar = rs.a_star(&u).unwrap();
        assert!((astar[(0, 0)] - 1.0).abs() < 1e-12);
    }
}
