use super::*;
use crate::chapman_enskog::{build_ce, hugoniot_pair, state_residual, ProfileOptions};
use crate::discretization::Grid;
use crate::model::{make_builtin, BuiltinModelId};
use crate::structure::reduce;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn setup(id: BuiltinModelId, eps: f64, h: f64) -> (ModelSpec<f64>, CeApproximation<f64>) {
    let m = make_builtin(id).unwrap();
    let rs = reduce(&m).unwrap();
    let pair = hugoniot_pair(&rs, eps).unwrap();
    let grid = Grid::new(12.0, h, eps).unwrap();
    let ce = build_ce(&rs, &pair, &grid, 0, &ProfileOptions::default()).unwrap();
    (m, ce)
}

/// Sum of Gaussian bumps in `x̃` with random vector amplitudes.
fn bumps(grid: &Grid<f64>, d: usize, seed: u64, amp: f64) -> GridProfile<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<(f64, DVector<f64>)> =
        (0..3).map(|_| (rng.gen_range(-2.0..2.0), DVector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0)))).collect();
    GridProfile::from_fn(grid.clone(), d, |xt| {
        centers.iter().fold(DVector::zeros(d), |acc, (c, a)| acc + a * (amp * (-(xt - c).powi(2)).exp()))
    })
}

#[test]
fn homogeneous_system_has_zero_solution() {
    let m: ModelSpec<f64> = make_builtin(BuiltinModelId::JinXinBurgers { a: 1.0 }).unwrap();
    let rs = reduce(&m).unwrap();
    let pair = hugoniot_pair(&rs, 0.0).unwrap();
    let grid = Grid::new(4.0, 0.05, 0.1).unwrap();
    let ce = build_ce(&rs, &pair, &grid, 0, &ProfileOptions::default()).unwrap();
    let zero = GridProfile::zeros(grid.clone(), 2);
    let ls = assemble(&m, &ce, &zero).unwrap();
    let rep = ls.solve(&zero, 0.0).unwrap();
    assert_eq!(rep.solution.max_abs(), 0.0);
    assert_eq!(rep.lsq_residual, 0.0);
    let e = ls.energy_diagnostics(&rep.solution, &zero, 0.05).unwrap();
    assert_eq!((e.lhs, e.rhs_data, e.rhs_fluid, e.constant), (0.0, 0.0, 0.0, 0.0));
}

#[test]
fn algebraic_rows_touch_one_node() {
    let (m, ce) = setup(BuiltinModelId::Broadwell, 0.1, 0.05);
    let zero = GridProfile::zeros(ce.grid().clone(), 3);
    let ls = assemble(&m, &ce, &zero).unwrap();
    let d = ls.dim();
    for (k, row) in ls.rows.iter().enumerate() {
        if k % d < ls.n {
            assert!(row.iter().all(|&(j, _)| j / d == k / d));
        }
    }
    assert_eq!(ls.row_count(), ls.base.grid.len() * d + 2 * d + 1);
}

/// Pointwise `Φ'(W)U` with the exact derivative of a manufactured `U`.
fn pointwise(m: &ModelSpec<f64>, ls: &LinearizedSystem<f64>, u: &dyn Fn(f64) -> (DVector<f64>, DVector<f64>)) -> GridProfile<f64> {
    let g = &ls.base.grid;
    let (n, r) = (m.n(), m.r());
    let dw = derivative(&ls.base, 1).unwrap();
    let mut out = DMatrix::zeros(g.len(), n + r);
    for i in 0..g.len() {
        let (val, dval) = u(g.x(i));
        let w = ls.base.node(i);
        let a = m.matrix_a(&w);
        let first = a.rows(0, n) * &val;
        let second = a.rows(n, r) * &dval + m.matrix_a_directional(&w, &val).rows(n, r) * dw.node(i) - m.source_jacobian(&w) * &val;
        for c in 0..n {
            out[(i, c)] = first[c];
        }
        for c in 0..r {
            out[(i, n + c)] = second[c];
        }
    }
    ls.base.with_values(out)
}

#[test]
fn assembled_operator_matches_pointwise_linearization() {
    let mut errs = Vec::new();
    for h in [0.08, 0.04] {
        let (m, ce) = setup(BuiltinModelId::SyntheticQuasilinearDegenerate { mu: 0.1 }, 0.1, h);
        let zero = GridProfile::zeros(ce.grid().clone(), 4);
        let ls = assemble(&m, &ce, &zero).unwrap();
        let eps = 0.1;
        let dir = DVector::from_vec(vec![0.3, -0.7, 0.2, 0.5]);
        let f = |x: f64| {
            let xt = eps * x;
            let g = (-xt * xt).exp() * (2.0 * xt).sin();
            let dg = eps * (-xt * xt).exp() * (2.0 * (2.0 * xt).cos() - 2.0 * xt * (2.0 * xt).sin());
            (&dir * g, &dir * dg)
        };
        let u = GridProfile::from_fn(ce.grid().clone(), 4, |xt| &dir * ((-xt * xt).exp() * (2.0 * xt).sin()));
        let diff = &ls.apply(&u).values - &pointwise(&m, &ls, &f).values;
        errs.push(diff.amax());
    }
    assert!(errs[1] < 1e-5, "{errs:?}");
    assert!((errs[0] / errs[1]).log2() >= 2.0, "{errs:?}");
}

fn residual(m: &ModelSpec<f64>, ce: &CeApproximation<f64>, w: &GridProfile<f64>) -> GridProfile<f64> {
    state_residual(m, &ce.f_minus, w).unwrap().stacked()
}

#[test]
fn directional_derivative_is_second_order() {
    for id in [BuiltinModelId::JinXinBurgers { a: 1.0 }, BuiltinModelId::Broadwell] {
        let (m, ce) = setup(id, 0.1, 0.05);
        let d = m.dim();
        let zero = GridProfile::zeros(ce.grid().clone(), d);
        let ls = assemble(&m, &ce, &zero).unwrap();
        let v = bumps(ce.grid(), d, 11, 0.1);
        let phi0 = residual(&m, &ce, &ce.state);
        let lin = ls.apply(&v);
        let taus = [1e-2, 1e-3, 1e-4];
        let errs: Vec<f64> = taus
            .iter()
            .map(|&t| {
                let w = ce.state.with_values(&ce.state.values + &v.values * t);
                (&residual(&m, &ce, &w).values - &phi0.values - &lin.values * t).amax()
            })
            .collect();
        for k in 0..2 {
            let order = (errs[k] / errs[k + 1]).log10() / (taus[k] / taus[k + 1]).log10();
            assert!(order >= 1.9, "{errs:?}");
        }
    }
}

#[test]
fn second_variation_remainder_is_third_order() {
    for id in [BuiltinModelId::JinXinBurgers { a: 1.0 }, BuiltinModelId::Broadwell] {
        let (m, ce) = setup(id, 0.1, 0.05);
        let d = m.dim();
        let zero = GridProfile::zeros(ce.grid().clone(), d);
        let ls = assemble(&m, &ce, &zero).unwrap();
        let v = bumps(ce.grid(), d, 12, 0.1);
        let phi0 = residual(&m, &ce, &ce.state);
        let lin = ls.apply(&v);
        let quad = second_variation(&m, &ce.state, &v, &v, 1e-4).unwrap();
        let taus = [4e-2, 2e-2, 1e-2];
        let errs: Vec<f64> = taus
            .iter()
            .map(|&t| {
                let w = ce.state.with_values(&ce.state.values + &v.values * t);
                (&residual(&m, &ce, &w).values - &phi0.values - &lin.values * t - &quad.values * (0.5 * t * t)).amax()
            })
            .collect();
        for k in 0..2 {
            let order = (errs[k] / errs[k + 1]).log2();
            assert!(order >= 2.9, "{errs:?}");
        }
    }
}

#[test]
fn recovers_manufactured_solution() {
    for id in
        [BuiltinModelId::JinXinBurgers { a: 1.0 }, BuiltinModelId::Broadwell, BuiltinModelId::SyntheticQuasilinearDegenerate { mu: 0.1 }]
    {
        let (m, ce) = setup(id, 0.1, 0.02);
        let d = m.dim();
        let n = m.n();
        let zero = GridProfile::zeros(ce.grid().clone(), d);
        let ls = assemble(&m, &ce, &zero).unwrap();
        let mut w = bumps(ce.grid(), d, 5, 0.05);
        // enforce ℓ·w_u(center) = 0 by removing a multiple of a bump with unit phase
        let c = ce.center;
        let ph: f64 = (0..n).map(|a| ce.ell[a] * w.values[(c, a)]).sum();
        let xc = ce.grid().x_tilde(c);
        for i in 0..w.grid.len() {
            let g = (-(ce.grid().x_tilde(i) - xc).powi(2)).exp();
            for a in 0..n {
                w.values[(i, a)] -= ph * ce.ell[a] * g;
            }
        }
        let f = ls.apply(&w);
        let rep = ls.solve(&f, 0.0).unwrap();
        assert!(rep.phase_value.abs() <= 1e-10 * rep.solution.max_abs().max(1e-300));
        let err = rep.solution.with_values(&rep.solution.values - &w.values);
        let ns = NormSpec::unweighted(2, 0.1).unwrap();
        let rel = weighted_norm(&err, &ns).unwrap() / weighted_norm(&w, &ns).unwrap();
        assert!(rel < 1e-6, "{}: {rel}", m.name());
        // F = 0 gives U = 0; scaling is linear
        let z = ls.solve(&zero, 0.0).unwrap();
        assert!(z.solution.max_abs() == 0.0);
        let f3 = f.with_values(&f.values * 3.0);
        let rep3 = ls.solve(&f3, 0.0).unwrap();
        let lin = (&rep3.solution.values - &rep.solution.values * 3.0).amax();
        assert!(lin <= 1e-12 * rep3.solution.max_abs(), "{lin}");
    }
}

#[test]
fn solutions_of_compact_data_decay() {
    let eps = 0.1;
    let (m, ce) = setup(BuiltinModelId::JinXinBurgers { a: 1.0 }, eps, 0.02);
    let d = m.dim();
    let zero = GridProfile::zeros(ce.grid().clone(), d);
    let ls = assemble(&m, &ce, &zero).unwrap();
    let f = GridProfile::from_fn(ce.grid().clone(), d, |xt| {
        let bump = if xt.abs() < 2.0 { (1.0 - (xt / 2.0).powi(2)).powi(4) } else { 0.0 };
        DVector::from_vec(vec![bump * 1e-3, -bump * 2e-3])
    });
    let rep = ls.solve(&f, 0.0).unwrap();
    let g = ce.grid();
    for sign in [1.0, -1.0] {
        let pts: Vec<(f64, f64)> = (0..g.len())
            .filter(|&i| {
                let xt = sign * g.x_tilde(i);
                (4.0..=10.0).contains(&xt)
            })
            .map(|i| (g.x(i).abs(), rep.solution.node(i).norm().ln()))
            .collect();
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let rate = -sxy / sxx;
        assert!(rate >= 0.05 * eps, "side {sign}: rate {rate}");
    }
}

#[test]
fn energy_constants_are_uniform() {
    let mut consts = Vec::new();
    for eps in [0.1, 0.05] {
        let (m, ce) = setup(BuiltinModelId::JinXinBurgers { a: 1.0 }, eps, 0.02);
        let d = m.dim();
        let zero = GridProfile::zeros(ce.grid().clone(), d);
        let ls = assemble(&m, &ce, &zero).unwrap();
        let f = bumps(ce.grid(), d, 9, 1.0);
        let rep = ls.solve(&f, 0.0).unwrap();
        let e = ls.energy_diagnostics(&rep.solution, &f, 0.05).unwrap();
        assert!(e.constant.is_finite() && e.constant > 0.0);
        consts.push(e.constant);
    }
    let r = consts[0] / consts[1];
    assert!((0.5..=2.0).contains(&r), "{consts:?}");
}
