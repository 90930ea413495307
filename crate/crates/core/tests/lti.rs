use nalgebra::DMatrix;
use proptest::prelude::*;

use pando::gridsim::{make_grid, GridScenario, OscillatoryMode};
use pando::lti::lyap::{lyap_kron, residual_ratio};
use pando::lti::{eigenvalues, h2_solve, is_hurwitz, lyap_solve, PerfWeights};
use pando::optimizer::Problem;
use pando::pwl_tf::DEFAULT_PADE_ORDER;
use pando::services::{baseline_alpha, Droops, LimitSet};

/// Random matrix shifted so its spectrum sits at least `0.1` left of the
/// imaginary axis.
fn stable(n: usize, entries: &[f64]) -> DMatrix<f64> {
    let mut a = DMatrix::from_fn(n, n, |i, j| entries[i * n + j]);
    let top = eigenvalues(&a).iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    for i in 0..n {
        a[(i, i)] -= top + 0.1;
    }
    a
}

fn stable_matrix() -> impl Strategy<Value = DMatrix<f64>> {
    (1usize..=12).prop_flat_map(|n| prop::collection::vec(-3.0..3.0f64, n * n).prop_map(move |e| stable(n, &e)))
}

#[test]
fn scalar_and_diagonal_lyapunov() {
    let p = lyap_solve(&DMatrix::from_element(1, 1, -2.0), &DMatrix::from_element(1, 1, 3.0)).unwrap();
    assert!((p[(0, 0)] - 0.75).abs() < 1e-15);
    let a = DMatrix::from_diagonal(&nalgebra::dvector![-1.0, -2.0, -4.0]);
    let p = lyap_solve(&a, &DMatrix::identity(3, 3)).unwrap();
    let expect = DMatrix::from_diagonal(&nalgebra::dvector![0.5, 0.25, 0.125]);
    assert!((p - expect).amax() < 1e-14);
}

#[test]
fn unstable_matrix_is_rejected() {
    let a = DMatrix::from_row_slice(2, 2, &[0.1, 1.0, 0.0, -1.0]);
    assert!(lyap_solve(&a, &DMatrix::identity(2, 2)).is_err());
}

#[test]
fn companion_spectrum_is_exact() {
    // (s+1)(s+2)…(s+10) in companion form; unbalanced Schur iterations
    // are known to misplace some of these roots.
    let mut c = vec![1.0];
    for r in 1..=10 {
        let mut next = vec![0.0; c.len() + 1];
        for (k, v) in c.iter().enumerate() {
            next[k] += r as f64 * v;
            next[k + 1] += v;
        }
        c = next;
    }
    let a = DMatrix::from_fn(10, 10, |i, j| if i + 1 == j { 1.0 } else if i == 9 { -c[j] } else { 0.0 });
    let mut re: Vec<f64> = eigenvalues(&a).iter().map(|l| l.re).collect();
    re.sort_by(|x, y| y.partial_cmp(x).unwrap());
    for (k, r) in re.iter().enumerate() {
        assert!((r + (k + 1) as f64).abs() < 1e-6, "{re:?}");
    }
    assert!(is_hurwitz(&a, 0.5));
}

#[test]
fn baseline_loop_has_no_io_sensitivity() {
    for mode in [None, Some(OscillatoryMode::default())] {
        let g = make_grid(&GridScenario { mode, ..GridScenario::default() }).unwrap();
        let limits = LimitSet::default();
        let a0 = baseline_alpha(&limits);
        let p = Problem::new(&g, Droops::default(), limits, &PerfWeights::default(), a0, DEFAULT_PADE_ORDER, 1e-6)
            .unwrap();
        let cl = p.closed_loop(&a0.to_vec()).unwrap();
        assert!(is_hurwitz(&cl.a, 1e-6));
        // Parameters enter the controller block of A only.
        assert!(p.gradient(&a0.to_vec()).unwrap().io_terms < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lyapunov_solution_is_accurate_and_positive(a in stable_matrix(), bs in prop::collection::vec(-2.0..2.0f64, 24)) {
        let n = a.nrows();
        let b = DMatrix::from_fn(n, 2, |i, j| bs[2 * i + j]);
        let q = &b * b.transpose() + DMatrix::identity(n, n);
        let p = lyap_solve(&a, &q).unwrap();
        prop_assert!(residual_ratio(&a, &p, &q) < 1e-10);
        prop_assert!((&p - p.transpose()).amax() <= 1e-12 * p.amax());
        prop_assert!(p.clone().cholesky().is_some());
        let k = lyap_kron(&a, &q).unwrap();
        prop_assert!((&p - &k).amax() <= 1e-8 * k.amax());
    }

    #[test]
    fn gramian_traces_agree(a in stable_matrix(), bs in prop::collection::vec(-2.0..2.0f64, 24), cs in prop::collection::vec(-2.0..2.0f64, 36)) {
        let n = a.nrows();
        let b = DMatrix::from_fn(n, 2, |i, j| bs[2 * i + j]);
        let c = DMatrix::from_fn(3, n, |i, j| cs[i * 12 + j]);
        prop_assume!(b.amax() > 1e-3 && c.amax() > 1e-3);
        let s = h2_solve(&a, &b, &c).unwrap();
        prop_assert!(s.duality_gap < 1e-9);
        let dual = (b.transpose() * &s.q * &b).trace();
        prop_assert!((s.j - dual).abs() <= 1e-9 * s.j.abs());
        prop_assert!(s.j >= 0.0);
    }
}
