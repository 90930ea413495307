use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use pando::gridsim::{excitation_dataset, generate_dataset, make_grid, GridScenario};
use pando::lti::{eigenvalues, gramians};
use pando::pwl_tf::StateSpace;
use pando::sysid::{bode_error, identify, rbs, reduce, tustin_d2c, Dataset, IdentConfig};

/// Minimal order of each output row: the number of Hankel singular values
/// above a relative floor.
fn row_orders(g: &StateSpace) -> Vec<usize> {
    (0..g.n_outputs())
        .map(|i| {
            let row = StateSpace::new(g.a.clone(), g.b.clone(), g.c.rows(i, 1).into_owned()).unwrap();
            let (p, q) = gramians(&row).unwrap();
            let hsv: Vec<f64> = eigenvalues(&(p * q)).iter().map(|l| l.re.max(0.0).sqrt()).collect();
            let top = hsv.iter().copied().fold(0.0, f64::max);
            hsv.iter().filter(|&&s| s > 1e-6 * top).count()
        })
        .collect()
}

fn scenarios() -> [GridScenario; 2] {
    [GridScenario::default(), GridScenario::oscillatory()]
}

#[test]
fn noiseless_data_selects_the_true_orders() {
    for sc in scenarios() {
        let g = make_grid(&sc).unwrap();
        let cfg = IdentConfig {
            snr_db: None,
            ..IdentConfig::default()
        };
        let id = identify(&excitation_dataset(&g, &cfg, 11).unwrap(), &cfg).unwrap();
        let picked: Vec<usize> = id.arx.orders.iter().map(|o| o.na).collect();
        assert_eq!(picked, row_orders(&g));
        assert!(id.model.is_stable());
        assert!(bode_error(&id.model, &g, (0.01, 10.0), 300).unwrap().max_mag_rel < 0.01);
    }
}

#[test]
fn error_grows_as_noise_grows() {
    for sc in scenarios() {
        let g = make_grid(&sc).unwrap();
        let errs: Vec<f64> = [60.0, 40.0, 20.0]
            .iter()
            .map(|&snr| {
                let cfg = IdentConfig {
                    snr_db: Some(snr),
                    ..IdentConfig::default()
                };
                let id = identify(&excitation_dataset(&g, &cfg, 11).unwrap(), &cfg).unwrap();
                bode_error(&id.model, &g, (0.01, 10.0), 300).unwrap().max_mag_rel
            })
            .collect();
        assert!(errs.windows(2).all(|w| w[0] <= w[1]), "{errs:?}");
    }
}

#[test]
fn bilinear_map_of_a_first_order_pole() {
    let one = |v| DMatrix::from_element(1, 1, v);
    // D = 1/(1 + 0.5) cancels the response at z = -1, so the continuous
    // model is strictly proper.
    let s = tustin_d2c(&one(0.5), &one(1.0), &one(1.0), &one(1.0 / 1.5), 0.1).unwrap();
    assert!((s.a[(0, 0)] + 20.0 / 3.0).abs() < 1e-12);
}

#[test]
fn noise_is_seeded_and_at_the_requested_level() {
    let g = make_grid(&GridScenario::default()).unwrap();
    let n = 20_000;
    let mut u = DMatrix::zeros(n, 2);
    u.column_mut(0).copy_from_slice(&rbs(n, 0.03, 0.5, 1).unwrap());
    u.column_mut(1).copy_from_slice(&rbs(n, 0.03, 0.5, 2).unwrap());
    let clean = generate_dataset(&g, &u, None, 0.01, 0).unwrap();
    let a = generate_dataset(&g, &u, Some(40.0), 0.01, 7).unwrap();
    let b = generate_dataset(&g, &u, Some(40.0), 0.01, 7).unwrap();
    assert_eq!(a.y, b.y);
    for j in 0..2 {
        let signal = clean.y.column(j).norm_squared() / n as f64;
        let noise = (a.y.column(j) - clean.y.column(j)).norm_squared() / n as f64;
        let ratio = noise / (signal * 1e-4);
        assert!((ratio - 1.0).abs() < 0.05, "channel {j}: noise/target {ratio}");
    }
}

#[test]
fn dataset_survives_csv() {
    let u = DMatrix::from_fn(150, 2, |i, j| ((i * 7 + j) as f64 * 0.37).sin());
    let y = DMatrix::from_fn(150, 2, |i, j| ((i + 3 * j) as f64 * 0.11).cos() / 3.0);
    let d = Dataset::new(0.02, u, y).unwrap();
    let mut buf = Vec::new();
    d.write_csv(&mut buf).unwrap();
    let back = Dataset::read_csv(buf.as_slice()).unwrap();
    assert_eq!(back.u, d.u);
    assert_eq!(back.y, d.y);
    assert!((back.dt - d.dt).abs() < 1e-12);
}

proptest! {
    #[test]
    fn rbs_is_binary_and_seeded(len in 1usize..2000, amp in 0.001..10.0f64, p in 0.01..0.5f64, seed: u64) {
        let a = rbs(len, amp, p, seed).unwrap();
        prop_assert_eq!(a.len(), len);
        prop_assert!(a.iter().all(|v| v.abs() == amp));
        prop_assert_eq!(&a, &rbs(len, amp, p, seed).unwrap());
    }

    #[test]
    fn rbs_switch_rate(p in 0.05..0.5f64, seed: u64) {
        let n = 20_000;
        let a = rbs(n, 1.0, p, seed).unwrap();
        let flips = a.windows(2).filter(|w| w[0] != w[1]).count() as f64;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        prop_assert!((flips - p * (n - 1) as f64).abs() < 5.0 * sd);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn truncation_error_is_within_its_bound(entries in prop::collection::vec(-1.0..1.0f64, 20 * 20 + 2 * 20 + 2 * 20)) {
        let n = 20;
        let mut a = DMatrix::from_fn(n, n, |i, j| entries[i * n + j]);
        let top = eigenvalues(&a).iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
        for i in 0..n {
            a[(i, i)] -= top + 0.2;
        }
        let b = DMatrix::from_fn(n, 2, |i, j| entries[n * n + 2 * i + j]);
        let c = DMatrix::from_fn(2, n, |i, j| entries[n * n + 2 * n + i * n + j]);
        let sys = StateSpace::new(a, b, c).unwrap();
        let r = reduce(&sys, 10).unwrap();
        prop_assert_eq!(r.system.n_states(), 10);
        prop_assert!(r.system.is_stable());
        // Sampled gain of the error system; it cannot exceed the H∞ bound.
        let mut worst: f64 = 0.0;
        for k in 0..400 {
            let w = 10f64.powf(-3.0 + 6.0 * k as f64 / 399.0);
            let s = Complex64::new(0.0, w);
            let e = sys.eval(s).unwrap() - r.system.eval(s).unwrap();
            worst = worst.max(e.singular_values()[0]);
        }
        prop_assert!(worst <= r.error_bound * (1.0 + 1e-6) + 1e-12, "{worst} > {}", r.error_bound);
    }
}
