mod common;

use common::{mean_se, rel};
use polylab::field::{image_sum_b, periodized_b, sample_stationary, FieldGrid, GridSpec};
use polylab::kernels::Kernel;
use polylab::rng::{Purpose, SeedTree};
use std::f64::consts::PI;

fn spec(l: f64, n: usize) -> GridSpec {
    GridSpec::new(l, n).unwrap()
}

fn sine(l: f64, n: usize) -> FieldGrid {
    let s = spec(l, n);
    FieldGrid::from_fn(s, s.plan(), |x| (2.0 * PI * x / l).sin())
}

/// `count` stationary samples on a small grid.
fn ensemble(k: &Kernel, s: GridSpec, count: u64, mean_v: f64) -> Vec<FieldGrid> {
    let plan = s.plan();
    let seeds = SeedTree::new(17);
    (0..count)
        .map(|i| sample_stationary(k, s, plan.clone(), &mut seeds.stream(i, Purpose::Field), mean_v))
        .collect()
}

#[test]
fn grid_validation() {
    assert!(GridSpec::<f64>::new(10.0, 1000).is_err());
    assert!(GridSpec::<f64>::new(-1.0, 1024).is_err());
    let s = spec(256.0, 1024);
    assert_eq!(s.spacing(), 0.25);
    assert_eq!(s.mode(513), -511);
    assert!((s.freq(1) - 2.0 * PI / 256.0).abs() < 1e-15);
    assert_eq!(s.wrap(200.0), -56.0);
}

#[test]
fn interpolation_hits_nodes_and_constants() {
    let s = spec(64.0, 256);
    let f = FieldGrid::from_fn(s, s.plan(), |x| (x * 0.37).cos() + 0.1 * x);
    for j in [0, 5, 100, 255] {
        assert_eq!(f.interpolate(s.node(j)), f.values[j]);
    }
    let c = FieldGrid::from_fn(s, s.plan(), |_| 2.5);
    for x in [0.1, 13.37, -5.2, 63.9] {
        assert!((c.interpolate(x) - 2.5).abs() < 1e-14);
    }
    let g = sine(64.0, 256);
    assert!((g.interpolate(3.3) - g.interpolate(3.3 + 64.0)).abs() < 1e-12);
}

#[test]
fn interpolation_of_sine() {
    for n in [1024, 4096] {
        let f = sine(256.0, n);
        assert!((f.interpolate(256.0 / 8.0) - (PI / 4.0).sin()).abs() < 1e-4);
        assert!((f.interpolate(1.01) - (2.0 * PI * 1.01 / 256.0).sin()).abs() < 1e-4);
    }
}

#[test]
fn spectral_derivative() {
    let s = spec(64.0, 256);
    let c = FieldGrid::from_fn(s, s.plan(), |_| 1.25).derivative();
    assert!(c.values.iter().all(|v| v.abs() < 1e-14));
    let d = sine(64.0, 256).derivative();
    for (j, v) in d.values.iter().enumerate() {
        let x = s.node(j);
        assert!((v - 2.0 * PI / 64.0 * (2.0 * PI * x / 64.0).cos()).abs() < 1e-10);
    }
}

#[test]
fn shift_identities() {
    let k = Kernel::<f64>::gaussian(1.0, 1.0).unwrap();
    let s = spec(64.0, 256);
    let f = &ensemble(&k, s, 1, 0.0)[0];
    let same = f.shift(0.0);
    let period = f.shift(64.0);
    for j in 0..s.n {
        assert!((same.values[j] - f.values[j]).abs() < 1e-12);
        assert!((period.values[j] - f.values[j]).abs() < 1e-12);
    }
    let one = f.shift(s.spacing());
    for j in 0..s.n {
        assert!((one.values[j] - f.values[(j + 1) % s.n]).abs() < 1e-10);
    }
    let ab = f.shift(0.3).shift(1.1);
    let direct = f.shift(1.4);
    for j in 0..s.n {
        assert!((ab.values[j] - direct.values[j]).abs() < 1e-12);
    }
}

#[test]
fn sampled_spectrum_is_hermitian() {
    let k = Kernel::<f64>::summable(1.0, 1.0).unwrap();
    let s = spec(32.0, 128);
    let mut f = ensemble(&k, s, 1, 0.0).remove(0);
    let c = f.spectrum().to_vec();
    assert!(c[0].im.abs() < 1e-15);
    for m in 1..s.n / 2 {
        assert!((c[m] - c[s.n - m].conj()).norm() < 1e-14);
    }
}

#[test]
fn low_modes_shared_across_resolutions() {
    let k = Kernel::<f64>::gaussian(1.0, 1.0).unwrap();
    let seeds = SeedTree::new(3);
    let mut coarse = sample_stationary(&k, spec(32.0, 128), spec(32.0, 128).plan(), &mut seeds.stream(0, Purpose::Field), 0.0);
    let mut fine = sample_stationary(&k, spec(32.0, 256), spec(32.0, 256).plan(), &mut seeds.stream(0, Purpose::Field), 0.0);
    let (a, b) = (coarse.spectrum().to_vec(), fine.spectrum().to_vec());
    for m in 1..20 {
        assert!((a[m] - b[m]).norm() < 1e-14);
    }
}

#[test]
fn node_variance_and_lag_covariance() {
    let k = Kernel::<f64>::gaussian(1.0, 1.0).unwrap();
    let s = spec(64.0, 256);
    let fields = ensemble(&k, s, 10_000, 0.0);
    let sq: Vec<f64> = fields.iter().map(|f| f.values[0] * f.values[0]).collect();
    let (m, se) = mean_se(&sq);
    assert!((m - k.b(0.0)).abs() < 4.0 * se, "{m} ± {se}");
    // Lag x = 1 is four nodes.
    let lag: Vec<f64> = fields.iter().map(|f| f.values[10] * f.values[14]).collect();
    let (m, se) = mean_se(&lag);
    assert!((m - k.b(1.0)).abs() < 4.0 * se, "{m} ± {se}");
    // Translation invariance: a shifted sample has the same covariance.
    let shifted: Vec<f64> = fields.iter().map(|f| f.shift(0.37).values[0].powi(2)).collect();
    let (m, se) = mean_se(&shifted);
    assert!((m - k.b(0.0)).abs() < 4.0 * se);
    // Flip symmetry.
    let flipped: Vec<f64> = fields.iter().map(|f| f.negated().values[3] * f.negated().values[7]).collect();
    let (m, se) = mean_se(&flipped);
    assert!((m - k.b(1.0)).abs() < 4.0 * se);
}

#[test]
fn derivative_variance_matches_curvature() {
    let k = Kernel::<f64>::gaussian(1.0, 1.0).unwrap();
    let h = 1e-3;
    let curvature = -(k.b(h) - 2.0 * k.b(0.0) + k.b(-h)) / (h * h);
    let s = spec(64.0, 256);
    let d: Vec<f64> = ensemble(&k, s, 10_000, 0.0).iter().map(|f| f.derivative().values[0].powi(2)).collect();
    let (m, se) = mean_se(&d);
    assert!((m - curvature).abs() < 4.0 * se, "{m} ± {se} vs {curvature}");
}

#[test]
fn centering_shifts_every_node() {
    let k = Kernel::<f64>::gaussian(1.0, 1.0).unwrap();
    let s = spec(16.0, 64);
    let fields = ensemble(&k, s, 10_000, 0.7);
    for j in [0, 17, 63] {
        let v: Vec<f64> = fields.iter().map(|f| f.values[j]).collect();
        let (m, se) = mean_se(&v);
        assert!((m - 0.7).abs() < 4.0 * se);
    }
    assert_eq!(fields[0].mean_v, 0.7);
}

#[test]
fn periodization_error_is_negligible() {
    for k in [Kernel::<f64>::gaussian(1.0, 1.0).unwrap(), Kernel::<f64>::summable(1.0, 1.0).unwrap()] {
        let s = spec(40.0, 256);
        for i in 0..=40 {
            let x = -10.0 + 0.5 * i as f64;
            assert!((periodized_b(&k, &s, x) - k.b(x)).abs() < 1e-10, "{} at {x}", k.name());
            assert!(rel(image_sum_b(&k, 40.0, x, 2).unwrap(), k.b(x)) < 1e-10 || k.b(x).abs() < 1e-12);
        }
    }
}
