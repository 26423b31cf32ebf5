mod common;

use common::{mean_se, rel};
use polylab::dynamics::{RecordPoint, ReplicaRecord};
use polylab::estimators::*;
use polylab::Error;
use statrs::function::gamma::gamma;

fn record(replica: u64, xs: &[(f64, f64)]) -> ReplicaRecord {
    // (x, brownian) pairs at t = 1, 2, ...; the drift part fills the gap.
    let points = xs
        .iter()
        .enumerate()
        .map(|(i, &(x, b))| RecordPoint { t: (i + 1) as f64, x, brownian: b, phi_integral: x - b, phi: 0.1 * x })
        .collect();
    ReplicaRecord { replica, points, phi_series: Vec::new(), snapshots: Vec::new(), max_abs_x: 0.0 }
}

#[test]
fn single_record_has_no_error_bar() {
    let s = merge_stats(&[record(0, &[(2.0, 1.0)])], Layout::simple(vec![1.0]), DEFAULT_GROUPS).unwrap();
    assert_eq!(s.e_of_t[0].value, 4.0);
    assert_eq!(s.e_of_t[0].stderr, None);
    assert_eq!(s.replica_count, 1);
}

#[test]
fn symmetric_pair() {
    let a = 1.5;
    let recs = [record(0, &[(a, 0.0)]), record(1, &[(-a, 0.0)])];
    let s = merge_stats(&recs, Layout::simple(vec![1.0]), DEFAULT_GROUPS).unwrap();
    assert_eq!(s.e_of_t[0].value, a * a);
    assert_eq!(s.mean_x[0].value, 0.0);
    assert_eq!(s.d_of_t[0].value, a * a);
}

#[test]
fn grid_mismatch_is_rejected() {
    let recs = [record(0, &[(1.0, 0.0), (2.0, 0.0)])];
    assert_eq!(merge_stats(&recs, Layout::simple(vec![1.0]), 4).unwrap_err(), Error::GridMismatch);
}

#[test]
fn jackknife_of_mean_is_classical_standard_error() {
    let xs: Vec<f64> = (0..40).map(|i| ((i * 37) % 11) as f64 * 0.3 - 1.0).collect();
    let mut m = Moments::new(1, 40);
    for (i, &x) in xs.iter().enumerate() {
        m.push(i as u64, &[x]);
    }
    let e = m.resampled().estimate(|v| v[0]);
    let (mean, se) = mean_se(&xs);
    assert!((e.value - mean).abs() < 1e-15);
    assert!(rel(e.stderr.unwrap(), se) < 1e-12);
}

#[test]
fn standard_error_shrinks_like_inverse_root_count() {
    let se = |n: u64| {
        let mut rng = polylab::rng::SeedTree::new(n).stream(0, polylab::rng::Purpose::Other(0));
        let mut m = Moments::new(1, 32);
        for i in 0..n {
            m.push(i, &[rng.normal()]);
        }
        m.resampled().estimate(|v| v[0]).se()
    };
    let ratio = se(4000) / se(16000);
    assert!((ratio - 2.0).abs() < 0.5, "{ratio}");
}

#[test]
fn laplace_pairs() {
    let times: Vec<f64> = (1..=200_000).map(|i| i as f64 * 5e-4).collect();
    let lin: Vec<f64> = times.clone();
    let quad: Vec<f64> = times.iter().map(|t| t * t).collect();
    let pow: Vec<f64> = times.iter().map(|t| 0.8 * t.powf(1.4)).collect();
    let lambdas = [0.1, 0.3, 1.0];
    let l = laplace_transform(&times, &lin, &lambdas).unwrap();
    let q = laplace_transform(&times, &quad, &lambdas).unwrap();
    let p = laplace_transform(&times, &pow, &lambdas).unwrap();
    for (i, &lam) in lambdas.iter().enumerate() {
        assert!(rel(l.e_hat[i], lam.powi(-2)) < 0.01);
        assert!(rel(q.e_hat[i], 2.0 * lam.powi(-3)) < 0.01);
        assert!(rel(p.e_hat[i], 0.8 * gamma(2.4) * lam.powf(-2.4)) < 0.02);
        assert!(l.tail_bound[i] < 0.05 * l.e_hat[i]);
    }
    assert!(l.e_hat.windows(2).all(|w| w[0] > w[1]));
}

#[test]
fn laplace_tail_matches_closed_form() {
    // ∫_T^∞ e^{-λt} (t/T)^{3/2} dt at λT = 2 against Simpson on a long range.
    let (t, lam) = (10.0, 0.2);
    let oracle = common::simpson(|s| (-lam * s).exp() * (s / t).powf(1.5), t, t + 400.0, 400_000);
    assert!(rel(laplace_tail(1.0, t, lam), oracle) < 1e-9);
}

#[test]
fn laplace_guard() {
    let times = [1.0, 2.0, 10.0];
    let vals = [1.0, 2.0, 10.0];
    assert!(matches!(laplace_transform(&times, &vals, &[0.1]), Err(Error::LambdaTooSmall { .. })));
    assert!(laplace_transform(&times, &vals, &[0.5]).is_ok());
}

#[test]
fn exponent_fits() {
    let t: Vec<f64> = (1..=20).map(|i| i as f64 * 5.0).collect();
    let y: Vec<f64> = t.iter().map(|x| x.powf(1.5)).collect();
    let f = fit_exponent(&t, &y, 0..20).unwrap();
    assert!((f.exponent - 1.5).abs() < 1e-12);
    assert!(f.stderr < 1e-12);
    let lam: Vec<f64> = (0..9).map(|i| 1e-5 * 10f64.powf(i as f64 / 4.0)).collect();
    let y: Vec<f64> = lam.iter().map(|l| l.powf(-2.5)).collect();
    assert!((fit_exponent(&lam, &y, 0..9).unwrap().exponent + 2.5).abs() < 1e-12);
    let bad = [1.0, -1.0, 2.0];
    assert!(matches!(fit_exponent(&[1.0, 2.0, 3.0], &bad, 0..3), Err(Error::NonPositiveValue { index: 1, .. })));
    assert_eq!(window_between(&t, 20.0, 100.0), 3..20);
}

#[test]
fn yaglom_is_exact_without_interaction() {
    let mut layout = Layout::simple(vec![1.0, 2.0, 3.0]);
    layout.windows = vec![(0, 1), (1, 2)];
    let recs: Vec<ReplicaRecord> = (0..64)
        .map(|i| {
            let b = |k: u64| (((i * 7 + k * 13) % 17) as f64 - 8.0) * 0.2;
            let pts = (0..3)
                .map(|j| RecordPoint { t: (j + 1) as f64, x: b(j), brownian: b(j), phi_integral: 0.0, phi: 0.0 })
                .collect();
            ReplicaRecord { replica: i, points: pts, phi_series: Vec::new(), snapshots: Vec::new(), max_abs_x: 0.0 }
        })
        .collect();
    let s = merge_stats(&recs, layout, DEFAULT_GROUPS).unwrap();
    for w in &s.yaglom {
        assert_eq!(w.rhs.value, w.t - w.s);
        assert_eq!(w.cross.value, 0.0);
        assert_eq!(w.corr.value, 0.0);
    }
}

#[test]
fn autocorrelation_by_fft_matches_direct_sums() {
    let series: Vec<f64> = (0..300).map(|i| ((i as f64) * 0.37).sin() + 0.1 * ((i * i) % 7) as f64).collect();
    let c = time_autocorrelation(&series, 40);
    for l in [0, 1, 7, 40] {
        let direct = (0..300 - l).map(|k| series[k] * series[k + l]).sum::<f64>() / (300 - l) as f64;
        assert!((c[l] - direct).abs() < 1e-12);
    }
    assert!(time_autocorrelation(&vec![0.0; 50], 5).iter().all(|&v| v == 0.0));
}

#[test]
fn merge_is_associative_bit_for_bit() {
    let layout = Layout::simple(vec![1.0, 2.0]);
    let recs: Vec<ReplicaRecord> =
        (0..50).map(|i| record(i, &[((i as f64).sin() * 1e3, 0.1), ((i as f64 * 0.3).cos() * 1e-3, 0.2)])).collect();
    let mut whole = Accumulator::new(layout.clone(), 8);
    for r in &recs {
        whole.absorb(r).unwrap();
    }
    let mut a = Accumulator::new(layout.clone(), 8);
    let mut b = Accumulator::new(layout.clone(), 8);
    for r in &recs[..17] {
        a.absorb(r).unwrap();
    }
    for r in recs[17..].iter().rev() {
        b.absorb(r).unwrap();
    }
    b.merge(&a);
    assert_eq!(whole.finish(), b.finish());
}

#[test]
fn resolvent_of_zero_correlation() {
    let mut layout = Layout::simple(vec![10.0]);
    layout.lags = (0..=100).collect();
    layout.phi_step = 1.0;
    let recs: Vec<ReplicaRecord> = (0..8)
        .map(|i| ReplicaRecord {
            replica: i,
            points: vec![RecordPoint { t: 10.0, x: 0.0, brownian: 0.0, phi_integral: 0.0, phi: 0.0 }],
            phi_series: vec![0.0; 201],
            snapshots: Vec::new(),
            max_abs_x: 0.0,
        })
        .collect();
    let s = merge_stats(&recs, layout, 4).unwrap();
    assert!(s.c_of_s.iter().all(|c| c.value == 0.0));
    let (r, tail) = mc_resolvent(&s, 0.1).unwrap();
    assert_eq!((r.value, tail), (0.0, 0.0));
    assert!(matches!(mc_resolvent(&s, 0.01), Err(Error::LambdaTooSmall { .. })));
}
