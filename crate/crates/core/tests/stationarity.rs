mod common;

use common::simpson;
use polylab::dynamics::{map_fold, steps_for, EnsembleSpec, Observe};
use polylab::error::Error;
use polylab::estimators::{Accumulator, Layout};
use polylab::field::GridSpec;
use polylab::kernels::Kernel;
use polylab::rng::{Purpose, SeedTree};
use polylab::stationarity::*;
use std::f64::consts::TAU;

fn catalog() -> Vec<Kernel> {
    vec![
        Kernel::gaussian(1.0, 1.0).unwrap(),
        Kernel::gaussian(2.0, 0.5).unwrap(),
        Kernel::power_ir(1.0, 0.5, 1.0).unwrap(),
        Kernel::power_ir(1.0, -0.5, 1.0).unwrap(),
        Kernel::summable(1.0, 1.0).unwrap(),
    ]
}

fn random_functions(seed: u64, n: u64) -> Vec<TestFunction> {
    let seeds = SeedTree::new(seed);
    (0..n).map(|i| TestFunction::random(&mut seeds.stream(i, Purpose::TestFunction), 1.0)).collect()
}

#[test]
fn drift_vanishes_at_the_stationary_law() {
    for k in catalog() {
        for u in random_functions(5, 20) {
            let d = mgf_drift(&k, &u, Mutation::None).unwrap();
            let scale = (0.5 * d.norm).exp() * (1.0 + d.gradient.abs());
            assert!(d.value.abs() < 1e-10 * scale, "{} {d:?}", k.name());
        }
    }
}

#[test]
fn mutations_are_detected() {
    let k = Kernel::<f64>::gaussian(1.0, 1.0).unwrap();
    for u in random_functions(6, 20) {
        let ok = mgf_drift(&k, &u, Mutation::None).unwrap();
        for m in [Mutation::FlipGradientTerm, Mutation::DropLaplacianTerm] {
            let bad = mgf_drift(&k, &u, m).unwrap();
            assert!(bad.value.abs() > 1e6 * ok.value.abs().max(1e-16), "{m:?} {bad:?}");
            assert!(bad.value.abs() > 1e-3 * bad.gradient.abs());
        }
    }
}

#[test]
fn drift_terms_against_quadrature_oracles() {
    let k = Kernel::<f64>::gaussian(1.0, 1.0).unwrap();
    let u = TestFunction::new(vec![1.0, -0.3, 0.05], DEFAULT_BAND).unwrap();
    let d = mgf_drift(&k, &u, Mutation::None).unwrap();
    let bh = |p: f64| k.b_hat(p);
    let norm = simpson(|p| u.u_hat(p).powi(2) * bh(p), -4.0, 4.0, 20_000) / TAU;
    let grad = simpson(|p| p * p * u.u_hat(p).powi(2) * bh(p), -4.0, 4.0, 20_000) / TAU;
    assert!((d.norm - norm).abs() < 1e-10 * norm);
    assert!((d.gradient - grad).abs() < 1e-10 * grad);
    assert_eq!(d.laplacian, -d.gradient);
    assert!(d.odd.abs() < 1e-14);
    // ⟨u, b⟩ in position space.
    let point = simpson(|x| u.u(x).unwrap() * k.eval_b(x).unwrap(), -10.0, 10.0, 2000);
    assert!((d.point - point).abs() < 1e-8 * point.abs(), "{} {point}", d.point);
}

#[test]
fn zero_function_and_zero_kernel() {
    let k = Kernel::<f64>::gaussian(1.0, 1.0).unwrap();
    let d = mgf_drift(&k, &TestFunction::zero(), Mutation::FlipGradientTerm).unwrap();
    assert_eq!(d.value, 0.0);
    let u = random_functions(7, 1).remove(0);
    let z = Kernel::<f64>::zero();
    assert_eq!(mgf_drift(&z, &u, Mutation::FlipGradientTerm).unwrap().value, 0.0);
    assert_eq!(pairing(&z, &u, &u).unwrap(), 0.0);
}

#[test]
fn pairing_is_a_semi_inner_product() {
    let fs = random_functions(8, 6);
    for k in catalog() {
        for u in &fs {
            let uu = pairing(&k, u, u).unwrap();
            assert!(uu > 0.0);
            let twice = pairing(&k, &u.scaled(2.0), u).unwrap();
            assert!((twice - 2.0 * uu).abs() < 1e-12 * uu);
            for v in &fs {
                let (uv, vu) = (pairing(&k, u, v).unwrap(), pairing(&k, v, u).unwrap());
                assert!((uv - vu).abs() <= 1e-14 * uv.abs().max(1e-300));
                assert!(uv * uv <= uu * pairing(&k, v, v).unwrap() * (1.0 + 1e-10));
            }
        }
    }
    let u = TestFunction::new(vec![1.0], 4.0).unwrap();
    let v = TestFunction::new(vec![1.0], 3.0).unwrap();
    assert_eq!(pairing(&catalog()[0], &u, &v).unwrap_err(), Error::GridMismatch);
}

fn orthogonalize(k: &Kernel, u: &TestFunction, v: &TestFunction) -> TestFunction {
    let c = pairing(k, u, v).unwrap() / pairing(k, u, u).unwrap();
    let n = u.coeffs.len().max(v.coeffs.len());
    let get = |f: &TestFunction, i: usize| f.coeffs.get(i).copied().unwrap_or(0.0);
    TestFunction::new((0..n).map(|i| get(v, i) - c * get(u, i)).collect(), v.band).unwrap()
}

#[test]
fn gaussian_identities_on_sampled_fields() {
    let k = Kernel::<f64>::gaussian(1.0, 1.0).unwrap();
    let spec = GridSpec::<f64>::new(256.0, 1024).unwrap();
    let fs = random_functions(9, 3);
    let (u, v, w) = (fs[0].scaled(0.5), &fs[1], &fs[2]);
    let rep = gaussian_identity_check(&k, &u, v, w, spec, &SeedTree::new(21), 100_000, 32).unwrap();
    assert!(rep.first.z < 4.0, "{:?}", rep.first);
    assert!(rep.second.z < 4.0, "{:?}", rep.second);

    let v0 = orthogonalize(&k, &u, v);
    assert!(pairing(&k, &u, &v0).unwrap().abs() < 1e-12);
    let rep = gaussian_identity_check(&k, &u, &v0, w, spec, &SeedTree::new(22), 100_000, 32).unwrap();
    assert!(rep.first.exact.abs() < 1e-12);
    assert!(rep.first.z < 4.0, "{:?}", rep.first);
}

fn short_ensemble(replicas: u64) -> (Kernel, polylab::estimators::EnsembleStats) {
    let k = Kernel::<f64>::gaussian(1.0, 1.0).unwrap();
    let dt = 0.01;
    let grid = GridSpec::new(64.0, 256).unwrap();
    let times = [0.0, 1.0, 2.0];
    let observe = Observe {
        snapshot_steps: steps_for(&[1.0, 2.0], dt),
        snapshot_lags: vec![0, 1, 2, 4, 8],
        ..Observe::at_times(&times, dt)
    };
    let ens = EnsembleSpec { kernel: k.clone(), grid, dt, mean_v: 0.0, seeds: SeedTree::new(31), observe };
    let layout = Layout { snapshots: 2, snapshot_lags: 5, drift_cross: vec![(1, 2, 2), (0, 1, 0)], ..Layout::simple(times.to_vec()) };
    let plan = grid.plan();
    let acc = map_fold(
        replicas,
        0,
        || Accumulator::new(layout.clone(), 32),
        |i| ens.run_replica(&plan, i),
        |a, r| a.absorb(&r).unwrap(),
        |a, b| a.merge(&b),
    )
    .unwrap();
    (k, acc.finish())
}

#[test]
fn covariance_and_flip_on_a_short_run() {
    let (k, stats) = short_ensemble(4000);
    let rows = covariance_preservation(&k, &stats, &[1.0, 2.0], &[0.0, 0.25, 0.5, 1.0, 2.0]).unwrap();
    assert_eq!(rows.len(), 10);
    for r in &rows {
        assert!(r.passes(4.5), "{r:?}");
    }
    assert!(covariance_preservation(&k, &stats, &[1.0, 2.0], &[0.0, 0.25]).is_err());
    let flip = yaglom_flip_check(&stats).unwrap();
    for (t, m1, m3) in &flip.odd_moments {
        assert!(m1.z(0.0) < 4.5 && m3.z(0.0) < 4.5, "t = {t}");
    }
    assert!(flip.difference.z(0.0) < 4.5, "{flip:?}");
}
