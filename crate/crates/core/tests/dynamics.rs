mod common;

use common::mean_se;
use polylab::dynamics::{map_fold, run_drs, steps_for, EnsembleSpec, Noise, Observe, PolymerReplica};
use polylab::field::{FieldGrid, GridSpec};
use polylab::kernels::Kernel;
use polylab::rng::{Purpose, SeedTree};
use polylab::Error;

fn gauss() -> Kernel {
    Kernel::gaussian(1.0, 1.0).unwrap()
}

fn spec(l: f64, n: usize) -> GridSpec {
    GridSpec::new(l, n).unwrap()
}

#[test]
fn guard_rejects_coarse_steps() {
    let s = spec(64.0, 256);
    let mut rng = SeedTree::new(1).stream(0, Purpose::Field);
    let h2 = s.spacing() * s.spacing();
    let err = PolymerReplica::init(&gauss(), s, s.plan(), &mut rng, 0.0, h2).unwrap_err();
    assert!(matches!(err, Error::StabilityGuard { .. }));
    assert!(PolymerReplica::init(&gauss(), s, s.plan(), &mut rng, 0.0, h2 / 4.0).is_ok());
}

#[test]
fn single_step_adds_kernel_derivative() {
    let s = spec(64.0, 256);
    let k = gauss();
    let dt = 1e-3;
    let mut r = PolymerReplica::with_field(&k, FieldGrid::zeros(s, s.plan()), dt).unwrap();
    r.step_with(0.0).unwrap();
    let peak = 0.2;
    for j in 0..s.n {
        let x = s.wrap(s.node(j));
        let want = k.b_prime(-x) * dt;
        assert!((r.zeta.values[j] - want).abs() <= 1e-14 * peak * dt, "node {j}");
    }
    assert_eq!(r.x, 0.0);
    assert_eq!(r.t, dt);
}

#[test]
fn stencil_matches_direct_update_off_grid() {
    let s = spec(64.0, 256);
    for k in [gauss(), Kernel::summable(1.0, 2.0).unwrap()] {
        let dt = 1e-3;
        let mut r = PolymerReplica::with_field(&k, FieldGrid::zeros(s, s.plan()), dt).unwrap();
        r.x = 5.123;
        r.step_with(0.0).unwrap();
        for j in 0..s.n {
            let d = s.wrap(5.123 - s.node(j));
            assert!((r.zeta.values[j] - k.b_prime(d) * dt).abs() < 1e-15, "{} node {j}", k.name());
        }
    }
}

#[test]
fn power_ir_table_matches_quadrature() {
    let s = spec(64.0, 256);
    let k = Kernel::power_ir(1.0, 0.5, 1.0).unwrap();
    let dt = 1e-3;
    let mut r = PolymerReplica::with_field(&k, FieldGrid::zeros(s, s.plan()), dt).unwrap();
    r.x = 0.3;
    r.step_with(0.0).unwrap();
    for j in [0, 1, 3, 10, 250] {
        let d = s.wrap(0.3 - s.node(j));
        // The table holds the periodized derivative; its far tail differs from b′ by O(L^{-2-α}).
        assert!((r.zeta.values[j] / dt - k.b_prime(d)).abs() < 2e-4, "node {j}");
    }
}

#[test]
fn zero_kernel_gives_brownian_motion() {
    let s = spec(64.0, 256);
    let ens = EnsembleSpec {
        kernel: Kernel::zero(),
        grid: s,
        dt: 0.01,
        mean_v: 0.0,
        seeds: SeedTree::new(5),
        observe: Observe::at_times(&[1.0, 5.0, 10.0], 0.01),
    };
    let plan = s.plan();
    let recs: Vec<_> = (0..1000).map(|i| ens.run_replica(&plan, i).unwrap()).collect();
    for (p, t) in [1.0, 5.0, 10.0].iter().enumerate() {
        let sq: Vec<f64> = recs.iter().map(|r| r.points[p].x.powi(2) / t).collect();
        let (m, se) = mean_se(&sq);
        assert!((m - 1.0).abs() < 4.0 * se, "t = {t}: {m} ± {se}");
        for r in &recs {
            assert_eq!(r.points[p].phi_integral, 0.0);
        }
    }
}

#[test]
fn frozen_constant_drift_is_exact() {
    let s = spec(64.0, 256);
    let c = 0.75;
    let zeta = FieldGrid::from_fn(s, s.plan(), |_| c);
    let mut r = PolymerReplica::with_field(&gauss(), zeta, 0.01).unwrap();
    r.frozen = true;
    for _ in 0..1000 {
        r.step_with(0.0).unwrap();
    }
    assert!((r.x - c * 10.0).abs() < 1e-12);
    assert!((r.phi_integral - c * 10.0).abs() < 1e-12);
}

#[test]
fn scheme_identity_and_occupation_mass() {
    let s = spec(64.0, 256);
    let k = gauss();
    let seeds = SeedTree::new(9);
    let r = PolymerReplica::init(&k, s, s.plan(), &mut seeds.stream(0, Purpose::Field), 0.0, 0.01).unwrap();
    let mut noise = Noise::new(seeds.stream(0, Purpose::Noise), 0.01);
    let obs = Observe::at_times(&[0.0, 1.0, 2.5, 5.0], 0.01);
    let (rec, end) = r.run(0, &mut noise, &obs).unwrap();
    for p in &rec.points {
        assert!((p.x - p.brownian - p.phi_integral).abs() < 1e-10);
    }
    assert!((end.occupation_mass() - end.t).abs() < 1e-12);
    assert_eq!(end.steps, 500);
}

#[test]
fn eta_view_is_centered_on_the_particle() {
    let s = spec(64.0, 256);
    let k = gauss();
    let seeds = SeedTree::new(2);
    let mut r = PolymerReplica::init(&k, s, s.plan(), &mut seeds.stream(0, Purpose::Field), 0.0, 0.01).unwrap();
    let at_zero = r.eta_view();
    for j in 0..s.n {
        assert!((at_zero.values[j] - r.zeta.values[j]).abs() < 1e-12);
    }
    let mut noise = Noise::new(seeds.stream(0, Purpose::Noise), 0.01);
    for _ in 0..300 {
        r.step(&mut noise).unwrap();
    }
    assert!((r.eta_view().values[0] - r.phi()).abs() < 1e-6);
}

#[test]
fn stationary_start_statistics() {
    let s = spec(32.0, 128);
    let k = gauss();
    let seeds = SeedTree::new(4);
    let plan = s.plan();
    for v in [0.0, 0.4] {
        let phi: Vec<f64> = (0..10_000)
            .map(|i| PolymerReplica::init(&k, s, plan.clone(), &mut seeds.stream(i, Purpose::Field), v, 0.01).unwrap().phi())
            .collect();
        let (m, se) = mean_se(&phi);
        assert!((m - v).abs() < 4.0 * se);
        let sq: Vec<f64> = phi.iter().map(|p| (p - v).powi(2)).collect();
        let (m2, se2) = mean_se(&sq);
        assert!((m2 - k.b(0.0)).abs() < 4.0 * se2);
    }
}

#[test]
fn local_time_residual_vanishes_trivially() {
    let s = spec(32.0, 128);
    let seeds = SeedTree::new(8);
    let r = PolymerReplica::init(&gauss(), s, s.plan(), &mut seeds.stream(0, Purpose::Field), 0.0, 0.01).unwrap();
    assert_eq!(r.local_time_consistency(&r.zeta.clone()), 0.0);
    let mut z = PolymerReplica::init(&Kernel::zero(), s, s.plan(), &mut seeds.stream(0, Purpose::Field), 0.0, 0.01).unwrap();
    let zeta0 = z.zeta.clone();
    let mut noise = Noise::new(seeds.stream(0, Purpose::Noise), 0.01);
    for _ in 0..200 {
        z.step(&mut noise).unwrap();
    }
    assert_eq!(z.local_time_consistency(&zeta0), 0.0);
}

#[test]
fn local_time_residual_converges() {
    let k = gauss();
    let seeds = SeedTree::new(21);
    let levels = [(64usize, 8u32), (128, 4), (256, 2), (512, 1)];
    let fine_dt = 9e-4;
    let mut residuals = vec![0.0; levels.len()];
    for rep in 0..4 {
        for (i, &(n, sub)) in levels.iter().enumerate() {
            let s = spec(32.0, n);
            let dt = fine_dt * sub as f64;
            let r = PolymerReplica::init(&k, s, s.plan(), &mut seeds.stream(rep, Purpose::Field), 0.0, dt).unwrap();
            let zeta0 = r.zeta.clone();
            let mut noise = Noise::refined(seeds.stream(rep, Purpose::Noise), dt, sub);
            let obs = Observe { output_steps: vec![(2.0 / dt).round() as u64], ..Observe::default() };
            let (_, end) = r.run(rep, &mut noise, &obs).unwrap();
            residuals[i] += end.local_time_consistency(&zeta0);
        }
    }
    for w in residuals.windows(2) {
        assert!(w[0] / w[1] >= 1.7, "{residuals:?}");
    }
}

#[test]
fn domain_exit_reports_replica() {
    let s = spec(8.0, 32);
    let zeta = FieldGrid::from_fn(s, s.plan(), |_| 50.0);
    let r = PolymerReplica::with_field(&gauss(), zeta, 0.01).unwrap();
    let mut noise = Noise::new(SeedTree::new(1).stream(0, Purpose::Noise), 0.01);
    let obs = Observe::at_times(&[10.0], 0.01);
    match r.run(7, &mut noise, &obs) {
        Err(Error::DomainExceeded { replica, .. }) => assert_eq!(replica, 7),
        other => panic!("expected domain error, got {other:?}"),
    }
}

#[test]
fn ensemble_is_schedule_independent() {
    let s = spec(64.0, 256);
    let ens = EnsembleSpec {
        kernel: gauss(),
        grid: s,
        dt: 0.01,
        mean_v: 0.0,
        seeds: SeedTree::new(11),
        observe: Observe::at_times(&[1.0, 2.0], 0.01),
    };
    let plan = s.plan();
    let run = |threads| {
        map_fold(
            64,
            threads,
            Vec::new,
            |i| ens.run_replica(&plan, i),
            |acc: &mut Vec<_>, r| acc.push(r),
            |a, mut b| a.append(&mut b),
        )
        .unwrap()
    };
    let mut a = run(1);
    let mut b = run(3);
    a.sort_by_key(|r| r.replica);
    b.sort_by_key(|r| r.replica);
    assert_eq!(a, b);
}

#[test]
fn brownian_increments_over_disjoint_windows() {
    let mut noise = Noise::new(SeedTree::new(3).stream(0, Purpose::Noise), 0.01);
    let mut w1 = Vec::new();
    let mut w2 = Vec::new();
    for _ in 0..5000 {
        let a: f64 = (0..100).map(|_| noise.next()).sum();
        let b: f64 = (0..100).map(|_| noise.next()).sum();
        w1.push(a * a);
        w2.push(a * b);
    }
    let (m1, se1) = mean_se(&w1);
    let (m2, se2) = mean_se(&w2);
    assert!((m1 - 1.0).abs() < 4.0 * se1);
    assert!(m2.abs() < 4.0 * se2);
}

#[test]
fn drs_controls() {
    let s = spec(64.0, 256);
    let plan = s.plan();
    let seeds = SeedTree::new(12);
    let steps = steps_for(&[0.5, 1.0], 0.01);
    let z = run_drs(&Kernel::zero(), s, plan.clone(), &seeds, 0, 0.01, &steps).unwrap();
    assert!(z.accum.iter().all(|&a| a == 0.0));
    // Short times: the walker barely moves, so Var(accum)/t² ≈ b(0).
    let k = gauss();
    let short = steps_for(&[0.05], 0.001);
    let v: Vec<f64> = (0..10_000)
        .map(|i| {
            let r = run_drs(&k, s, plan.clone(), &seeds, i, 0.001, &short).unwrap();
            (r.accum[0] / 0.05).powi(2)
        })
        .collect();
    let (m, se) = mean_se(&v);
    // Exact for Brownian Z: (2/t²)∫₀ᵗ(t−s)(1/2π)∫e^{-p²(1+s/2)}dp ds, within 2% of b(0) at t = 0.05.
    assert!((m - k.b(0.0)).abs() < 4.0 * se + 0.02 * k.b(0.0), "{m} ± {se}");
}
