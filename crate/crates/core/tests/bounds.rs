mod common;

use common::{rel, simpson};
use polylab::bounds::*;
use polylab::estimators::fit_exponent;
use polylab::kernels::Kernel;
use polylab::quad::QuadConfig;
use statrs::function::gamma::gamma;

fn catalog() -> Vec<Kernel> {
    vec![
        Kernel::gaussian(1.0, 1.0).unwrap(),
        Kernel::power_ir(1.0, 0.5, 1.0).unwrap(),
        Kernel::power_ir(1.0, -0.5, 1.0).unwrap(),
        Kernel::summable(1.0, 1.0).unwrap(),
    ]
}

fn decades(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (n - 1) as f64)).collect()
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    fit_exponent(x, y, 0..x.len()).unwrap().exponent
}

#[test]
fn resolvent_against_simpson() {
    let k = Kernel::<f64>::summable(1.0, 1.0).unwrap();
    for lam in [1e-3, 0.1] {
        let oracle = simpson(|p| p * p * (-p * p).exp() / (lam + 0.5 * p * p), -12.0, 12.0, 1_000_000) / std::f64::consts::TAU;
        assert!(rel(resolvent_s(&k, lam).unwrap(), oracle) < 1e-8, "λ = {lam}");
    }
    let g = Kernel::<f64>::gaussian(1.0, 1.0).unwrap();
    let lam = 0.05;
    let oracle = simpson(|p| (-p * p).exp() / (lam + 0.5 * p * p), -12.0, 12.0, 1_000_000) / std::f64::consts::TAU;
    assert!(rel(resolvent_s(&g, lam).unwrap(), oracle) < 1e-8);
}

#[test]
fn resolvent_is_linear_in_amplitude() {
    for lam in [1e-4, 1e-2] {
        let one = resolvent_s(&Kernel::<f64>::power_ir(1.0, 0.5, 1.0).unwrap(), lam).unwrap();
        let two = resolvent_s(&Kernel::<f64>::power_ir(2.0, 0.5, 1.0).unwrap(), lam).unwrap();
        assert_eq!(two, 2.0 * one);
    }
}

#[test]
fn k_at_zero_is_the_resolvent_and_even() {
    for k in catalog() {
        for lam in [1e-4, 1e-2] {
            assert!(rel(kernel_k(&k, lam, 0.0).unwrap(), resolvent_s(&k, lam).unwrap()) < 1e-9);
            let (a, b) = (kernel_k(&k, lam, 0.37).unwrap(), kernel_k(&k, lam, -0.37).unwrap());
            assert_eq!(a, b);
        }
    }
}

#[test]
fn infrared_scaling_of_resolvent_and_k() {
    let lams = decades(-5.0, -3.0, 9);
    for alpha in [-0.5, 0.0, 0.5] {
        let k = Kernel::<f64>::power_ir(100.0, alpha, 100.0).unwrap();
        let r: Vec<f64> = lams.iter().map(|&l| resolvent_s(&k, l).unwrap()).collect();
        let kk: Vec<f64> = lams.iter().map(|&l| kernel_k(&k, l, 0.0).unwrap()).collect();
        assert!((slope(&lams, &r) - (alpha - 1.0) / 2.0).abs() < 0.02, "α = {alpha}");
        assert!((slope(&lams, &kk) - (alpha - 1.0) / 2.0).abs() < 0.02, "α = {alpha}");
    }
}

#[test]
fn k_is_bounded_by_the_infrared_power_near_zero() {
    let k = Kernel::<f64>::power_ir(1.0, 0.0, 1.0).unwrap();
    let scaled: Vec<f64> = [1e-3, 1e-4, 1e-5]
        .iter()
        .map(|&lam: &f64| {
            let sup = (0..=10)
                .map(|i| kernel_k(&k, lam, lam.sqrt() * i as f64 / 10.0).unwrap())
                .fold(0.0, f64::max);
            sup * lam.sqrt()
        })
        .collect();
    let (lo, hi) = scaled.iter().fold((f64::MAX, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    assert!(hi / lo < 1.5, "{scaled:?}");
}

#[test]
fn closed_lower_bound() {
    assert_eq!(lower_bound_closed(&Kernel::<f64>::zero(), 1e-3).unwrap(), 0.0);
    for k in catalog() {
        for lam in [1e-2, 1e-3, 1e-4] {
            assert!(lower_bound_closed(&k, lam).unwrap() <= resolvent_s(&k, lam).unwrap());
        }
    }
    let k = Kernel::<f64>::power_ir(1.0, 0.0, 1.0).unwrap();
    let lams = decades(-6.0, -4.0, 5);
    let v: Vec<f64> = lams.iter().map(|&l| lower_bound_closed(&k, l).unwrap()).collect();
    assert!(slope(&lams, &v) <= -0.22, "{}", slope(&lams, &v));
}

#[test]
fn variational_ordering() {
    let z = Kernel::<f64>::zero();
    let g = PGrid::geometric(1e-4, 6.0, 64).unwrap();
    assert_eq!(lower_bound_variational(&z, 1e-3, &g).unwrap().value, 0.0);
    for k in catalog() {
        for lam in [1e-2, 1e-3, 1e-4] {
            let grid = PGrid::for_lambda(&k, lam, DEFAULT_P_POINTS).unwrap();
            let v = lower_bound_variational(&k, lam, &grid).unwrap().value;
            let c = lower_bound_closed(&k, lam).unwrap();
            let r = resolvent_s(&k, lam).unwrap();
            assert!(c <= v + 1e-6 && v <= r + 1e-6, "{} λ = {lam}: {c} {v} {r}", k.name());
        }
    }
}

#[test]
fn variational_grid_refinement() {
    for k in catalog() {
        let lam = 1e-3;
        let a = lower_bound_variational(&k, lam, &PGrid::for_lambda(&k, lam, 512).unwrap()).unwrap().value;
        let b = lower_bound_variational(&k, lam, &PGrid::for_lambda(&k, lam, 1024).unwrap()).unwrap().value;
        assert!(rel(a, b) < 0.005, "{}", k.name());
    }
}

#[test]
fn variational_without_cross_term_is_the_resolvent() {
    // With a tiny amplitude the cross term is negligible and the discrete
    // problem reduces to a trapezoid rule for the resolvent.
    let k = Kernel::<f64>::gaussian(1e-9, 1.0).unwrap();
    let lam = 0.01;
    let grid = PGrid::for_lambda(&k, lam, 2048).unwrap();
    let v = lower_bound_variational(&k, lam, &grid).unwrap().value;
    let r = resolvent_s(&k, lam).unwrap();
    assert!(rel(v, r) < 1e-4, "{v} {r}");
}

#[test]
fn e_hat_exponents() {
    for alpha in [-0.5, 0.0, 0.5] {
        let k = Kernel::<f64>::power_ir(100.0, alpha, 100.0).unwrap();
        let up = e_hat_sandwich(&k, &decades(-5.0, -3.0, 9), DEFAULT_P_POINTS, false).unwrap();
        let ex = up.exponents.unwrap();
        assert!((ex.e_hat_upper.exponent + (5.0 - alpha) / 2.0).abs() < 0.03, "α = {alpha}");
        let lo = e_hat_sandwich(&k, &decades(-6.0, -4.0, 9), DEFAULT_P_POINTS, false).unwrap();
        let ex = lo.exponents.unwrap();
        assert!(ex.e_hat_lower.exponent <= -(9.0 - 2.0 * alpha + alpha * alpha) / 4.0 + 0.03, "α = {alpha}");
    }
}

#[test]
fn summable_diffusivity_window() {
    let k = Kernel::<f64>::summable(1.0, 1.0).unwrap();
    let rho = k.rho_squared(QuadConfig::default()).unwrap().finite().unwrap();
    for lam in [1e-4, 1e-6] {
        let d = lam * lam * e_hat_from_resolvent(lam, resolvent_s(&k, lam).unwrap());
        assert!((1.0..=1.0 + rho).contains(&d), "{d}");
    }
    // λ → 0 limit: 1 + (2/π) ρ².
    let d = 1e-8f64.powi(2) * e_hat_from_resolvent(1e-8, resolvent_s(&k, 1e-8).unwrap());
    assert!((d - 1.0 - 2.0 / std::f64::consts::PI * rho).abs() < 1e-3);
}

#[test]
fn tauber_ratios() {
    // Rows with t ≤ T/20 keep the truncated tail below e^{-20} relative.
    let times: Vec<f64> = (1..=40_000).map(|i| i as f64 * 0.05).collect();
    let horizon = 2000.0;
    let keep = |t: f64| (5.0..=horizon / 20.0).contains(&t);
    let lin: Vec<f64> = times.clone();
    for row in tauber_report(&times, &lin).unwrap().iter().filter(|r| keep(r.t)) {
        assert!((row.ratio - 1.0).abs() < 1e-3, "{row:?}");
    }
    let pow: Vec<f64> = times.iter().map(|t| t.powf(1.5)).collect();
    for row in tauber_report(&times, &pow).unwrap().iter().filter(|r| keep(r.t)) {
        assert!((row.ratio - 1.0 / gamma(2.5)).abs() < 1e-3, "{row:?}");
    }
    assert!((1.0 / gamma(2.5) - 0.752).abs() < 1e-3);
}
