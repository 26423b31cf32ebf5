//! The ten acceptance criteria.

use std::f64::consts::PI;

use polylab::bounds::{
    e_hat_from_resolvent, e_hat_sandwich, kernel_k, lower_bound_closed, lower_bound_variational, resolvent_s,
    tauber_report, PGrid, DEFAULT_P_POINTS,
};
use polylab::dynamics::{run_drs, steps_for, EnsembleSpec, Noise, Observe, PolymerReplica};
use polylab::estimators::{
    ensemble_stats, fit_exponent, laplace_of_stats, laplace_transform, mc_resolvent, merge_stats, window_between,
    Estimate, EnsembleStats, Layout, DEFAULT_GROUPS,
};
use polylab::dynamics::{ReplicaRecord, RecordPoint};
use polylab::field::{sample_stationary, FieldGrid, GridSpec};
use polylab::kernels::{Kernel, RhoSquared};
use polylab::quad::QuadConfig;
use polylab::rng::{Purpose, SeedTree};
use polylab::stationarity::{
    covariance_preservation, gaussian_identity_check, mgf_drift, pairing, yaglom_flip_check, Mutation, TestFunction,
};
use statrs::function::gamma::gamma;

use crate::oracles::{curvature, gaussian_b, mean_se, scenery_variance, simpson, summable_rho_squared};
use crate::runs::{self, Runs};
use crate::{
    Check, DRS_REL_TOL, LOCAL_TIME_FACTOR, MGF_TOL, ORDER_TOL, RUNTIME_TARGET_SECS, SIGMAS, SLOPE_TOL_E_HAT,
    SLOPE_TOL_RESOLVENT, SUPER_FLOOR, SUPER_WINDOW,
};

pub fn title(id: u8) -> &'static str {
    match id {
        1 => "stationarity of the environment",
        2 => "MGF drift",
        3 => "law of large numbers",
        4 => "Yaglom decomposition",
        5 => "diffusive sandwich",
        6 => "superdiffusivity",
        7 => "analytic exponents",
        8 => "variational ordering",
        9 => "local-time consistency",
        10 => "oracle equivalences",
        _ => "unknown",
    }
}

pub fn run(id: u8, runs: &Runs, log: &mut dyn FnMut(&str)) -> Vec<Check> {
    match id {
        1 => stationarity(runs, log),
        2 => mgf(runs),
        3 => lln(runs, log),
        4 => yaglom(runs, log),
        5 => diffusive(runs, log),
        6 => superdiffusive(runs, log),
        7 => exponents(),
        8 => ordering(runs, log),
        9 => local_time(runs),
        _ => vec![Check::new("criterion", false, "no such criterion")],
    }
}

pub fn catalog() -> Vec<Kernel> {
    vec![
        Kernel::gaussian(1.0, 1.0).expect("valid"),
        Kernel::power_ir(1.0, -0.5, 1.0).expect("valid"),
        Kernel::power_ir(1.0, 0.0, 1.0).expect("valid"),
        Kernel::power_ir(1.0, 0.5, 1.0).expect("valid"),
        Kernel::summable(1.0, 1.0).expect("valid"),
    ]
}

fn label(k: &Kernel) -> String {
    match k.infrared() {
        polylab::kernels::Infrared::Exponent(a) if k.name() == "power-ir" => format!("power-ir α={a}"),
        _ => k.name().to_string(),
    }
}

fn decades(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (n - 1) as f64)).collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// `|est − target| ≤ SIGMAS·se + slack`.
fn mc_check(label: impl Into<String>, est: Estimate, target: f64, slack: f64) -> Check {
    let d = (est.value - target).abs();
    let pass = est.stderr.is_some() && d <= SIGMAS * est.se() + slack;
    Check::new(label, pass, format!("{:.6} ± {:.2e} vs {:.6} (z = {:.2})", est.value, est.se(), target, est.z(target)))
}

fn exact_check(label: impl Into<String>, got: f64, want: f64, tol: f64) -> Check {
    let err = (got - want).abs();
    Check::new(label, err <= tol, format!("{got:.12e} vs {want:.12e} (|Δ| = {err:.1e}, tol {tol:.0e})"))
}

fn rel_check(label: impl Into<String>, got: f64, want: f64, tol: f64) -> Check {
    let r = rel(got, want);
    Check::new(label, r <= tol, format!("{got:.10} vs {want:.10} (rel {r:.1e}, tol {tol:.0e})"))
}

macro_rules! need {
    ($r:expr, $what:expr) => {
        match $r {
            Ok(v) => v,
            Err(e) => return vec![Check::failed($what, e)],
        }
    };
}

fn scaled(e: Estimate, f: f64) -> Estimate {
    Estimate { value: e.value * f, stderr: e.stderr.map(|s| s * f.abs()) }
}

// 1 ---------------------------------------------------------------------

fn stationarity(runs: &Runs, log: &mut dyn FnMut(&str)) -> Vec<Check> {
    let r = need!(runs.stationarity(), "stationarity run");
    log(&format!("  stationarity run: {} replicas in {:.0} s", r.value.replica_count, r.seconds));
    let k = runs::gaussian();
    let rows = need!(
        covariance_preservation(&k, &r.value, &runs::SNAPSHOT_TIMES, &runs::snapshot_lag_x()),
        "covariance rows"
    );
    let mut out = Vec::new();
    for &t in &runs::SNAPSHOT_TIMES {
        let at: Vec<_> = rows.iter().filter(|row| row.t == t).collect();
        let worst_mean = at.iter().map(|row| row.mean.z).fold(0.0, f64::max);
        let worst_cov = at.iter().map(|row| row.cov.z).fold(0.0, f64::max);
        out.push(Check::new(
            format!("t = {t}: mean of η at {} lags", at.len()),
            at.len() == 17 && worst_mean <= SIGMAS,
            format!("max z = {worst_mean:.2}"),
        ));
        out.push(Check::new(
            format!("t = {t}: E[η(x)η(0)] against b(x) at {} lags", at.len()),
            at.len() == 17 && worst_cov <= SIGMAS,
            format!("max z = {worst_cov:.2}"),
        ));
    }
    out.push(Check::new(
        "replicas",
        r.value.replica_count == runs::REPLICAS,
        format!("{}", r.value.replica_count),
    ));
    out.push(Check::new(
        "runtime target",
        r.seconds <= RUNTIME_TARGET_SECS,
        format!("{:.0} s (target {RUNTIME_TARGET_SECS} s)", r.seconds),
    ));
    out
}

// 2 ---------------------------------------------------------------------

fn test_functions(seed: u64, n: u64) -> Vec<TestFunction> {
    let seeds = SeedTree::new(seed);
    (0..n).map(|i| TestFunction::random(&mut seeds.stream(i, Purpose::TestFunction), 1.0)).collect()
}

fn mgf(runs: &Runs) -> Vec<Check> {
    let fs = test_functions(runs.opts.seed, 20);
    let mut out = Vec::new();
    for k in catalog() {
        let mut worst: f64 = 0.0;
        for u in &fs {
            match mgf_drift(&k, u, Mutation::None) {
                Ok(d) => worst = worst.max(d.value.abs()),
                Err(e) => return vec![Check::failed(label(&k), e)],
            }
        }
        out.push(Check::new(
            format!("{}: 20 random test functions", label(&k)),
            worst < MGF_TOL,
            format!("max |drift| = {worst:.2e}"),
        ));
    }
    out.push(mutation_check(&fs));
    out
}

fn mutation_check(fs: &[TestFunction]) -> Check {
    let k = runs::gaussian();
    let mut smallest = f64::INFINITY;
    for u in fs {
        for m in [Mutation::FlipGradientTerm, Mutation::DropLaplacianTerm] {
            match mgf_drift(&k, u, m) {
                Ok(d) => smallest = smallest.min(d.value.abs()),
                Err(e) => return Check::failed("mutated drift", e),
            }
        }
    }
    Check::new("sign-broken drift is detected", smallest > 1e3 * MGF_TOL, format!("min |drift| = {smallest:.2e}"))
}

// 3 ---------------------------------------------------------------------

fn lln(runs: &Runs, log: &mut dyn FnMut(&str)) -> Vec<Check> {
    let big = &need!(runs.big(), "main run").value;
    log(&format!("  main run: {} replicas, max |X| = {:.1}", big.replica_count, big.max_abs_x));
    let last = big.times.len() - 1;
    let t = big.times[last];
    let mut out = vec![mc_check(format!("mean X({t})/t"), scaled(big.mean_x[last], 1.0 / t), 0.0, 0.0)];
    let bal = need!(runs.ballistic(), "ballistic run");
    log(&format!("  ballistic run: {} replicas, max |X| = {:.1}", bal.replica_count, bal.max_abs_x));
    for (i, &t) in bal.times.iter().enumerate() {
        out.push(mc_check(
            format!("ballistic v = {}: mean X({t})/t", runs::BALLISTIC_V),
            scaled(bal.mean_x[i], 1.0 / t),
            runs::BALLISTIC_V,
            0.0,
        ));
    }
    out
}

// 4 ---------------------------------------------------------------------

fn yaglom(runs: &Runs, _log: &mut dyn FnMut(&str)) -> Vec<Check> {
    let big = &need!(runs.big(), "main run").value;
    let mut out = Vec::new();
    for w in &big.yaglom {
        out.push(mc_check(format!("({}, {}): lhs − rhs", w.s, w.t), w.diff, 0.0, 0.0));
        out.push(mc_check(format!("({}, {}): corr(ΔB, Δ∫φ)", w.s, w.t), w.corr, 0.0, 0.0));
    }
    if big.yaglom.len() != runs::WINDOWS.len() {
        out.push(Check::new("windows", false, format!("{} of {}", big.yaglom.len(), runs::WINDOWS.len())));
    }
    out
}

// 5 ---------------------------------------------------------------------

fn diffusive(runs: &Runs, log: &mut dyn FnMut(&str)) -> Vec<Check> {
    let k = runs::summable();
    let rho2 = summable_rho_squared(1.0, 1.0);
    let mut out = Vec::new();
    match runs.summable() {
        Ok(s) => {
            log(&format!("  summable run: {} replicas", s.replica_count));
            for (i, &t) in s.times.iter().enumerate() {
                if !(20.0..=100.0).contains(&t) {
                    continue;
                }
                let d = s.d_of_t[i];
                let (lo, hi) = (1.0 - SIGMAS * d.se(), 1.0 + rho2 + SIGMAS * d.se());
                out.push(Check::new(
                    format!("D({t}) in [1, 1 + ρ²]"),
                    d.stderr.is_some() && d.value >= lo && d.value <= hi,
                    format!("{:.4} ± {:.4}", d.value, d.se()),
                ));
            }
        }
        Err(e) => out.push(Check::failed("summable run", e)),
    }
    match runs.drs() {
        Ok(d) => {
            log(&format!("  scenery run: {} replicas, max |Z| = {:.1}", d.replica_count, d.max_abs_z));
            let last = d.times.len() - 1;
            let v = d.var_over_t[last];
            let limit = 2.0 / PI * rho2;
            out.push(Check::new(
                format!("Var A({})/t → ρ² = √π within 10%", d.times[last]),
                rel(v.value, rho2) <= DRS_REL_TOL,
                format!(
                    "{:.4} ± {:.4} vs {rho2:.4} (rel {:.2}); the (1/2π) transform convention gives the limit (2/π)ρ² = {limit:.4}",
                    v.value,
                    v.se(),
                    rel(v.value, rho2)
                ),
            ));
            out.extend(scenery_oracle_checks(&k, d));
        }
        Err(e) => out.push(Check::failed("scenery run", e)),
    }
    out
}

/// Monte Carlo `Var A(t)` against the closed line formula.
fn scenery_oracle_checks(k: &Kernel, d: &polylab::estimators::DrsStats) -> Vec<Check> {
    d.times
        .iter()
        .zip(&d.variance)
        .map(|(&t, v)| {
            let exact = scenery_variance(|p| k.b_hat(p), k.cutoff(), t);
            mc_check(format!("Var A({t}) against the line formula"), *v, exact, 0.02 * exact)
        })
        .collect()
}

// 6 ---------------------------------------------------------------------

fn superdiffusive(runs: &Runs, log: &mut dyn FnMut(&str)) -> Vec<Check> {
    let big = &need!(runs.big(), "main run").value;
    let w = window_between(&big.times, 20.0, 100.0);
    let e: Vec<f64> = big.e_of_t.iter().map(|e| e.value).collect();
    let fit = need!(fit_exponent(&big.times, &e, w), "fit");
    log(&format!("  E(t) exponent on [20, 100]: {:.4} (reference 4/3)", fit.exponent));
    let mut out = vec![
        Check::new(
            "E(t) exponent on [20, 100]",
            (SUPER_WINDOW.0..=SUPER_WINDOW.1).contains(&fit.exponent),
            format!("{:.4} (window [{}, {}], reference 4/3 = {:.4})", fit.exponent, SUPER_WINDOW.0, SUPER_WINDOW.1, 4.0 / 3.0),
        ),
        Check::new("exponent above diffusive", fit.exponent > SUPER_FLOOR, format!("{:.4} > {SUPER_FLOOR}", fit.exponent)),
        Check::new("replicas", big.replica_count >= runs::REPLICAS, format!("{}", big.replica_count)),
    ];
    match runs.half_dt() {
        Ok(h) => {
            for (j, &t) in h.times.iter().enumerate() {
                let i = big.times.iter().position(|&s| (s - t).abs() < 1e-9);
                let Some(i) = i else {
                    out.push(Check::new(format!("dt halving at t = {t}"), false, "time missing from main run"));
                    continue;
                };
                let (a, b) = (big.e_of_t[i], h.e_of_t[j]);
                let se = (a.se().powi(2) + b.se().powi(2)).sqrt();
                out.push(Check::new(
                    format!("E({t}) at dt and dt/2"),
                    (a.value - b.value).abs() <= SIGMAS * se,
                    format!("{:.3} vs {:.3} (combined se {:.3})", a.value, b.value, se),
                ));
            }
        }
        Err(e) => out.push(Check::failed("dt halving run", e)),
    }
    out
}

// 7 ---------------------------------------------------------------------

fn exponents() -> Vec<Check> {
    let upper_grid = decades(-5.0, -3.0, 9);
    let lower_grid = decades(-6.0, -4.0, 9);
    let mut out = Vec::new();
    for alpha in [-0.5, 0.0, 0.5] {
        let k = need!(Kernel::power_ir(100.0, alpha, 100.0), "kernel");
        let target = (alpha - 1.0) / 2.0;
        let up = need!(e_hat_sandwich(&k, &upper_grid, DEFAULT_P_POINTS, false), "upper sandwich");
        let lo = need!(e_hat_sandwich(&k, &lower_grid, DEFAULT_P_POINTS, false), "lower sandwich");
        let (Some(ue), Some(le)) = (up.exponents, lo.exponents) else {
            out.push(Check::new(format!("α = {alpha}"), false, "no fit"));
            continue;
        };
        let kk: Vec<f64> = match upper_grid.iter().map(|&l| kernel_k(&k, l, 0.0)).collect() {
            Ok(v) => v,
            Err(e) => return vec![Check::failed("K(λ, 0)", e)],
        };
        let k_fit = need!(fit_exponent(&upper_grid, &kk, 0..kk.len()), "K fit");
        let s = ue.resolvent_upper.exponent;
        out.push(Check::new(
            format!("α = {alpha}: slope of resolvent_S"),
            (s - target).abs() <= SLOPE_TOL_RESOLVENT,
            format!("{s:.4} vs {target:.4}"),
        ));
        out.push(Check::new(
            format!("α = {alpha}: slope of K(λ, 0)"),
            (k_fit.exponent - target).abs() <= SLOPE_TOL_RESOLVENT,
            format!("{:.4} vs {target:.4}", k_fit.exponent),
        ));
        let eu = ue.e_hat_upper.exponent;
        let eu_ref = -(5.0 - alpha) / 2.0;
        out.push(Check::new(
            format!("α = {alpha}: slope of E_hat_upper"),
            (eu - eu_ref).abs() <= SLOPE_TOL_E_HAT,
            format!("{eu:.4} vs {eu_ref:.4}"),
        ));
        let el = le.e_hat_lower.exponent;
        let el_ref = -(9.0 - 2.0 * alpha + alpha * alpha) / 4.0;
        out.push(Check::new(
            format!("α = {alpha}: slope of E_hat_lower"),
            el <= el_ref + SLOPE_TOL_E_HAT,
            format!("{el:.4} ≤ {:.4}", el_ref + SLOPE_TOL_E_HAT),
        ));
    }
    out
}

// 8 ---------------------------------------------------------------------

pub const MC_LAMBDAS: [f64; 4] = [0.05, 0.1, 0.2, 0.5];

fn ordering(runs: &Runs, _log: &mut dyn FnMut(&str)) -> Vec<Check> {
    let mut out = Vec::new();
    for k in catalog() {
        let mut ok = true;
        let mut detail = Vec::new();
        for lam in [1e-2, 1e-3, 1e-4] {
            let grid = need!(PGrid::for_lambda(&k, lam, DEFAULT_P_POINTS), "grid");
            let c = need!(lower_bound_closed(&k, lam), "closed bound");
            let v = need!(lower_bound_variational(&k, lam, &grid), "variational bound").value;
            let r = need!(resolvent_s(&k, lam), "resolvent");
            ok &= c <= v + ORDER_TOL && v <= r + ORDER_TOL;
            detail.push(format!("λ={lam:.0e}: {c:.4e} ≤ {v:.4e} ≤ {r:.4e}"));
        }
        out.push(Check::new(format!("{}: closed ≤ variational ≤ resolvent_S", label(&k)), ok, detail.join("; ")));
    }
    let big = &need!(runs.big(), "main run").value;
    let k = runs::gaussian();
    for lam in MC_LAMBDAS {
        let (mc, tail) = need!(mc_resolvent(big, lam), "MC resolvent");
        let grid = need!(PGrid::for_lambda(&k, lam, DEFAULT_P_POINTS), "grid");
        let lo = need!(lower_bound_variational(&k, lam, &grid), "variational bound").value;
        let hi = need!(resolvent_s(&k, lam), "resolvent");
        let slack = SIGMAS * mc.se() + tail;
        out.push(Check::new(
            format!("λ = {lam}: MC resolvent inside [variational, resolvent_S]"),
            mc.stderr.is_some() && mc.value + slack >= lo && mc.value - slack <= hi,
            format!("{lo:.5} ≤ {:.5} ± {:.5} (tail {tail:.1e}) ≤ {hi:.5}", mc.value, mc.se()),
        ));
    }
    out
}

// 9 ---------------------------------------------------------------------

/// Max-norm residuals summed over replicas at `h = 1/2 … 1/16` with
/// `dt = 7.2e−3 … 9e−4`; coarse noise is summed from the finest level.
pub fn local_time_residuals(seed: u64) -> Result<Vec<f64>, polylab::Error> {
    let k = runs::gaussian();
    let seeds = SeedTree::new(seed);
    let levels = [(64usize, 8u32), (128, 4), (256, 2), (512, 1)];
    let fine_dt = 9e-4;
    let mut res = vec![0.0; levels.len()];
    for rep in 0..4 {
        for (i, &(n, sub)) in levels.iter().enumerate() {
            let s = GridSpec::new(32.0, n)?;
            let dt = fine_dt * sub as f64;
            let r = PolymerReplica::init(&k, s, s.plan(), &mut seeds.stream(rep, Purpose::Field), 0.0, dt)?;
            let zeta0 = r.zeta.clone();
            let mut noise = Noise::refined(seeds.stream(rep, Purpose::Noise), dt, sub);
            let obs = Observe { output_steps: vec![(2.0 / dt).round() as u64], ..Observe::default() };
            let (_, end) = r.run(rep, &mut noise, &obs)?;
            res[i] += end.local_time_consistency(&zeta0);
        }
    }
    Ok(res)
}

fn local_time(runs: &Runs) -> Vec<Check> {
    let res = need!(local_time_residuals(runs.opts.seed), "local-time runs");
    res.windows(2)
        .enumerate()
        .map(|(i, w)| {
            let f = w[0] / w[1];
            Check::new(
                format!("refinement {} → {}", i + 1, i + 2),
                f >= LOCAL_TIME_FACTOR,
                format!("residual {:.3e} → {:.3e}, factor {f:.2}", w[0], w[1]),
            )
        })
        .collect()
}

// 10 --------------------------------------------------------------------

/// Oracle checks that need no shared ensemble; run before everything else.
pub fn oracles_first(runs: &Runs) -> Vec<Check> {
    let mut out = Vec::new();
    out.extend(kernel_oracles());
    out.extend(field_oracles(runs));
    out.extend(dynamics_oracles(runs));
    out.extend(estimator_oracles());
    out.extend(bounds_oracles());
    out.extend(stationarity_oracles(runs));
    out
}

fn kernel_oracles() -> Vec<Check> {
    let cfg = QuadConfig::default();
    let mut out = Vec::new();
    let s = runs::summable();
    let rho = |k: &Kernel| k.rho_squared(cfg).ok().and_then(RhoSquared::finite).unwrap_or(f64::NAN);
    out.push(rel_check("summable ρ² = √π", rho(&s), summable_rho_squared(1.0, 1.0), 1e-10));
    out.push(rel_check("summable a = 2: ρ² = 2√π", rho(&s.scaled(2.0)), 2.0 * PI.sqrt(), 1e-10));
    let div = matches!(runs::gaussian().rho_squared(cfg), Ok(RhoSquared::Divergent));
    out.push(Check::new("gaussian ρ² divergent", div, ""));
    let g = runs::gaussian();
    out.push(rel_check("gaussian b(0) = 1/(2√π)", g.b(0.0), 0.5 / PI.sqrt(), 1e-13));
    match g.inverse_transform(1.0) {
        Ok(v) => out.push(rel_check("gaussian b(1) by quadrature", v, gaussian_b(1.0, 1.0, 1.0), 1e-10)),
        Err(e) => out.push(Check::failed("gaussian b(1) by quadrature", e)),
    }
    out.push(exact_check("b′(0) = 0", g.b_prime(0.0), 0.0, 0.0));
    for x in [0.3, 1.7] {
        out.push(exact_check(format!("b({x}) = b(−{x})"), g.b(x) - g.b(-x), 0.0, 1e-16));
    }
    out
}

fn field_oracles(runs: &Runs) -> Vec<Check> {
    let k = runs::gaussian();
    let mut out = Vec::new();
    let spec = need!(GridSpec::new(256.0, 1024), "grid");
    let plan = spec.plan();
    let seeds = runs.seeds(100);
    let n = 10_000u64;
    let (mut v0, mut c1, mut d0, mut m7) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for i in 0..n {
        let f = sample_stationary(&k, spec, plan.clone(), &mut seeds.stream(i, Purpose::Field), 0.0);
        v0.push(f.values[0] * f.values[0]);
        c1.push(f.values[0] * f.values[4]);
        let d = f.derivative();
        d0.push(d.values[0] * d.values[0]);
        let g = sample_stationary(&k, spec, plan.clone(), &mut seeds.stream(i, Purpose::Other(7)), 0.7);
        m7.push(g.values[17]);
    }
    let est = |v: &[f64]| {
        let (m, se) = mean_se(v);
        Estimate { value: m, stderr: Some(se) }
    };
    out.push(mc_check("field: node variance → b(0)", est(&v0), gaussian_b(1.0, 1.0, 0.0), 0.0));
    out.push(mc_check("field: lag-1 covariance → b(1)", est(&c1), gaussian_b(1.0, 1.0, 1.0), 0.0));
    out.push(mc_check("field: derivative variance → −b″(0)", est(&d0), curvature(|x| k.b(x), 1e-3), 0.0));
    out.push(mc_check("field: mean_v = 0.7 shifts the mean", est(&m7), 0.7, 0.0));

    let sine = FieldGrid::from_fn(spec, plan.clone(), |x: f64| (2.0 * PI * x / 256.0).sin());
    out.push(exact_check("interpolate sin at L/8", sine.interpolate(32.0), (PI / 4.0).sin(), 1e-4));
    let dsine = sine.derivative();
    let worst = dsine
        .values
        .iter()
        .enumerate()
        .map(|(j, v)| (v - 2.0 * PI / 256.0 * (2.0 * PI * spec.node(j) / 256.0).cos()).abs())
        .fold(0.0, f64::max);
    out.push(exact_check("derivative of sin", worst, 0.0, 1e-10));
    let constant = FieldGrid::from_fn(spec, plan.clone(), |_| 3.0);
    let worst = constant.derivative().values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    out.push(exact_check("derivative of a constant", worst, 0.0, 1e-12));
    let f = sample_stationary(&k, spec, plan.clone(), &mut seeds.stream(0, Purpose::Other(8)), 0.0);
    let by_l = f.shift(256.0);
    let worst = f.values.iter().zip(&by_l.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    out.push(exact_check("shift by L", worst, 0.0, 1e-12));
    let by_h = f.shift(spec.spacing());
    let worst = (0..spec.n).map(|j| (by_h.values[j] - f.values[(j + 1) % spec.n]).abs()).fold(0.0, f64::max);
    out.push(exact_check("shift by one spacing", worst, 0.0, 1e-10));
    out
}

fn dynamics_oracles(runs: &Runs) -> Vec<Check> {
    let k = runs::gaussian();
    let mut out = Vec::new();
    let spec = need!(GridSpec::new(64.0, 256), "grid");
    let plan = spec.plan();
    let h = spec.spacing();
    let guard = PolymerReplica::with_field(&k, FieldGrid::zeros(spec, plan.clone()), h * h);
    out.push(Check::new("dt = spacing² is rejected", guard.is_err(), ""));

    let dt = 0.01;
    let mut r = need!(PolymerReplica::with_field(&k, FieldGrid::zeros(spec, plan.clone()), dt), "replica");
    need!(r.step_with(0.1), "step");
    let worst = (0..spec.n)
        .map(|j| {
            let x = spec.node(j);
            let image = x - 64.0 * (x / 64.0).round();
            (r.zeta.values[j] - k.b_prime(-image) * dt).abs()
        })
        .fold(0.0, f64::max);
    out.push(exact_check("one step from ζ ≡ 0 gives b′(−x)·dt", worst, 0.0, 1e-15));

    let c = 0.3;
    let mut fr = need!(PolymerReplica::with_field(&k, FieldGrid::from_fn(spec, plan.clone(), |_| c), dt), "replica");
    fr.frozen = true;
    let mut noise = Noise::new(runs.seeds(101).stream(0, Purpose::Noise), dt);
    for _ in 0..500 {
        need!(fr.step(&mut noise), "step");
    }
    out.push(exact_check("frozen constant drift: X − B = c·t", fr.x - fr.brownian_sum, c * fr.t, 1e-12));

    let seeds = runs.seeds(102);
    let z = need!(run_drs(&Kernel::zero(), spec, plan.clone(), &seeds, 0, dt, &steps_for(&[1.0], dt)), "scenery");
    out.push(exact_check("b ≡ 0: scenery functional vanishes", z.accum[0], 0.0, 0.0));

    let short = steps_for(&[0.05], 1e-3);
    let mut v = Vec::new();
    for i in 0..10_000 {
        match run_drs(&k, spec, plan.clone(), &seeds, i, 1e-3, &short) {
            Ok(r) => v.push((r.accum[0] / 0.05).powi(2)),
            Err(e) => return vec![Check::failed("short scenery run", e)],
        }
    }
    let (m, se) = mean_se(&v);
    // Var A(t)/t² = b(0) − O(t): 2% slack at t = 0.05.
    out.push(mc_check("scenery Var A(t)/t² → b(0) as t → 0", Estimate { value: m, stderr: Some(se) }, k.b(0.0), 0.02 * k.b(0.0)));

    // Zero kernel: Brownian motion, and the Yaglom identity holds exactly.
    let observe = Observe::at_times(&[0.0, 1.0, 2.0], dt);
    let mut layout = Layout::from_observe(&observe, dt);
    layout.windows = vec![(0, 2), (1, 2)];
    let spec0 = EnsembleSpec { kernel: Kernel::zero(), grid: spec, dt, mean_v: 0.0, seeds: runs.seeds(103), observe };
    let s0 = need!(ensemble_stats(&spec0, &layout, 1000, runs.opts.threads, DEFAULT_GROUPS), "zero-kernel run");
    for w in &s0.yaglom {
        out.push(exact_check(format!("b ≡ 0: rhs = t − s on ({}, {})", w.s, w.t), w.rhs.value, w.t - w.s, 0.0));
        out.push(exact_check(format!("b ≡ 0: corr = 0 on ({}, {})", w.s, w.t), w.corr.value, 0.0, 0.0));
    }
    out.push(mc_check("b ≡ 0: E X(2)²/2 → 1", s0.d_of_t[2], 1.0, 0.0));
    out
}

fn record(t: f64, x: f64) -> ReplicaRecord {
    ReplicaRecord {
        replica: 0,
        points: vec![RecordPoint { t, x, brownian: x, phi_integral: 0.0, phi: 0.0 }],
        phi_series: Vec::new(),
        snapshots: Vec::new(),
        max_abs_x: x.abs(),
    }
}

fn estimator_oracles() -> Vec<Check> {
    let mut out = Vec::new();
    match merge_stats(&[record(1.0, 2.0)], Layout::simple(vec![1.0]), DEFAULT_GROUPS) {
        Ok(s) => out.push(Check::new(
            "single record: E(1) = 4, no standard error",
            s.e_of_t[0].value == 4.0 && s.e_of_t[0].stderr.is_none(),
            format!("{:?}", s.e_of_t[0]),
        )),
        Err(e) => out.push(Check::failed("single record", e)),
    }
    let times: Vec<f64> = (1..=50_000).map(|i| i as f64 * 0.01).collect();
    let lambdas = [0.1, 0.2, 0.5, 1.0];
    let pairs: [(&str, Box<dyn Fn(f64) -> f64>, Box<dyn Fn(f64) -> f64>, f64); 3] = [
        ("E = t", Box::new(|t| t), Box::new(|l: f64| l.powi(-2)), 0.01),
        ("E = t²", Box::new(|t| t * t), Box::new(|l: f64| 2.0 * l.powi(-3)), 0.01),
        ("E = t^1.4", Box::new(|t: f64| t.powf(1.4)), Box::new(|l: f64| gamma(2.4) * l.powf(-2.4)), 0.02),
    ];
    for (name, e, lap, tol) in pairs {
        let vals: Vec<f64> = times.iter().map(|&t| e(t)).collect();
        match laplace_transform(&times, &vals, &lambdas) {
            Ok(est) => {
                let worst = lambdas.iter().zip(&est.e_hat).map(|(&l, &v)| rel(v, lap(l))).fold(0.0, f64::max);
                out.push(Check::new(
                    format!("Laplace pair {name} on λ ∈ [0.1, 1]"),
                    worst <= tol,
                    format!("max rel {worst:.1e} (tol {tol})"),
                ));
            }
            Err(e) => out.push(Check::failed(format!("Laplace pair {name}"), e)),
        }
    }
    let x = [1.0, 2.0, 4.0, 8.0];
    let y: Vec<f64> = x.iter().map(|v: &f64| v.powf(1.5)).collect();
    match fit_exponent(&x, &y, 0..4) {
        Ok(f) => out.push(exact_check("fit of t^1.5", f.exponent, 1.5, 1e-12)),
        Err(e) => out.push(Check::failed("fit of t^1.5", e)),
    }
    out
}

fn bounds_oracles() -> Vec<Check> {
    let mut out = Vec::new();
    let s = runs::summable();
    for lam in [1e-3, 0.1] {
        let oracle = simpson(|p| p * p * (-p * p).exp() / (lam + 0.5 * p * p), -12.0, 12.0, 1_000_000) / (2.0 * PI);
        match resolvent_s(&s, lam) {
            Ok(v) => out.push(rel_check(format!("resolvent_S(λ = {lam}) against Simpson"), v, oracle, 1e-8)),
            Err(e) => out.push(Check::failed("resolvent_S", e)),
        }
    }
    let p = need!(Kernel::power_ir(1.0, 0.5, 1.0), "kernel");
    match (resolvent_s(&p, 1e-3), resolvent_s(&p.scaled(2.0), 1e-3)) {
        (Ok(a), Ok(b)) => out.push(exact_check("amplitude doubling doubles resolvent_S", b, 2.0 * a, 0.0)),
        _ => out.push(Check::new("amplitude doubling", false, "quadrature error")),
    }
    for k in catalog() {
        match (kernel_k(&k, 1e-3, 0.0), resolvent_s(&k, 1e-3)) {
            (Ok(a), Ok(b)) => out.push(rel_check(format!("{}: K(λ, 0) = resolvent_S", label(&k)), a, b, 1e-9)),
            _ => out.push(Check::new("K(λ, 0)", false, "quadrature error")),
        }
    }
    let z = Kernel::zero();
    out.push(exact_check("b ≡ 0: closed bound", lower_bound_closed(&z, 1e-3).unwrap_or(f64::NAN), 0.0, 0.0));
    let g = need!(PGrid::geometric(1e-4, 6.0, 64), "grid");
    out.push(exact_check(
        "b ≡ 0: variational bound",
        lower_bound_variational(&z, 1e-3, &g).map(|v| v.value).unwrap_or(f64::NAN),
        0.0,
        0.0,
    ));
    // Closed bound slope for α = 0 on [1e−6, 1e−4].
    let k0 = need!(Kernel::power_ir(1.0, 0.0, 1.0), "kernel");
    let lams = decades(-6.0, -4.0, 5);
    let vals: Result<Vec<f64>, _> = lams.iter().map(|&l| lower_bound_closed(&k0, l)).collect();
    match vals.and_then(|v| fit_exponent(&lams, &v, 0..lams.len())) {
        Ok(f) => out.push(Check::new("closed bound slope, α = 0", f.exponent <= -0.22, format!("{:.4} ≤ −0.22", f.exponent))),
        Err(e) => out.push(Check::failed("closed bound slope", e)),
    }
    // K(λ, p) for |p| < √λ stays within a fixed multiple of λ^{(α−1)/2}.
    let lam: f64 = 1e-4;
    let sup = (0..=10)
        .map(|i| kernel_k(&k0, lam, lam.sqrt() * i as f64 / 10.0).unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max);
    let at0 = kernel_k(&k0, lam, 0.0).unwrap_or(f64::NAN);
    out.push(Check::new("sup K(λ, p) over |p| < √λ at λ = 1e−4", sup <= 1.5 * at0, format!("{sup:.4} vs K(λ,0) = {at0:.4}")));
    // Summable kernel: λ² E_hat_upper inside [1, 1 + ρ²].
    let rho2 = summable_rho_squared(1.0, 1.0);
    for lam in [1e-4, 1e-6] {
        let d = resolvent_s(&s, lam).map(|r| lam * lam * e_hat_from_resolvent(lam, r)).unwrap_or(f64::NAN);
        out.push(Check::new(format!("summable λ²·E_hat_upper at λ = {lam:.0e}"), (1.0..=1.0 + rho2).contains(&d), format!("{d:.5}")));
    }
    // Abelian ratio for E = t^{3/2}.
    let times: Vec<f64> = (1..=40_000).map(|i| i as f64 * 0.05).collect();
    let pow: Vec<f64> = times.iter().map(|t| t.powf(1.5)).collect();
    match tauber_report(&times, &pow) {
        Ok(rows) => {
            let worst = rows
                .iter()
                .filter(|r| (5.0..=100.0).contains(&r.t))
                .map(|r| (r.ratio - 1.0 / gamma(2.5)).abs())
                .fold(0.0, f64::max);
            out.push(Check::new("Abelian ratio for t^{3/2} = 1/Γ(5/2) ≈ 0.752", worst < 1e-3, format!("max |Δ| = {worst:.1e}")));
        }
        Err(e) => out.push(Check::failed("Abelian ratio", e)),
    }
    out
}

fn stationarity_oracles(runs: &Runs) -> Vec<Check> {
    let k = runs::gaussian();
    let mut out = Vec::new();
    let fs = test_functions(runs.opts.seed + 1, 2);
    let norm = pairing(&k, &fs[0], &fs[0]).unwrap_or(f64::NAN);
    let u = fs[0].scaled((0.01 / norm).sqrt());
    let spec = need!(GridSpec::new(256.0, 1024), "grid");
    match gaussian_identity_check(&k, &u, &u, &u, spec, &runs.seeds(104), 100_000, DEFAULT_GROUPS) {
        Ok(r) => {
            out.push(mc_check("E[Y e^X] with E X² = 0.01", r.first.mc, r.first.exact, 0.0));
            out.push(mc_check("E[YZ e^X] with E X² = 0.01", r.second.mc, r.second.exact, 0.0));
        }
        Err(e) => out.push(Check::failed("Gaussian identities", e)),
    }
    let c = pairing(&k, &u, &fs[1]).unwrap_or(f64::NAN) / pairing(&k, &u, &u).unwrap_or(f64::NAN);
    let n = u.coeffs.len().max(fs[1].coeffs.len());
    let get = |f: &TestFunction, i: usize| f.coeffs.get(i).copied().unwrap_or(0.0);
    let v = TestFunction { coeffs: (0..n).map(|i| get(&fs[1], i) - c * get(&u, i)).collect(), band: u.band };
    match gaussian_identity_check(&k, &u, &v, &v, spec, &runs.seeds(105), 100_000, DEFAULT_GROUPS) {
        Ok(r) => out.push(mc_check("orthogonal v: E[Y e^X] → 0", r.first.mc, 0.0, 0.0)),
        Err(e) => out.push(Check::failed("orthogonal identity", e)),
    }
    let z = Kernel::zero();
    match gaussian_identity_check(&z, &u, &u, &u, spec, &runs.seeds(106), 1000, DEFAULT_GROUPS) {
        Ok(r) => out.push(Check::new(
            "b ≡ 0: both identities read 0 = 0",
            r.first.mc.value == 0.0 && r.second.mc.value == 0.0 && r.first.exact == 0.0,
            "",
        )),
        Err(e) => out.push(Check::failed("zero-kernel identities", e)),
    }
    out.push(exact_check("u ≡ 0: drift", mgf_drift(&k, &TestFunction::zero(), Mutation::None).map(|d| d.value).unwrap_or(f64::NAN), 0.0, 0.0));
    out.push(mutation_check(&test_functions(runs.opts.seed, 20)));
    let odd = mgf_drift(&k, &u, Mutation::None).map(|d| d.odd).unwrap_or(f64::NAN);
    out.push(exact_check("⟨u′, u⟩ = 0", odd, 0.0, 1e-14));
    out
}

/// Oracle checks that read the shared ensembles.
pub fn oracles_from_runs(runs: &Runs) -> Vec<Check> {
    let mut out = Vec::new();
    match runs.stationarity() {
        Ok(r) => {
            let k = runs::gaussian();
            let lags = runs::snapshot_lag_x();
            match covariance_preservation(&k, &r.value, &runs::SNAPSHOT_TIMES, &lags) {
                Ok(rows) => {
                    for row in rows.iter().filter(|row| row.t == 5.0 && (row.x == 0.0 || row.x == runs::STAT_L / 2.0)) {
                        out.push(mc_check(format!("t = 5, lag {}: E[η(x)η(0)] → b(x)", row.x), row.cov.mc, row.cov.exact, 0.0));
                    }
                }
                Err(e) => out.push(Check::failed("covariance rows", e)),
            }
        }
        Err(e) => out.push(Check::failed("stationarity run", e)),
    }
    match runs.big() {
        Ok(b) => out.extend(big_run_oracles(&b.value)),
        Err(e) => out.push(Check::failed("main run", e)),
    }
    match runs.drs() {
        Ok(d) => {
            let last = d.times.len() - 1;
            let v = d.var_over_t[last];
            let rho2 = summable_rho_squared(1.0, 1.0);
            out.push(Check::new(
                format!("scenery Var A({})/t → ρ² within 10%", d.times[last]),
                rel(v.value, rho2) <= DRS_REL_TOL,
                format!("{:.4} ± {:.4} vs {rho2:.4}", v.value, v.se()),
            ));
        }
        Err(e) => out.push(Check::failed("scenery run", e)),
    }
    match local_time_residuals(runs.opts.seed) {
        Ok(res) => {
            let f = res.windows(2).map(|w| w[0] / w[1]).fold(f64::INFINITY, f64::min);
            out.push(Check::new("local-time residual halving", f >= LOCAL_TIME_FACTOR, format!("min factor {f:.2}")));
        }
        Err(e) => out.push(Check::failed("local-time runs", e)),
    }
    out
}

fn big_run_oracles(big: &EnsembleStats) -> Vec<Check> {
    let mut out = Vec::new();
    if let Some(w) = big.yaglom.iter().find(|w| w.s == 10.0 && w.t == 20.0) {
        out.push(mc_check("window (10, 20): corr(ΔB, Δ∫φ) → 0", w.corr, 0.0, 0.0));
    }
    for w in &big.yaglom {
        out.push(mc_check(format!("window ({}, {}): lhs − rhs → 0", w.s, w.t), w.diff, 0.0, 0.0));
    }
    match big.c_of_s.first() {
        Some(c0) => out.push(mc_check("C(0) → b(0)", *c0, runs::gaussian().b(0.0), 0.0)),
        None => out.push(Check::new("C(0)", false, "no lags")),
    }
    match laplace_of_stats(big, &MC_LAMBDAS) {
        Ok((lap, errs)) => {
            for (i, &lam) in MC_LAMBDAS.iter().enumerate() {
                match mc_resolvent(big, lam) {
                    Ok((r, tail)) => {
                        let via_r = (1.0 + 2.0 * r.value) / (lam * lam);
                        let se = ((2.0 * r.se() / (lam * lam)).powi(2) + errs[i].se().powi(2)).sqrt();
                        let slack = SIGMAS * se + 2.0 * tail / (lam * lam) + lap.tail_bound[i];
                        out.push(Check::new(
                            format!("λ = {lam}: λ⁻²(1 + 2·MC resolvent) = Laplace of E"),
                            (via_r - lap.e_hat[i]).abs() <= slack,
                            format!("{via_r:.3} vs {:.3} (allowance {slack:.3})", lap.e_hat[i]),
                        ));
                    }
                    Err(e) => out.push(Check::failed(format!("λ = {lam}: MC resolvent"), e)),
                }
            }
        }
        Err(e) => out.push(Check::failed("Laplace of E", e)),
    }
    match yaglom_flip_check(big) {
        Ok(f) => {
            let worst = f.odd_moments.iter().skip(1).map(|(_, m1, m3)| m1.z(0.0).max(m3.z(0.0))).fold(0.0, f64::max);
            out.push(Check::new("odd moments of φ vanish", worst <= SIGMAS, format!("max z = {worst:.2} over {} times", f.odd_moments.len() - 1)));
            out.push(mc_check("forward and flipped-backward cross moments agree", f.difference, 0.0, 0.0));
        }
        Err(e) => out.push(Check::failed("flip check", e)),
    }
    let e: Vec<f64> = big.e_of_t.iter().map(|e| e.value).collect();
    match tauber_report(&big.times, &e) {
        Ok(rows) => {
            let r: Vec<f64> = rows.iter().filter(|r| r.t >= 10.0).map(|r| r.ratio).collect();
            let (lo, hi) = r.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
            out.push(Check::new(
                "Abelian ratio on the main run is bounded and slowly varying",
                !r.is_empty() && hi / lo <= 1.25,
                format!("{} rows on [10, {}], ratio in [{lo:.3}, {hi:.3}]", r.len(), runs::HORIZON / 5.0),
            ));
        }
        Err(e) => out.push(Check::failed("Abelian ratio", e)),
    }
    out
}
