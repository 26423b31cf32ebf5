use std::path::Path;

use anyhow::Context;
use polylab::dynamics::{map_fold, steps_for, EnsembleSpec, Observe};
use polylab::estimators::{
    drs_stats, ensemble_stats, fit_exponent, laplace_of_stats, window_between, Estimate, Layout, Moments,
    DEFAULT_GROUPS,
};
use polylab::field::{periodized_b, sample_stationary, GridSpec};
use polylab::kernels::Kernel;
use polylab::quad::QuadConfig;
use polylab::rng::{Purpose, SeedTree};
use polylab::stationarity::{covariance_preservation, gaussian_identity_check, mgf_drift, pairing, Mutation, TestFunction};
use polylab_reproduce::{run_suite, SuiteOptions};
use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::output::{read_csv, Sink};

const SIGMAS: f64 = 4.0;

fn setup(cfg: &RunConfig) -> anyhow::Result<(Kernel, GridSpec, SeedTree)> {
    let k = cfg.kernel.build().context("kernel")?;
    let grid = GridSpec::new(cfg.grid.length, cfg.grid.n).context("grid")?;
    Ok((k, grid, SeedTree::new(cfg.seed)))
}

fn est(e: &Estimate) -> [f64; 2] {
    [e.value, e.stderr.unwrap_or(f64::NAN)]
}

/// Node lags `0..n` and the far field `N/2`.
fn node_lags(n: usize, grid: &GridSpec) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n.min(grid.n / 2)).collect();
    v.push(grid.n / 2);
    v
}

pub fn field(cfg: &RunConfig) -> anyhow::Result<bool> {
    let (k, grid, seeds) = setup(cfg)?;
    let sink = Sink::new(cfg, "field")?;
    let plan = grid.plan();
    let one = sample_stationary(&k, grid, plan.clone(), &mut seeds.stream(0, Purpose::Field), 0.0);
    let rows: Vec<Vec<f64>> = one.rows().map(|(x, v)| vec![x, v]).collect();
    sink.csv("field.csv", &["x", "value"], &rows)?;

    let lags = node_lags(cfg.stationarity.lags, &grid);
    let n = grid.n;
    let mom = map_fold(
        cfg.field.samples,
        cfg.threads,
        || Moments::new(lags.len(), DEFAULT_GROUPS),
        |i| {
            let f = sample_stationary(&k, grid, plan.clone(), &mut seeds.stream(i, Purpose::Field), 0.0);
            let v = &f.values;
            let obs: Vec<f64> =
                lags.iter().map(|&l| (0..n).map(|j| v[j] * v[(j + l) % n]).sum::<f64>() / n as f64).collect();
            Ok((i, obs))
        },
        |m, (i, obs)| m.push(i, &obs),
        |m, other| m.merge(&other),
    )?;
    let cov = mom.resampled().estimate_vec(|m| m.to_vec());
    let mut rows = Vec::new();
    let mut max_z: f64 = 0.0;
    for (&l, c) in lags.iter().zip(&cov) {
        let x = l as f64 * grid.spacing();
        let exact = periodized_b(&k, &grid, x);
        let z = if k.is_zero() { c.value.abs() } else { c.z(exact) };
        max_z = max_z.max(z);
        rows.push(vec![x, c.value, c.se(), exact, z]);
    }
    sink.csv("covariance.csv", &["x", "covariance", "stderr", "exact", "z"], &rows)?;
    let pass = max_z <= SIGMAS;
    sink.json("field.json", &json!({ "samples": cfg.field.samples, "max_z": max_z, "pass": pass }))?;
    println!("field: {} samples, max |z| = {max_z:.2} over {} lags", cfg.field.samples, lags.len());
    Ok(pass)
}

pub fn simulate(cfg: &RunConfig, trajectories: Option<u64>) -> anyhow::Result<bool> {
    let (k, grid, seeds) = setup(cfg)?;
    let sink = Sink::new(cfg, "simulate")?;
    let dt = cfg.sim.dt;
    let times = cfg.sim.times();
    let observe = Observe {
        phi_stride: (cfg.sim.phi_stride > 0).then_some(cfg.sim.phi_stride),
        ..Observe::at_times(&times, dt)
    };
    let mut layout = Layout::from_observe(&observe, dt);
    if cfg.sim.phi_stride > 0 {
        layout.lags = (0..=cfg.sim.max_lag).collect();
    }
    let spec = EnsembleSpec { kernel: k, grid, dt, mean_v: cfg.sim.mean_v, seeds, observe };
    let stats = ensemble_stats(&spec, &layout, cfg.sim.replicas, cfg.threads, DEFAULT_GROUPS)?;

    let rows: Vec<Vec<f64>> = (0..stats.times.len())
        .map(|i| {
            let mut r = vec![stats.times[i]];
            for e in [&stats.e_of_t[i], &stats.d_of_t[i], &stats.mean_x[i], &stats.mean_phi[i]] {
                r.extend(est(e));
            }
            r
        })
        .collect();
    let header = ["t", "E", "E_stderr", "D", "D_stderr", "mean_x", "mean_x_stderr", "mean_phi", "mean_phi_stderr"];
    sink.csv("ensemble.csv", &header, &rows)?;
    if !stats.lags.is_empty() {
        let rows: Vec<Vec<f64>> = stats.lags.iter().zip(&stats.c_of_s).map(|(&s, c)| vec![s, c.value, c.se()]).collect();
        sink.csv("autocorrelation.csv", &["s", "C", "stderr"], &rows)?;
    }
    let horizon = *stats.times.last().context("no output times")?;
    let lambdas: Vec<f64> = (0..8).map(|i| 5.0 / horizon * 10f64.powf(2.0 * i as f64 / 7.0)).collect();
    let laplace = match laplace_of_stats(&stats, &lambdas) {
        Ok((lap, errs)) => {
            let rows: Vec<Vec<f64>> =
                (0..lambdas.len()).map(|i| vec![lambdas[i], lap.e_hat[i], errs[i].se(), lap.tail_bound[i]]).collect();
            sink.csv("laplace.csv", &["lambda", "E_hat", "stderr", "tail_bound"], &rows)?;
            true
        }
        Err(_) => false,
    };
    let e: Vec<f64> = stats.e_of_t.iter().map(|e| e.value).collect();
    let fit = fit_exponent(&stats.times, &e, window_between(&stats.times, horizon / 10.0, horizon)).ok();
    sink.json(
        "summary.json",
        &json!({
            "replicas": stats.replica_count,
            "max_abs_x": stats.max_abs_x,
            "e_exponent": fit,
            "laplace_written": laplace,
            "final": { "t": horizon, "E": stats.e_of_t.last(), "mean_x": stats.mean_x.last() },
        }),
    )?;

    if let Some(n) = trajectories {
        let plan = grid.plan();
        let mut rows = Vec::new();
        for i in 0..n.min(cfg.sim.replicas) {
            let rec = spec.run_replica(&plan, i)?;
            rows.extend(rec.points.iter().map(|p| vec![i as f64, p.t, p.x, p.brownian, p.phi_integral]));
        }
        sink.csv("trajectories.csv", &["replica", "t", "X", "B", "phi_integral"], &rows)?;
    }
    println!(
        "simulate: {} replicas to t = {horizon}, E(t) exponent {}",
        stats.replica_count,
        fit.map_or("n/a".into(), |f| format!("{:.3}", f.exponent))
    );
    Ok(true)
}

pub fn drs(cfg: &RunConfig) -> anyhow::Result<bool> {
    let (k, grid, seeds) = setup(cfg)?;
    let sink = Sink::new(cfg, "drs")?;
    let steps = steps_for(&cfg.sim.times(), cfg.sim.dt);
    let s = drs_stats(&k, grid, &seeds, cfg.sim.dt, &steps, cfg.sim.replicas, cfg.threads, DEFAULT_GROUPS)?;
    let rows: Vec<Vec<f64>> = (0..s.times.len())
        .map(|i| {
            let mut r = vec![s.times[i]];
            for e in [&s.mean[i], &s.variance[i], &s.var_over_t[i]] {
                r.extend(est(e));
            }
            r
        })
        .collect();
    let header = ["t", "mean", "mean_stderr", "variance", "variance_stderr", "var_over_t", "var_over_t_stderr"];
    sink.csv("drs.csv", &header, &rows)?;
    let rho2 = k.rho_squared(QuadConfig::default()).ok().and_then(|r| r.finite());
    sink.json("drs.json", &json!({ "stats": s, "rho_squared": rho2 }))?;
    println!("drs: {} replicas, Var A(t)/t at t = {}: {:.4}", s.replica_count, s.times.last().unwrap_or(&0.0), s.var_over_t.last().map_or(f64::NAN, |e| e.value));
    Ok(true)
}

pub fn bounds(cfg: &RunConfig) -> anyhow::Result<bool> {
    let k = cfg.kernel.build().context("kernel")?;
    let sink = Sink::new(cfg, "bounds")?;
    let lambdas = cfg.bounds.lambdas();
    let r = polylab::bounds::e_hat_sandwich(&k, &lambdas, cfg.bounds.p_points, cfg.bounds.closed)?;
    let rows: Vec<Vec<f64>> = (0..r.lambdas.len())
        .map(|i| {
            vec![
                r.lambdas[i],
                r.resolvent_upper[i],
                r.lower_closed.as_ref().map_or(f64::NAN, |c| c[i]),
                r.lower_variational[i],
                r.e_hat_upper[i],
                r.e_hat_lower[i],
            ]
        })
        .collect();
    let header = ["lambda", "resolvent_upper", "lower_closed", "lower_variational", "E_hat_upper", "E_hat_lower"];
    sink.csv("bounds.csv", &header, &rows)?;
    sink.json("bounds.json", &r)?;
    if let Some(e) = &r.exponents {
        println!(
            "bounds: E_hat_upper exponent {:.4}, E_hat_lower exponent {:.4}",
            e.e_hat_upper.exponent, e.e_hat_lower.exponent
        );
    }
    Ok(true)
}

#[derive(Serialize)]
struct StationarityReport {
    rows: Vec<polylab::stationarity::CovarianceRow>,
    max_z: f64,
    mgf_max_abs_drift: f64,
    identities: polylab::stationarity::IdentityReport,
    pass: bool,
}

pub fn stationarity(cfg: &RunConfig) -> anyhow::Result<bool> {
    let (k, grid, seeds) = setup(cfg)?;
    let sink = Sink::new(cfg, "stationarity")?;
    let dt = cfg.sim.dt;
    let t_checks = cfg.stationarity.t_checks.clone();
    anyhow::ensure!(!t_checks.is_empty(), "stationarity.t_checks is empty");
    let lags = node_lags(cfg.stationarity.lags, &grid);
    let lag_x: Vec<f64> = lags.iter().map(|&l| l as f64 * grid.spacing()).collect();
    let last = t_checks.iter().copied().fold(0.0, f64::max);
    let observe =
        Observe { snapshot_steps: steps_for(&t_checks, dt), snapshot_lags: lags, ..Observe::at_times(&[last], dt) };
    let layout = Layout::from_observe(&observe, dt);
    let spec = EnsembleSpec { kernel: k.clone(), grid, dt, mean_v: 0.0, seeds: seeds.clone(), observe };
    let stats = ensemble_stats(&spec, &layout, cfg.sim.replicas, cfg.threads, DEFAULT_GROUPS)?;
    let rows = covariance_preservation(&k, &stats, &t_checks, &lag_x)?;
    let csv: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| vec![r.t, r.x, r.mean.mc.value, r.mean.mc.se(), r.cov.mc.value, r.cov.mc.se(), r.cov.exact, r.mean.z, r.cov.z])
        .collect();
    let header = ["t", "x", "mean", "mean_stderr", "cov", "cov_stderr", "exact", "z_mean", "z_cov"];
    sink.csv("stationarity.csv", &header, &csv)?;
    let max_z = rows.iter().map(|r| r.mean.z.max(r.cov.z)).fold(0.0, f64::max);

    let fs: Vec<TestFunction> =
        (0..20).map(|i| TestFunction::random(&mut seeds.stream(i, Purpose::TestFunction), 1.0)).collect();
    let mut mgf_max: f64 = 0.0;
    for u in &fs {
        mgf_max = mgf_max.max(mgf_drift(&k, u, Mutation::None)?.value.abs());
    }
    let norm = pairing(&k, &fs[0], &fs[0])?;
    let u = if norm > 0.0 { fs[0].scaled((0.01 / norm).sqrt()) } else { fs[0].clone() };
    let identities =
        gaussian_identity_check(&k, &u, &u, &u, grid, &seeds, 10 * cfg.sim.replicas, DEFAULT_GROUPS)?;
    let id_z = identities.first.z.max(identities.second.z);
    let pass = max_z <= SIGMAS && mgf_max < 1e-10 && !(id_z > SIGMAS);
    println!("stationarity: {} rows, max |z| = {max_z:.2}; max |MGF drift| = {mgf_max:.1e}; identity z = {id_z:.2}", rows.len());
    sink.json("stationarity.json", &StationarityReport { rows, max_z, mgf_max_abs_drift: mgf_max, identities, pass })?;
    Ok(pass)
}

pub fn fit(cfg: &RunConfig, input: &Path, column: &str, lo: f64, hi: f64) -> anyhow::Result<bool> {
    let (header, rows) = read_csv(input)?;
    let j = header
        .iter()
        .position(|h| h == column)
        .with_context(|| format!("column `{column}` not in {}", header.join(",")))?;
    let sel: Vec<&Vec<f64>> = rows.iter().filter(|r| r[0] >= lo && r[0] <= hi).collect();
    let x: Vec<f64> = sel.iter().map(|r| r[0]).collect();
    let y: Vec<f64> = sel.iter().map(|r| r[j]).collect();
    let f = fit_exponent(&x, &y, 0..x.len())?;
    let sink = Sink::new(cfg, "fit")?;
    let body = json!({ "input": input, "x": header[0], "column": column, "lo": lo, "hi": hi, "points": x.len(), "fit": f });
    sink.json("fit.json", &body)?;
    println!("{}", serde_json::to_string(&body)?);
    Ok(true)
}

pub fn reproduce(cfg: &RunConfig, only: Vec<u8>) -> anyhow::Result<bool> {
    let sink = Sink::new(cfg, "reproduce")?;
    let opts = SuiteOptions { seed: cfg.seed, threads: cfg.threads, only };
    let report = run_suite(&opts, &mut |line| eprintln!("{line}"));
    for o in &report.outcomes {
        println!("{}", o.line());
    }
    sink.json("reproduce.json", &report)?;
    Ok(report.pass())
}
