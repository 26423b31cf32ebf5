//! Ensemble statistics over replica records.
//!
//! Replicas are assigned to `replica % groups`; each group keeps exact sums of
//! every observable, so merging is associative and commutative bit for bit.
//! Error bars come from the delete-a-group jackknife.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dynamics::{map_fold, run_drs, EnsembleSpec, Observe, ReplicaRecord};
use crate::field::GridSpec;
use crate::kernels::Kernel;
use crate::rng::SeedTree;
use crate::error::{Error, Result};
use crate::exact::ExactSum;
use crate::real::Real;

pub const DEFAULT_GROUPS: usize = 32;

/// Point estimate with a jackknife standard error (`None` when undefined).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: Option<f64>,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, stderr: Some(0.0) }
    }

    pub fn se(&self) -> f64 {
        self.stderr.unwrap_or(f64::NAN)
    }

    /// `|value − target|` in units of the standard error.
    pub fn z(&self, target: f64) -> f64 {
        let d = (self.value - target).abs();
        match self.stderr {
            Some(s) if s > 0.0 => d / s,
            Some(_) if d == 0.0 => 0.0,
            _ => f64::INFINITY,
        }
    }

    pub fn within(&self, target: f64, sigmas: f64) -> bool {
        self.z(target) <= sigmas
    }
}

/// Grouped exact sums of a fixed list of observables.
#[derive(Clone, Debug, PartialEq)]
pub struct Moments {
    n_obs: usize,
    groups: usize,
    counts: Vec<u64>,
    sums: Vec<ExactSum>,
}

impl Moments {
    pub fn new(n_obs: usize, groups: usize) -> Self {
        assert!(groups >= 1);
        Self { n_obs, groups, counts: vec![0; groups], sums: vec![ExactSum::new(); n_obs * groups] }
    }

    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    pub fn count(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn push(&mut self, replica: u64, obs: &[f64]) {
        assert_eq!(obs.len(), self.n_obs, "observable count");
        let g = (replica % self.groups as u64) as usize;
        self.counts[g] += 1;
        for (s, &v) in self.sums[g * self.n_obs..(g + 1) * self.n_obs].iter_mut().zip(obs) {
            s.add_f64(v);
        }
    }

    pub fn merge(&mut self, other: &Moments) {
        assert!(self.n_obs == other.n_obs && self.groups == other.groups, "incompatible moments");
        for (c, o) in self.counts.iter_mut().zip(&other.counts) {
            *c += o;
        }
        for (s, o) in self.sums.iter_mut().zip(&other.sums) {
            s.merge(o);
        }
    }

    fn totals(&self) -> Vec<ExactSum> {
        let mut tot = vec![ExactSum::new(); self.n_obs];
        for g in 0..self.groups {
            for (t, s) in tot.iter_mut().zip(&self.sums[g * self.n_obs..(g + 1) * self.n_obs]) {
                t.merge(s);
            }
        }
        tot
    }

    /// Means over all replicas, and over all replicas outside each non-empty group.
    pub fn jackknife_means(&self) -> (Vec<f64>, Vec<Vec<f64>>) {
        let tot = self.totals();
        let n = self.count() as f64;
        let full: Vec<f64> = tot.iter().map(|s| s.value() / n).collect();
        let mut loo = Vec::new();
        for g in 0..self.groups {
            let ng = self.counts[g];
            if ng == 0 || ng as f64 == n {
                continue;
            }
            let rest = n - ng as f64;
            let means = tot
                .iter()
                .zip(&self.sums[g * self.n_obs..(g + 1) * self.n_obs])
                .map(|(t, s)| {
                    let mut d = t.clone();
                    d.unmerge(s);
                    d.value() / rest
                })
                .collect();
            loo.push(means);
        }
        (full, loo)
    }

    pub fn means(&self) -> Vec<f64> {
        let n = self.count() as f64;
        self.totals().iter().map(|s| s.value() / n).collect()
    }

    pub fn resampled(&self) -> Resampled {
        let (full, loo) = self.jackknife_means();
        Resampled { full, loo }
    }
}

/// Full-sample and leave-one-group-out means, ready for jackknife functionals.
#[derive(Clone, Debug, PartialEq)]
pub struct Resampled {
    pub full: Vec<f64>,
    pub loo: Vec<Vec<f64>>,
}

impl Resampled {
    /// Jackknife estimate of `f(means)`.
    pub fn estimate(&self, f: impl Fn(&[f64]) -> f64) -> Estimate {
        let value = f(&self.full);
        let g = self.loo.len();
        if g < 2 {
            return Estimate { value, stderr: None };
        }
        let thetas: Vec<f64> = self.loo.iter().map(|m| f(m)).collect();
        let mean = thetas.iter().sum::<f64>() / g as f64;
        let var = thetas.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() * (g as f64 - 1.0) / g as f64;
        Estimate { value, stderr: Some(var.sqrt()) }
    }

    /// Same as `estimate` for a vector-valued functional.
    pub fn estimate_vec(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Vec<Estimate> {
        let values = f(&self.full);
        let g = self.loo.len();
        if g < 2 {
            return values.into_iter().map(|value| Estimate { value, stderr: None }).collect();
        }
        let thetas: Vec<Vec<f64>> = self.loo.iter().map(|m| f(m)).collect();
        values
            .iter()
            .enumerate()
            .map(|(i, &value)| {
                let mean = thetas.iter().map(|t| t[i]).sum::<f64>() / g as f64;
                let var = thetas.iter().map(|t| (t[i] - mean).powi(2)).sum::<f64>() * (g as f64 - 1.0) / g as f64;
                Estimate { value, stderr: Some(var.sqrt()) }
            })
            .collect()
    }
}

/// Which observables an accumulator extracts from each replica record.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    /// Output times, matching `ReplicaRecord::points`.
    pub times: Vec<f64>,
    /// Yaglom windows as index pairs `(s, t)` into `times`.
    pub windows: Vec<(usize, usize)>,
    /// Autocorrelation lags in units of the φ sampling stride.
    pub lags: Vec<usize>,
    /// Spacing of the φ series.
    pub phi_step: f64,
    /// Number of η snapshots and lags per snapshot.
    pub snapshots: usize,
    pub snapshot_lags: usize,
    /// Cross moments `E[(X_t − X_s) φ_u]` as index triples `(s, t, u)`.
    pub drift_cross: Vec<(usize, usize, usize)>,
}

const PER_TIME: usize = 8;
const PER_WINDOW: usize = 6;

impl Layout {
    /// Output times and snapshot shape of an observation schedule; lags,
    /// windows and cross moments are left empty.
    pub fn from_observe(obs: &Observe, dt: f64) -> Self {
        Self {
            snapshots: obs.snapshot_steps.len(),
            snapshot_lags: if obs.snapshot_steps.is_empty() { 0 } else { obs.snapshot_lags.len() },
            phi_step: obs.phi_stride.map_or(0.0, |s| s as f64 * dt),
            ..Self::simple(obs.output_steps.iter().map(|&s| s as f64 * dt).collect())
        }
    }

    pub fn simple(times: Vec<f64>) -> Self {
        Self {
            times,
            windows: Vec::new(),
            lags: Vec::new(),
            phi_step: 0.0,
            snapshots: 0,
            snapshot_lags: 0,
            drift_cross: Vec::new(),
        }
    }

    fn window_base(&self) -> usize {
        self.times.len() * PER_TIME
    }
    fn lag_base(&self) -> usize {
        self.window_base() + self.windows.len() * PER_WINDOW
    }
    fn snap_base(&self) -> usize {
        self.lag_base() + self.lags.len()
    }
    fn cross_base(&self) -> usize {
        self.snap_base() + self.snapshots * self.snapshot_lags * 2
    }
    pub fn n_obs(&self) -> usize {
        self.cross_base() + self.drift_cross.len()
    }

    /// Slot of `E[φ(t_i)^power]`, `power` in 1..=3.
    pub fn phi_moment_slot(&self, i: usize, power: usize) -> usize {
        assert!((1..=3).contains(&power));
        i * PER_TIME + 4 + power
    }

    pub fn drift_cross_slot(&self, c: usize) -> usize {
        self.cross_base() + c
    }

    /// Observable vector of one replica.
    pub fn observe<T: Real>(&self, r: &ReplicaRecord<T>) -> Result<Vec<f64>> {
        if r.points.len() != self.times.len() {
            return Err(Error::GridMismatch);
        }
        let mut o = Vec::with_capacity(self.n_obs());
        for p in &r.points {
            let (x, b, phi_int, phi) = (p.x.f64(), p.brownian.f64(), p.phi_integral.f64(), p.phi.f64());
            o.extend_from_slice(&[x, x * x, b, b * b, phi_int, phi, phi * phi, phi * phi * phi]);
        }
        for &(s, t) in &self.windows {
            let (ps, pt) = (&r.points[s], &r.points[t]);
            let dx = (pt.x - ps.x).f64();
            let db = (pt.brownian - ps.brownian).f64();
            let dp = (pt.phi_integral - ps.phi_integral).f64();
            o.extend_from_slice(&[dx * dx, db, db * db, dp, dp * dp, db * dp]);
        }
        if !self.lags.is_empty() {
            let series: Vec<f64> = r.phi_series.iter().map(|v| v.f64()).collect();
            let c = time_autocorrelation(&series, self.lags.iter().copied().max().unwrap_or(0));
            for &l in &self.lags {
                o.push(c.get(l).copied().unwrap_or(f64::NAN));
            }
        }
        if r.snapshots.len() != self.snapshots {
            return Err(Error::GridMismatch);
        }
        for snap in &r.snapshots {
            if snap.len() != self.snapshot_lags {
                return Err(Error::GridMismatch);
            }
            let e0 = snap[0].f64();
            for v in snap {
                o.push(v.f64());
            }
            for v in snap {
                o.push(v.f64() * e0);
            }
        }
        for &(s, t, u) in &self.drift_cross {
            o.push((r.points[t].x - r.points[s].x).f64() * r.points[u].phi.f64());
        }
        Ok(o)
    }
}

/// Per-replica time average `(1/(K−l)) Σ_k φ_k φ_{k+l}` for `l = 0..=max_lag`,
/// computed with a zero-padded FFT.
pub fn time_autocorrelation(series: &[f64], max_lag: usize) -> Vec<f64> {
    let k = series.len();
    if k == 0 {
        return vec![f64::NAN; max_lag + 1];
    }
    let m = (2 * k).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(m);
    let inv = planner.plan_fft_inverse(m);
    let mut buf: Vec<Complex<f64>> = series.iter().map(|&v| Complex::new(v, 0.0)).collect();
    buf.resize(m, Complex::new(0.0, 0.0));
    fwd.process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    inv.process(&mut buf);
    (0..=max_lag)
        .map(|l| if l < k { buf[l].re / m as f64 / (k - l) as f64 } else { f64::NAN })
        .collect()
}

/// Streaming accumulator: a layout plus grouped moments.
#[derive(Clone, Debug, PartialEq)]
pub struct Accumulator {
    pub layout: Layout,
    pub moments: Moments,
    pub max_abs_x: f64,
}

impl Accumulator {
    pub fn new(layout: Layout, groups: usize) -> Self {
        let n = layout.n_obs();
        Self { layout, moments: Moments::new(n, groups), max_abs_x: 0.0 }
    }

    pub fn absorb<T: Real>(&mut self, r: &ReplicaRecord<T>) -> Result<()> {
        let o = self.layout.observe(r)?;
        self.moments.push(r.replica, &o);
        self.max_abs_x = self.max_abs_x.max(r.max_abs_x.f64());
        Ok(())
    }

    pub fn merge(&mut self, other: &Accumulator) {
        assert_eq!(self.layout, other.layout, "layouts differ");
        self.moments.merge(&other.moments);
        self.max_abs_x = self.max_abs_x.max(other.max_abs_x);
    }

    pub fn finish(&self) -> EnsembleStats {
        EnsembleStats::from_accumulator(self)
    }
}

/// One Yaglom window: `E[(ΔX)²]` against `(t−s) + E[(Δ∫φ)²]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct YaglomWindow {
    pub s: f64,
    pub t: f64,
    pub lhs: Estimate,
    pub rhs: Estimate,
    pub diff: Estimate,
    pub cross: Estimate,
    pub corr: Estimate,
}

/// Merged Monte Carlo statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub times: Vec<f64>,
    pub e_of_t: Vec<Estimate>,
    pub d_of_t: Vec<Estimate>,
    pub mean_x: Vec<Estimate>,
    pub mean_phi: Vec<Estimate>,
    pub lags: Vec<f64>,
    pub c_of_s: Vec<Estimate>,
    pub yaglom: Vec<YaglomWindow>,
    pub replica_count: u64,
    pub max_abs_x: f64,
    #[serde(skip)]
    pub layout: Layout,
    #[serde(skip)]
    pub resampled: Option<Resampled>,
}

impl EnsembleStats {
    pub fn from_accumulator(acc: &Accumulator) -> Self {
        let lay = &acc.layout;
        let rs = acc.moments.resampled();
        let nt = lay.times.len();
        let e_of_t = rs.estimate_vec(|m| (0..nt).map(|i| m[i * PER_TIME + 1]).collect());
        let mean_x = rs.estimate_vec(|m| (0..nt).map(|i| m[i * PER_TIME]).collect());
        let mean_phi = rs.estimate_vec(|m| (0..nt).map(|i| m[i * PER_TIME + 5]).collect());
        let d_of_t = e_of_t
            .iter()
            .zip(&lay.times)
            .map(|(e, &t)| {
                if t > 0.0 {
                    Estimate { value: e.value / t, stderr: e.stderr.map(|s| s / t) }
                } else {
                    Estimate { value: f64::NAN, stderr: None }
                }
            })
            .collect();
        let lb = lay.lag_base();
        let c_of_s = rs.estimate_vec(|m| (0..lay.lags.len()).map(|i| m[lb + i]).collect());
        let lags = lay.lags.iter().map(|&l| l as f64 * lay.phi_step).collect();
        let yaglom = lay
            .windows
            .iter()
            .enumerate()
            .map(|(w, &(s, t))| {
                let b = lay.window_base() + w * PER_WINDOW;
                let len = lay.times[t] - lay.times[s];
                let lhs = rs.estimate(|m| m[b]);
                let rhs = rs.estimate(|m| len + m[b + 4]);
                let diff = rs.estimate(|m| m[b] - len - m[b + 4]);
                let cross = rs.estimate(|m| m[b + 5] - m[b + 1] * m[b + 3]);
                let corr = rs.estimate(|m| {
                    let cov = m[b + 5] - m[b + 1] * m[b + 3];
                    let vb = m[b + 2] - m[b + 1] * m[b + 1];
                    let vp = m[b + 4] - m[b + 3] * m[b + 3];
                    if vb > 0.0 && vp > 0.0 {
                        cov / (vb * vp).sqrt()
                    } else {
                        0.0
                    }
                });
                YaglomWindow { s: lay.times[s], t: lay.times[t], lhs, rhs, diff, cross, corr }
            })
            .collect();
        Self {
            times: lay.times.clone(),
            e_of_t,
            d_of_t,
            mean_x,
            mean_phi,
            lags,
            c_of_s,
            yaglom,
            replica_count: acc.moments.count(),
            max_abs_x: acc.max_abs_x,
            layout: lay.clone(),
            resampled: Some(rs),
        }
    }

    /// Jackknife estimate of any functional of the raw observable means.
    pub fn functional(&self, f: impl Fn(&[f64]) -> f64) -> Option<Estimate> {
        self.resampled.as_ref().map(|r| r.estimate(f))
    }
}

/// Snapshot statistics: `E[η(t_c, x_k)]` and `E[η(t_c, x_k) η(t_c, 0)]`.
pub fn snapshot_moments(stats: &EnsembleStats, snapshot: usize) -> Option<(Vec<Estimate>, Vec<Estimate>)> {
    let lay = &stats.layout;
    let rs = stats.resampled.as_ref()?;
    if snapshot >= lay.snapshots {
        return None;
    }
    let nl = lay.snapshot_lags;
    let base = lay.snap_base() + snapshot * nl * 2;
    let mean = rs.estimate_vec(|m| (0..nl).map(|k| m[base + k]).collect());
    let cov = rs.estimate_vec(|m| (0..nl).map(|k| m[base + nl + k]).collect());
    Some((mean, cov))
}

/// Builds statistics from a list of records.
pub fn merge_stats<T: Real>(records: &[ReplicaRecord<T>], layout: Layout, groups: usize) -> Result<EnsembleStats> {
    let mut acc = Accumulator::new(layout, groups);
    for r in records {
        acc.absorb(r)?;
    }
    Ok(acc.finish())
}

/// Ê(λ) on a grid, with the truncation tail reported separately.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaplaceEstimate {
    pub lambdas: Vec<f64>,
    pub e_hat: Vec<f64>,
    pub tail_bound: Vec<f64>,
}

/// `Γ(5/2, x)`.
fn upper_gamma_5_2(x: f64) -> f64 {
    let g12 = std::f64::consts::PI.sqrt() * statrs::function::erf::erfc(x.sqrt());
    let g32 = 0.5 * g12 + x.sqrt() * (-x).exp();
    1.5 * g32 + x.powf(1.5) * (-x).exp()
}

/// `∫_T^∞ e^{−λt} E_T (t/T)^{3/2} dt`.
pub fn laplace_tail(e_t: f64, horizon: f64, lambda: f64) -> f64 {
    e_t * horizon.powf(-1.5) * lambda.powf(-2.5) * upper_gamma_5_2(lambda * horizon)
}

/// Trapezoidal `∫₀^T e^{−λt} E(t) dt` plus a tail closed with `t^{3/2}` growth.
/// `E(0) = 0` is prepended when the grid does not start at zero.
pub fn laplace_transform(times: &[f64], values: &[f64], lambdas: &[f64]) -> Result<LaplaceEstimate> {
    if times.len() != values.len() || times.is_empty() {
        return Err(Error::GridMismatch);
    }
    let horizon = *times.last().expect("non-empty");
    let guard = 5.0 / horizon;
    let mut ts = Vec::with_capacity(times.len() + 1);
    let mut es = Vec::with_capacity(times.len() + 1);
    if times[0] > 0.0 {
        ts.push(0.0);
        es.push(0.0);
    }
    ts.extend_from_slice(times);
    es.extend_from_slice(values);
    let mut out = LaplaceEstimate { lambdas: lambdas.to_vec(), e_hat: Vec::new(), tail_bound: Vec::new() };
    for &lam in lambdas {
        if lam < guard * (1.0 - 1e-12) {
            return Err(Error::LambdaTooSmall { lambda: lam, min: guard });
        }
        let body: f64 = ts
            .windows(2)
            .zip(es.windows(2))
            .map(|(t, e)| 0.5 * (t[1] - t[0]) * ((-lam * t[0]).exp() * e[0] + (-lam * t[1]).exp() * e[1]))
            .sum();
        let tail = laplace_tail(*es.last().expect("non-empty"), horizon, lam);
        out.e_hat.push(body + tail);
        out.tail_bound.push(tail);
    }
    Ok(out)
}

/// Laplace transform of the ensemble `E(t)` with jackknife errors.
pub fn laplace_of_stats(stats: &EnsembleStats, lambdas: &[f64]) -> Result<(LaplaceEstimate, Vec<Estimate>)> {
    let values: Vec<f64> = stats.e_of_t.iter().map(|e| e.value).collect();
    let est = laplace_transform(&stats.times, &values, lambdas)?;
    let rs = stats.resampled.as_ref().ok_or(Error::Invalid("statistics lack resampling data".into()))?;
    let nt = stats.times.len();
    let times = stats.times.clone();
    let errs = rs.estimate_vec(|m| {
        let e: Vec<f64> = (0..nt).map(|i| m[i * PER_TIME + 1]).collect();
        laplace_transform(&times, &e, lambdas).map(|l| l.e_hat).unwrap_or_else(|_| vec![f64::NAN; lambdas.len()])
    });
    Ok((est, errs))
}

/// `∫₀^∞ e^{−λs} C(s) ds` from an autocorrelation on a uniform lag grid
/// starting at zero, with a tail bounded by `|C(S)| e^{−λS}/λ`.
pub fn mc_resolvent(stats: &EnsembleStats, lambda: f64) -> Result<(Estimate, f64)> {
    let lags = stats.lags.clone();
    if lags.len() < 2 || lags[0] != 0.0 {
        return Err(Error::Invalid("autocorrelation needs a lag grid starting at 0".into()));
    }
    let smax = *lags.last().expect("non-empty");
    if lambda < 5.0 / smax * (1.0 - 1e-12) {
        return Err(Error::LambdaTooSmall { lambda, min: 5.0 / smax });
    }
    let rs = stats.resampled.as_ref().ok_or(Error::Invalid("statistics lack resampling data".into()))?;
    let lay_lag_base = stats.layout.lag_base();
    let integrate = |c: &dyn Fn(usize) -> f64| -> f64 {
        lags.windows(2)
            .enumerate()
            .map(|(i, s)| 0.5 * (s[1] - s[0]) * ((-lambda * s[0]).exp() * c(i) + (-lambda * s[1]).exp() * c(i + 1)))
            .sum()
    };
    let est = rs.estimate(|m| integrate(&|i| m[lay_lag_base + i]));
    let last = stats.c_of_s.last().map(|c| c.value.abs()).unwrap_or(0.0);
    let tail = last * (-lambda * smax).exp() / lambda;
    Ok((est, tail))
}

/// Least-squares slope of `log y` against `log x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub exponent: f64,
    pub stderr: f64,
    pub intercept: f64,
}

pub fn fit_exponent(x: &[f64], y: &[f64], window: std::ops::Range<usize>) -> Result<ExponentFit> {
    if x.len() != y.len() || window.end > x.len() || window.len() < 2 {
        return Err(Error::Invalid("fit window must hold at least two points".into()));
    }
    for i in window.clone() {
        if !(y[i] > 0.0) || !(x[i] > 0.0) {
            return Err(Error::NonPositiveValue { index: i, value: if x[i] > 0.0 { y[i] } else { x[i] } });
        }
    }
    let lx: Vec<f64> = window.clone().map(|i| x[i].ln()).collect();
    let ly: Vec<f64> = window.clone().map(|i| y[i].ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = lx.iter().zip(&ly).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let stderr = if lx.len() > 2 { (ssr / (n - 2.0) / sxx).sqrt() } else { f64::NAN };
    Ok(ExponentFit { exponent: slope, stderr, intercept })
}

/// Indices of `x` lying in `[lo, hi]`, as a contiguous range.
pub fn window_between(x: &[f64], lo: f64, hi: f64) -> std::ops::Range<usize> {
    let start = x.iter().position(|&v| v >= lo - 1e-12).unwrap_or(x.len());
    let end = x.iter().rposition(|&v| v <= hi + 1e-12).map(|i| i + 1).unwrap_or(start);
    start..end.max(start)
}

/// Runs replicas `0..replicas` of `spec` and merges them under `layout`.
pub fn ensemble_stats<T: Real>(spec: &EnsembleSpec<T>, layout: &Layout, replicas: u64, threads: usize, groups: usize) -> Result<EnsembleStats> {
    let plan = spec.grid.plan();
    let acc = map_fold(
        replicas,
        threads,
        || Accumulator::new(layout.clone(), groups),
        |i| {
            let r = spec.run_replica(&plan, i)?;
            layout.observe(&r)?;
            Ok(r)
        },
        |a, r| a.absorb(&r).expect("layout checked in the job"),
        |a, b| a.merge(&b),
    )?;
    Ok(acc.finish())
}

/// `E A(t)` and `Var A(t)` for the scenery functional `A(t) = ∫₀ᵗ ω(Z_s) ds`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DrsStats {
    pub times: Vec<f64>,
    pub mean: Vec<Estimate>,
    pub variance: Vec<Estimate>,
    pub var_over_t: Vec<Estimate>,
    pub replica_count: u64,
    pub max_abs_z: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn drs_stats<T: Real>(
    k: &Kernel<T>,
    grid: GridSpec<T>,
    seeds: &SeedTree,
    dt: T,
    output_steps: &[u64],
    replicas: u64,
    threads: usize,
    groups: usize,
) -> Result<DrsStats> {
    let plan = grid.plan();
    let n = output_steps.len();
    let (mom, max_abs_z) = map_fold(
        replicas,
        threads,
        || (Moments::new(2 * n, groups), 0.0f64),
        |i| run_drs(k, grid, plan.clone(), seeds, i, dt, output_steps),
        |(m, z), r| {
            let o: Vec<f64> = r.accum.iter().flat_map(|a| [a.f64(), a.f64() * a.f64()]).collect();
            m.push(r.replica, &o);
            *z = z.max(r.max_abs_z.f64());
        },
        |(m, z), (m2, z2)| {
            m.merge(&m2);
            *z = z.max(z2);
        },
    )?;
    let rs = mom.resampled();
    let times: Vec<f64> = output_steps.iter().map(|&s| s as f64 * dt.f64()).collect();
    let mean = rs.estimate_vec(|m| (0..n).map(|i| m[2 * i]).collect());
    let variance = rs.estimate_vec(|m| (0..n).map(|i| m[2 * i + 1] - m[2 * i] * m[2 * i]).collect());
    let var_over_t = variance
        .iter()
        .zip(&times)
        .map(|(v, &t)| if t > 0.0 { Estimate { value: v.value / t, stderr: v.stderr.map(|s| s / t) } } else { Estimate { value: f64::NAN, stderr: None } })
        .collect();
    Ok(DrsStats { times, mean, variance, var_over_t, replica_count: mom.count(), max_abs_z })
}
