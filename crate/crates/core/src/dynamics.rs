//! Euler–Maruyama integration of the polymer and of diffusion in random scenery.
//!
//! The environment is kept in the lab frame: the particle moves with drift
//! `ζ(t, X)` while every node receives `b′(X_old − x_j) dt`.

use std::sync::Arc;

use rustfft::num_complex::Complex;

use crate::error::{Error, Result};
use crate::field::{sample_stationary, FieldGrid, GridSpec, SpectralPlan};
use crate::kernels::{Family, Kernel};
use crate::real::Real;
use crate::rng::{Purpose, SeedTree, Stream};

/// Relative cutoff below which `b′` contributions are dropped.
pub const STENCIL_TOL: f64 = 1e-14;

/// Evaluates the field increment `b′(X − x_j)` on the grid.
#[derive(Clone, Debug)]
enum Updater<T: Real> {
    Zero,
    /// Gaussian-tailed closed forms, updated on a local stencil.
    Closed { amp: T, s: T, summable: bool, reach: usize, gm: Vec<T>, buf: Vec<T> },
    /// Tabulated periodized `b′` on a grid eight times finer, updated everywhere.
    Table { table: Vec<T>, inv_step: T },
}

impl<T: Real> Updater<T> {
    fn new(k: &Kernel<T>, spec: &GridSpec<T>) -> Self {
        if k.is_zero() {
            return Updater::Zero;
        }
        let h = spec.spacing();
        match k.family() {
            Family::Gaussian | Family::Summable => {
                let s = k.scale();
                let range = k.interaction_range(STENCIL_TOL).expect("closed form");
                let reach = ((range / h).ceil().to_usize().unwrap_or(0) + 1).min(spec.n / 2 - 1);
                let quarter = T::c(0.25);
                let gm = (0..=reach + 1)
                    .map(|m| {
                        let mh = T::c(m as f64) * h;
                        (-s * mh * mh * quarter).exp()
                    })
                    .collect();
                let amp = k.amplitude() / T::TAU() * (T::PI() * s).sqrt();
                let buf = vec![T::zero(); reach + 2];
                Updater::Closed { amp, s, summable: k.family() == Family::Summable, reach, gm, buf }
            }
            Family::PowerIr => {
                let fine = GridSpec { length: spec.length, n: spec.n * 8 };
                let plan = SpectralPlan::<T>::new(fine.n);
                let coeffs: Vec<Complex<T>> = (0..fine.n)
                    .map(|m| {
                        if m == 0 || m == fine.n / 2 {
                            return Complex::new(T::zero(), T::zero());
                        }
                        let p = fine.freq(m);
                        Complex::new(T::zero(), p * k.b_hat(p) / fine.length)
                    })
                    .collect();
                let table = plan.synthesize(&coeffs);
                Updater::Table { table, inv_step: T::one() / fine.spacing() }
            }
        }
    }

    /// Adds `scale · b′(x_old − x_j)` to every node.
    fn apply(&mut self, values: &mut [T], spec: &GridSpec<T>, x_old: T, scale: T) {
        match self {
            Updater::Zero => {}
            Updater::Closed { amp, s, summable, reach, gm, buf } => {
                let n = spec.n;
                let h = spec.spacing();
                let u = x_old / h;
                let fl = u.floor();
                let d0 = (u - fl) * h;
                let i0 = fl.to_i64().expect("finite").rem_euclid(n as i64) as usize;
                let s = *s;
                let quarter = T::c(0.25);
                let base = (-s * d0 * d0 * quarter).exp() * *amp * scale;
                let ratio = (s * d0 * h * T::c(0.5)).exp();
                let (c1, c3) = if *summable {
                    (-T::c(0.75) * s * s, s * s * s / T::c(8.0))
                } else {
                    (-s * T::c(0.5), T::zero())
                };
                let reach = *reach;
                let mask = n - 1;
                // Node i0 + m sits at distance d0 - m h from x_old.
                let right = &mut buf[..reach + 2];
                stencil_row(right, &gm[..reach + 2], base, ratio, d0, -h, c1, c3);
                for (m, &v) in right.iter().enumerate() {
                    let j = (i0 + m) & mask;
                    values[j] = values[j] + v;
                }
                // Node i0 - m sits at distance d0 + m h.
                let inv = T::one() / ratio;
                let left = &mut buf[..reach];
                stencil_row(left, &gm[1..reach + 1], base * inv, inv, d0 + h, h, c1, c3);
                for (m, &v) in left.iter().enumerate() {
                    let j = (i0 + n - m - 1) & mask;
                    values[j] = values[j] + v;
                }
            }
            Updater::Table { table, inv_step } => {
                let m = table.len();
                for (j, v) in values.iter_mut().enumerate() {
                    let d = x_old - spec.node(j);
                    let u = d * *inv_step;
                    let fl = u.floor();
                    let t = u - fl;
                    let i = fl.to_i64().expect("finite").rem_euclid(m as i64) as usize;
                    let y = |o: usize| table[(i + o + m - 1) % m];
                    let one = T::one();
                    let two = T::c(2.0);
                    let six = T::c(6.0);
                    let val = -t * (t - one) * (t - two) / six * y(0)
                        + (t + one) * (t - one) * (t - two) / two * y(1)
                        - (t + one) * t * (t - two) / two * y(2)
                        + (t + one) * t * (t - one) / six * y(3);
                    *v = *v + scale * val;
                }
            }
        }
    }
}

const LANES: usize = 8;

/// `out[m] = e0 rᵐ gm[m] d_m (c1 + c3 d_m²)` with `d_m = d0 + m·step`,
/// evaluated in independent lanes so the power recurrence does not serialize.
#[inline(never)]
#[allow(clippy::too_many_arguments)]
fn stencil_row<T: Real>(out: &mut [T], gm: &[T], e0: T, ratio: T, d0: T, step: T, c1: T, c3: T) {
    let mut e = [T::zero(); LANES];
    let mut d = [T::zero(); LANES];
    let mut p = e0;
    #[allow(clippy::needless_range_loop)]
    for l in 0..LANES {
        e[l] = p;
        d[l] = d0 + T::c(l as f64) * step;
        p = p * ratio;
    }
    let rw = ratio.powi(LANES as i32);
    let dw = T::c(LANES as f64) * step;
    let full = out.len() / LANES * LANES;
    let (head, tail) = out.split_at_mut(full);
    for (o, g) in head.chunks_exact_mut(LANES).zip(gm.chunks_exact(LANES)) {
        for l in 0..LANES {
            o[l] = e[l] * g[l] * d[l] * (c1 + c3 * d[l] * d[l]);
            e[l] = e[l] * rw;
            d[l] = d[l] + dw;
        }
    }
    for (l, o) in tail.iter_mut().enumerate() {
        let g = gm[full + l];
        *o = e[l] * g * d[l] * (c1 + c3 * d[l] * d[l]);
    }
}

/// `(t, X, B, ∫φ, φ)` at an output time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecordPoint<T: Real = f64> {
    pub t: T,
    pub x: T,
    pub brownian: T,
    pub phi_integral: T,
    pub phi: T,
}

/// What a replica records while it runs. Times are given in steps.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Observe {
    pub output_steps: Vec<u64>,
    pub phi_stride: Option<u64>,
    pub snapshot_steps: Vec<u64>,
    pub snapshot_lags: Vec<usize>,
}

impl Observe {
    pub fn at_times<T: Real>(times: &[T], dt: T) -> Self {
        Self { output_steps: steps_for(times, dt), ..Self::default() }
    }

    pub fn horizon_steps(&self) -> u64 {
        let a = self.output_steps.iter().copied().max().unwrap_or(0);
        let b = self.snapshot_steps.iter().copied().max().unwrap_or(0);
        a.max(b)
    }
}

/// Rounds each time to the nearest whole number of steps.
pub fn steps_for<T: Real>(times: &[T], dt: T) -> Vec<u64> {
    times.iter().map(|&t| (t / dt).round().to_u64().expect("nonnegative time")).collect()
}

/// Output of one finished replica.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplicaRecord<T: Real = f64> {
    pub replica: u64,
    pub points: Vec<RecordPoint<T>>,
    pub phi_series: Vec<T>,
    pub snapshots: Vec<Vec<T>>,
    pub max_abs_x: T,
}

/// Brownian increments, optionally summed from a finer step.
#[derive(Clone, Debug)]
pub struct Noise {
    stream: Stream,
    substeps: u32,
    fine_sd: f64,
}

impl Noise {
    pub fn new(stream: Stream, dt: f64) -> Self {
        Self::refined(stream, dt, 1)
    }

    /// Each increment is the sum of `substeps` draws at step `dt/substeps`.
    pub fn refined(stream: Stream, dt: f64, substeps: u32) -> Self {
        Self { stream, substeps, fine_sd: (dt / substeps as f64).sqrt() }
    }

    #[inline]
    pub fn next(&mut self) -> f64 {
        let mut acc = 0.0;
        for _ in 0..self.substeps {
            acc += self.stream.normal();
        }
        acc * self.fine_sd
    }
}

/// One polymer trajectory together with its environment.
#[derive(Clone, Debug)]
pub struct PolymerReplica<T: Real = f64> {
    pub kernel: Kernel<T>,
    pub zeta: FieldGrid<T>,
    pub x: T,
    pub t: T,
    pub dt: T,
    pub steps: u64,
    pub brownian_sum: T,
    pub phi_integral: T,
    /// Visit counts per grid bin; the occupation measure is `count · dt`.
    pub occupation: Vec<u64>,
    pub record: Vec<RecordPoint<T>>,
    /// Skip the environment update (frozen-drift mode).
    pub frozen: bool,
    updater: Updater<T>,
}

impl<T: Real> PolymerReplica<T> {
    /// Starts from a field drawn from the stationary law.
    pub fn init(
        k: &Kernel<T>,
        spec: GridSpec<T>,
        plan: Arc<SpectralPlan<T>>,
        rng: &mut Stream,
        mean_v: T,
        dt: T,
    ) -> Result<Self> {
        check_guard(&spec, dt)?;
        let zeta = sample_stationary(k, spec, plan, rng, mean_v);
        Self::with_field(k, zeta, dt)
    }

    /// Starts from a given initial profile.
    pub fn with_field(k: &Kernel<T>, zeta: FieldGrid<T>, dt: T) -> Result<Self> {
        check_guard(&zeta.spec, dt)?;
        let spec = zeta.spec;
        Ok(Self {
            kernel: k.clone(),
            updater: Updater::new(k, &spec),
            zeta,
            x: T::zero(),
            t: T::zero(),
            dt,
            steps: 0,
            brownian_sum: T::zero(),
            phi_integral: T::zero(),
            occupation: vec![0; spec.n],
            record: Vec::new(),
            frozen: false,
        })
    }

    /// Current `φ(η(t)) = ζ(t, X(t))`.
    #[inline]
    pub fn phi(&self) -> T {
        self.zeta.interpolate(self.x)
    }

    /// Advances one step with Brownian increment `db`.
    #[inline]
    pub fn step_with(&mut self, db: T) -> Result<()> {
        let spec = self.zeta.spec;
        let drift = self.zeta.interpolate(self.x);
        let x_old = self.x;
        if !self.frozen {
            self.updater.apply(&mut self.zeta.values, &spec, x_old, self.dt);
            self.zeta.invalidate();
        }
        let bin = (spec.wrap(x_old) / spec.spacing()).round().to_i64().expect("finite");
        self.occupation[bin.rem_euclid(spec.n as i64) as usize] += 1;
        self.x = x_old + drift * self.dt + db;
        self.brownian_sum = self.brownian_sum + db;
        self.phi_integral = self.phi_integral + drift * self.dt;
        self.steps += 1;
        self.t = T::c(self.steps as f64) * self.dt;
        let limit = spec.length / T::c(4.0);
        if self.x.abs() > limit {
            return Err(Error::DomainExceeded { replica: 0, x: self.x.f64(), limit: limit.f64(), t: self.t.f64() });
        }
        Ok(())
    }

    pub fn step(&mut self, noise: &mut Noise) -> Result<()> {
        let db = T::c(noise.next());
        self.step_with(db)
    }

    pub fn point(&self) -> RecordPoint<T> {
        RecordPoint { t: self.t, x: self.x, brownian: self.brownian_sum, phi_integral: self.phi_integral, phi: self.phi() }
    }

    /// Environment seen from the particle: node `j` holds `ζ(t, X + x_j)`.
    pub fn eta_view(&self) -> FieldGrid<T> {
        self.zeta.shift(self.x)
    }

    /// Total occupation mass, equal to `t`.
    pub fn occupation_mass(&self) -> T {
        T::c(self.occupation.iter().sum::<u64>() as f64) * self.dt
    }

    /// Max-norm gap between `ζ(t) − ζ(0)` and the occupation-density
    /// convolution `Σ_y L(t, y) b′(y − x_j)`.
    pub fn local_time_consistency(&self, zeta0: &FieldGrid<T>) -> T {
        let spec = self.zeta.spec;
        let mut updater = self.updater.clone();
        let mut conv = vec![T::zero(); spec.n];
        for (bin, &count) in self.occupation.iter().enumerate() {
            if count > 0 {
                let mass = T::c(count as f64) * self.dt;
                updater.apply(&mut conv, &spec, spec.node(bin), mass);
            }
        }
        conv.iter()
            .zip(self.zeta.values.iter().zip(&zeta0.values))
            .map(|(&c, (&z, &z0))| (c - (z - z0)).abs())
            .fold(T::zero(), T::max)
    }

    /// Runs to the last requested step, collecting observations.
    pub fn run(mut self, replica: u64, noise: &mut Noise, obs: &Observe) -> Result<(ReplicaRecord<T>, Self)> {
        let horizon = obs.horizon_steps();
        let mut points = Vec::with_capacity(obs.output_steps.len());
        let mut phi_series = Vec::new();
        let mut snapshots = Vec::with_capacity(obs.snapshot_steps.len());
        let mut max_abs = T::zero();
        let mut next_out = 0;
        let mut next_snap = 0;
        let mut outs = obs.output_steps.clone();
        outs.sort_unstable();
        let mut snaps = obs.snapshot_steps.clone();
        snaps.sort_unstable();
        loop {
            while next_out < outs.len() && outs[next_out] == self.steps {
                points.push(self.point());
                next_out += 1;
            }
            while next_snap < snaps.len() && snaps[next_snap] == self.steps {
                let eta = self.eta_view();
                snapshots.push(obs.snapshot_lags.iter().map(|&l| eta.values[l % eta.spec.n]).collect());
                next_snap += 1;
            }
            if let Some(stride) = obs.phi_stride {
                if self.steps % stride == 0 {
                    phi_series.push(self.phi());
                }
            }
            if self.steps >= horizon {
                break;
            }
            self.step(noise).map_err(|e| with_replica(e, replica))?;
            max_abs = max_abs.max(self.x.abs());
        }
        self.record = points.clone();
        Ok((ReplicaRecord { replica, points, phi_series, snapshots, max_abs_x: max_abs }, self))
    }
}

fn with_replica(e: Error, replica: u64) -> Error {
    match e {
        Error::DomainExceeded { x, limit, t, .. } => Error::DomainExceeded { replica, x, limit, t },
        other => other,
    }
}

fn check_guard<T: Real>(spec: &GridSpec<T>, dt: T) -> Result<()> {
    let h = spec.spacing();
    let limit = h * h / T::c(4.0);
    if !(dt > T::zero()) || dt > limit * (T::one() + T::c(1e-12)) {
        return Err(Error::StabilityGuard { dt: dt.f64(), limit: limit.f64() });
    }
    Ok(())
}

/// Frozen scenery integrated along a Brownian path.
#[derive(Clone, Debug)]
pub struct DrsReplica<T: Real = f64> {
    pub omega: FieldGrid<T>,
    pub z: T,
    pub accum: T,
    pub t: T,
    pub dt: T,
    pub steps: u64,
}

/// Accumulated `∫₀ᵗ ω(Z_s) ds` at each requested step.
#[derive(Clone, Debug, PartialEq)]
pub struct DrsRecord<T: Real = f64> {
    pub replica: u64,
    pub times: Vec<T>,
    pub accum: Vec<T>,
    pub max_abs_z: T,
}

impl<T: Real> DrsReplica<T> {
    pub fn new(omega: FieldGrid<T>, dt: T) -> Result<Self> {
        check_guard(&omega.spec, dt)?;
        Ok(Self { omega, z: T::zero(), accum: T::zero(), t: T::zero(), dt, steps: 0 })
    }

    #[inline]
    pub fn step_with(&mut self, db: T) -> Result<()> {
        self.accum = self.accum + self.omega.interpolate(self.z) * self.dt;
        self.z = self.z + db;
        self.steps += 1;
        self.t = T::c(self.steps as f64) * self.dt;
        let limit = self.omega.spec.length / T::c(4.0);
        if self.z.abs() > limit {
            return Err(Error::DomainExceeded { replica: 0, x: self.z.f64(), limit: limit.f64(), t: self.t.f64() });
        }
        Ok(())
    }
}

/// Samples frozen scenery and records the additive functional.
pub fn run_drs<T: Real>(
    k: &Kernel<T>,
    spec: GridSpec<T>,
    plan: Arc<SpectralPlan<T>>,
    seeds: &SeedTree,
    replica: u64,
    dt: T,
    output_steps: &[u64],
) -> Result<DrsRecord<T>> {
    let mut field_rng = seeds.stream(replica, Purpose::Scenery);
    let omega = sample_stationary(k, spec, plan, &mut field_rng, T::zero());
    let mut r = DrsReplica::new(omega, dt)?;
    let mut noise = Noise::new(seeds.stream(replica, Purpose::Noise), dt.f64());
    let horizon = output_steps.iter().copied().max().unwrap_or(0);
    let mut times = Vec::with_capacity(output_steps.len());
    let mut accum = Vec::with_capacity(output_steps.len());
    let mut max_abs = T::zero();
    let mut next = 0;
    loop {
        while next < output_steps.len() && output_steps[next] == r.steps {
            times.push(r.t);
            accum.push(r.accum);
            next += 1;
        }
        if r.steps >= horizon {
            break;
        }
        r.step_with(T::c(noise.next())).map_err(|e| with_replica(e, replica))?;
        max_abs = max_abs.max(r.z.abs());
    }
    Ok(DrsRecord { replica, times, accum, max_abs_z: max_abs })
}

/// Inputs shared by every replica of a polymer ensemble.
#[derive(Clone, Debug)]
pub struct EnsembleSpec<T: Real = f64> {
    pub kernel: Kernel<T>,
    pub grid: GridSpec<T>,
    pub dt: T,
    pub mean_v: T,
    pub seeds: SeedTree,
    pub observe: Observe,
}

impl<T: Real> EnsembleSpec<T> {
    /// Runs replica `i` from its own derived streams.
    pub fn run_replica(&self, plan: &Arc<SpectralPlan<T>>, i: u64) -> Result<ReplicaRecord<T>> {
        let mut field_rng = self.seeds.stream(i, Purpose::Field);
        let r = PolymerReplica::init(&self.kernel, self.grid, plan.clone(), &mut field_rng, self.mean_v, self.dt)?;
        let mut noise = Noise::new(self.seeds.stream(i, Purpose::Noise), self.dt.f64());
        Ok(r.run(i, &mut noise, &self.observe)?.0)
    }
}

/// Maps replicas `0..count` through `job` on `threads` workers and folds the
/// results with `absorb`/`merge`.  The fold must be order-independent for the
/// result to be independent of scheduling.
pub fn map_fold<R, A, J, F, M>(count: u64, threads: usize, init: impl Fn() -> A + Sync + Send, job: J, absorb: F, merge: M) -> Result<A>
where
    R: Send,
    A: Send,
    J: Fn(u64) -> Result<R> + Sync + Send,
    F: Fn(&mut A, R) + Sync + Send,
    M: Fn(&mut A, A) + Sync + Send,
{
    use rayon::prelude::*;
    let run = || {
        (0..count)
            .into_par_iter()
            .try_fold(&init, |mut acc, i| {
                let r = job(i)?;
                absorb(&mut acc, r);
                Ok::<A, Error>(acc)
            })
            .try_reduce(&init, |mut a, b| {
                merge(&mut a, b);
                Ok(a)
            })
    };
    if threads == 0 {
        return run();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Invalid(e.to_string()))?;
    pool.install(run)
}
