//! Ensembles shared between criteria, computed on first use.

use std::cell::OnceCell;
use std::time::Instant;

use polylab::dynamics::{steps_for, EnsembleSpec, Observe};
use polylab::estimators::{drs_stats, ensemble_stats, DrsStats, EnsembleStats, Layout, DEFAULT_GROUPS};
use polylab::field::GridSpec;
use polylab::kernels::Kernel;
use polylab::rng::SeedTree;

use crate::SuiteOptions;

pub type RunResult<T> = Result<T, String>;

pub const DT: f64 = 1e-3;
pub const REPLICAS: u64 = 10_000;

/// Stationarity run: snapshots of η at these times and node lags.
pub const SNAPSHOT_TIMES: [f64; 3] = [2.0, 5.0, 10.0];
pub const STAT_L: f64 = 256.0;
pub const STAT_N: usize = 1024;

/// Main run: output every half time unit to `HORIZON`, φ every 0.1.
pub const HORIZON: f64 = 100.0;
pub const OUTPUT_STEP: f64 = 0.5;
pub const PHI_STRIDE: u64 = 100;
pub const MAX_LAG: usize = 1000;
pub const BIG_L: f64 = 1024.0;
pub const BIG_N: usize = 4096;
pub const WINDOWS: [(f64, f64); 3] = [(0.0, 10.0), (10.0, 20.0), (20.0, 40.0)];

pub const HALF_DT_REPLICAS: u64 = 2000;
pub const HALF_DT_TIMES: [f64; 3] = [10.0, 50.0, 100.0];
pub const BALLISTIC_V: f64 = 0.5;

pub const SUMMABLE_REPLICAS: u64 = 4000;
pub const DRS_DT: f64 = 0.01;
pub const DRS_HORIZON: f64 = 200.0;

pub struct Timed<T> {
    pub value: T,
    pub seconds: f64,
}

pub struct Runs {
    pub opts: SuiteOptions,
    stationarity: OnceCell<RunResult<Timed<EnsembleStats>>>,
    big: OnceCell<RunResult<Timed<EnsembleStats>>>,
    half_dt: OnceCell<RunResult<EnsembleStats>>,
    ballistic: OnceCell<RunResult<EnsembleStats>>,
    summable: OnceCell<RunResult<EnsembleStats>>,
    drs: OnceCell<RunResult<DrsStats>>,
}

pub fn gaussian() -> Kernel {
    Kernel::gaussian(1.0, 1.0).expect("valid kernel")
}

pub fn summable() -> Kernel {
    Kernel::summable(1.0, 1.0).expect("valid kernel")
}

/// Node offsets 0..16 plus the far field at `L/2`.
pub fn snapshot_lags() -> Vec<usize> {
    let mut v: Vec<usize> = (0..16).collect();
    v.push(STAT_N / 2);
    v
}

pub fn snapshot_lag_x() -> Vec<f64> {
    let h = STAT_L / STAT_N as f64;
    snapshot_lags().iter().map(|&l| l as f64 * h).collect()
}

pub fn big_times() -> Vec<f64> {
    let n = (HORIZON / OUTPUT_STEP).round() as usize;
    (0..=n).map(|i| i as f64 * OUTPUT_STEP).collect()
}

fn index_of(times: &[f64], t: f64) -> usize {
    times.iter().position(|&s| (s - t).abs() < 1e-9).expect("time on the output grid")
}

fn run_err(e: polylab::Error) -> String {
    e.to_string()
}

impl Runs {
    pub fn new(opts: SuiteOptions) -> Self {
        Self {
            opts,
            stationarity: OnceCell::new(),
            big: OnceCell::new(),
            half_dt: OnceCell::new(),
            ballistic: OnceCell::new(),
            summable: OnceCell::new(),
            drs: OnceCell::new(),
        }
    }

    pub fn seeds(&self, tag: u64) -> SeedTree {
        SeedTree::new(self.opts.seed.wrapping_mul(1000).wrapping_add(tag))
    }

    /// Gaussian kernel, stationary start, η snapshots at 17 lags.
    pub fn stationarity(&self) -> &RunResult<Timed<EnsembleStats>> {
        self.stationarity.get_or_init(|| {
            let t0 = Instant::now();
            let grid = GridSpec::new(STAT_L, STAT_N).map_err(run_err)?;
            let observe = Observe {
                snapshot_steps: steps_for(&SNAPSHOT_TIMES, DT),
                snapshot_lags: snapshot_lags(),
                ..Observe::at_times(&[SNAPSHOT_TIMES[2]], DT)
            };
            let layout = Layout::from_observe(&observe, DT);
            let spec = EnsembleSpec { kernel: gaussian(), grid, dt: DT, mean_v: 0.0, seeds: self.seeds(1), observe };
            let value = ensemble_stats(&spec, &layout, REPLICAS, self.opts.threads, DEFAULT_GROUPS).map_err(run_err)?;
            Ok(Timed { value, seconds: t0.elapsed().as_secs_f64() })
        })
    }

    fn big_layout(observe: &Observe) -> Layout {
        let times = big_times();
        let mut layout = Layout::from_observe(observe, DT);
        layout.lags = (0..=MAX_LAG).collect();
        layout.windows = WINDOWS.iter().map(|&(s, t)| (index_of(&times, s), index_of(&times, t))).collect();
        let (mid, end) = (index_of(&times, HORIZON / 2.0), index_of(&times, HORIZON));
        layout.drift_cross = vec![(mid, end, end), (0, mid, 0)];
        layout
    }

    /// Gaussian kernel to `t = 100` with φ autocorrelations and Yaglom windows.
    pub fn big(&self) -> &RunResult<Timed<EnsembleStats>> {
        self.big.get_or_init(|| {
            let t0 = Instant::now();
            let grid = GridSpec::new(BIG_L, BIG_N).map_err(run_err)?;
            let observe = Observe { phi_stride: Some(PHI_STRIDE), ..Observe::at_times(&big_times(), DT) };
            let layout = Self::big_layout(&observe);
            let spec = EnsembleSpec { kernel: gaussian(), grid, dt: DT, mean_v: 0.0, seeds: self.seeds(2), observe };
            let value = ensemble_stats(&spec, &layout, REPLICAS, self.opts.threads, DEFAULT_GROUPS).map_err(run_err)?;
            Ok(Timed { value, seconds: t0.elapsed().as_secs_f64() })
        })
    }

    /// The main run's `E(t)` at half the step, for the step-size bias check.
    pub fn half_dt(&self) -> &RunResult<EnsembleStats> {
        self.half_dt.get_or_init(|| {
            let dt = DT / 2.0;
            let grid = GridSpec::new(BIG_L, BIG_N).map_err(run_err)?;
            let observe = Observe::at_times(&HALF_DT_TIMES, dt);
            let layout = Layout::from_observe(&observe, dt);
            let spec = EnsembleSpec { kernel: gaussian(), grid, dt, mean_v: 0.0, seeds: self.seeds(3), observe };
            ensemble_stats(&spec, &layout, HALF_DT_REPLICAS, self.opts.threads, DEFAULT_GROUPS).map_err(run_err)
        })
    }

    pub fn ballistic(&self) -> &RunResult<EnsembleStats> {
        self.ballistic.get_or_init(|| {
            let grid = GridSpec::new(BIG_L, BIG_N).map_err(run_err)?;
            let observe = Observe::at_times(&[HORIZON / 2.0, HORIZON], DT);
            let layout = Layout::from_observe(&observe, DT);
            let spec = EnsembleSpec { kernel: gaussian(), grid, dt: DT, mean_v: BALLISTIC_V, seeds: self.seeds(4), observe };
            ensemble_stats(&spec, &layout, REPLICAS, self.opts.threads, DEFAULT_GROUPS).map_err(run_err)
        })
    }

    /// Summable kernel, `D(t)` on `t = 10, 20, …, 100`.
    pub fn summable(&self) -> &RunResult<EnsembleStats> {
        self.summable.get_or_init(|| {
            let grid = GridSpec::new(512.0, 2048).map_err(run_err)?;
            let times: Vec<f64> = (1..=10).map(|i| 10.0 * i as f64).collect();
            let observe = Observe::at_times(&times, DT);
            let layout = Layout::from_observe(&observe, DT);
            let spec = EnsembleSpec { kernel: summable(), grid, dt: DT, mean_v: 0.0, seeds: self.seeds(5), observe };
            ensemble_stats(&spec, &layout, SUMMABLE_REPLICAS, self.opts.threads, DEFAULT_GROUPS).map_err(run_err)
        })
    }

    /// Scenery functional for the summable kernel to `t = 200`.
    pub fn drs(&self) -> &RunResult<DrsStats> {
        self.drs.get_or_init(|| {
            let grid = GridSpec::new(512.0, 2048).map_err(run_err)?;
            let times: Vec<f64> = (1..=8).map(|i| 25.0 * i as f64).collect();
            let steps = steps_for(&times, DRS_DT);
            drs_stats(&summable(), grid, &self.seeds(6), DRS_DT, &steps, REPLICAS, self.opts.threads, DEFAULT_GROUPS)
                .map_err(run_err)
        })
    }
}
