//! Flat `key = value` run configuration with dotted keys.

use std::fmt;
use std::path::{Path, PathBuf};

use polylab::kernels::Kernel;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub family: String,
    pub a: f64,
    pub alpha: f64,
    pub s: f64,
}

impl KernelConfig {
    pub fn build(&self) -> polylab::Result<Kernel> {
        match self.family.as_str() {
            "power-ir" => Kernel::make(&self.family, &[self.a, self.alpha, self.s]),
            _ => Kernel::make(&self.family, &[self.a, self.s]),
        }
    }

    /// `family:a=1,alpha=0.5,s=1`; omitted parameters keep their current value.
    pub fn apply_spec(&mut self, spec: &str) -> Result<(), String> {
        let (family, rest) = spec.split_once(':').unwrap_or((spec, ""));
        self.family = family.trim().to_string();
        for part in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| format!("expected `name=value` in `{part}`"))?;
            let v: f64 = v.trim().parse().map_err(|_| format!("`{}` is not a number", v.trim()))?;
            match k.trim() {
                "a" => self.a = v,
                "alpha" => self.alpha = v,
                "s" => self.s = v,
                other => return Err(format!("unknown kernel parameter `{other}`")),
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    #[serde(rename = "L")]
    pub length: f64,
    #[serde(rename = "N")]
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    pub replicas: u64,
    /// Empty means twenty evenly spaced times up to the horizon.
    pub output_times: Vec<f64>,
    pub mean_v: f64,
    /// φ sampling stride in steps; 0 disables the autocorrelation output.
    pub phi_stride: u64,
    /// Largest autocorrelation lag, in strides.
    pub max_lag: usize,
}

impl SimConfig {
    pub fn times(&self) -> Vec<f64> {
        if !self.output_times.is_empty() {
            return self.output_times.clone();
        }
        (1..=20).map(|i| self.horizon * i as f64 / 20.0).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsConfig {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub points: usize,
    pub p_points: usize,
    pub closed: bool,
}

impl BoundsConfig {
    pub fn lambdas(&self) -> Vec<f64> {
        let (lo, hi) = (self.lambda_min.log10(), self.lambda_max.log10());
        let n = self.points.max(2);
        (0..n).map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (n - 1) as f64)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationarityConfig {
    pub t_checks: Vec<f64>,
    /// Node lags `0..lags` are checked, plus `N/2`.
    pub lags: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldConfig {
    pub samples: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub kernel: KernelConfig,
    pub grid: GridConfig,
    pub sim: SimConfig,
    pub bounds: BoundsConfig,
    pub stationarity: StationarityConfig,
    pub field: FieldConfig,
    pub out: PathBuf,
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 2024,
            kernel: KernelConfig { family: "gaussian".into(), a: 1.0, alpha: 0.0, s: 1.0 },
            grid: GridConfig { length: 256.0, n: 2048 },
            sim: SimConfig {
                dt: 1e-3,
                horizon: 10.0,
                replicas: 1000,
                output_times: Vec::new(),
                mean_v: 0.0,
                phi_stride: 0,
                max_lag: 0,
            },
            bounds: BoundsConfig { lambda_min: 1e-6, lambda_max: 1e-4, points: 9, p_points: 512, closed: true },
            stationarity: StationarityConfig { t_checks: vec![2.0, 5.0, 10.0], lags: 16 },
            field: FieldConfig { samples: 2000 },
            out: PathBuf::from("out"),
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("`{key}` expects a number, got `{v}`"))
}

fn list(key: &str, v: &str) -> Result<Vec<f64>, String> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| num(key, s)).collect()
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| ConfigError { line: i + 1, message };
            let (k, v) = line.split_once('=').ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let v = v.trim().trim_matches('"');
            cfg.set(k.trim(), v).map_err(err)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        match key {
            "seed" => self.seed = num(key, v)?,
            "threads" => self.threads = num(key, v)?,
            "out" => self.out = PathBuf::from(v),
            "kernel.family" => self.kernel.family = v.to_string(),
            "kernel.a" => self.kernel.a = num(key, v)?,
            "kernel.alpha" => self.kernel.alpha = num(key, v)?,
            "kernel.s" => self.kernel.s = num(key, v)?,
            "grid.L" => self.grid.length = num(key, v)?,
            "grid.N" => self.grid.n = num(key, v)?,
            "sim.dt" => self.sim.dt = num(key, v)?,
            "sim.horizon" => self.sim.horizon = num(key, v)?,
            "sim.replicas" => self.sim.replicas = num(key, v)?,
            "sim.output_times" => self.sim.output_times = list(key, v)?,
            "sim.mean_v" => self.sim.mean_v = num(key, v)?,
            "sim.phi_stride" => self.sim.phi_stride = num(key, v)?,
            "sim.max_lag" => self.sim.max_lag = num(key, v)?,
            "bounds.lambda_min" => self.bounds.lambda_min = num(key, v)?,
            "bounds.lambda_max" => self.bounds.lambda_max = num(key, v)?,
            "bounds.points" => self.bounds.points = num(key, v)?,
            "bounds.p_points" => self.bounds.p_points = num(key, v)?,
            "bounds.closed" => {
                self.bounds.closed = v.parse().map_err(|_| format!("`{key}` expects true or false, got `{v}`"))?
            }
            "stationarity.t_checks" => self.stationarity.t_checks = list(key, v)?,
            "stationarity.lags" => self.stationarity.lags = num(key, v)?,
            "field.samples" => self.field.samples = num(key, v)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Renders the config back into the flat format.
    pub fn to_text(&self) -> String {
        let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(", ");
        let c = self;
        [
            format!("seed = {}", c.seed),
            format!("threads = {}", c.threads),
            format!("out = {}", c.out.display()),
            format!("kernel.family = {}", c.kernel.family),
            format!("kernel.a = {}", c.kernel.a),
            format!("kernel.alpha = {}", c.kernel.alpha),
            format!("kernel.s = {}", c.kernel.s),
            format!("grid.L = {}", c.grid.length),
            format!("grid.N = {}", c.grid.n),
            format!("sim.dt = {}", c.sim.dt),
            format!("sim.horizon = {}", c.sim.horizon),
            format!("sim.replicas = {}", c.sim.replicas),
            format!("sim.output_times = {}", join(&c.sim.output_times)),
            format!("sim.mean_v = {}", c.sim.mean_v),
            format!("sim.phi_stride = {}", c.sim.phi_stride),
            format!("sim.max_lag = {}", c.sim.max_lag),
            format!("bounds.lambda_min = {}", c.bounds.lambda_min),
            format!("bounds.lambda_max = {}", c.bounds.lambda_max),
            format!("bounds.points = {}", c.bounds.points),
            format!("bounds.p_points = {}", c.bounds.p_points),
            format!("bounds.closed = {}", c.bounds.closed),
            format!("stationarity.t_checks = {}", join(&c.stationarity.t_checks)),
            format!("stationarity.lags = {}", c.stationarity.lags),
            format!("field.samples = {}", c.field.samples),
        ]
        .join("\n")
            + "\n"
    }

    /// SHA-256 of the canonical JSON with `out` and `threads` cleared, since
    /// neither changes any number written.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = PathBuf::new();
        c.threads = 0;
        let json = serde_json::to_string(&c).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}
