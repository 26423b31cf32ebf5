//! Command-line front end: configuration, seeding and artifact output.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "polylab", version, about = "Self-interacting Brownian polymer experiments")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Default, Clone)]
pub struct Common {
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub replicas: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads, 0 for all cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    /// `family:a=..,alpha=..,s=..`, e.g. `power-ir:a=1,alpha=0,s=1`.
    #[arg(long, global = true)]
    pub kernel: Option<String>,
    /// Extra `key=value` overrides, applied last.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample stationary fields and compare their covariance with b.
    Field,
    /// Run a polymer ensemble and write E(t), D(t) and Laplace transforms.
    Simulate {
        /// Also write the trajectories of the first N replicas.
        #[arg(long, value_name = "N")]
        trajectories: Option<u64>,
    },
    /// Brownian motion in frozen scenery.
    Drs,
    /// Resolvent bounds and the Laplace-domain sandwich.
    Bounds {
        #[arg(long)]
        lambda_min: Option<f64>,
        #[arg(long)]
        lambda_max: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Covariance preservation, MGF drift and Gaussian identities.
    Stationarity {
        /// Comma-separated check times.
        #[arg(long)]
        t_checks: Option<String>,
    },
    /// Power-law exponent of one CSV column on a window of the first column.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        column: String,
        #[arg(long)]
        lo: f64,
        #[arg(long)]
        hi: f64,
    },
    /// The acceptance suite.
    Reproduce {
        /// Comma-separated criterion numbers.
        #[arg(long)]
        only: Option<String>,
    },
}

impl Common {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.replicas {
            cfg.sim.replicas = v;
        }
        if let Some(v) = &self.out {
            cfg.out = v.clone();
        }
        if let Some(v) = self.threads {
            cfg.threads = v;
        }
        if let Some(v) = self.dt {
            cfg.sim.dt = v;
        }
        if let Some(k) = &self.kernel {
            cfg.kernel.apply_spec(k).map_err(|e| anyhow::anyhow!("--kernel: {e}"))?;
        }
        for kv in &self.set {
            let (k, v) = kv.split_once('=').ok_or_else(|| anyhow::anyhow!("--set expects KEY=VALUE, got `{kv}`"))?;
            cfg.set(k.trim(), v.trim()).map_err(|e| anyhow::anyhow!("--set: {e}"))?;
        }
        Ok(cfg)
    }
}

/// Runs one subcommand; `Ok(false)` means it ran but its checks failed.
pub fn run(cli: &Cli) -> anyhow::Result<bool> {
    let mut cfg = cli.common.resolve()?;
    match &cli.command {
        Command::Field => commands::field(&cfg),
        Command::Simulate { trajectories } => commands::simulate(&cfg, *trajectories),
        Command::Drs => commands::drs(&cfg),
        Command::Bounds { lambda_min, lambda_max, points } => {
            if let Some(v) = lambda_min {
                cfg.bounds.lambda_min = *v;
            }
            if let Some(v) = lambda_max {
                cfg.bounds.lambda_max = *v;
            }
            if let Some(v) = points {
                cfg.bounds.points = *v;
            }
            commands::bounds(&cfg)
        }
        Command::Stationarity { t_checks } => {
            if let Some(t) = t_checks {
                cfg.set("stationarity.t_checks", t).map_err(|e| anyhow::anyhow!("--t-checks: {e}"))?;
            }
            commands::stationarity(&cfg)
        }
        Command::Fit { input, column, lo, hi } => commands::fit(&cfg, input, column, *lo, *hi),
        Command::Reproduce { only } => {
            let only = match only {
                Some(s) => s
                    .split(',')
                    .map(|x| x.trim().parse::<u8>().map_err(|_| anyhow::anyhow!("--only: `{x}` is not a criterion number")))
                    .collect::<anyhow::Result<Vec<_>>>()?,
                None => Vec::new(),
            };
            commands::reproduce(&cfg, only)
        }
    }
}
