//! Acceptance suite: every numbered criterion as a list of checks with
//! tolerances fixed below.

pub mod criteria;
pub mod oracles;
pub mod runs;

use serde::Serialize;

/// Standard errors allowed on every Monte Carlo comparison.
pub const SIGMAS: f64 = 4.0;
pub const MGF_TOL: f64 = 1e-10;
pub const SLOPE_TOL_RESOLVENT: f64 = 0.02;
pub const SLOPE_TOL_E_HAT: f64 = 0.03;
pub const ORDER_TOL: f64 = 1e-6;
pub const SUPER_WINDOW: (f64, f64) = (1.15, 1.55);
pub const SUPER_FLOOR: f64 = 1.05;
pub const DRS_REL_TOL: f64 = 0.10;
pub const LOCAL_TIME_FACTOR: f64 = 1.7;
pub const RUNTIME_TARGET_SECS: f64 = 600.0;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub label: String,
    pub detail: String,
    pub pass: bool,
}

impl Check {
    pub fn new(label: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self { label: label.into(), detail: detail.into(), pass }
    }

    pub fn failed(label: impl Into<String>, err: impl std::fmt::Display) -> Self {
        Self::new(label, false, format!("error: {err}"))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub id: u8,
    pub title: String,
    pub checks: Vec<Check>,
    pub seconds: f64,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.pass)
    }

    pub fn line(&self) -> String {
        let ok = self.checks.iter().filter(|c| c.pass).count();
        let mut s = format!(
            "{} criterion {:>2} {}: {}/{} checks",
            if self.pass() { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            ok,
            self.checks.len()
        );
        if let Some(c) = self.checks.iter().find(|c| !c.pass) {
            s.push_str(&format!("; first failure: {} ({})", c.label, c.detail));
        }
        s
    }
}

#[derive(Clone, Debug)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
    /// Restrict to these criteria; empty runs all of them.
    pub only: Vec<u8>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self { seed: 2024, threads: 0, only: Vec::new() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub outcomes: Vec<Outcome>,
}

impl SuiteReport {
    pub fn pass(&self) -> bool {
        self.outcomes.iter().all(Outcome::pass)
    }
}

/// Runs the selected criteria. The independent oracle checks of criterion 10
/// go first; the criteria sharing the large ensembles follow.
pub fn run_suite(opts: &SuiteOptions, log: &mut dyn FnMut(&str)) -> SuiteReport {
    let wanted = |id: u8| opts.only.is_empty() || opts.only.contains(&id);
    let runs = runs::Runs::new(opts.clone());
    let mut outcomes = Vec::new();
    let mut oracle_checks = Vec::new();
    let mut oracle_secs = 0.0;
    if wanted(10) {
        let t0 = std::time::Instant::now();
        log("criterion 10: independent oracles");
        oracle_checks = criteria::oracles_first(&runs);
        oracle_secs = t0.elapsed().as_secs_f64();
    }
    for id in 1..=9u8 {
        if !wanted(id) {
            continue;
        }
        log(&format!("criterion {id}: {}", criteria::title(id)));
        let t0 = std::time::Instant::now();
        let checks = criteria::run(id, &runs, log);
        let o = Outcome { id, title: criteria::title(id).into(), checks, seconds: t0.elapsed().as_secs_f64() };
        for c in &o.checks {
            log(&format!("  [{}] {}: {}", if c.pass { "ok" } else { "FAIL" }, c.label, c.detail));
        }
        outcomes.push(o);
    }
    if wanted(10) {
        let t0 = std::time::Instant::now();
        log("criterion 10: examples backed by the main runs");
        oracle_checks.extend(criteria::oracles_from_runs(&runs));
        let o = Outcome { id: 10, title: criteria::title(10).into(), checks: oracle_checks, seconds: oracle_secs + t0.elapsed().as_secs_f64() };
        for c in &o.checks {
            log(&format!("  [{}] {}: {}", if c.pass { "ok" } else { "FAIL" }, c.label, c.detail));
        }
        outcomes.push(o);
    }
    SuiteReport { outcomes }
}
