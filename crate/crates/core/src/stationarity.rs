//! Checks that the Gaussian law with covariance `b` is invariant for the
//! environment seen from the particle.
//!
//! Pairings use `⟨u, v⟩ = (1/2π) ∫ û(p) v̂(p) b̂(p) dp`, which is the covariance
//! of `∫u ω` and `∫v ω` under the stationary law.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{snapshot_moments, Estimate, EnsembleStats, Moments};
use crate::field::{sample_stationary, FieldGrid, GridSpec, SpectralPlan};
use crate::kernels::Kernel;
use crate::quad::{breakpoints, integrate, QuadConfig};
use crate::real::Real;
use crate::rng::{Purpose, SeedTree, Stream};

/// Real even band-limited profile `û(p) = P(p²) (1 − p²/B²)⁴` on `|p| ≤ B`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub coeffs: Vec<f64>,
    pub band: f64,
}

pub const DEFAULT_BAND: f64 = 4.0;

impl TestFunction {
    pub fn new(coeffs: Vec<f64>, band: f64) -> Result<Self> {
        if !(band > 0.0) {
            return Err(Error::NonPositive { name: "band", value: band });
        }
        Ok(Self { coeffs, band })
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new(), band: DEFAULT_BAND }
    }

    /// Cubic `P` with standard normal coefficients scaled by `scale`.
    pub fn random(rng: &mut Stream, scale: f64) -> Self {
        let coeffs = (0..4).map(|i| scale * rng.normal() / 4f64.powi(i)).collect();
        Self { coeffs, band: DEFAULT_BAND }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c * factor).collect(), band: self.band }
    }

    pub fn u_hat(&self, p: f64) -> f64 {
        let x = p * p;
        if x >= self.band * self.band {
            return 0.0;
        }
        let poly = self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c);
        poly * (1.0 - x / (self.band * self.band)).powi(4)
    }

    /// Spatial profile `u(x) = (1/2π) ∫ û(p) e^{ipx} dp`.
    pub fn u(&self, x: f64) -> Result<f64> {
        let r = integrate(|p: f64| self.u_hat(p) * (p * x).cos(), &self.points(), QuadConfig::default());
        Ok(r.ok()? / std::f64::consts::PI)
    }

    fn points(&self) -> Vec<f64> {
        let b = self.band;
        breakpoints(0.0, b, &[0.25 * b, 0.5 * b, 0.75 * b])
    }

    /// `∫ u ω dx` for a periodic field, evaluated mode by mode.
    pub fn apply<T: Real>(&self, field: &mut FieldGrid<T>) -> f64 {
        let spec = field.spec;
        let c = field.spectrum();
        c.iter().enumerate().map(|(k, ck)| ck.re.f64() * self.u_hat(spec.freq(k).f64())).sum()
    }
}

/// `(1/2π) ∫ |p|ᵐ û v̂ b̂ dp` over the common band; `odd` keeps the sign of `p`.
fn weighted<T: Real>(k: &Kernel<T>, u: &TestFunction, v: &TestFunction, power: i32, odd: bool) -> Result<f64> {
    if k.is_zero() {
        return Ok(0.0);
    }
    let band = u.band.min(v.band);
    let pos = breakpoints(0.0, band, &[0.25 * band, 0.5 * band, 0.75 * band, 1e-3]);
    let mut pts: Vec<f64> = pos.iter().rev().map(|&p| -p).collect();
    pts.extend(pos.iter().skip(1));
    let f = |p: f64| {
        let w = if odd { p.powi(power) } else { p.abs().powi(power) };
        u.u_hat(p) * v.u_hat(p) * k.b_hat(T::c(p)).f64() * w
    };
    let r = integrate(f, &pts, QuadConfig { abs_tol: 1e-16, rel_tol: 1e-13, max_intervals: 4000 });
    Ok(r.ok()? / std::f64::consts::TAU)
}

/// `⟨u, v⟩`.
pub fn pairing<T: Real>(k: &Kernel<T>, u: &TestFunction, v: &TestFunction) -> Result<f64> {
    if u.band != v.band {
        return Err(Error::GridMismatch);
    }
    weighted(k, u, v, 0, false)
}

/// `⟨u, b⟩ = ∫ u(x) b(x) dx`, the pairing of `u` with a point evaluation.
pub fn pairing_with_point<T: Real>(k: &Kernel<T>, u: &TestFunction) -> Result<f64> {
    if k.is_zero() {
        return Ok(0.0);
    }
    let b = u.band;
    let pos = breakpoints(0.0, b, &[0.25 * b, 0.5 * b, 0.75 * b]);
    let cfg = QuadConfig { abs_tol: 1e-16, rel_tol: 1e-13, max_intervals: 4000 };
    let r = integrate(|p: f64| u.u_hat(p) * k.b_hat(T::c(p)).f64(), &pos, cfg);
    Ok(r.ok()? / std::f64::consts::PI)
}

/// Sign errors that the drift check must detect.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mutation {
    None,
    /// Flips the sign of `⟨u′, u′⟩`.
    FlipGradientTerm,
    /// Drops `⟨u″, u⟩`.
    DropLaplacianTerm,
}

/// Terms of the drift of `E exp(∫uη)` at the stationary law.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MgfDrift {
    pub value: f64,
    pub norm: f64,
    pub laplacian: f64,
    pub gradient: f64,
    pub odd: f64,
    pub point: f64,
}

/// `e^{⟨u,u⟩/2} {½⟨u″,u⟩ + ½⟨u′,u′⟩ + ½⟨u′,u⟩² − ⟨u′,u⟩⟨u,b⟩}`.
pub fn mgf_drift<T: Real>(k: &Kernel<T>, u: &TestFunction, mutation: Mutation) -> Result<MgfDrift> {
    let norm = pairing(k, u, u)?;
    let p2 = weighted(k, u, u, 2, false)?;
    let mut laplacian = -p2;
    let mut gradient = p2;
    // ⟨u′, u⟩ has integrand i p û² b̂, odd in p.
    let odd = weighted(k, u, u, 1, true)?;
    let point = pairing_with_point(k, u)?;
    match mutation {
        Mutation::None => {}
        Mutation::FlipGradientTerm => gradient = -gradient,
        Mutation::DropLaplacianTerm => laplacian = 0.0,
    }
    let value = (0.5 * norm).exp() * (0.5 * laplacian + 0.5 * gradient + 0.5 * odd * odd - odd * point);
    Ok(MgfDrift { value, norm, laplacian, gradient, odd, point })
}

/// Monte Carlo side against closed form for one Gaussian identity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub mc: Estimate,
    pub exact: f64,
    pub z: f64,
}

impl Residual {
    fn new(mc: Estimate, exact: f64) -> Self {
        Self { mc, exact, z: mc.z(exact) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    /// `E[Y e^X] = e^{E X²/2} E[XY]`.
    pub first: Residual,
    /// `E[YZ e^X] = e^{E X²/2} (E[YZ] + E[XY] E[XZ])`.
    pub second: Residual,
    pub samples: u64,
}

/// Realizes `X = ∫uω`, `Y = ∫vω`, `Z = ∫wω` on sampled periodic fields.
#[allow(clippy::too_many_arguments)]
pub fn gaussian_identity_check<T: Real>(
    k: &Kernel<T>,
    u: &TestFunction,
    v: &TestFunction,
    w: &TestFunction,
    spec: GridSpec<T>,
    seeds: &SeedTree,
    samples: u64,
    groups: usize,
) -> Result<IdentityReport> {
    let plan: Arc<SpectralPlan<T>> = spec.plan();
    let job = |i: u64| {
        let mut rng = seeds.stream(i, Purpose::Field);
        let mut f = sample_stationary(k, spec, plan.clone(), &mut rng, T::zero());
        let (x, y, z) = (u.apply(&mut f), v.apply(&mut f), w.apply(&mut f));
        let e = x.exp();
        Ok::<_, Error>(vec![y * e, y * z * e])
    };
    let mom = crate::dynamics::map_fold(
        samples,
        0,
        || Moments::new(2, groups),
        |i| job(i).map(|o| (i, o)),
        |m, (i, o)| m.push(i, &o),
        |a, b| a.merge(&b),
    )?;
    let rs = mom.resampled();
    let xx = pairing(k, u, u)?;
    let xy = pairing(k, u, v)?;
    let xz = pairing(k, u, w)?;
    let yz = pairing(k, v, w)?;
    let g = (0.5 * xx).exp();
    Ok(IdentityReport {
        first: Residual::new(rs.estimate(|m| m[0]), g * xy),
        second: Residual::new(rs.estimate(|m| m[1]), g * (yz + xy * xz)),
        samples,
    })
}

/// One row of the covariance-preservation table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovarianceRow {
    pub t: f64,
    pub x: f64,
    pub mean: Residual,
    pub cov: Residual,
}

impl CovarianceRow {
    pub fn passes(&self, sigmas: f64) -> bool {
        self.mean.z <= sigmas && self.cov.z <= sigmas
    }
}

/// Compares snapshot means with 0 and `E[η(t,x) η(t,0)]` with `b(x)`.
/// `t_checks[c]` is the time of snapshot `c`; `lags` are the recorded offsets.
pub fn covariance_preservation<T: Real>(
    k: &Kernel<T>,
    stats: &EnsembleStats,
    t_checks: &[f64],
    lags: &[f64],
) -> Result<Vec<CovarianceRow>> {
    let mut rows = Vec::new();
    for (c, &t) in t_checks.iter().enumerate() {
        let (mean, cov) = snapshot_moments(stats, c).ok_or(Error::GridMismatch)?;
        if mean.len() != lags.len() {
            return Err(Error::GridMismatch);
        }
        for (i, &x) in lags.iter().enumerate() {
            let target = k.eval_b(T::c(x))?.f64();
            rows.push(CovarianceRow { t, x, mean: Residual::new(mean[i], 0.0), cov: Residual::new(cov[i], target) });
        }
    }
    Ok(rows)
}

/// Forward against flipped-backward statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlipReport {
    /// `E[φ(η(t))]` and `E[φ(η(t))³]` at each recorded time; both vanish under the flip.
    pub odd_moments: Vec<(f64, Estimate, Estimate)>,
    /// `E[(X(T) − X(T/2)) φ(η(T))]`.
    pub forward: Estimate,
    /// `E[(X(T/2) − X(0)) φ(η(0))]`, the same statistic for `−η(T − ·)`.
    pub backward: Estimate,
    /// `forward − backward`.
    pub difference: Estimate,
}

/// Uses the first two `drift_cross` slots of the layout, which must be
/// `(T/2, T, T)` and `(0, T/2, 0)` in time-index form.
pub fn yaglom_flip_check(stats: &EnsembleStats) -> Result<FlipReport> {
    let lay = &stats.layout;
    let rs = stats.resampled.as_ref().ok_or(Error::Invalid("statistics lack resampling data".into()))?;
    if lay.drift_cross.len() < 2 {
        return Err(Error::Invalid("layout lacks the forward/backward cross moments".into()));
    }
    let odd_moments = (0..lay.times.len())
        .map(|i| {
            let (s1, s3) = (lay.phi_moment_slot(i, 1), lay.phi_moment_slot(i, 3));
            (lay.times[i], rs.estimate(|m| m[s1]), rs.estimate(|m| m[s3]))
        })
        .collect();
    let (f, b) = (lay.drift_cross_slot(0), lay.drift_cross_slot(1));
    Ok(FlipReport {
        odd_moments,
        forward: rs.estimate(|m| m[f]),
        backward: rs.estimate(|m| m[b]),
        difference: rs.estimate(|m| m[f] - m[b]),
    })
}
