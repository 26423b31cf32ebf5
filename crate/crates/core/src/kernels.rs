//! Interaction kernels of positive type.
//!
//! All transforms use `b(x) = (1/2π) ∫ b̂(p) e^{ipx} dp`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{breakpoints, integrate, QuadConfig};
use crate::real::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    Gaussian,
    PowerIr,
    Summable,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::PowerIr => "power-ir",
            Family::Summable => "summable",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "gaussian" => Ok(Family::Gaussian),
            "power-ir" => Ok(Family::PowerIr),
            "summable" => Ok(Family::Summable),
            other => Err(Error::UnknownFamily(other.to_string())),
        }
    }
}

/// Small-frequency behaviour of `b̂`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Infrared {
    /// `b̂(p) ≍ |p|^α` with `-1 < α < 1`.
    Exponent(f64),
    /// `∫ p^{-2} b̂(p) dp < ∞`.
    Summable,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum RhoSquared {
    Finite(f64),
    Divergent,
}

impl RhoSquared {
    pub fn finite(self) -> Option<f64> {
        match self {
            RhoSquared::Finite(v) => Some(v),
            RhoSquared::Divergent => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfraredConstants {
    pub c1: f64,
    pub c2: f64,
    pub delta: f64,
    pub rho_squared: RhoSquared,
}

/// Interaction kernel `b` with its spectral density `b̂`.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel<T: Real = f64> {
    family: Family,
    a: T,
    alpha: T,
    s: T,
    name: String,
}

impl<T: Real> Kernel<T> {
    /// Builds a catalog kernel from its parameter list:
    /// `gaussian [a, s]`, `power-ir [a, alpha, s]`, `summable [a, s]`.
    pub fn make(family: &str, params: &[f64]) -> Result<Self> {
        let fam = Family::parse(family)?;
        let want = if fam == Family::PowerIr { 3 } else { 2 };
        if params.len() != want {
            return Err(Error::Invalid(format!("{family} expects {want} parameters, got {}", params.len())));
        }
        let k = match fam {
            Family::Gaussian => Self::gaussian(params[0], params[1])?,
            Family::PowerIr => Self::power_ir(params[0], params[1], params[2])?,
            Family::Summable => Self::summable(params[0], params[1])?,
        };
        k.validate()?;
        Ok(k)
    }

    fn build(family: Family, a: f64, alpha: f64, s: f64) -> Result<Self> {
        if !(a >= 0.0) || !a.is_finite() {
            return Err(Error::Negative { name: "a", value: a });
        }
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::NonPositive { name: "s", value: s });
        }
        Ok(Self { family, a: T::c(a), alpha: T::c(alpha), s: T::c(s), name: family.name().to_string() })
    }

    /// `b̂(p) = a e^{-p²/s}`.
    pub fn gaussian(a: f64, s: f64) -> Result<Self> {
        Self::build(Family::Gaussian, a, 0.0, s)
    }

    /// `b̂(p) = a |p|^α e^{-p²/s}`.
    pub fn power_ir(a: f64, alpha: f64, s: f64) -> Result<Self> {
        if !(alpha > -1.0 && alpha < 1.0) {
            return Err(Error::AlphaOutOfRange(alpha));
        }
        Self::build(Family::PowerIr, a, alpha, s)
    }

    /// `b̂(p) = a p² e^{-p²/s}`.
    pub fn summable(a: f64, s: f64) -> Result<Self> {
        Self::build(Family::Summable, a, 2.0, s)
    }

    /// The zero interaction, `b ≡ 0`.
    pub fn zero() -> Self {
        Self::build(Family::Gaussian, 0.0, 0.0, 1.0).expect("valid")
    }

    pub fn family(&self) -> Family {
        self.family
    }
    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn amplitude(&self) -> T {
        self.a
    }
    pub fn scale(&self) -> T {
        self.s
    }
    pub fn is_zero(&self) -> bool {
        self.a == T::zero()
    }

    /// Power of `|p|` multiplying the Gaussian envelope.
    pub fn spectral_power(&self) -> T {
        self.alpha
    }

    pub fn infrared(&self) -> Infrared {
        match self.family {
            Family::Summable => Infrared::Summable,
            _ => Infrared::Exponent(self.alpha.f64()),
        }
    }

    /// Same kernel with amplitude multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self { a: self.a * T::c(factor), ..self.clone() }
    }

    pub fn b_hat(&self, p: T) -> T {
        let env = self.a * (-(p * p) / self.s).exp();
        match self.family {
            Family::Gaussian => env,
            Family::Summable => env * p * p,
            Family::PowerIr => {
                if p == T::zero() {
                    if self.alpha > T::zero() {
                        T::zero()
                    } else if self.alpha == T::zero() {
                        self.a
                    } else {
                        T::infinity()
                    }
                } else {
                    env * p.abs().powf(self.alpha)
                }
            }
        }
    }

    pub fn c_hat(&self, p: T) -> T {
        self.b_hat(p).sqrt()
    }

    /// Frequency beyond which `e^{-p²/s} < 1e-16`.
    pub fn cutoff(&self) -> T {
        (self.s * T::c(16.0 * std::f64::consts::LN_10)).sqrt()
    }

    fn gauss_prefactor(&self) -> T {
        self.a / T::TAU() * (T::PI() * self.s).sqrt()
    }

    fn quad_cfg() -> QuadConfig {
        QuadConfig { abs_tol: 1e-15, rel_tol: (64.0 * T::epsilon().f64()).max(1e-12), max_intervals: 4000 }
    }

    fn half_line_points(&self, x: T) -> Vec<T> {
        let p = self.cutoff();
        let mut extra = vec![T::c(1e-8), T::c(1e-4), T::c(1e-2), T::c(0.1) * p, T::c(0.5) * p];
        if x.abs() > T::zero() {
            let period = T::TAU() / x.abs();
            let mut q = period;
            while q < p && extra.len() < 400 {
                extra.push(q);
                q = q + period;
            }
        }
        breakpoints(T::zero(), p, &extra)
    }

    /// `b(x)`; inverse-transform quadrature for families without closed form.
    pub fn eval_b(&self, x: T) -> Result<T> {
        if self.is_zero() {
            return Ok(T::zero());
        }
        match self.family {
            Family::Gaussian => Ok(self.gauss_prefactor() * (-self.s * x * x / T::c(4.0)).exp()),
            Family::Summable => {
                let s = self.s;
                let g = self.gauss_prefactor() * (-s * x * x / T::c(4.0)).exp();
                Ok(g * (s / T::c(2.0) - s * s * x * x / T::c(4.0)))
            }
            Family::PowerIr => self.inverse_transform(x),
        }
    }

    /// `(1/2π) ∫ b̂(p) cos(px) dp` by quadrature, for every family.
    pub fn inverse_transform(&self, x: T) -> Result<T> {
        let x = x.abs();
        let pts = self.half_line_points(x);
        let r = integrate(|p: T| self.b_hat(p) * (p * x).cos(), &pts, Self::quad_cfg());
        Ok(r.ok()? / T::PI())
    }

    /// `b′(x)`; the interaction is `f = -b′`.
    pub fn eval_b_prime(&self, x: T) -> Result<T> {
        if self.is_zero() || x == T::zero() {
            return Ok(T::zero());
        }
        match self.family {
            Family::Gaussian => {
                let s = self.s;
                Ok(-s * x / T::c(2.0) * self.gauss_prefactor() * (-s * x * x / T::c(4.0)).exp())
            }
            Family::Summable => {
                let s = self.s;
                let g = self.gauss_prefactor() * (-s * x * x / T::c(4.0)).exp();
                Ok(g * x * (-T::c(0.75) * s * s + s * s * s * x * x / T::c(8.0)))
            }
            Family::PowerIr => {
                let ax = x.abs();
                let pts = self.half_line_points(ax);
                let r = integrate(|p: T| -self.b_hat(p) * p * (p * ax).sin(), &pts, Self::quad_cfg());
                Ok(x.signum() * r.ok()? / T::PI())
            }
        }
    }

    pub fn b(&self, x: T) -> T {
        self.eval_b(x).expect("b quadrature")
    }

    pub fn b_prime(&self, x: T) -> T {
        self.eval_b_prime(x).expect("b' quadrature")
    }

    /// `(1/2π) ∫ |p|^k b̂(p) dp`.
    pub fn spectral_moment(&self, k: u32) -> Result<T> {
        let kk = T::c(k as f64);
        let pts = self.half_line_points(T::zero());
        let r = integrate(|p: T| if p == T::zero() { T::zero() } else { p.powf(kk) * self.b_hat(p) }, &pts, Self::quad_cfg());
        Ok(r.ok()? / T::PI())
    }

    /// `∫ p^{-2} b̂(p) dp`, finite only when `b̂(p) = O(p²)` near zero.
    pub fn rho_squared(&self, cfg: QuadConfig) -> Result<RhoSquared> {
        if self.is_zero() {
            return Ok(RhoSquared::Finite(0.0));
        }
        match self.family {
            Family::Summable => {
                let a = self.a;
                let s = self.s;
                let pts = breakpoints(T::zero(), self.cutoff(), &[T::c(0.5) * s.sqrt()]);
                let r = integrate(|p: T| a * (-(p * p) / s).exp(), &pts, cfg);
                Ok(RhoSquared::Finite((T::c(2.0) * r.ok()?).f64()))
            }
            _ => Ok(RhoSquared::Divergent),
        }
    }

    pub fn infrared_constants(&self) -> Result<InfraredConstants> {
        let a = self.a.f64();
        Ok(InfraredConstants {
            c1: a,
            c2: a,
            delta: (self.s.f64() * std::f64::consts::LN_2).sqrt(),
            rho_squared: self.rho_squared(QuadConfig::default())?,
        })
    }

    /// Radius beyond which `|b′| < tol · max|b′|`, for kernels with Gaussian tails.
    pub fn interaction_range(&self, tol: f64) -> Option<T> {
        if self.family == Family::PowerIr {
            return None;
        }
        if self.is_zero() {
            return Some(T::zero());
        }
        let step = T::c(0.01) / self.s.sqrt();
        let mut x = step;
        let mut peak = T::zero();
        let mut last_big = T::zero();
        let limit = T::c(200.0) / self.s.sqrt();
        while x < limit {
            let v = self.b_prime(x).abs();
            peak = peak.max(v);
            if v >= T::c(tol) * peak {
                last_big = x;
            }
            x = x + step;
        }
        Some(last_big + step)
    }

    /// Checks the standing assumptions on a sample grid.
    pub fn validate(&self) -> Result<()> {
        let pc = self.cutoff();
        for i in 0..=64 {
            let p = pc * T::c(i as f64 / 16.0 - 2.0);
            let (u, v) = (self.b_hat(p), self.b_hat(-p));
            if p != T::zero() && (u < T::zero() || u != v || !u.is_finite()) {
                return Err(Error::Invalid(format!("b̂ not even and nonnegative at p = {p}")));
            }
        }
        let b0 = self.eval_b(T::zero())?;
        let tol = T::c(1e-12).max(T::c(64.0) * T::epsilon());
        for i in 0..64 {
            let x = T::c(-8.0 + 16.0 * i as f64 / 63.0);
            let (l, r) = (self.eval_b(x)?, self.eval_b(-x)?);
            if (l - r).abs() > tol || l.abs() > b0 * (T::one() + tol) + tol {
                return Err(Error::Invalid(format!("b fails evenness or peak at x = {x}")));
            }
        }
        if self.family != Family::PowerIr {
            for &x in &[0.0, 0.7, 2.5] {
                let x = T::c(x);
                let (closed, quad) = (self.eval_b(x)?, self.inverse_transform(x)?);
                if (closed - quad).abs() > T::c(1e-9).max(T::c(1e3) * T::epsilon()) * (T::one() + b0.abs()) {
                    return Err(Error::Invalid(format!("closed-form b disagrees with its transform at x = {x}")));
                }
            }
        }
        for k in 0..=4 {
            let m = self.spectral_moment(k)?;
            if !m.is_finite() {
                return Err(Error::Invalid(format!("moment {k} of b̂ diverges")));
            }
        }
        Ok(())
    }
}
