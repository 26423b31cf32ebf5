//! Resolvent bounds for `(φ, (λ − G)⁻¹ φ)` and the resulting Ê(λ) sandwich.
//!
//! Upper bound: drop the antisymmetric part, leaving the resolvent of the
//! scenery generator. Lower bounds: restrict the variational problem to linear
//! functionals `∫u(x)ω(x)dx` and either solve it on a frequency grid or weaken
//! the cross term by Cauchy–Schwarz, which gives a one-dimensional integral.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{fit_exponent, laplace_transform, ExponentFit};
use crate::kernels::Kernel;
use crate::quad::{breakpoints, integrate, QuadConfig};
use crate::real::Real;

fn cfg<T: Real>(rel: f64) -> QuadConfig {
    QuadConfig { abs_tol: 1e-300, rel_tol: rel.max(64.0 * T::epsilon().f64()), max_intervals: 20_000 }
}

/// Breakpoints on `[0, top]`: decades around the scale `w` plus the kernel envelope.
fn half_line<T: Real>(k: &Kernel<T>, w: T, extra: &[T]) -> Vec<T> {
    let top = k.cutoff();
    let mut pts: Vec<T> = extra.to_vec();
    let mut q = w * T::c(1e-8);
    while q < top {
        pts.push(q);
        q = q * T::c(10f64.sqrt());
    }
    let rs = k.scale().sqrt();
    pts.extend([T::c(0.25) * rs, T::c(0.5) * rs, rs, T::c(2.0) * rs]);
    breakpoints(T::zero(), top, &pts)
}

/// `(1/2π) ∫ b̂(p) / (λ + p²/2) dp`.
pub fn resolvent_s<T: Real>(k: &Kernel<T>, lambda: T) -> Result<T> {
    check_lambda(lambda)?;
    if k.is_zero() {
        return Ok(T::zero());
    }
    let half = T::c(0.5);
    let pts = half_line(k, (T::c(2.0) * lambda).sqrt(), &[]);
    let r = integrate(|p: T| k.b_hat(p) / (lambda + half * p * p), &pts, cfg::<T>(1e-11));
    Ok(r.ok()? / T::PI())
}

/// `K(λ, p) = (1/2π) ∫ b̂(q) / (λ + (p + q)²/2) dq`.
pub fn kernel_k<T: Real>(k: &Kernel<T>, lambda: T, p: T) -> Result<T> {
    kernel_k_with(k, lambda, p, 1e-11)
}

fn kernel_k_with<T: Real>(k: &Kernel<T>, lambda: T, p: T, rel: f64) -> Result<T> {
    check_lambda(lambda)?;
    if k.is_zero() {
        return Ok(T::zero());
    }
    let p = p.abs();
    let half = T::c(0.5);
    let f = |q: T| k.b_hat(q) / (lambda + half * (p + q) * (p + q));
    let w = (T::c(2.0) * lambda).sqrt();
    let top = k.cutoff();
    // Peak of the denominator at q = −p; b̂ may be singular at q = 0.
    let mut extra = Vec::new();
    for m in [1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0] {
        let d = w * T::c(m);
        extra.extend([-p - d, -p + d]);
    }
    extra.push(-p);
    let pos = half_line(k, w, &extra.iter().map(|x| x.abs()).collect::<Vec<_>>());
    let mut pts: Vec<T> = pos.iter().map(|&x| -x).collect();
    pts.extend(extra.iter().copied());
    pts.extend(pos.iter().copied());
    let pts = breakpoints(-top, top, &pts);
    let r = integrate(f, &pts, cfg::<T>(rel));
    Ok(r.ok()? / T::TAU())
}

/// `(1/2π) ∫ b̂(p) / (λ + p²/2 + 2K(λ, p) p²) dp`.
pub fn lower_bound_closed<T: Real>(k: &Kernel<T>, lambda: T) -> Result<T> {
    check_lambda(lambda)?;
    if k.is_zero() {
        return Ok(T::zero());
    }
    let half = T::c(0.5);
    let two = T::c(2.0);
    let mut failure = None;
    let f = |p: T| {
        let kk = match kernel_k_with(k, lambda, p, 1e-10) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                T::zero()
            }
        };
        k.b_hat(p) / (lambda + half * p * p + two * kk * p * p)
    };
    let pts = half_line(k, lambda, &[(two * lambda).sqrt()]);
    let r = integrate(f, &pts, cfg::<T>(1e-8));
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(r.ok()? / T::PI())
}

/// Positive half of a symmetric frequency grid with trapezoid weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PGrid {
    pub p: Vec<f64>,
    pub w: Vec<f64>,
}

impl PGrid {
    /// Geometric nodes from `p_min` to `p_max`; the first cell reaches down to 0.
    pub fn geometric(p_min: f64, p_max: f64, n: usize) -> Result<Self> {
        if !(p_min > 0.0 && p_max > p_min) || n < 2 {
            return Err(Error::Invalid(format!("bad frequency grid [{p_min}, {p_max}] with {n} points")));
        }
        let r = (p_max / p_min).ln() / (n - 1) as f64;
        let p: Vec<f64> = (0..n).map(|i| p_min * (r * i as f64).exp()).collect();
        let w = (0..n)
            .map(|i| {
                let lo = if i == 0 { -p[0] } else { p[i - 1] };
                let hi = if i + 1 == n { p[i] } else { p[i + 1] };
                0.5 * (hi - lo)
            })
            .collect();
        Ok(Self { p, w })
    }

    /// Default grid for `λ`: `λ/10` up to the kernel's Gaussian cutoff.
    pub fn for_lambda<T: Real>(k: &Kernel<T>, lambda: f64, n: usize) -> Result<Self> {
        Self::geometric(lambda / 10.0, k.cutoff().f64(), n)
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }
}

pub const DEFAULT_P_POINTS: usize = 512;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variational {
    pub value: f64,
    /// Optimal even profile `û(p_i)` on the positive grid.
    pub u_hat: Vec<f64>,
}

/// Maximizes `2⟨ℓ, u⟩ − ⟨u, (D + M) u⟩` over even `û` sampled on `grid`.
///
/// `D` carries `(1/2π)∫(λ + p²/2) b̂ û²` and `M` the exact cross term
/// `(1/8π²)∬ b̂(p) b̂(q) (p û(p) − q û(q))² / (λ + (p − q)²/2)`.
pub fn lower_bound_variational<T: Real>(k: &Kernel<T>, lambda: T, grid: &PGrid) -> Result<Variational> {
    check_lambda(lambda)?;
    let n = grid.len();
    if k.is_zero() {
        return Ok(Variational { value: 0.0, u_hat: vec![0.0; n] });
    }
    let lam = lambda.f64();
    let (p, w) = (&grid.p, &grid.w);
    let bw: Vec<f64> = (0..n).map(|i| k.b_hat(T::c(p[i])).f64() * w[i]).collect();
    let c2 = 1.0 / (4.0 * std::f64::consts::PI * std::f64::consts::PI);
    let tau = std::f64::consts::TAU;
    // Reduced to even profiles: row i couples to ±p_j, doubling each term.
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut r = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            let same = if i == j { 0.0 } else { bw[i] * bw[j] / (lam + 0.5 * (p[i] - p[j]).powi(2)) };
            let opp = bw[i] * bw[j] / (lam + 0.5 * (p[i] + p[j]).powi(2));
            r[i] += same + opp;
            a[(i, j)] = 2.0 * c2 * p[i] * p[j] * (opp - same);
        }
    }
    for i in 0..n {
        a[(i, i)] += 2.0 * (c2 * p[i] * p[i] * r[i] + (lam + 0.5 * p[i] * p[i]) * bw[i] / tau);
    }
    let l = DVector::from_iterator(n, bw.iter().map(|b| 2.0 * b / tau));
    let min_diagonal = a.diagonal().min();
    let chol = a.cholesky().ok_or(Error::NotPositiveDefinite { size: n, min_diagonal })?;
    let u = chol.solve(&l);
    Ok(Variational { value: l.dot(&u), u_hat: u.iter().copied().collect() })
}

/// Fitted λ-slope of every report column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsExponents {
    pub resolvent_upper: ExponentFit,
    pub lower_closed: Option<ExponentFit>,
    pub lower_variational: ExponentFit,
    pub e_hat_upper: ExponentFit,
    pub e_hat_lower: ExponentFit,
    /// Reference exponents `−(5−α)/2` and `−(9−2α+α²)/4` for the Ê columns.
    pub reference_upper: Option<f64>,
    pub reference_lower: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub kernel: String,
    pub lambdas: Vec<f64>,
    pub resolvent_upper: Vec<f64>,
    pub lower_closed: Option<Vec<f64>>,
    pub lower_variational: Vec<f64>,
    pub e_hat_upper: Vec<f64>,
    pub e_hat_lower: Vec<f64>,
    pub exponents: Option<BoundsExponents>,
}

/// `λ⁻²(1 + 2R)`.
pub fn e_hat_from_resolvent(lambda: f64, r: f64) -> f64 {
    (1.0 + 2.0 * r) / (lambda * lambda)
}

/// Evaluates every bound on `lambdas`. The closed-form lower bound is nested
/// quadrature and is skipped unless `closed` is set.
pub fn e_hat_sandwich<T: Real>(k: &Kernel<T>, lambdas: &[f64], p_points: usize, closed: bool) -> Result<BoundsReport> {
    let mut rep = BoundsReport {
        kernel: k.name().to_string(),
        lambdas: lambdas.to_vec(),
        resolvent_upper: Vec::new(),
        lower_closed: closed.then(Vec::new),
        lower_variational: Vec::new(),
        e_hat_upper: Vec::new(),
        e_hat_lower: Vec::new(),
        exponents: None,
    };
    for &lam in lambdas {
        let up = resolvent_s(k, T::c(lam))?.f64();
        let grid = PGrid::for_lambda(k, lam, p_points)?;
        let var = lower_bound_variational(k, T::c(lam), &grid)?.value;
        if let Some(c) = rep.lower_closed.as_mut() {
            c.push(lower_bound_closed(k, T::c(lam))?.f64());
        }
        rep.resolvent_upper.push(up);
        rep.lower_variational.push(var);
        rep.e_hat_upper.push(e_hat_from_resolvent(lam, up));
        rep.e_hat_lower.push(e_hat_from_resolvent(lam, var));
    }
    if lambdas.len() >= 2 && !k.is_zero() {
        let all = 0..lambdas.len();
        let fit = |v: &[f64]| fit_exponent(lambdas, v, all.clone());
        let alpha = match k.infrared() {
            crate::kernels::Infrared::Exponent(a) => Some(a),
            crate::kernels::Infrared::Summable => None,
        };
        rep.exponents = Some(BoundsExponents {
            resolvent_upper: fit(&rep.resolvent_upper)?,
            lower_closed: rep.lower_closed.as_deref().map(fit).transpose()?,
            lower_variational: fit(&rep.lower_variational)?,
            e_hat_upper: fit(&rep.e_hat_upper)?,
            e_hat_lower: fit(&rep.e_hat_lower)?,
            reference_upper: alpha.map(|a| -(5.0 - a) / 2.0),
            reference_lower: alpha.map(|a| -(9.0 - 2.0 * a + a * a) / 4.0),
        });
    }
    Ok(rep)
}

/// One row of the Abelian comparison `E(t) / (t⁻¹ Ê(1/t))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauberRow {
    pub t: f64,
    pub e: f64,
    pub e_hat: f64,
    pub ratio: f64,
}

/// Ratio table at the output times `t ≤ T/5`, where `λ = 1/t` passes the
/// truncation guard of the Laplace estimate.
pub fn tauber_report(times: &[f64], values: &[f64]) -> Result<Vec<TauberRow>> {
    let horizon = *times.last().ok_or(Error::GridMismatch)?;
    let picked: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(&t, _)| t > 0.0 && t <= horizon / 5.0 * (1.0 + 1e-12))
        .map(|(&t, &e)| (t, e))
        .collect();
    let lambdas: Vec<f64> = picked.iter().map(|(t, _)| 1.0 / t).collect();
    let lap = laplace_transform(times, values, &lambdas)?;
    Ok(picked
        .iter()
        .zip(&lap.e_hat)
        .map(|(&(t, e), &eh)| TauberRow { t, e, e_hat: eh, ratio: e / (eh / t) })
        .collect())
}

fn check_lambda<T: Real>(lambda: T) -> Result<()> {
    if !(lambda > T::zero()) || !lambda.is_finite() {
        return Err(Error::NonPositive { name: "lambda", value: lambda.f64() });
    }
    Ok(())
}
