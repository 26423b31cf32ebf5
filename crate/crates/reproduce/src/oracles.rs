//! Reference values computed without the library's quadrature or kernels.

use std::f64::consts::PI;

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + h * i as f64);
    }
    s * h / 3.0
}

/// `b(x)` of the gaussian family, `(a/2π) √(πs) e^{−s x²/4}`.
pub fn gaussian_b(a: f64, s: f64, x: f64) -> f64 {
    a / (2.0 * PI) * (PI * s).sqrt() * (-s * x * x / 4.0).exp()
}

/// `∫ p⁻² · a p² e^{−p²/s} dp = a √(πs)`.
pub fn summable_rho_squared(a: f64, s: f64) -> f64 {
    a * (PI * s).sqrt()
}

/// `Var ∫₀ᵗ ω(Z_r) dr` for Brownian `Z` in frozen stationary scenery on the line:
/// `(1/2π) ∫ b̂(p) · 2(qt − 1 + e^{−qt})/q² dp` with `q = p²/2`.
pub fn scenery_variance(b_hat: impl Fn(f64) -> f64, p_max: f64, t: f64) -> f64 {
    let g = |p: f64| {
        let q = 0.5 * p * p;
        let x = q * t;
        let h = if x < 1e-4 { t * t * (1.0 - x / 3.0 + x * x / 12.0) } else { 2.0 * (x + (-x).exp_m1()) / (q * q) };
        b_hat(p) * h
    };
    2.0 * simpson(g, 0.0, p_max, 400_000) / (2.0 * PI)
}

/// `−b″(0)` by a central second difference of `b`.
pub fn curvature(b: impl Fn(f64) -> f64, h: f64) -> f64 {
    -(b(h) - 2.0 * b(0.0) + b(-h)) / (h * h)
}

pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}
