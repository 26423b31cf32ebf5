//! Globally adaptive 10/21-point Gauss–Kronrod quadrature on finite
//! intervals with user supplied breakpoints.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::real::Real;

const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077715781226474,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self { abs_tol: 1e-14, rel_tol: 1e-11, max_intervals: 4000 }
    }
}

impl QuadConfig {
    pub fn rel(rel_tol: f64) -> Self {
        Self { rel_tol, ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: T,
    pub intervals: usize,
    pub converged: bool,
}

impl<T: Real> QuadResult<T> {
    /// The value, or a non-convergence error carrying the residual estimate.
    pub fn ok(self) -> Result<T> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(Error::Quadrature { value: self.value.f64(), residual: self.error.f64() })
        }
    }
}

struct Piece<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

impl<T: Real> PartialEq for Piece<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T: Real> Eq for Piece<T> {}
impl<T: Real> PartialOrd for Piece<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for Piece<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.partial_cmp(&other.error).unwrap_or(Ordering::Equal)
    }
}

/// One 21-point Kronrod rule with its embedded 10-point Gauss estimate.
pub fn kronrod21<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> (T, T) {
    let half = (b - a) * T::c(0.5);
    let mid = (a + b) * T::c(0.5);
    let fc = f(mid);
    let mut k = fc * T::c(WGK[10]);
    let mut g = T::zero();
    for i in 0..10 {
        let dx = half * T::c(XGK[i]);
        let s = f(mid - dx) + f(mid + dx);
        k = k + T::c(WGK[i]) * s;
        if i % 2 == 1 {
            g = g + T::c(WG[i / 2]) * s;
        }
    }
    let value = k * half;
    let error = ((k - g) * half).abs();
    (value, error)
}

/// Integrates `f` over `[points[0], points[last]]`, splitting first at every
/// interior breakpoint.
pub fn integrate<T: Real, F: FnMut(T) -> T>(mut f: F, points: &[T], cfg: QuadConfig) -> QuadResult<T> {
    assert!(points.len() >= 2, "need at least one interval");
    let mut heap = BinaryHeap::new();
    let mut total = T::zero();
    let mut total_err = T::zero();
    for w in points.windows(2) {
        if w[1] == w[0] {
            continue;
        }
        let (v, e) = kronrod21(&mut f, w[0], w[1]);
        total = total + v;
        total_err = total_err + e;
        heap.push(Piece { a: w[0], b: w[1], value: v, error: e });
    }
    let tol = |total: T| T::c(cfg.abs_tol).max(T::c(cfg.rel_tol) * total.abs());
    while total_err > tol(total) && heap.len() < cfg.max_intervals {
        let Some(p) = heap.pop() else { break };
        let m = (p.a + p.b) * T::c(0.5);
        if m <= p.a || m >= p.b {
            heap.push(p);
            break;
        }
        let (v1, e1) = kronrod21(&mut f, p.a, m);
        let (v2, e2) = kronrod21(&mut f, m, p.b);
        total = total - p.value + v1 + v2;
        total_err = total_err - p.error + e1 + e2;
        heap.push(Piece { a: p.a, b: m, value: v1, error: e1 });
        heap.push(Piece { a: m, b: p.b, value: v2, error: e2 });
    }
    // Re-sum to shed drift accumulated by the running updates.
    let mut pieces: Vec<Piece<T>> = heap.into_vec();
    pieces.sort_by(|x, y| x.a.partial_cmp(&y.a).unwrap_or(Ordering::Equal));
    let value = pieces.iter().fold(T::zero(), |s, p| s + p.value);
    let error = pieces.iter().fold(T::zero(), |s, p| s + p.error);
    QuadResult { value, error, intervals: pieces.len(), converged: error <= tol(value) }
}

/// Merges breakpoints, clips them to `[lo, hi]`, sorts and deduplicates.
pub fn breakpoints<T: Real>(lo: T, hi: T, extra: &[T]) -> Vec<T> {
    let mut pts: Vec<T> = extra.iter().copied().filter(|&x| x > lo && x < hi).collect();
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    pts.dedup();
    pts
}
