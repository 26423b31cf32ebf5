//! Stationary Gaussian environment on a periodic grid.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::quad::{integrate, QuadConfig};
use crate::real::Real;
use crate::rng::Stream;

/// Periodic grid `x_j = j·L/N`, `j = 0..N`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec<T: Real = f64> {
    pub length: T,
    pub n: usize,
}

impl<T: Real> GridSpec<T> {
    pub fn new(length: f64, n: usize) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::NonPositive { name: "grid.L", value: length });
        }
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::GridSize(n));
        }
        Ok(Self { length: T::c(length), n })
    }

    pub fn spacing(&self) -> T {
        self.length / T::c(self.n as f64)
    }

    pub fn node(&self, j: usize) -> T {
        T::c(j as f64) * self.spacing()
    }

    /// Signed mode number of FFT slot `k`.
    pub fn mode(&self, k: usize) -> i64 {
        if k <= self.n / 2 {
            k as i64
        } else {
            k as i64 - self.n as i64
        }
    }

    /// Frequency `p_k = 2πk/L` of FFT slot `k`.
    pub fn freq(&self, k: usize) -> T {
        T::TAU() * T::c(self.mode(k) as f64) / self.length
    }

    /// Reduces `x` to the nearest periodic image in `[-L/2, L/2)`.
    pub fn wrap(&self, x: T) -> T {
        let l = self.length;
        x - (x / l + T::c(0.5)).floor() * l
    }

    pub fn plan(&self) -> Arc<SpectralPlan<T>> {
        Arc::new(SpectralPlan::new(self.n))
    }
}

/// Planned forward and inverse transforms for one grid size.
pub struct SpectralPlan<T: Real> {
    n: usize,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
}

impl<T: Real> fmt::Debug for SpectralPlan<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SpectralPlan({})", self.n)
    }
}

impl<T: Real> SpectralPlan<T> {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { n, fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) }
    }

    /// Normalised coefficients `c_k` with `v_j = Σ_k c_k e^{2πijk/N}`.
    pub fn analyze(&self, values: &[T]) -> Vec<Complex<T>> {
        let mut buf: Vec<Complex<T>> = values.iter().map(|&v| Complex::new(v, T::zero())).collect();
        self.fwd.process(&mut buf);
        let inv_n = T::one() / T::c(self.n as f64);
        buf.iter_mut().for_each(|c| *c = *c * inv_n);
        buf
    }

    pub fn synthesize(&self, coeffs: &[Complex<T>]) -> Vec<T> {
        let mut buf = coeffs.to_vec();
        self.inv.process(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }
}

/// Sampled profile of `ω` or `ζ` on a periodic grid.
#[derive(Clone, Debug)]
pub struct FieldGrid<T: Real = f64> {
    pub spec: GridSpec<T>,
    pub values: Vec<T>,
    pub mean_v: T,
    spectral: Option<Vec<Complex<T>>>,
    plan: Arc<SpectralPlan<T>>,
}

impl<T: Real> FieldGrid<T> {
    pub fn from_values(spec: GridSpec<T>, values: Vec<T>, plan: Arc<SpectralPlan<T>>) -> Self {
        assert_eq!(values.len(), spec.n, "value count must match the grid");
        assert_eq!(plan.n, spec.n, "plan size must match the grid");
        Self { spec, values, mean_v: T::zero(), spectral: None, plan }
    }

    pub fn from_fn(spec: GridSpec<T>, plan: Arc<SpectralPlan<T>>, f: impl Fn(T) -> T) -> Self {
        let values = (0..spec.n).map(|j| f(spec.node(j))).collect();
        Self::from_values(spec, values, plan)
    }

    pub fn zeros(spec: GridSpec<T>, plan: Arc<SpectralPlan<T>>) -> Self {
        Self::from_values(spec, vec![T::zero(); spec.n], plan)
    }

    fn from_coeffs(spec: GridSpec<T>, coeffs: Vec<Complex<T>>, plan: Arc<SpectralPlan<T>>, mean_v: T) -> Self {
        let values = plan.synthesize(&coeffs);
        Self { spec, values, mean_v, spectral: Some(coeffs), plan }
    }

    pub fn plan(&self) -> &Arc<SpectralPlan<T>> {
        &self.plan
    }

    /// Drops the cached coefficients after the values were edited in place.
    pub fn invalidate(&mut self) {
        self.spectral = None;
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        self.spectral = None;
        &mut self.values
    }

    pub fn spectrum(&mut self) -> &[Complex<T>] {
        if self.spectral.is_none() {
            self.spectral = Some(self.plan.analyze(&self.values));
        }
        self.spectral.as_deref().expect("cached")
    }

    fn coeffs(&self) -> Vec<Complex<T>> {
        match &self.spectral {
            Some(c) => c.clone(),
            None => self.plan.analyze(&self.values),
        }
    }

    /// Cubic Lagrange interpolation through the four nearest nodes.
    #[inline]
    pub fn interpolate(&self, x: T) -> T {
        let n = self.spec.n;
        let u = x / self.spec.spacing();
        let fl = u.floor();
        let t = u - fl;
        let i = (fl.to_i64().expect("finite position")).rem_euclid(n as i64) as usize;
        let v = &self.values;
        if t <= T::c(4.0) * T::epsilon() * (T::one() + u.abs()) {
            return v[i];
        }
        let im = (i + n - 1) % n;
        let ip = (i + 1) % n;
        let ip2 = (i + 2) % n;
        let one = T::one();
        let two = T::c(2.0);
        let six = T::c(6.0);
        let wm = -t * (t - one) * (t - two) / six;
        let w0 = (t + one) * (t - one) * (t - two) / two;
        let w1 = -(t + one) * t * (t - two) / two;
        let w2 = (t + one) * t * (t - one) / six;
        wm * v[im] + w0 * v[i] + w1 * v[ip] + w2 * v[ip2]
    }

    /// Spectral derivative; the Nyquist mode is discarded.
    pub fn derivative(&self) -> Self {
        let mut c = self.coeffs();
        let n = self.spec.n;
        for (k, ck) in c.iter_mut().enumerate() {
            if k == n / 2 {
                *ck = Complex::new(T::zero(), T::zero());
            } else {
                *ck = *ck * Complex::new(T::zero(), self.spec.freq(k));
            }
        }
        Self::from_coeffs(self.spec, c, self.plan.clone(), T::zero())
    }

    /// Translation: node `j` of the result holds the profile at `x_j + z`.
    pub fn shift(&self, z: T) -> Self {
        let mut c = self.coeffs();
        let n = self.spec.n;
        for (k, ck) in c.iter_mut().enumerate() {
            let phase = self.spec.freq(k) * z;
            if k == n / 2 {
                *ck = *ck * phase.cos();
            } else {
                *ck = *ck * Complex::new(phase.cos(), phase.sin());
            }
        }
        Self::from_coeffs(self.spec, c, self.plan.clone(), self.mean_v)
    }

    pub fn negated(&self) -> Self {
        let values = self.values.iter().map(|&v| -v).collect();
        Self { spec: self.spec, values, mean_v: -self.mean_v, spectral: None, plan: self.plan.clone() }
    }

    /// `(x_j, value_j)` pairs for export.
    pub fn rows(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.values.iter().enumerate().map(|(j, &v)| (self.spec.node(j), v))
    }
}

/// `|ĉ_k|² = b̂(p_k)/L`, with the zero mode averaged over its cell when `b̂(0)`
/// is singular.
pub fn mode_variance<T: Real>(k: &Kernel<T>, spec: &GridSpec<T>, slot: usize) -> T {
    let p = spec.freq(slot);
    let v = k.b_hat(p);
    if v.is_finite() {
        return v / spec.length;
    }
    let half = T::PI() / spec.length;
    let cfg = QuadConfig::rel(1e-10);
    let r = integrate(|q: T| k.b_hat(q), &[T::zero(), half], cfg);
    T::c(2.0) * r.value / T::TAU()
}

/// Draws a stationary field with covariance equal to the `L`-periodized `b`.
pub fn sample_stationary<T: Real>(
    k: &Kernel<T>,
    spec: GridSpec<T>,
    plan: Arc<SpectralPlan<T>>,
    rng: &mut Stream,
    mean_v: T,
) -> FieldGrid<T> {
    let n = spec.n;
    let zero = Complex::new(T::zero(), T::zero());
    let mut c = vec![zero; n];
    if !k.is_zero() {
        let r2 = T::c(std::f64::consts::FRAC_1_SQRT_2);
        for m in 0..=n / 2 {
            let amp = mode_variance(k, &spec, m).sqrt();
            let (g1, g2) = rng.normal_pair_at(m as u64);
            if m == 0 || m == n / 2 {
                c[m] = Complex::new(amp * T::c(g1), T::zero());
            } else {
                let z = Complex::new(T::c(g1), T::c(g2)) * (amp * r2);
                c[m] = z;
                c[n - m] = z.conj();
            }
        }
    }
    c[0].re = c[0].re + mean_v;
    FieldGrid::from_coeffs(spec, c, plan, mean_v)
}

/// The covariance of sampled node values at separation `x`:
/// `(1/L) Σ_k |ĉ_k|² L cos(p_k x)` over the represented modes.
pub fn periodized_b<T: Real>(k: &Kernel<T>, spec: &GridSpec<T>, x: T) -> T {
    let n = spec.n;
    let mut acc = mode_variance(k, spec, 0);
    for m in 1..n / 2 {
        acc = acc + T::c(2.0) * mode_variance(k, spec, m) * (spec.freq(m) * x).cos();
    }
    acc + mode_variance(k, spec, n / 2) * (spec.freq(n / 2) * x).cos()
}

/// `Σ_m b(x + mL)` by direct image summation.
pub fn image_sum_b<T: Real>(k: &Kernel<T>, length: T, x: T, images: i32) -> Result<T> {
    let mut acc = T::zero();
    for m in -images..=images {
        acc = acc + k.eval_b(x + T::c(m as f64) * length)?;
    }
    Ok(acc)
}
