//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Floating point scalar usable by the kernels, fields and simulators.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + FftNum + Default + Debug + Display + Sum + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline(always)]
    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("f64 conversion")
    }

    /// Exact widening to `f64`.
    #[inline(always)]
    fn f64(self) -> f64 {
        self.to_f64().expect("finite conversion")
    }
}

impl Real for f32 {}
impl Real for f64 {}
