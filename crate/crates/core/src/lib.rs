//! Numerical laboratory for the one-dimensional self-interacting Brownian
//! polymer `dX = dB + ζ(t, X) dt`, `∂ₜζ(t, x) = b′(X − x)`.

pub mod bounds;
pub mod dynamics;
pub mod error;
pub mod estimators;
pub mod exact;
pub mod field;
pub mod kernels;
pub mod quad;
pub mod real;
pub mod rng;
pub mod stationarity;

pub use error::{Error, Result};
pub use exact::ExactSum;
pub use real::Real;

pub type Kernel32 = kernels::Kernel<f32>;
pub type Kernel64 = kernels::Kernel<f64>;
pub type FieldGrid32 = field::FieldGrid<f32>;
pub type FieldGrid64 = field::FieldGrid<f64>;
pub type PolymerReplica32 = dynamics::PolymerReplica<f32>;
pub type PolymerReplica64 = dynamics::PolymerReplica<f64>;
