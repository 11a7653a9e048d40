//! Exact Gaussian sampling and persistence analysis for fractional Brownian
//! motion, the fractional Brownian sheet, integrated fBm and their stationary
//! Lamperti duals.
//!
//! The analytic layer ([`kernels`]) is generic over [`Scalar`]; the Monte Carlo
//! layers ([`samplers`], [`orthant`], [`persistence`]) run in `f64`.

// `!(x > 0.0)` is how NaN gets rejected throughout
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod kernels;
pub mod linalg;
pub mod normal;
pub mod oracle;
pub mod orthant;
pub mod persistence;
pub mod quad;
pub mod rng;
pub mod samplers;
pub mod scalar;
pub mod verify;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use scalar::Scalar;

pub type Hurst = kernels::Hurst<f64>;
pub type Hurst32 = kernels::Hurst<f32>;
pub type KernelSpec = kernels::KernelSpec<f64>;
pub type KernelSpec32 = kernels::KernelSpec<f32>;
pub use kernels::Family;
