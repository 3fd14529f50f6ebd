//! Poisson image deconvolution: forward model, spectral operators,
//! classical denoisers and plug-and-play solvers.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the aliases at the
//! crate root fix the common `f64` instantiation.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod denoise;
pub mod error;
pub mod image;
pub mod io;
pub mod likelihood;
pub mod metrics;
pub mod scalar;
pub mod solvers;
pub mod spectral;
pub mod synth;
pub mod transforms;
pub mod tune;

pub use config::Config;
pub use error::{Error, Result};
pub use image::{BlurKernel, ImageGrid};
pub use metrics::{psnr, ssim, QualityReport};
pub use scalar::Scalar;

pub type Image = ImageGrid<f64>;
pub type Image32 = ImageGrid<f32>;
pub type Kernel = BlurKernel<f64>;
pub type Kernel32 = BlurKernel<f32>;
