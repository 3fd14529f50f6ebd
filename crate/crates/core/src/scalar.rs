//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::sync::OnceLock;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rustfft::FftNum;

use crate::spectral::PlanCache;

/// Floating-point type usable for images, kernels and spectra.
///
/// Implemented for `f32` and `f64`. Each implementation owns a process-wide
/// FFT plan cache, so transforms of a given shape are planned once.
pub trait Scalar:
    Float
    + FloatConst
    + FftNum
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Machine-independent conversion from an `f64` literal or statistic.
    fn of(value: f64) -> Self;

    fn to_f64_lossy(self) -> f64;

    fn plan_cache() -> &'static PlanCache<Self>;
}

impl Scalar for f32 {
    #[inline]
    fn of(value: f64) -> Self {
        value as f32
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self as f64
    }

    fn plan_cache() -> &'static PlanCache<Self> {
        static CACHE: OnceLock<PlanCache<f32>> = OnceLock::new();
        CACHE.get_or_init(PlanCache::new)
    }
}

impl Scalar for f64 {
    #[inline]
    fn of(value: f64) -> Self {
        value
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self
    }

    fn plan_cache() -> &'static PlanCache<Self> {
        static CACHE: OnceLock<PlanCache<f64>> = OnceLock::new();
        CACHE.get_or_init(PlanCache::new)
    }
}
