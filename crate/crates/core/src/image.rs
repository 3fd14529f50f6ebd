//! Image and blur-kernel containers.

use crate::error::{domain_err, shape_err, Error, Result};
use crate::scalar::Scalar;

/// Row-major 2-D scalar field holding clean images, photon counts or estimates.
///
/// Construction through [`ImageGrid::new`] rejects non-finite data; every
/// operation in this crate preserves finiteness or reports an error.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageGrid<T> {
    height: usize,
    width: usize,
    data: Vec<T>,
}

impl<T: Scalar> ImageGrid<T> {
    pub fn new(height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        if height == 0 || width == 0 {
            return shape_err(format!("image dimensions must be positive, got {height}x{width}"));
        }
        if data.len() != height * width {
            return shape_err(format!("data length {} does not match {height}x{width}", data.len()));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return domain_err(format!("non-finite value at pixel {pos}"));
        }
        Ok(Self { height, width, data })
    }

    /// Skips the finiteness scan; callers guarantee the data is finite.
    pub(crate) fn from_vec_unchecked(height: usize, width: usize, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), height * width);
        Self { height, width, data }
    }

    pub fn filled(height: usize, width: usize, value: T) -> Self {
        assert!(height > 0 && width > 0, "image dimensions must be positive");
        Self::from_vec_unchecked(height, width, vec![value; height * width])
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self::filled(height, width, T::zero())
    }

    /// Builds an image by evaluating `f(row, col)`. Panics if `f` yields a
    /// non-finite value.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self::new(height, width, data).expect("from_fn produced an invalid image")
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.data[row * self.width + col]
    }

    pub fn ensure_same_shape(&self, other: &Self) -> Result<()> {
        if self.shape() != other.shape() {
            return shape_err(format!(
                "dimension mismatch: {}x{} vs {}x{}",
                self.height, self.width, other.height, other.width
            ));
        }
        Ok(())
    }

    pub fn mean(&self) -> T {
        self.data.iter().copied().sum::<T>() / T::of(self.data.len() as f64)
    }

    pub fn min_value(&self) -> T {
        self.data.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max_value(&self) -> T {
        self.data.iter().copied().fold(T::neg_infinity(), T::max)
    }

    /// Squared Euclidean norm.
    pub fn energy(&self) -> T {
        self.data.iter().map(|&v| v * v).sum()
    }

    /// Elementwise map; panics if `f` produces a non-finite value.
    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        let data: Vec<T> = self.data.iter().map(|&v| f(v)).collect();
        Self::new(self.height, self.width, data).expect("map produced a non-finite value")
    }

    pub fn try_map(&self, f: impl Fn(T) -> T) -> Result<Self> {
        Self::new(self.height, self.width, self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        self.ensure_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Self::new(self.height, self.width, data)
    }

    pub fn scale(&self, factor: T) -> Self {
        self.map(|v| v * factor)
    }

    pub fn clamp_min(&self, floor: T) -> Self {
        self.map(|v| v.max(floor))
    }

    /// Converts to another scalar precision.
    pub fn cast<U: Scalar>(&self) -> ImageGrid<U> {
        ImageGrid::from_vec_unchecked(self.height, self.width, self.data.iter().map(|v| U::of(v.to_f64_lossy())).collect())
    }

    /// Rounds every value through `f32`, which is the precision PFM stores.
    pub fn quantize_f32(&self) -> Self {
        self.map(|v| T::of(v.to_f64_lossy() as f32 as f64))
    }
}

/// Odd-sized nonnegative stencil summing to one: the blur operator as a
/// convolution.
#[derive(Clone, Debug, PartialEq)]
pub struct BlurKernel<T> {
    size: usize,
    taps: Vec<T>,
}

/// Tolerance on `Σ taps = 1`.
pub const KERNEL_SUM_TOL: f64 = 1e-12;

impl<T: Scalar> BlurKernel<T> {
    /// Validates taps as given: odd size, nonnegative, unit sum.
    pub fn new(size: usize, taps: Vec<T>) -> Result<Self> {
        if size == 0 || size.is_multiple_of(2) {
            return shape_err(format!("kernel size must be odd and positive, got {size}"));
        }
        if taps.len() != size * size {
            return shape_err(format!("kernel of size {size} needs {} taps, got {}", size * size, taps.len()));
        }
        if taps.iter().any(|t| !t.is_finite() || *t < T::zero()) {
            return domain_err("kernel taps must be finite and nonnegative");
        }
        let sum: f64 = taps.iter().map(|t| t.to_f64_lossy()).sum();
        // f32 kernels accumulate rounding proportional to the tap count
        let tol = KERNEL_SUM_TOL.max(T::epsilon().to_f64_lossy() * taps.len() as f64);
        if (sum - 1.0).abs() > tol {
            return domain_err(format!("kernel taps sum to {sum}, expected 1"));
        }
        Ok(Self { size, taps })
    }

    /// Clamps negatives to zero and rescales to unit sum.
    pub fn normalized(size: usize, mut taps: Vec<T>) -> Result<Self> {
        for t in taps.iter_mut() {
            if !t.is_finite() {
                return domain_err("kernel taps must be finite");
            }
            if *t < T::zero() {
                *t = T::zero();
            }
        }
        let sum: T = taps.iter().copied().sum();
        if sum <= T::zero() {
            return Err(Error::Domain("kernel has no mass".into()));
        }
        for t in taps.iter_mut() {
            *t /= sum;
        }
        Self::new(size, taps)
    }

    /// Single unit tap.
    pub fn delta(size: usize) -> Result<Self> {
        let mut taps = vec![T::zero(); size * size];
        if size % 2 == 1 {
            taps[(size / 2) * size + size / 2] = T::one();
        }
        Self::new(size, taps)
    }

    /// Uniform `size`×`size` box.
    pub fn boxcar(size: usize) -> Result<Self> {
        Self::normalized(size, vec![T::one(); size * size])
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn radius(&self) -> usize {
        self.size / 2
    }

    #[inline]
    pub fn taps(&self) -> &[T] {
        &self.taps
    }

    #[inline]
    pub fn tap(&self, row: usize, col: usize) -> T {
        self.taps[row * self.size + col]
    }

    pub fn center_tap(&self) -> T {
        self.tap(self.radius(), self.radius())
    }

    pub fn cast<U: Scalar>(&self) -> BlurKernel<U> {
        BlurKernel { size: self.size, taps: self.taps.iter().map(|v| U::of(v.to_f64_lossy())).collect() }
    }
}
