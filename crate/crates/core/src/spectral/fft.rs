//! 2-D complex FFT built from cached 1-D rustfft plans.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::scalar::Scalar;

/// Row and column plans for one `(height, width)` shape.
pub struct Fft2d<T: Scalar> {
    height: usize,
    width: usize,
    row_fwd: Arc<dyn Fft<T>>,
    row_inv: Arc<dyn Fft<T>>,
    col_fwd: Arc<dyn Fft<T>>,
    col_inv: Arc<dyn Fft<T>>,
}

impl<T: Scalar> std::fmt::Debug for Fft2d<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2d").field("height", &self.height).field("width", &self.width).finish()
    }
}

impl<T: Scalar> Fft2d<T> {
    fn plan(height: usize, width: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            height,
            width,
            row_fwd: planner.plan_fft(width, FftDirection::Forward),
            row_inv: planner.plan_fft(width, FftDirection::Inverse),
            col_fwd: planner.plan_fft(height, FftDirection::Forward),
            col_inv: planner.plan_fft(height, FftDirection::Inverse),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    fn run(&self, buf: &mut [Complex<T>], rows: &dyn Fft<T>, cols: &dyn Fft<T>) {
        let (h, w) = (self.height, self.width);
        assert_eq!(buf.len(), h * w, "buffer does not match plan shape");
        rows.process(buf);
        let mut column = vec![Complex::new(T::zero(), T::zero()); h];
        for c in 0..w {
            for r in 0..h {
                column[r] = buf[r * w + c];
            }
            cols.process(&mut column);
            for r in 0..h {
                buf[r * w + c] = column[r];
            }
        }
    }

    /// Unnormalized forward transform in place.
    pub fn forward(&self, buf: &mut [Complex<T>]) {
        self.run(buf, self.row_fwd.as_ref(), self.col_fwd.as_ref());
    }

    /// Inverse transform in place, scaled by `1/(height·width)`.
    pub fn inverse(&self, buf: &mut [Complex<T>]) {
        self.run(buf, self.row_inv.as_ref(), self.col_inv.as_ref());
        let norm = T::one() / T::of((self.height * self.width) as f64);
        for v in buf.iter_mut() {
            *v *= norm;
        }
    }
}

type PlanMap<T> = HashMap<(usize, usize), Arc<Fft2d<T>>>;

/// Shape-keyed cache of [`Fft2d`] plans, safe for concurrent lookups.
#[derive(Default)]
pub struct PlanCache<T: Scalar> {
    plans: RwLock<PlanMap<T>>,
}

impl<T: Scalar> PlanCache<T> {
    pub fn new() -> Self {
        Self { plans: RwLock::new(HashMap::new()) }
    }

    pub fn get(&self, height: usize, width: usize) -> Arc<Fft2d<T>> {
        if let Some(plan) = self.plans.read().expect("plan cache poisoned").get(&(height, width)) {
            return Arc::clone(plan);
        }
        let mut plans = self.plans.write().expect("plan cache poisoned");
        Arc::clone(plans.entry((height, width)).or_insert_with(|| Arc::new(Fft2d::plan(height, width))))
    }

    pub fn len(&self) -> usize {
        self.plans.read().expect("plan cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Plan for `(height, width)` from the scalar's global cache.
pub fn plan_for<T: Scalar>(height: usize, width: usize) -> Arc<Fft2d<T>> {
    T::plan_cache().get(height, width)
}
