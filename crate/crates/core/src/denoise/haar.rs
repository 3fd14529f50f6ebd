//! One-level orthonormal 2-D Haar transform.

use crate::image::ImageGrid;
use crate::scalar::Scalar;

/// Subbands of a one-level Haar decomposition.
///
/// `original` records the pre-padding shape; odd dimensions are extended by
/// repeating the last row/column (half-sample symmetric reflection) and the
/// padding is dropped again on reconstruction.
#[derive(Clone, Debug, PartialEq)]
pub struct HaarBands<T> {
    pub approx: ImageGrid<T>,
    pub horizontal: ImageGrid<T>,
    pub vertical: ImageGrid<T>,
    pub diagonal: ImageGrid<T>,
    pub original: (usize, usize),
}

impl<T: Scalar> HaarBands<T> {
    pub fn details_mut(&mut self) -> [&mut ImageGrid<T>; 3] {
        [&mut self.horizontal, &mut self.vertical, &mut self.diagonal]
    }

    pub fn energy(&self) -> T {
        self.approx.energy() + self.horizontal.energy() + self.vertical.energy() + self.diagonal.energy()
    }
}

pub fn haar_transform<T: Scalar>(x: &ImageGrid<T>) -> HaarBands<T> {
    let (h, w) = x.shape();
    let (bh, bw) = (h.div_ceil(2), w.div_ceil(2));
    let at = |r: usize, c: usize| x.get(r.min(h - 1), c.min(w - 1));
    let half = T::of(0.5);
    let mut bands =
        [Vec::with_capacity(bh * bw), Vec::with_capacity(bh * bw), Vec::with_capacity(bh * bw), Vec::with_capacity(bh * bw)];
    for i in 0..bh {
        for j in 0..bw {
            let a = at(2 * i, 2 * j);
            let b = at(2 * i, 2 * j + 1);
            let c = at(2 * i + 1, 2 * j);
            let d = at(2 * i + 1, 2 * j + 1);
            bands[0].push((a + b + c + d) * half);
            bands[1].push((a - b + c - d) * half);
            bands[2].push((a + b - c - d) * half);
            bands[3].push((a - b - c + d) * half);
        }
    }
    let [ll, lh, hl, hh] = bands;
    HaarBands {
        approx: ImageGrid::from_vec_unchecked(bh, bw, ll),
        horizontal: ImageGrid::from_vec_unchecked(bh, bw, lh),
        vertical: ImageGrid::from_vec_unchecked(bh, bw, hl),
        diagonal: ImageGrid::from_vec_unchecked(bh, bw, hh),
        original: (h, w),
    }
}

pub fn haar_inverse<T: Scalar>(bands: &HaarBands<T>) -> ImageGrid<T> {
    let (h, w) = bands.original;
    let (bh, bw) = bands.approx.shape();
    let (ph, pw) = (2 * bh, 2 * bw);
    let half = T::of(0.5);
    let mut full = vec![T::zero(); ph * pw];
    for i in 0..bh {
        for j in 0..bw {
            let s = bands.approx.get(i, j);
            let hz = bands.horizontal.get(i, j);
            let vt = bands.vertical.get(i, j);
            let dg = bands.diagonal.get(i, j);
            full[(2 * i) * pw + 2 * j] = (s + hz + vt + dg) * half;
            full[(2 * i) * pw + 2 * j + 1] = (s - hz + vt - dg) * half;
            full[(2 * i + 1) * pw + 2 * j] = (s + hz - vt - dg) * half;
            full[(2 * i + 1) * pw + 2 * j + 1] = (s - hz - vt + dg) * half;
        }
    }
    let mut data = Vec::with_capacity(h * w);
    for r in 0..h {
        data.extend_from_slice(&full[r * pw..r * pw + w]);
    }
    ImageGrid::from_vec_unchecked(h, w, data)
}

/// Soft thresholding `sign(v)·max(|v| − τ, 0)`.
#[inline]
pub fn soft<T: Scalar>(v: T, tau: T) -> T {
    let m = v.abs() - tau;
    if m > T::zero() {
        m * v.signum()
    } else {
        T::zero()
    }
}

pub fn haar_soft<T: Scalar>(x: &ImageGrid<T>, tau: T) -> ImageGrid<T> {
    let mut bands = haar_transform(x);
    for band in bands.details_mut() {
        *band = band.map(|v| soft(v, tau));
    }
    haar_inverse(&bands)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(h: usize, w: usize, seed: u64) -> ImageGrid<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ImageGrid::from_fn(h, w, |_, _| rng.random::<f64>())
    }

    #[test]
    fn perfect_reconstruction() {
        for (h, w) in [(16, 16), (7, 10), (9, 5), (1, 1)] {
            let x = random(h, w, (h * 31 + w) as u64);
            let back = haar_inverse(&haar_transform(&x));
            assert_eq!(back.shape(), x.shape());
            for (a, b) in x.data().iter().zip(back.data()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_has_no_detail() {
        let b = haar_transform(&ImageGrid::<f64>::filled(8, 6, 0.3));
        for band in [&b.horizontal, &b.vertical, &b.diagonal] {
            assert!(band.data().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn parseval() {
        let x = random(16, 12, 4);
        assert!((x.energy() - haar_transform(&x).energy()).abs() < 1e-10);
    }

    #[test]
    fn soft_threshold() {
        assert_eq!(soft(3.0, 1.0), 2.0);
        assert_eq!(soft(-3.0, 1.0), -2.0);
        assert_eq!(soft(0.5, 1.0), 0.0);
    }
}
