//! Fourier-domain engine under circular boundary conditions: spectra of
//! images and stencils, the regularized inverse filter, the closed-form HQS
//! data step and the Wiener-like inversion module.

mod fft;

pub use fft::{plan_for, Fft2d, PlanCache};

use std::sync::Arc;

use rustfft::num_complex::Complex;

use crate::error::{domain_err, shape_err, Error, Result};
use crate::image::{BlurKernel, ImageGrid};
use crate::scalar::Scalar;

/// Frequency-domain samples of a `height`×`width` real field.
#[derive(Clone, Debug)]
pub struct Spectrum<T: Scalar> {
    height: usize,
    width: usize,
    bins: Vec<Complex<T>>,
}

impl<T: Scalar> Spectrum<T> {
    pub fn of(img: &ImageGrid<T>) -> Self {
        let (h, w) = img.shape();
        let mut bins: Vec<Complex<T>> = img.data().iter().map(|&v| Complex::new(v, T::zero())).collect();
        plan_for::<T>(h, w).forward(&mut bins);
        Self { height: h, width: w, bins }
    }

    pub fn from_bins(height: usize, width: usize, bins: Vec<Complex<T>>) -> Result<Self> {
        if bins.len() != height * width {
            return shape_err(format!("{} bins for a {height}x{width} spectrum", bins.len()));
        }
        Ok(Self { height, width, bins })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn bins(&self) -> &[Complex<T>] {
        &self.bins
    }

    pub fn into_bins(self) -> Vec<Complex<T>> {
        self.bins
    }

    /// Inverse transform, returning the real part and the largest
    /// imaginary magnitude that was discarded.
    pub fn to_image_with_residue(&self) -> Result<(ImageGrid<T>, T)> {
        let mut buf = self.bins.clone();
        plan_for::<T>(self.height, self.width).inverse(&mut buf);
        let mut residue = T::zero();
        let data: Vec<T> = buf
            .iter()
            .map(|c| {
                residue = residue.max(c.im.abs());
                c.re
            })
            .collect();
        let img = ImageGrid::new(self.height, self.width, data)?;
        Ok((img, residue))
    }

    pub fn to_image(&self) -> Result<ImageGrid<T>> {
        let (img, residue) = self.to_image_with_residue()?;
        debug_assert!(
            residue <= T::epsilon() * T::of(1e6) * (T::one() + img.max_value().abs().max(img.min_value().abs())),
            "imaginary residue {residue} after inverse FFT: kernel not centered?"
        );
        Ok(img)
    }
}

/// Transfer function of a stencil placed with `anchor` at the origin and
/// wrapped onto a `height`×`width` torus.
///
/// `anchor` is the (row, col) inside the stencil that lands on pixel (0, 0),
/// so `(f ⊛ x)[p] = Σ_q f[q] · x[p − (q − anchor)]`.
pub fn stencil_spectrum<T: Scalar>(
    taps: &[T],
    rows: usize,
    cols: usize,
    anchor: (usize, usize),
    height: usize,
    width: usize,
) -> Result<Spectrum<T>> {
    if rows > height || cols > width {
        return shape_err(format!("{rows}x{cols} stencil does not fit a {height}x{width} image"));
    }
    if taps.len() != rows * cols || anchor.0 >= rows || anchor.1 >= cols {
        return shape_err("stencil taps or anchor inconsistent with its shape");
    }
    let mut bins = vec![Complex::new(T::zero(), T::zero()); height * width];
    for i in 0..rows {
        for j in 0..cols {
            let r = (i + height - anchor.0) % height;
            let c = (j + width - anchor.1) % width;
            bins[r * width + c].re += taps[i * cols + j];
        }
    }
    plan_for::<T>(height, width).forward(&mut bins);
    Ok(Spectrum { height, width, bins })
}

/// Multiplies `x` by a transfer function: a circular convolution.
pub fn apply_transfer<T: Scalar>(x: &ImageGrid<T>, transfer: &Spectrum<T>) -> Result<ImageGrid<T>> {
    if x.shape() != transfer.shape() {
        return shape_err(format!("image {:?} vs transfer {:?}", x.shape(), transfer.shape()));
    }
    let mut s = Spectrum::of(x);
    for (v, t) in s.bins.iter_mut().zip(&transfer.bins) {
        *v *= *t;
    }
    s.to_image()
}

/// Blur kernel in the Fourier domain, precomputed for one image shape.
#[derive(Clone, Debug)]
pub struct SpectralKernel<T: Scalar> {
    height: usize,
    width: usize,
    transfer: Vec<Complex<T>>,
    power: Vec<T>,
    plan: Arc<Fft2d<T>>,
}

/// Center the kernel on the origin, periodize and transform.
pub fn precompute_kernel<T: Scalar>(h: &BlurKernel<T>, height: usize, width: usize) -> Result<SpectralKernel<T>> {
    let k = h.size();
    if k > height || k > width {
        return shape_err(format!("{k}x{k} kernel does not fit a {height}x{width} image"));
    }
    let spec = stencil_spectrum(h.taps(), k, k, (h.radius(), h.radius()), height, width)?;
    let power = spec.bins.iter().map(|c| c.norm_sqr()).collect();
    Ok(SpectralKernel { height, width, transfer: spec.bins, power, plan: plan_for(height, width) })
}

impl<T: Scalar> SpectralKernel<T> {
    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn transfer(&self) -> &[Complex<T>] {
        &self.transfer
    }

    pub fn power(&self) -> &[T] {
        &self.power
    }

    pub fn plan(&self) -> &Fft2d<T> {
        &self.plan
    }

    pub fn as_spectrum(&self) -> Spectrum<T> {
        Spectrum { height: self.height, width: self.width, bins: self.transfer.clone() }
    }

    fn check(&self, img: &ImageGrid<T>, what: &str) -> Result<()> {
        if img.shape() != self.shape() {
            return shape_err(format!("{what} is {:?}, kernel spectrum is {:?}", img.shape(), self.shape()));
        }
        Ok(())
    }

    /// Circular convolution `H x`.
    pub fn blur(&self, x: &ImageGrid<T>) -> Result<ImageGrid<T>> {
        self.check(x, "image")?;
        let mut s = Spectrum::of(x);
        for (v, t) in s.bins.iter_mut().zip(&self.transfer) {
            *v *= *t;
        }
        s.to_image()
    }

    /// Adjoint `Hᵀ x` (correlation with the kernel).
    pub fn blur_adjoint(&self, x: &ImageGrid<T>) -> Result<ImageGrid<T>> {
        self.check(x, "image")?;
        let mut s = Spectrum::of(x);
        for (v, t) in s.bins.iter_mut().zip(&self.transfer) {
            *v *= t.conj();
        }
        s.to_image()
    }
}

/// Regularized inverse filter `(HᵀH + λI)⁻¹ Hᵀ y`.
///
/// With `λ = 0` this is the plain inverse and fails on spectral zeros.
pub fn wiener<T: Scalar>(y: &ImageGrid<T>, hk: &SpectralKernel<T>, lambda: T) -> Result<ImageGrid<T>> {
    hk.check(y, "observation")?;
    if !(lambda >= T::zero()) {
        return domain_err(format!("wiener regularizer must be nonnegative, got {lambda}"));
    }
    let mut s = Spectrum::of(y);
    for ((v, t), &p) in s.bins.iter_mut().zip(&hk.transfer).zip(&hk.power) {
        let den = p + lambda;
        if den <= T::epsilon() {
            return Err(Error::Singular(format!("transfer function vanishes (|H|² = {p}) with regularizer {lambda}")));
        }
        *v = t.conj() * *v / den;
    }
    s.to_image()
}

/// Closed-form feature update of the HQS data subproblem,
///
/// `z = F⁻¹[(F(prev) + μ·conj(F(H))·F(obs)) / (1 + μ|F(H)|²)]`,
///
/// i.e. the minimizer of `‖z − prev‖² + μ‖obs − H z‖²`.
pub fn hqs_data_step<T: Scalar>(
    feat_prev: &ImageGrid<T>,
    feat_obs: &ImageGrid<T>,
    hk: &SpectralKernel<T>,
    mu: T,
) -> Result<ImageGrid<T>> {
    hk.check(feat_prev, "previous feature")?;
    hk.check(feat_obs, "observed feature")?;
    if !(mu >= T::zero()) {
        return domain_err(format!("penalty must be nonnegative, got {mu}"));
    }
    if mu == T::zero() {
        return Ok(feat_prev.clone());
    }
    let prev = Spectrum::of(feat_prev);
    let mut obs = Spectrum::of(feat_obs);
    for (((o, p), t), &pw) in obs.bins.iter_mut().zip(&prev.bins).zip(&hk.transfer).zip(&hk.power) {
        *o = (*p + t.conj() * *o * mu) / (T::one() + mu * pw);
    }
    obs.to_image()
}

/// Objective minimized by [`hqs_data_step`].
pub fn hqs_data_objective<T: Scalar>(
    z: &ImageGrid<T>,
    feat_prev: &ImageGrid<T>,
    feat_obs: &ImageGrid<T>,
    hk: &SpectralKernel<T>,
    mu: T,
) -> Result<f64> {
    let hz = hk.blur(z)?;
    let prior: f64 = z.data().iter().zip(feat_prev.data()).map(|(&a, &b)| (a - b).to_f64_lossy().powi(2)).sum();
    let data: f64 = feat_obs.data().iter().zip(hz.data()).map(|(&a, &b)| (a - b).to_f64_lossy().powi(2)).sum();
    Ok(prior + mu.to_f64_lossy() * data)
}

/// Inversion module `(HᵀH + ρI)⁻¹(Hᵀy + ρ x_prev)`.
pub fn inversion_module<T: Scalar>(
    y: &ImageGrid<T>,
    x_prev: &ImageGrid<T>,
    hk: &SpectralKernel<T>,
    rho: T,
) -> Result<ImageGrid<T>> {
    hk.check(y, "observation")?;
    hk.check(x_prev, "previous estimate")?;
    if !(rho > T::zero()) {
        return domain_err(format!("inversion weight must be positive, got {rho}"));
    }
    let prev = Spectrum::of(x_prev);
    let mut s = Spectrum::of(y);
    for (((v, p), t), &pw) in s.bins.iter_mut().zip(&prev.bins).zip(&hk.transfer).zip(&hk.power) {
        *v = (t.conj() * *v + *p * rho) / (pw + rho);
    }
    s.to_image()
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

    fn gaussian3() -> BlurKernel<f64> {
        let g = |d: f64| (-d * d / (2.0 * 0.25)).exp();
        let taps: Vec<f64> = (0..9).map(|i| g((i / 3) as f64 - 1.0) * g((i % 3) as f64 - 1.0)).collect();
        BlurKernel::normalized(3, taps).unwrap()
    }

    #[test]
    fn delta_transfer_is_one() {
        let hk = precompute_kernel(&BlurKernel::<f64>::delta(3).unwrap(), 8, 6).unwrap();
        for t in hk.transfer() {
            assert!((t.re - 1.0).abs() < 1e-14 && t.im.abs() < 1e-14);
        }
    }

    #[test]
    fn dc_gain_is_one() {
        let hk = precompute_kernel(&gaussian3(), 16, 16).unwrap();
        assert!((hk.transfer()[0].re - 1.0).abs() < 1e-12);
        assert!(hk.transfer()[0].im.abs() < 1e-12);
        for (t, p) in hk.transfer().iter().zip(hk.power()) {
            assert!((t.norm_sqr() - p).abs() < 1e-12);
        }
    }

    #[test]
    fn kernel_larger_than_image() {
        assert!(precompute_kernel(&BlurKernel::<f64>::boxcar(9).unwrap(), 8, 16).is_err());
    }

    #[test]
    fn wiener_delta_identity() {
        let y = random(8, 8, 1);
        let hk = precompute_kernel(&BlurKernel::delta(1).unwrap(), 8, 8).unwrap();
        let x = wiener(&y, &hk, 0.0).unwrap();
        for (a, b) in x.data().iter().zip(y.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn wiener_singular_kernel() {
        // [1,1]/2 along rows has a zero at the Nyquist bin of an even width.
        let taps = vec![0.0, 0.0, 0.0, 0.0, 0.5, 0.5, 0.0, 0.0, 0.0];
        let k = BlurKernel::new(3, taps).unwrap();
        let hk = precompute_kernel(&k, 8, 8).unwrap();
        assert!(matches!(wiener(&random(8, 8, 2), &hk, 0.0), Err(Error::Singular(_))));
        assert!(wiener(&random(8, 8, 2), &hk, 0.1).is_ok());
        assert!(wiener(&random(8, 8, 2), &hk, -0.1).is_err());
    }

    #[test]
    fn wiener_is_linear() {
        let hk = precompute_kernel(&gaussian3(), 12, 10).unwrap();
        let a = random(12, 10, 3);
        let b = random(12, 10, 4);
        let combo = a.zip_map(&b, |u, v| 2.0 * u - 0.5 * v).unwrap();
        let lhs = wiener(&combo, &hk, 0.05).unwrap();
        let wa = wiener(&a, &hk, 0.05).unwrap();
        let wb = wiener(&b, &hk, 0.05).unwrap();
        let rhs = wa.zip_map(&wb, |u, v| 2.0 * u - 0.5 * v).unwrap();
        for (l, r) in lhs.data().iter().zip(rhs.data()) {
            assert!((l - r).abs() < 1e-10);
        }
    }

    #[test]
    fn wiener_shrinks_high_frequencies_with_lambda() {
        let hk = precompute_kernel(&gaussian3(), 16, 16).unwrap();
        let y = random(16, 16, 9);
        let high_band = |img: &ImageGrid<f64>| -> f64 {
            let s = Spectrum::of(img);
            let mut e = 0.0;
            for r in 0..16usize {
                for c in 0..16usize {
                    let fr = r.min(16 - r);
                    let fc = c.min(16 - c);
                    if fr + fc >= 8 {
                        e += s.bins()[r * 16 + c].norm_sqr();
                    }
                }
            }
            e
        };
        let mut last = f64::INFINITY;
        for lambda in [1e-3, 1e-2, 1e-1, 1.0] {
            let e = high_band(&wiener(&y, &hk, lambda).unwrap());
            assert!(e <= last);
            last = e;
        }
    }

    #[test]
    fn imaginary_residue_is_small() {
        let hk = precompute_kernel(&gaussian3(), 9, 14).unwrap();
        let y = random(9, 14, 5);
        let mut s = Spectrum::of(&y);
        for (v, t) in s.bins.iter_mut().zip(hk.transfer()) {
            *v = *v * t.conj() / (t.norm_sqr() + 0.1);
        }
        let (_, residue) = s.to_image_with_residue().unwrap();
        assert!(residue < 1e-9);
    }

    #[test]
    fn hqs_mu_zero_returns_prev() {
        let hk = precompute_kernel(&gaussian3(), 8, 8).unwrap();
        let p = random(8, 8, 6);
        let o = random(8, 8, 7);
        assert_eq!(hqs_data_step(&p, &o, &hk, 0.0).unwrap(), p);
    }

    #[test]
    fn hqs_large_mu_with_delta_returns_obs() {
        let hk = precompute_kernel(&BlurKernel::delta(3).unwrap(), 8, 8).unwrap();
        let p = random(8, 8, 6);
        let o = random(8, 8, 7);
        let z = hqs_data_step(&p, &o, &hk, 1e8).unwrap();
        for (a, b) in z.data().iter().zip(o.data()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn hqs_step_is_optimal_under_perturbation() {
        let hk = precompute_kernel(&gaussian3(), 8, 8).unwrap();
        let p = random(8, 8, 10);
        let o = random(8, 8, 11);
        let mu = 2.0;
        let z = hqs_data_step(&p, &o, &hk, mu).unwrap();
        let base = hqs_data_objective(&z, &p, &o, &hk, mu).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10 {
            let dir = ImageGrid::<f64>::from_fn(8, 8, |_, _| rng.random::<f64>() - 0.5);
            for sign in [1e-3, -1e-3] {
                let moved = z.zip_map(&dir, |a, d| a + sign * d).unwrap();
                assert!(hqs_data_objective(&moved, &p, &o, &hk, mu).unwrap() >= base);
            }
        }
    }

    #[test]
    fn inversion_limits() {
        let hk = precompute_kernel(&gaussian3(), 16, 16).unwrap();
        let x = random(16, 16, 13);
        let y = hk.blur(&x).unwrap();
        for rho in [1e-3, 0.5, 10.0] {
            let out = inversion_module(&y, &x, &hk, rho).unwrap();
            for (a, b) in out.data().iter().zip(x.data()) {
                assert!((a - b).abs() < 1e-8);
            }
        }
        let prev = random(16, 16, 14);
        let out = inversion_module(&y, &prev, &hk, 1e8).unwrap();
        for (a, b) in out.data().iter().zip(prev.data()) {
            assert!((a - b).abs() < 1e-5);
        }
        assert!(inversion_module(&y, &prev, &hk, 0.0).is_err());
    }

    #[test]
    fn adjoint_matches_inner_product() {
        let hk = precompute_kernel(&gaussian3(), 10, 12).unwrap();
        let a = random(10, 12, 15);
        let b = random(10, 12, 16);
        let ha = hk.blur(&a).unwrap();
        let htb = hk.blur_adjoint(&b).unwrap();
        let lhs: f64 = ha.data().iter().zip(b.data()).map(|(x, y)| x * y).sum();
        let rhs: f64 = a.data().iter().zip(htb.data()).map(|(x, y)| x * y).sum();
        assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn plan_cache_reuses_shapes() {
        let cache = PlanCache::<f64>::new();
        let a = cache.get(8, 8);
        let b = cache.get(8, 8);
        assert!(Arc::ptr_eq(&a, &b));
        cache.get(4, 8);
        assert_eq!(cache.len(), 2);
    }

    #[test]
    fn f32_engine_runs() {
        let y = random(8, 8, 20).cast::<f32>();
        let hk = precompute_kernel(&gaussian3().cast::<f32>(), 8, 8).unwrap();
        let x = wiener(&y, &hk, 0.01f32).unwrap();
        assert_eq!(x.shape(), (8, 8));
    }
}
