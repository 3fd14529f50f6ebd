//! Full-reference quality metrics with unit dynamic range.

use crate::error::{shape_err, Result};
use crate::image::ImageGrid;
use crate::scalar::Scalar;

/// PSNR reported for identical images.
pub const PSNR_CAP_DB: f64 = 100.0;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_C1: f64 = 0.01 * 0.01;
pub const SSIM_C2: f64 = 0.03 * 0.03;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QualityReport {
    pub psnr_db: f64,
    pub ssim: f64,
    pub mse: f64,
}

impl QualityReport {
    pub fn compute<T: Scalar>(reference: &ImageGrid<T>, estimate: &ImageGrid<T>) -> Result<Self> {
        let mse = mse(reference, estimate)?;
        Ok(Self { psnr_db: psnr_from_mse(mse), ssim: ssim(reference, estimate)?, mse })
    }
}

impl std::fmt::Display for QualityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "psnr_db={:?} ssim={:?} mse={:?}", self.psnr_db, self.ssim, self.mse)
    }
}

pub fn mse<T: Scalar>(reference: &ImageGrid<T>, estimate: &ImageGrid<T>) -> Result<f64> {
    reference.ensure_same_shape(estimate)?;
    let sum: f64 = reference
        .data()
        .iter()
        .zip(estimate.data())
        .map(|(&a, &b)| {
            let d = a.to_f64_lossy() - b.to_f64_lossy();
            d * d
        })
        .sum();
    Ok(sum / reference.len() as f64)
}

/// Mean absolute error, the per-pixel ℓ1 loss.
pub fn mae<T: Scalar>(reference: &ImageGrid<T>, estimate: &ImageGrid<T>) -> Result<f64> {
    reference.ensure_same_shape(estimate)?;
    let sum: f64 =
        reference.data().iter().zip(estimate.data()).map(|(&a, &b)| (a.to_f64_lossy() - b.to_f64_lossy()).abs()).sum();
    Ok(sum / reference.len() as f64)
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse <= 0.0 {
        PSNR_CAP_DB
    } else {
        (10.0 * (1.0 / mse).log10()).min(PSNR_CAP_DB)
    }
}

/// Peak signal-to-noise ratio in dB for peak value 1.
pub fn psnr<T: Scalar>(reference: &ImageGrid<T>, estimate: &ImageGrid<T>) -> Result<f64> {
    Ok(psnr_from_mse(mse(reference, estimate)?))
}

fn gaussian_window() -> Vec<f64> {
    let r = (SSIM_WINDOW / 2) as f64;
    let mut w = Vec::with_capacity(SSIM_WINDOW * SSIM_WINDOW);
    for i in 0..SSIM_WINDOW {
        for j in 0..SSIM_WINDOW {
            let dy = i as f64 - r;
            let dx = j as f64 - r;
            w.push((-(dx * dx + dy * dy) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp());
        }
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    w
}

/// Mean structural similarity over every fully contained 11×11 Gaussian
/// window (σ = 1.5, C1 = 0.01², C2 = 0.03²).
pub fn ssim<T: Scalar>(reference: &ImageGrid<T>, estimate: &ImageGrid<T>) -> Result<f64> {
    reference.ensure_same_shape(estimate)?;
    let (h, w) = reference.shape();
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return shape_err(format!("SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {h}x{w}"));
    }
    let win = gaussian_window();
    let a: Vec<f64> = reference.data().iter().map(|v| v.to_f64_lossy()).collect();
    let b: Vec<f64> = estimate.data().iter().map(|v| v.to_f64_lossy()).collect();

    let mut total = 0.0;
    let mut count = 0usize;
    for r0 in 0..=(h - SSIM_WINDOW) {
        for c0 in 0..=(w - SSIM_WINDOW) {
            let (mut mu_a, mut mu_b) = (0.0, 0.0);
            for i in 0..SSIM_WINDOW {
                let row = (r0 + i) * w + c0;
                for j in 0..SSIM_WINDOW {
                    let wt = win[i * SSIM_WINDOW + j];
                    mu_a += wt * a[row + j];
                    mu_b += wt * b[row + j];
                }
            }
            let (mut var_a, mut var_b, mut cov) = (0.0, 0.0, 0.0);
            for i in 0..SSIM_WINDOW {
                let row = (r0 + i) * w + c0;
                for j in 0..SSIM_WINDOW {
                    let wt = win[i * SSIM_WINDOW + j];
                    let da = a[row + j] - mu_a;
                    let db = b[row + j] - mu_b;
                    var_a += wt * da * da;
                    var_b += wt * db * db;
                    cov += wt * (da * db);
                }
            }
            let num = (2.0 * (mu_a * mu_b) + SSIM_C1) * (2.0 * cov + SSIM_C2);
            let den = (mu_a * mu_a + mu_b * mu_b + SSIM_C1) * (var_a + var_b + SSIM_C2);
            total += num / den;
            count += 1;
        }
    }
    Ok(total / count as f64)
}
