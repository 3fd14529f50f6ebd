use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{domain_err, shape_err, Result};
use crate::image::BlurKernel;
use crate::scalar::Scalar;

pub const SIGMA_RANGE: (f64, f64) = (0.1, 5.0);
pub const DEFAULT_TRAJECTORY_STEPS: usize = 2000;

fn check_size(size: usize) -> Result<()> {
    if size == 0 || size.is_multiple_of(2) {
        return shape_err(format!("kernel size must be odd and positive, got {size}"));
    }
    Ok(())
}

/// Sampled anisotropic Gaussian with axis widths `sigma_x`, `sigma_y`,
/// rotated by `theta` radians and normalized to unit mass.
pub fn make_gaussian_kernel<T: Scalar>(size: usize, sigma_x: f64, sigma_y: f64, theta: f64) -> Result<BlurKernel<T>> {
    check_size(size)?;
    for s in [sigma_x, sigma_y] {
        if !(SIGMA_RANGE.0..=SIGMA_RANGE.1).contains(&s) {
            return domain_err(format!("gaussian sigma {s} outside [{}, {}]", SIGMA_RANGE.0, SIGMA_RANGE.1));
        }
    }
    if !theta.is_finite() {
        return domain_err("rotation angle must be finite");
    }
    let r = (size / 2) as f64;
    let (sin, cos) = theta.sin_cos();
    let mut taps = Vec::with_capacity(size * size);
    for i in 0..size {
        for j in 0..size {
            let y = i as f64 - r;
            let x = j as f64 - r;
            let u = x * cos + y * sin;
            let v = -x * sin + y * cos;
            let e = 0.5 * (u * u / (sigma_x * sigma_x) + v * v / (sigma_y * sigma_y));
            taps.push((-e).exp());
        }
    }
    let total: f64 = taps.iter().sum();
    BlurKernel::new(size, taps.into_iter().map(|t| T::of(t / total)).collect())
}

/// Camera-shake kernel from a random-acceleration trajectory.
///
/// Velocity follows a Gaussian random walk whose increments scale with
/// `jitter · size`; the integrated path is centered on its centroid, shrunk
/// to fit the support if needed, and splatted with bilinear weights. With
/// `jitter = 0` the camera never moves and the kernel is a centered delta.
pub fn make_trajectory_kernel<T: Scalar>(size: usize, steps: usize, jitter: f64, seed: u64) -> Result<BlurKernel<T>> {
    check_size(size)?;
    if steps < 2 {
        return domain_err(format!("trajectory needs at least 2 steps, got {steps}"));
    }
    if !(jitter >= 0.0) || !jitter.is_finite() {
        return domain_err(format!("jitter must be finite and nonnegative, got {jitter}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gauss = || -> f64 { StandardNormal.sample(&mut rng) };

    let scale = jitter * size as f64;
    let dt = 1.0 / (steps - 1) as f64;
    let mut vel = (0.5 * scale * gauss(), 0.5 * scale * gauss());
    let mut pos = (0.0f64, 0.0f64);
    let mut path = Vec::with_capacity(steps);
    path.push(pos);
    for _ in 1..steps {
        let kick = 2.0 * scale * dt.sqrt();
        vel.0 += kick * gauss();
        vel.1 += kick * gauss();
        pos.0 += vel.0 * dt;
        pos.1 += vel.1 * dt;
        path.push(pos);
    }

    let n = path.len() as f64;
    let cy = path.iter().map(|p| p.0).sum::<f64>() / n;
    let cx = path.iter().map(|p| p.1).sum::<f64>() / n;
    let extent = path.iter().map(|p| (p.0 - cy).abs().max((p.1 - cx).abs())).fold(0.0, f64::max);
    let limit = (size / 2) as f64 - 1.0;
    let shrink = if extent > limit && extent > 0.0 { limit.max(0.0) / extent } else { 1.0 };

    let r = (size / 2) as f64;
    let mut taps = vec![0.0f64; size * size];
    let mut splat = |row: isize, col: isize, w: f64| {
        if row >= 0 && col >= 0 && (row as usize) < size && (col as usize) < size {
            taps[row as usize * size + col as usize] += w;
        }
    };
    for &(py, px) in &path {
        let y = r + (py - cy) * shrink;
        let x = r + (px - cx) * shrink;
        let y0 = y.floor();
        let x0 = x.floor();
        let fy = y - y0;
        let fx = x - x0;
        let (iy, ix) = (y0 as isize, x0 as isize);
        splat(iy, ix, (1.0 - fy) * (1.0 - fx));
        splat(iy, ix + 1, (1.0 - fy) * fx);
        splat(iy + 1, ix, fy * (1.0 - fx));
        splat(iy + 1, ix + 1, fy * fx);
    }
    BlurKernel::normalized(size, taps.into_iter().map(T::of).collect())
}

/// Parametric description of a kernel generator.
#[derive(Clone, Debug, PartialEq)]
pub enum KernelFamily {
    Gaussian { size: usize, sigma_x: f64, sigma_y: f64, theta: f64 },
    Trajectory { size: usize, steps: usize, jitter: f64, seed: u64 },
}

impl KernelFamily {
    pub fn size(&self) -> usize {
        match *self {
            Self::Gaussian { size, .. } | Self::Trajectory { size, .. } => size,
        }
    }

    pub fn build<T: Scalar>(&self) -> Result<BlurKernel<T>> {
        match *self {
            Self::Gaussian { size, sigma_x, sigma_y, theta } => make_gaussian_kernel(size, sigma_x, sigma_y, theta),
            Self::Trajectory { size, steps, jitter, seed } => make_trajectory_kernel(size, steps, jitter, seed),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isotropic_gaussian_ignores_rotation() {
        let a: BlurKernel<f64> = make_gaussian_kernel(9, 1.3, 1.3, 0.0).unwrap();
        let b: BlurKernel<f64> = make_gaussian_kernel(9, 1.3, 1.3, std::f64::consts::FRAC_PI_4).unwrap();
        for (x, y) in a.taps().iter().zip(b.taps()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn narrow_gaussian_is_near_delta() {
        let k: BlurKernel<f64> = make_gaussian_kernel(9, 0.1, 0.1, 0.0).unwrap();
        // neighbours sit at exp(-1/(2·0.01)) relative to the centre
        let neighbour = (-50.0f64).exp();
        let expected = 1.0 / (1.0 + 4.0 * neighbour + 4.0 * neighbour * neighbour);
        assert!(k.center_tap() > 0.999);
        assert!((k.center_tap() - expected).abs() < 1e-15);
    }

    #[test]
    fn gaussian_sums_to_one_and_validates() {
        for (sx, sy, th) in [(0.1, 5.0, 0.3), (2.0, 0.7, 1.1), (5.0, 5.0, 0.0)] {
            let k: BlurKernel<f64> = make_gaussian_kernel(15, sx, sy, th).unwrap();
            assert!((k.taps().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!(make_gaussian_kernel::<f64>(9, 0.05, 1.0, 0.0).is_err());
        assert!(make_gaussian_kernel::<f64>(9, 1.0, 5.5, 0.0).is_err());
        assert!(make_gaussian_kernel::<f64>(8, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn anisotropic_gaussian_rotates() {
        let a: BlurKernel<f64> = make_gaussian_kernel(9, 3.0, 0.5, 0.0).unwrap();
        let b: BlurKernel<f64> = make_gaussian_kernel(9, 3.0, 0.5, std::f64::consts::FRAC_PI_2).unwrap();
        // 90° rotation swaps rows and columns
        for i in 0..9 {
            for j in 0..9 {
                assert!((a.tap(i, j) - b.tap(j, i)).abs() < 1e-12);
            }
        }
        assert!(a.tap(4, 0) > a.tap(0, 4));
    }

    #[test]
    fn trajectory_is_deterministic() {
        let a: BlurKernel<f64> = make_trajectory_kernel(27, 2000, 1.0, 99).unwrap();
        let b: BlurKernel<f64> = make_trajectory_kernel(27, 2000, 1.0, 99).unwrap();
        let c: BlurKernel<f64> = make_trajectory_kernel(27, 2000, 1.0, 100).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn zero_jitter_is_delta() {
        let k: BlurKernel<f64> = make_trajectory_kernel(15, 500, 0.0, 3).unwrap();
        assert_eq!(k.center_tap(), 1.0);
        assert_eq!(k.taps().iter().filter(|&&t| t > 0.0).count(), 1);
    }

    #[test]
    fn trajectory_validation() {
        assert!(make_trajectory_kernel::<f64>(14, 100, 1.0, 0).is_err());
        assert!(make_trajectory_kernel::<f64>(15, 1, 1.0, 0).is_err());
        assert!(make_trajectory_kernel::<f64>(15, 100, -1.0, 0).is_err());
    }
}
