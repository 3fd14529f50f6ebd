//! Synthetic photon-limited observations: blur kernels, circular blur,
//! photon-level calibration and Poisson sampling.

mod kernels;
mod poisson;

pub use kernels::{make_gaussian_kernel, make_trajectory_kernel, KernelFamily, DEFAULT_TRAJECTORY_STEPS, SIGMA_RANGE};
pub use poisson::{ln_factorial, poisson_variate, INVERSION_CUTOFF};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::Config;
use crate::error::{config_err, domain_err, Result};
use crate::image::{BlurKernel, ImageGrid};
use crate::scalar::Scalar;
use crate::spectral::precompute_kernel;

/// One synthetic degradation: kernel, mean photons per pixel and RNG seed.
#[derive(Clone, Debug, PartialEq)]
pub struct DegradationSpec<T: Scalar> {
    pub kernel: BlurKernel<T>,
    pub ppp: f64,
    pub seed: u64,
}

/// Photon range of the evaluation protocol.
pub const PROTOCOL_PPP_RANGE: (f64, f64) = (1.0, 80.0);

impl<T: Scalar> DegradationSpec<T> {
    pub fn new(kernel: BlurKernel<T>, ppp: f64, seed: u64) -> Result<Self> {
        if !(ppp > 0.0) || !ppp.is_finite() {
            return domain_err(format!("ppp must be positive, got {ppp}"));
        }
        Ok(Self { kernel, ppp, seed })
    }

    pub fn in_protocol_range(&self) -> bool {
        (PROTOCOL_PPP_RANGE.0..=PROTOCOL_PPP_RANGE.1).contains(&self.ppp)
    }
}

/// Reads a kernel generator from `kernel.*` keys:
/// `kernel.kind = gaussian|trajectory`, `kernel.size`, and per kind
/// `kernel.sigma_x`/`sigma_y`/`theta` or `kernel.steps`/`jitter`/`seed`.
pub fn kernel_family_from_config(cfg: &Config) -> Result<KernelFamily> {
    let k = cfg.section("kernel");
    let size: usize = k.parse_or("size", 9)?;
    match k.get("kind").unwrap_or("trajectory") {
        "gaussian" => {
            let sigma_x: f64 = k.parse_or("sigma_x", 1.0)?;
            Ok(KernelFamily::Gaussian {
                size,
                sigma_x,
                sigma_y: k.parse_or("sigma_y", sigma_x)?,
                theta: k.parse_or("theta", 0.0)?,
            })
        }
        "trajectory" => Ok(KernelFamily::Trajectory {
            size,
            steps: k.parse_or("steps", DEFAULT_TRAJECTORY_STEPS)?,
            jitter: k.parse_or("jitter", 1.0)?,
            seed: k.parse_or("seed", 0)?,
        }),
        other => config_err(format!("unknown kernel kind `{other}`")),
    }
}

/// Circular 2-D convolution `H x` computed in the Fourier domain.
pub fn blur<T: Scalar>(x: &ImageGrid<T>, h: &BlurKernel<T>) -> Result<ImageGrid<T>> {
    let hk = precompute_kernel(h, x.height(), x.width())?;
    hk.blur(x)
}

/// Scale `α` making the mean of `α · blurred` exactly `ppp`.
pub fn alpha_for_ppp<T: Scalar>(blurred: &ImageGrid<T>, ppp: f64) -> Result<f64> {
    if !(ppp > 0.0) || !ppp.is_finite() {
        return domain_err(format!("ppp must be positive, got {ppp}"));
    }
    let mean: f64 = blurred.data().iter().map(|v| v.to_f64_lossy()).sum::<f64>() / blurred.len() as f64;
    if !(mean > 0.0) {
        return domain_err(format!("image mean must be positive to set a photon level, got {mean}"));
    }
    Ok(ppp / mean)
}

/// Independent Poisson counts with per-pixel means `intensity`.
pub fn sample_poisson<T: Scalar>(intensity: &ImageGrid<T>, seed: u64) -> Result<ImageGrid<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(intensity.len());
    for (i, &lam) in intensity.data().iter().enumerate() {
        let lam = lam.to_f64_lossy();
        if lam < 0.0 {
            return domain_err(format!("negative Poisson mean {lam} at pixel {i}"));
        }
        out.push(T::of(poisson_variate(lam, &mut rng) as f64));
    }
    Ok(ImageGrid::from_vec_unchecked(intensity.height(), intensity.width(), out))
}

/// Raw photon counts together with the photon scale used to produce them.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation<T: Scalar> {
    pub counts: ImageGrid<T>,
    pub alpha: f64,
}

impl<T: Scalar> Observation<T> {
    /// Counts divided by `α`: the observation on the clean-image scale.
    pub fn normalized(&self) -> ImageGrid<T> {
        self.counts.scale(T::of(1.0 / self.alpha))
    }
}

/// `y = Poisson(α · H x)` with `α` set from the spec's photon level.
pub fn degrade<T: Scalar>(x: &ImageGrid<T>, spec: &DegradationSpec<T>) -> Result<Observation<T>> {
    if x.min_value() < T::zero() || x.max_value() > T::one() {
        return domain_err("clean image must lie in [0, 1]");
    }
    // FFT round-off can leave tiny negatives next to black regions
    let blurred = blur(x, &spec.kernel)?.clamp_min(T::zero());
    let alpha = alpha_for_ppp(&blurred, spec.ppp)?;
    let counts = sample_poisson(&blurred.scale(T::of(alpha)), spec.seed)?;
    Ok(Observation { counts, alpha })
}
