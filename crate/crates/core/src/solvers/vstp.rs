use crate::denoise::{denoise, DenoiserSpec};
use crate::error::{config_err, domain_err, Result};
use crate::image::{BlurKernel, ImageGrid};
use crate::scalar::Scalar;
use crate::spectral::{precompute_kernel, wiener};
use crate::transforms::{anscombe, inverse_anscombe, InverseKind, VstConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct VstpConfig {
    /// Mixing weights `λ_t` in `[0, 1]`, one per iteration.
    pub weights: Vec<f64>,
    pub denoiser: DenoiserSpec,
    pub wiener_lambda: f64,
    /// Denoise in the Anscombe domain; otherwise the strength is rescaled to
    /// the intensity domain by the mean local noise level `√(x/α)`.
    pub use_vst: bool,
    pub inverse: VstConfig,
}

impl VstpConfig {
    pub fn new(iterations: usize, denoiser: DenoiserSpec, wiener_lambda: f64) -> Self {
        Self {
            weights: default_weights(iterations),
            denoiser,
            wiener_lambda,
            use_vst: true,
            inverse: VstConfig { inverse_kind: InverseKind::AsymptoticallyUnbiased },
        }
    }
}

/// `λ_t = 1 − 1/(t+1)` for `t = 1..=iterations`.
pub fn default_weights(iterations: usize) -> Vec<f64> {
    (1..=iterations).map(|t| 1.0 - 1.0 / (t as f64 + 1.0)).collect()
}

/// Iterative Wiener + VST-domain denoising.
///
/// `alpha` is the photon scale of the observation, so `alpha · y` is in
/// counts.
pub fn solve_vstp<T: Scalar>(y: &ImageGrid<T>, h: &BlurKernel<T>, alpha: f64, cfg: &VstpConfig) -> Result<ImageGrid<T>> {
    if let Some(w) = cfg.weights.iter().find(|w| !(0.0..=1.0).contains(*w)) {
        return config_err(format!("mixing weight {w} outside [0, 1]"));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return domain_err(format!("photon scale must be positive, got {alpha}"));
    }
    let hk = precompute_kernel(h, y.height(), y.width())?;
    let x_wiener = wiener(y, &hk, T::of(cfg.wiener_lambda))?;
    let a = T::of(alpha);
    let mut x = x_wiener.clone();
    for &lam in &cfg.weights {
        let l = T::of(lam);
        let x_data = x.zip_map(&x_wiener, |p, w| l * p + (T::one() - l) * w)?.clamp_min(T::zero());
        x = if cfg.use_vst {
            let t = anscombe(&x_data.scale(a))?;
            inverse_anscombe(&denoise(&t, &cfg.denoiser)?, cfg.inverse).scale(T::one() / a)
        } else {
            // d/dv of 2√(αv + 3/8) is ≈ √(α/v), so a unit step there is √(v/α)
            // here; the strength uses its mean over the image
            let root_mean = x_data.data().iter().map(|v| v.to_f64_lossy().sqrt()).sum::<f64>() / x_data.len() as f64;
            let level = root_mean.max(1e-3) / alpha.sqrt();
            let spec = cfg.denoiser.with_strength(cfg.denoiser.strength * level);
            denoise(&x_data, &spec)?
        };
    }
    Ok(x)
}
