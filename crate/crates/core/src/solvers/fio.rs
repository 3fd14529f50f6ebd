use crate::denoise::{denoise, soft, total_variation, DenoiserSpec};
use crate::error::{config_err, Error, Result};
use crate::image::{BlurKernel, ImageGrid};
use crate::scalar::Scalar;
use crate::spectral::{hqs_data_step, precompute_kernel, wiener};

use super::bank::FilterBank;

/// Per-iteration penalties `μ^k`, shared by every feature, and the prior
/// weight `λ`.
#[derive(Clone, Debug, PartialEq)]
pub struct HqsSchedule {
    mu: Vec<f64>,
    lambda: f64,
}

impl HqsSchedule {
    pub fn new(mu: Vec<f64>, lambda: f64) -> Result<Self> {
        if mu.is_empty() {
            return config_err("schedule needs at least one iteration");
        }
        if let Some(m) = mu.iter().find(|m| !(**m > 0.0) || !m.is_finite()) {
            return config_err(format!("penalties must be positive and finite, got {m}"));
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return config_err(format!("prior weight must be nonnegative, got {lambda}"));
        }
        Ok(Self { mu, lambda })
    }

    /// `μ^k = μ₀ · ratio^(k−1)` for `k = 1..=iterations`.
    pub fn geometric(iterations: usize, mu0: f64, ratio: f64, lambda: f64) -> Result<Self> {
        Self::new((0..iterations).map(|k| mu0 * ratio.powi(k as i32)).collect(), lambda)
    }

    pub fn iterations(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// How features reach the plug-in denoiser.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FeatureOrder {
    /// Shrink the non-identity features, aggregate, then denoise the image.
    #[default]
    Joint,
    /// Denoise every feature separately, then aggregate.
    PerFeature,
}

impl std::str::FromStr for FeatureOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "joint" => Ok(Self::Joint),
            "per_feature" => Ok(Self::PerFeature),
            other => config_err(format!("unknown feature order `{other}`")),
        }
    }
}

impl std::fmt::Display for FeatureOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Joint => "joint",
            Self::PerFeature => "per_feature",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FioConfig {
    pub schedule: HqsSchedule,
    /// `strength` is the base strength; iteration `k` uses `strength·λ/μ^k`.
    pub denoiser: DenoiserSpec,
    /// Soft threshold on non-identity features, relative to the
    /// iteration's denoiser strength.
    pub feature_shrink: f64,
    pub order: FeatureOrder,
    /// Start from a Wiener estimate with this regularizer instead of `y`.
    pub warm_start: Option<f64>,
}

impl FioConfig {
    pub fn new(schedule: HqsSchedule, denoiser: DenoiserSpec) -> Self {
        Self { schedule, denoiser, feature_shrink: 0.0, order: FeatureOrder::Joint, warm_start: None }
    }

    /// Denoiser strength at iteration `k` (zero-based).
    pub fn strength_at(&self, k: usize) -> f64 {
        self.denoiser.strength * self.schedule.lambda / self.schedule.mu[k]
    }
}

/// Per-iteration diagnostics of [`solve_fio_traced`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FioTrace {
    /// Composite HQS objective with a TV surrogate prior, after each iteration.
    pub objective: Vec<f64>,
    pub strength: Vec<f64>,
    pub iterates: Vec<ImageGrid<f64>>,
}

impl FioTrace {
    /// True when the surrogate objective ever increased.
    pub fn non_monotone(&self) -> bool {
        self.objective.windows(2).any(|w| w[1] > w[0])
    }
}

fn numerical(iteration: usize, what: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::Numerical { .. } => e,
        other => Error::Numerical { iteration, what: format!("{what}: {other}") },
    }
}

fn sq_dist<T: Scalar>(a: &ImageGrid<T>, b: &ImageGrid<T>) -> f64 {
    a.data().iter().zip(b.data()).map(|(&u, &v)| (u - v).to_f64_lossy().powi(2)).sum()
}

/// Feature-space HQS with a plug-in denoiser, unrolled for a fixed number of
/// iterations.
pub fn solve_fio<T: Scalar>(
    y: &ImageGrid<T>,
    h: &BlurKernel<T>,
    bank: &FilterBank,
    cfg: &FioConfig,
) -> Result<ImageGrid<T>> {
    run(y, h, bank, cfg, None)
}

pub fn solve_fio_traced<T: Scalar>(
    y: &ImageGrid<T>,
    h: &BlurKernel<T>,
    bank: &FilterBank,
    cfg: &FioConfig,
    keep_iterates: bool,
) -> Result<(ImageGrid<T>, FioTrace)> {
    let mut trace = FioTrace::default();
    let x = run(y, h, bank, cfg, Some((&mut trace, keep_iterates)))?;
    if trace.non_monotone() {
        log::debug!("fio surrogate objective not monotone: {:?}", trace.objective);
    }
    Ok((x, trace))
}

fn run<T: Scalar>(
    y: &ImageGrid<T>,
    h: &BlurKernel<T>,
    bank: &FilterBank,
    cfg: &FioConfig,
    mut trace: Option<(&mut FioTrace, bool)>,
) -> Result<ImageGrid<T>> {
    let (height, width) = y.shape();
    let hk = precompute_kernel(h, height, width)?;
    let spectra = bank.spectra::<T>(height, width)?;
    let feat_obs = spectra.features(y)?;
    let mut x = match cfg.warm_start {
        Some(lw) => wiener(y, &hk, T::of(lw))?,
        None => y.clone(),
    };
    for (k, &mu) in cfg.schedule.mu.iter().enumerate() {
        let iteration = k + 1;
        let mu_t = T::of(mu);
        let strength = cfg.strength_at(k);
        let feat_prev = spectra.features(&x).map_err(numerical(iteration, "feature extraction"))?;
        let mut z = feat_prev
            .iter()
            .zip(&feat_obs)
            .map(|(p, o)| hqs_data_step(p, o, &hk, mu_t))
            .collect::<Result<Vec<_>>>()
            .map_err(numerical(iteration, "data step"))?;
        let z_raw = trace.is_some().then(|| z.clone());
        let den = cfg.denoiser.with_strength(strength);
        x = match cfg.order {
            FeatureOrder::Joint => {
                let tau = T::of(cfg.feature_shrink * strength);
                if tau > T::zero() {
                    for (i, zi) in z.iter_mut().enumerate() {
                        if !spectra.is_identity(i) {
                            *zi = zi.map(|v| soft(v, tau));
                        }
                    }
                }
                let agg = spectra.aggregate(&z).map_err(numerical(iteration, "aggregation"))?;
                denoise(&agg, &den).map_err(numerical(iteration, "denoiser"))?
            }
            FeatureOrder::PerFeature => {
                let den_z = z.iter().map(|zi| denoise(zi, &den)).collect::<Result<Vec<_>>>();
                let den_z = den_z.map_err(numerical(iteration, "denoiser"))?;
                spectra.aggregate(&den_z).map_err(numerical(iteration, "aggregation"))?
            }
        };
        if x.data().iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical { iteration, what: "non-finite estimate".into() });
        }
        if let Some((t, keep)) = trace.as_mut() {
            let z_raw = z_raw.as_deref().unwrap_or_default();
            let fx = spectra.features(&x)?;
            let mut obj = cfg.schedule.lambda * total_variation(&x).to_f64_lossy();
            for ((zi, fo), fxi) in z_raw.iter().zip(&feat_obs).zip(&fx) {
                obj += sq_dist(fo, &hk.blur(zi)?) + mu * sq_dist(fxi, zi);
            }
            t.objective.push(obj);
            t.strength.push(strength);
            if *keep {
                t.iterates.push(x.cast());
            }
        }
    }
    Ok(x)
}
