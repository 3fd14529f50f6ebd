//! Classical plug-in denoisers behind one interface.

mod haar;
mod tv;

pub use haar::{haar_inverse, haar_soft, haar_transform, soft, HaarBands};
pub use tv::{total_variation, tv_chambolle, tv_objective, DEFAULT_TV_STEP};

use std::str::FromStr;

use crate::config::Config;
use crate::error::{config_err, domain_err, Error, Result};
use crate::image::ImageGrid;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DenoiserKind {
    Identity,
    /// Circular Gaussian blur with σ = strength.
    GaussianSmooth,
    /// TV proximal map with weight τ = strength.
    TvChambolle,
    /// One-level Haar detail shrinkage at threshold τ = strength.
    HaarSoft,
}

impl FromStr for DenoiserKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" | "none" => Ok(Self::Identity),
            "gaussian_smooth" | "gaussian" => Ok(Self::GaussianSmooth),
            "tv_chambolle" | "tv" => Ok(Self::TvChambolle),
            "haar_soft" | "haar" => Ok(Self::HaarSoft),
            other => config_err(format!("unknown denoiser kind `{other}`")),
        }
    }
}

impl std::fmt::Display for DenoiserKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Identity => "identity",
            Self::GaussianSmooth => "gaussian_smooth",
            Self::TvChambolle => "tv_chambolle",
            Self::HaarSoft => "haar_soft",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DenoiserSpec {
    pub kind: DenoiserKind,
    pub strength: f64,
    pub inner_iterations: usize,
}

pub const DEFAULT_INNER_ITERATIONS: usize = 30;

impl Default for DenoiserSpec {
    fn default() -> Self {
        Self::tv(0.0)
    }
}

impl DenoiserSpec {
    pub fn new(kind: DenoiserKind, strength: f64, inner_iterations: usize) -> Result<Self> {
        if !(strength >= 0.0) || !strength.is_finite() {
            return domain_err(format!("denoiser strength must be finite and nonnegative, got {strength}"));
        }
        if inner_iterations == 0 {
            return config_err("denoiser needs at least one inner iteration");
        }
        Ok(Self { kind, strength, inner_iterations })
    }

    pub fn identity() -> Self {
        Self { kind: DenoiserKind::Identity, strength: 0.0, inner_iterations: 1 }
    }

    pub fn tv(strength: f64) -> Self {
        Self { kind: DenoiserKind::TvChambolle, strength, inner_iterations: DEFAULT_INNER_ITERATIONS }
    }

    pub fn with_strength(self, strength: f64) -> Self {
        Self { strength, ..self }
    }

    /// Reads `kind`, `strength` and `iters` from `denoiser.*` keys.
    pub fn from_config(cfg: &Config, default: Self) -> Result<Self> {
        let d = cfg.section("denoiser");
        let kind = match d.get("kind") {
            Some(k) => k.parse()?,
            None => default.kind,
        };
        Self::new(kind, d.parse_or("strength", default.strength)?, d.parse_or("iters", default.inner_iterations)?)
    }

    pub fn write_config(&self, cfg: &mut Config) {
        cfg.set("denoiser.kind", self.kind);
        cfg.set("denoiser.strength", self.strength);
        cfg.set("denoiser.iters", self.inner_iterations);
    }
}

fn gaussian_smooth<T: Scalar>(x: &ImageGrid<T>, sigma: f64) -> ImageGrid<T> {
    let radius = (3.0 * sigma).ceil() as usize;
    let mut taps: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let d = i as f64 - radius as f64;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let total: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= total);
    let taps: Vec<T> = taps.into_iter().map(T::of).collect();

    let (h, w) = x.shape();
    let wrap = |i: isize, n: usize| i.rem_euclid(n as isize) as usize;
    let mut rows = vec![T::zero(); h * w];
    for r in 0..h {
        for c in 0..w {
            let mut acc = T::zero();
            for (k, &t) in taps.iter().enumerate() {
                acc += t * x.get(r, wrap(c as isize + k as isize - radius as isize, w));
            }
            rows[r * w + c] = acc;
        }
    }
    let mut out = vec![T::zero(); h * w];
    for r in 0..h {
        for c in 0..w {
            let mut acc = T::zero();
            for (k, &t) in taps.iter().enumerate() {
                acc += t * rows[wrap(r as isize + k as isize - radius as isize, h) * w + c];
            }
            out[r * w + c] = acc;
        }
    }
    ImageGrid::from_vec_unchecked(h, w, out)
}

/// Applies the configured denoiser. Zero strength is the identity for
/// every kind.
pub fn denoise<T: Scalar>(x: &ImageGrid<T>, spec: &DenoiserSpec) -> Result<ImageGrid<T>> {
    if !(spec.strength >= 0.0) || !spec.strength.is_finite() {
        return domain_err(format!("denoiser strength must be finite and nonnegative, got {}", spec.strength));
    }
    if spec.strength == 0.0 {
        return Ok(x.clone());
    }
    let out = match spec.kind {
        DenoiserKind::Identity => x.clone(),
        DenoiserKind::GaussianSmooth => gaussian_smooth(x, spec.strength),
        DenoiserKind::TvChambolle => {
            tv_chambolle(x, T::of(spec.strength), spec.inner_iterations.max(1), T::of(DEFAULT_TV_STEP), None)
        }
        DenoiserKind::HaarSoft => haar_soft(x, T::of(spec.strength)),
    };
    if out.data().iter().any(|v| !v.is_finite()) {
        return domain_err(format!("{} produced a non-finite value", spec.kind));
    }
    Ok(out)
}
