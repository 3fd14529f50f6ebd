use std::fmt;
use std::str::FromStr;

use crate::config::Config;
use crate::denoise::{denoise, DenoiserSpec};
use crate::error::{config_err, Error, Result};
use crate::image::{BlurKernel, ImageGrid};
use crate::scalar::Scalar;
use crate::spectral::{precompute_kernel, wiener};
use crate::transforms::{InverseKind, VstConfig};
use crate::tune::{heuristic_schedule, DEFAULT_MU_SCALE, DEFAULT_RATIO};

use super::bank::FilterBank;
use super::fio::{solve_fio, FeatureOrder, FioConfig, HqsSchedule};
use super::vstp::{default_weights, solve_vstp, VstpConfig};
use super::wiener_let::{solve_wiener_let, LetConfig, WeightMode};

pub const DEFAULT_FIO_ITERATIONS: usize = 8;
pub const DEFAULT_VSTP_ITERATIONS: usize = 5;
pub const DEFAULT_WIENER_LAMBDA: f64 = 0.05;
pub const DEFAULT_VSTP_WIENER_LAMBDA: f64 = 0.02;
pub const DEFAULT_VSTP_STRENGTH: f64 = 1.0;
pub const DEFAULT_WIENER_TV_STRENGTH: f64 = 0.3;
pub const DEFAULT_TV_ONLY_STRENGTH: f64 = 0.2;
pub const DEFAULT_LET_LAMBDAS: [f64; 3] = [0.02, 0.06, 0.2];
pub const DEFAULT_LET_THRESHOLD: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SolverKind {
    /// Returns the normalized observation unchanged.
    Identity,
    Wiener,
    /// Denoiser applied to the blurred observation, no deconvolution.
    TvOnly,
    WienerTv,
    Let,
    Vstp,
    Fio,
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Self::Identity),
            "wiener" => Ok(Self::Wiener),
            "tv" | "tv_only" => Ok(Self::TvOnly),
            "wiener_tv" => Ok(Self::WienerTv),
            "let" => Ok(Self::Let),
            "vstp" => Ok(Self::Vstp),
            "fio" => Ok(Self::Fio),
            other => config_err(format!("unknown solver `{other}`")),
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Identity => "identity",
            Self::Wiener => "wiener",
            Self::TvOnly => "tv",
            Self::WienerTv => "wiener_tv",
            Self::Let => "let",
            Self::Vstp => "vstp",
            Self::Fio => "fio",
        })
    }
}

/// What a solver may know about the degradation besides `y` and `H`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveContext {
    pub ppp: f64,
    pub alpha: f64,
}

/// A fully resolved solver: kind plus every parameter.
#[derive(Clone, Debug, PartialEq)]
pub enum SolverSpec {
    Identity,
    Wiener { lambda: f64 },
    TvOnly { denoiser: DenoiserSpec },
    WienerTv { lambda: f64, denoiser: DenoiserSpec },
    Let(LetConfig),
    Vstp(VstpConfig),
    Fio { bank: FilterBank, config: FioConfig },
}

impl SolverSpec {
    /// Resolves `kind` from config keys, filling gaps with defaults that
    /// depend on the photon level and kernel size.
    ///
    /// FIO keys: `fio.iters`, `fio.mu_scale` (final penalty over ppp),
    /// `fio.ratio`, `fio.lambda`, or an explicit `fio.mu` list; plus
    /// `fio.bank`, `fio.feature_shrink`, `fio.order`, `fio.warm_start` and
    /// `denoiser.*`. VSTP keys: `vstp.iters`, `vstp.weights`,
    /// `vstp.wiener_lambda`, `vstp.vst`, `vstp.inverse`. LET keys:
    /// `let.lambdas`, `let.thresholds`, `let.weights`. Wiener-based solvers
    /// read `wiener.lambda`.
    pub fn from_config(kind: SolverKind, cfg: &Config, ppp: f64, kernel_size: usize) -> Result<Self> {
        let wiener_lambda = cfg.parse_or("wiener.lambda", DEFAULT_WIENER_LAMBDA)?;
        Ok(match kind {
            SolverKind::Identity => Self::Identity,
            SolverKind::Wiener => Self::Wiener { lambda: wiener_lambda },
            SolverKind::TvOnly => {
                Self::TvOnly { denoiser: DenoiserSpec::from_config(cfg, DenoiserSpec::tv(DEFAULT_TV_ONLY_STRENGTH))? }
            }
            SolverKind::WienerTv => Self::WienerTv {
                lambda: wiener_lambda,
                denoiser: DenoiserSpec::from_config(cfg, DenoiserSpec::tv(DEFAULT_WIENER_TV_STRENGTH))?,
            },
            SolverKind::Let => {
                let lambdas = cfg.parse_list("let.lambdas")?.unwrap_or_else(|| DEFAULT_LET_LAMBDAS.to_vec());
                let thresholds = match cfg.parse_list("let.thresholds")? {
                    Some(t) => t,
                    None => vec![DEFAULT_LET_THRESHOLD; lambdas.len()],
                };
                Self::Let(LetConfig::new(lambdas, thresholds, cfg.parse_or("let.weights", WeightMode::Oracle)?)?)
            }
            SolverKind::Vstp => {
                let iters = cfg.parse_or("vstp.iters", DEFAULT_VSTP_ITERATIONS)?;
                let inverse = match cfg.get("vstp.inverse") {
                    Some(s) => s.parse::<InverseKind>().map_err(Error::Config)?,
                    None => InverseKind::AsymptoticallyUnbiased,
                };
                Self::Vstp(VstpConfig {
                    weights: cfg.parse_list("vstp.weights")?.unwrap_or_else(|| default_weights(iters)),
                    denoiser: DenoiserSpec::from_config(cfg, DenoiserSpec::tv(DEFAULT_VSTP_STRENGTH))?,
                    wiener_lambda: cfg.parse_or("vstp.wiener_lambda", DEFAULT_VSTP_WIENER_LAMBDA)?,
                    use_vst: cfg.parse_or("vstp.vst", true)?,
                    inverse: VstConfig { inverse_kind: inverse },
                })
            }
            SolverKind::Fio => {
                let f = cfg.section("fio");
                let iters = f.parse_or("iters", DEFAULT_FIO_ITERATIONS)?;
                let heuristic = heuristic_schedule(iters, ppp, kernel_size)?;
                let lambda = f.parse_or("lambda", heuristic.lambda())?;
                let schedule = match f.parse_list::<f64>("mu")? {
                    Some(mu) => HqsSchedule::new(mu, lambda)?,
                    None => {
                        let scale = f.parse_or("mu_scale", DEFAULT_MU_SCALE)?;
                        let ratio = f.parse_or("ratio", DEFAULT_RATIO)?;
                        let mu0 = scale * ppp / ratio.powi(iters as i32 - 1);
                        HqsSchedule::geometric(iters, mu0, ratio, lambda)?
                    }
                };
                let mut config = FioConfig::new(schedule, DenoiserSpec::from_config(cfg, DenoiserSpec::tv(1.0))?);
                config.feature_shrink = f.parse_or("feature_shrink", 0.0)?;
                if !(config.feature_shrink >= 0.0) {
                    return config_err("fio.feature_shrink must be nonnegative");
                }
                config.order = f.parse_or("order", FeatureOrder::Joint)?;
                config.warm_start = f.parse_opt::<f64>("warm_start")?.filter(|w| *w > 0.0);
                Self::Fio { bank: FilterBank::by_name(f.get("bank").unwrap_or("identity"))?, config }
            }
        })
    }

    pub fn kind(&self) -> SolverKind {
        match self {
            Self::Identity => SolverKind::Identity,
            Self::Wiener { .. } => SolverKind::Wiener,
            Self::TvOnly { .. } => SolverKind::TvOnly,
            Self::WienerTv { .. } => SolverKind::WienerTv,
            Self::Let(_) => SolverKind::Let,
            Self::Vstp(_) => SolverKind::Vstp,
            Self::Fio { .. } => SolverKind::Fio,
        }
    }

    /// Outer iterations performed.
    pub fn iterations(&self) -> usize {
        match self {
            Self::Identity => 0,
            Self::Vstp(c) => c.weights.len(),
            Self::Fio { config, .. } => config.schedule.iterations(),
            _ => 1,
        }
    }

    /// Runs the solver on the normalized observation `y`. `oracle` is only
    /// consulted by LET in oracle-weight mode.
    pub fn solve<T: Scalar>(
        &self,
        y: &ImageGrid<T>,
        h: &BlurKernel<T>,
        ctx: SolveContext,
        oracle: Option<&ImageGrid<T>>,
    ) -> Result<ImageGrid<T>> {
        match self {
            Self::Identity => Ok(y.clone()),
            Self::Wiener { lambda } => wiener(y, &precompute_kernel(h, y.height(), y.width())?, T::of(*lambda)),
            Self::TvOnly { denoiser } => denoise(y, denoiser),
            Self::WienerTv { lambda, denoiser } => {
                let w = wiener(y, &precompute_kernel(h, y.height(), y.width())?, T::of(*lambda))?;
                denoise(&w, denoiser)
            }
            Self::Let(c) => Ok(solve_wiener_let(y, h, c, oracle)?.image),
            Self::Vstp(c) => solve_vstp(y, h, ctx.alpha, c),
            Self::Fio { bank, config } => solve_fio(y, h, bank, config),
        }
    }
}
