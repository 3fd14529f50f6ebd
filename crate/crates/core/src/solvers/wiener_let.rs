use nalgebra::{DMatrix, DVector};

use crate::denoise::haar_soft;
use crate::error::{config_err, Error, Result};
use crate::image::{BlurKernel, ImageGrid};
use crate::scalar::Scalar;
use crate::spectral::{precompute_kernel, wiener};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum WeightMode {
    /// Least-squares fit to a reference image.
    Oracle,
    /// Uniform `1/K` weights.
    #[default]
    Fixed,
}

impl std::str::FromStr for WeightMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oracle" => Ok(Self::Oracle),
            "fixed" => Ok(Self::Fixed),
            other => config_err(format!("unknown weight mode `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LetConfig {
    /// Wiener regularizers, strictly increasing.
    pub lambdas: Vec<f64>,
    /// Haar threshold per branch.
    pub thresholds: Vec<f64>,
    pub weight_mode: WeightMode,
}

impl LetConfig {
    pub fn new(lambdas: Vec<f64>, thresholds: Vec<f64>, weight_mode: WeightMode) -> Result<Self> {
        if lambdas.is_empty() || lambdas.len() != thresholds.len() {
            return config_err(format!("{} regularizers vs {} thresholds", lambdas.len(), thresholds.len()));
        }
        if lambdas.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
            return config_err("Wiener regularizers must be positive");
        }
        if lambdas.windows(2).any(|w| w[1] <= w[0]) {
            return config_err("Wiener regularizers must be strictly increasing");
        }
        if thresholds.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
            return config_err("thresholds must be nonnegative");
        }
        Ok(Self { lambdas, thresholds, weight_mode })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LetEstimate<T> {
    pub image: ImageGrid<T>,
    pub weights: Vec<f64>,
}

/// Bank of Wiener deconvolutions, each followed by Haar shrinkage, combined
/// linearly.
pub fn solve_wiener_let<T: Scalar>(
    y: &ImageGrid<T>,
    h: &BlurKernel<T>,
    cfg: &LetConfig,
    oracle: Option<&ImageGrid<T>>,
) -> Result<LetEstimate<T>> {
    let hk = precompute_kernel(h, y.height(), y.width())?;
    let branches = cfg
        .lambdas
        .iter()
        .zip(&cfg.thresholds)
        .map(|(&l, &t)| Ok(haar_soft(&wiener(y, &hk, T::of(l))?, T::of(t))))
        .collect::<Result<Vec<_>>>()?;
    let weights = match (cfg.weight_mode, oracle) {
        (WeightMode::Fixed, _) => vec![1.0 / branches.len() as f64; branches.len()],
        (WeightMode::Oracle, None) => return config_err("oracle weights need a reference image"),
        (WeightMode::Oracle, Some(x)) => {
            y.ensure_same_shape(x)?;
            least_squares_weights(&branches, x)?
        }
    };
    let mut acc = vec![0.0f64; y.len()];
    for (b, &w) in branches.iter().zip(&weights) {
        for (a, &v) in acc.iter_mut().zip(b.data()) {
            *a += w * v.to_f64_lossy();
        }
    }
    let image = ImageGrid::new(y.height(), y.width(), acc.into_iter().map(T::of).collect())?;
    Ok(LetEstimate { image, weights })
}

fn least_squares_weights<T: Scalar>(branches: &[ImageGrid<T>], target: &ImageGrid<T>) -> Result<Vec<f64>> {
    let n = target.len();
    let a = DMatrix::from_fn(n, branches.len(), |i, j| branches[j].data()[i].to_f64_lossy());
    let b = DVector::from_iterator(n, target.data().iter().map(|v| v.to_f64_lossy()));
    let sol = a.svd(true, true).solve(&b, 1e-12).map_err(|e| Error::Singular(format!("LET weight fit: {e}")))?;
    Ok(sol.iter().copied().collect())
}
