//! Data-fidelity scores for diagnosing estimates against an observation.

use crate::error::{domain_err, Result};
use crate::image::ImageGrid;
use crate::scalar::Scalar;

/// Poisson negative log-likelihood `Σ (λ − y·ln λ)`, dropping the `ln y!`
/// term, where `λ` is the predicted photon intensity.
pub fn poisson_nll<T: Scalar>(observation: &ImageGrid<T>, intensity: &ImageGrid<T>) -> Result<f64> {
    observation.ensure_same_shape(intensity)?;
    let mut total = 0.0;
    for (i, (&y, &lam)) in observation.data().iter().zip(intensity.data()).enumerate() {
        let lam = lam.to_f64_lossy();
        let y = y.to_f64_lossy();
        if lam <= 0.0 {
            return domain_err(format!("intensity must be positive, pixel {i} is {lam}"));
        }
        if y < 0.0 {
            return domain_err(format!("observation must be nonnegative, pixel {i} is {y}"));
        }
        total += lam - y * lam.ln();
    }
    Ok(total)
}

/// Gaussian negative log-likelihood up to scale: `‖y − λ‖²`.
pub fn gaussian_nll<T: Scalar>(observation: &ImageGrid<T>, intensity: &ImageGrid<T>) -> Result<f64> {
    observation.ensure_same_shape(intensity)?;
    Ok(observation
        .data()
        .iter()
        .zip(intensity.data())
        .map(|(&y, &lam)| {
            let d = y.to_f64_lossy() - lam.to_f64_lossy();
            d * d
        })
        .sum())
}
