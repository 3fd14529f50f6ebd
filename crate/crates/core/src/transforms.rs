//! Anscombe variance-stabilizing transform for Poisson counts.

use crate::error::{domain_err, Result};
use crate::image::ImageGrid;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum InverseKind {
    /// Exact algebraic inverse `(t/2)² − 3/8`.
    #[default]
    Algebraic,
    /// `(t/2)² − 1/8`, removing the leading-order bias of the algebraic inverse.
    AsymptoticallyUnbiased,
}

impl std::str::FromStr for InverseKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "algebraic" => Ok(Self::Algebraic),
            "asymptotically_unbiased" | "unbiased" => Ok(Self::AsymptoticallyUnbiased),
            other => Err(format!("unknown inverse kind `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct VstConfig {
    pub inverse_kind: InverseKind,
}

/// `2·√(v + 3/8)` applied elementwise; counts must be nonnegative.
pub fn anscombe<T: Scalar>(counts: &ImageGrid<T>) -> Result<ImageGrid<T>> {
    if let Some(i) = counts.data().iter().position(|&v| v < T::zero()) {
        return domain_err(format!("Anscombe input must be nonnegative, pixel {i} is {}", counts.data()[i]));
    }
    let offset = T::of(0.375);
    let two = T::of(2.0);
    Ok(counts.map(|v| two * (v + offset).sqrt()))
}

/// Inverse transform, clamped to nonnegative counts.
pub fn inverse_anscombe<T: Scalar>(stabilized: &ImageGrid<T>, config: VstConfig) -> ImageGrid<T> {
    let offset = T::of(match config.inverse_kind {
        InverseKind::Algebraic => 0.375,
        InverseKind::AsymptoticallyUnbiased => 0.125,
    });
    let half = T::of(0.5);
    stabilized.map(|t| {
        let s = (t * half).max(T::zero());
        (s * s - offset).max(T::zero())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::poisson_variate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn poisson_image(lambda: f64, n: usize, seed: u64) -> ImageGrid<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ImageGrid::new(1, n, (0..n).map(|_| poisson_variate(lambda, &mut rng) as f64).collect()).unwrap()
    }

    fn std_dev(img: &ImageGrid<f64>) -> f64 {
        let m = img.mean();
        (img.data().iter().map(|v| (v - m).powi(2)).sum::<f64>() / (img.len() - 1) as f64).sqrt()
    }

    #[test]
    fn zero_maps_to_offset() {
        let out = anscombe(&ImageGrid::<f64>::zeros(1, 1)).unwrap();
        assert!((out.get(0, 0) - 2.0 * 0.375f64.sqrt()).abs() < 1e-15);
        assert!((out.get(0, 0) - 1.224745).abs() < 1e-6);
        assert_eq!(inverse_anscombe(&out, VstConfig::default()).get(0, 0), 0.0);
    }

    #[test]
    fn rejects_negative() {
        assert!(anscombe(&ImageGrid::new(1, 1, vec![-1e-3]).unwrap()).is_err());
    }

    #[test]
    fn algebraic_round_trip() {
        let v = ImageGrid::<f64>::new(1, 6, vec![0.0, 0.1, 1.0, 3.5, 40.0, 1234.5]).unwrap();
        let back = inverse_anscombe(&anscombe(&v).unwrap(), VstConfig::default());
        for (a, b) in v.data().iter().zip(back.data()) {
            assert!((a - b).abs() < 1e-12 * a.max(1.0));
        }
    }

    #[test]
    fn monotone() {
        let v = ImageGrid::new(1, 5, vec![0.0, 0.5, 1.0, 2.0, 100.0]).unwrap();
        let t = anscombe(&v).unwrap();
        assert!(t.data().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn stabilizes_variance() {
        for (lam, seed) in [(10.0, 1), (20.0, 2), (40.0, 3), (80.0, 4)] {
            let s = std_dev(&anscombe(&poisson_image(lam, 100_000, seed)).unwrap());
            assert!((0.9..=1.1).contains(&s), "λ={lam}: std {s}");
        }
        let s = std_dev(&anscombe(&poisson_image(20.0, 100_000, 9)).unwrap());
        assert!((0.95..=1.05).contains(&s));
    }

    /// The bias shows up when inverting a denoised (mean) value; the
    /// transformed-domain sample mean stands in for an ideal denoiser.
    #[test]
    fn unbiased_inverse_is_closer() {
        let y = poisson_image(10.0, 100_000, 5);
        let t = anscombe(&y).unwrap();
        let ideal = ImageGrid::filled(1, 1, t.mean());
        let alg = inverse_anscombe(&ideal, VstConfig { inverse_kind: InverseKind::Algebraic }).get(0, 0);
        let unb = inverse_anscombe(&ideal, VstConfig { inverse_kind: InverseKind::AsymptoticallyUnbiased }).get(0, 0);
        assert!((unb - 10.0).abs() < (alg - 10.0).abs(), "alg {alg} unb {unb}");
    }
}
