use rustfft::num_complex::Complex;

use crate::error::{config_err, shape_err, Result};
use crate::image::ImageGrid;
use crate::scalar::Scalar;
use crate::spectral::{apply_transfer, stencil_spectrum, Spectrum};

/// Guard on the aggregation denominator `Σ|F_i|²`.
pub const AGGREGATION_EPS: f64 = 1e-8;

/// Small convolution stencil; `anchor` is the tap placed at the origin.
#[derive(Clone, Debug, PartialEq)]
pub struct Stencil {
    pub rows: usize,
    pub cols: usize,
    pub taps: Vec<f64>,
    pub anchor: (usize, usize),
}

impl Stencil {
    pub fn new(rows: usize, cols: usize, taps: Vec<f64>, anchor: (usize, usize)) -> Result<Self> {
        if rows == 0 || cols == 0 || taps.len() != rows * cols || anchor.0 >= rows || anchor.1 >= cols {
            return shape_err(format!("inconsistent {rows}x{cols} stencil with {} taps", taps.len()));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return shape_err("stencil taps must be finite");
        }
        Ok(Self { rows, cols, taps, anchor })
    }

    pub fn identity() -> Self {
        Self { rows: 1, cols: 1, taps: vec![1.0], anchor: (0, 0) }
    }

    /// `x[r, c+1] − x[r, c]`.
    pub fn forward_dx() -> Self {
        Self { rows: 1, cols: 2, taps: vec![1.0, -1.0], anchor: (0, 1) }
    }

    /// `x[r+1, c] − x[r, c]`.
    pub fn forward_dy() -> Self {
        Self { rows: 2, cols: 1, taps: vec![1.0, -1.0], anchor: (1, 0) }
    }

    pub fn is_identity(&self) -> bool {
        let at_anchor = self.anchor.0 * self.cols + self.anchor.1;
        self.taps.iter().enumerate().all(|(i, &t)| if i == at_anchor { t == 1.0 } else { t == 0.0 })
    }

    pub fn spectrum<T: Scalar>(&self, height: usize, width: usize) -> Result<Spectrum<T>> {
        let taps: Vec<T> = self.taps.iter().map(|&t| T::of(t)).collect();
        stencil_spectrum(&taps, self.rows, self.cols, self.anchor, height, width)
    }
}

/// Linear feature extractors `{F_i}` used by the feature-space solver.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterBank {
    name: String,
    stencils: Vec<Stencil>,
}

impl FilterBank {
    pub fn new(name: impl Into<String>, stencils: Vec<Stencil>) -> Result<Self> {
        if stencils.is_empty() {
            return config_err("filter bank must contain at least one stencil");
        }
        Ok(Self { name: name.into(), stencils })
    }

    pub fn identity() -> Self {
        Self { name: "identity".into(), stencils: vec![Stencil::identity()] }
    }

    /// Identity plus horizontal and vertical first differences.
    pub fn deriv3() -> Self {
        Self { name: "deriv3".into(), stencils: vec![Stencil::identity(), Stencil::forward_dx(), Stencil::forward_dy()] }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "identity" => Ok(Self::identity()),
            "deriv3" | "derivative" => Ok(Self::deriv3()),
            other => config_err(format!("unknown filter bank `{other}`")),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn count(&self) -> usize {
        self.stencils.len()
    }

    pub fn stencils(&self) -> &[Stencil] {
        &self.stencils
    }

    pub fn includes_identity(&self) -> bool {
        self.stencils.iter().any(Stencil::is_identity)
    }

    pub fn spectra<T: Scalar>(&self, height: usize, width: usize) -> Result<BankSpectra<T>> {
        let transfers = self.stencils.iter().map(|s| s.spectrum(height, width)).collect::<Result<Vec<Spectrum<T>>>>()?;
        let eps = T::of(AGGREGATION_EPS);
        let mut inv_power = vec![T::zero(); height * width];
        for t in &transfers {
            for (acc, b) in inv_power.iter_mut().zip(t.bins()) {
                *acc += b.norm_sqr();
            }
        }
        inv_power.iter_mut().for_each(|p| *p = T::one() / p.max(eps));
        let identity = self.stencils.iter().map(Stencil::is_identity).collect();
        Ok(BankSpectra { height, width, transfers, inv_power, identity })
    }
}

/// Bank transfer functions precomputed for one image shape.
#[derive(Clone, Debug)]
pub struct BankSpectra<T: Scalar> {
    height: usize,
    width: usize,
    transfers: Vec<Spectrum<T>>,
    inv_power: Vec<T>,
    identity: Vec<bool>,
}

impl<T: Scalar> BankSpectra<T> {
    pub fn count(&self) -> usize {
        self.transfers.len()
    }

    pub fn is_identity(&self, i: usize) -> bool {
        self.identity[i]
    }

    /// `F_i x` for every stencil.
    pub fn features(&self, x: &ImageGrid<T>) -> Result<Vec<ImageGrid<T>>> {
        self.transfers
            .iter()
            .zip(&self.identity)
            .map(|(t, &id)| if id { Ok(x.clone()) } else { apply_transfer(x, t) })
            .collect()
    }

    /// Least-squares image for the features: `argmin_x Σ‖F_i x − z_i‖²`.
    pub fn aggregate(&self, z: &[ImageGrid<T>]) -> Result<ImageGrid<T>> {
        if z.len() != self.count() {
            return shape_err(format!("{} features for a bank of {}", z.len(), self.count()));
        }
        let mut acc = vec![Complex::new(T::zero(), T::zero()); self.height * self.width];
        for (zi, t) in z.iter().zip(&self.transfers) {
            if zi.shape() != (self.height, self.width) {
                return shape_err(format!("feature is {:?}, bank spectra are {:?}", zi.shape(), (self.height, self.width)));
            }
            let s = Spectrum::of(zi);
            for ((a, v), f) in acc.iter_mut().zip(s.bins()).zip(t.bins()) {
                *a += f.conj() * *v;
            }
        }
        for (a, &p) in acc.iter_mut().zip(&self.inv_power) {
            *a *= p;
        }
        Spectrum::from_bins(self.height, self.width, acc)?.to_image()
    }
}

/// Fourier-domain least-squares aggregation of bank features.
pub fn feature_aggregate<T: Scalar>(z: &[ImageGrid<T>], bank: &FilterBank) -> Result<ImageGrid<T>> {
    let Some(first) = z.first() else {
        return shape_err("no features to aggregate");
    };
    let (h, w) = first.shape();
    bank.spectra(h, w)?.aggregate(z)
}
