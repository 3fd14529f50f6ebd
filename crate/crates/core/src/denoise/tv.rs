//! Isotropic total-variation denoising by Chambolle's dual projection.

use crate::image::ImageGrid;
use crate::scalar::Scalar;

pub const DEFAULT_TV_STEP: f64 = 0.25;

/// Forward differences with Neumann boundary: the last column (row) of the
/// horizontal (vertical) gradient is zero.
pub(crate) fn gradient<T: Scalar>(u: &[T], h: usize, w: usize) -> (Vec<T>, Vec<T>) {
    let mut gx = vec![T::zero(); h * w];
    let mut gy = vec![T::zero(); h * w];
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            if c + 1 < w {
                gx[i] = u[i + 1] - u[i];
            }
            if r + 1 < h {
                gy[i] = u[i + w] - u[i];
            }
        }
    }
    (gx, gy)
}

/// Negative adjoint of [`gradient`].
fn divergence<T: Scalar>(px: &[T], py: &[T], h: usize, w: usize) -> Vec<T> {
    let mut d = vec![T::zero(); h * w];
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            let mut v = T::zero();
            if c + 1 < w {
                v += px[i];
            }
            if c > 0 {
                v -= px[i - 1];
            }
            if r + 1 < h {
                v += py[i];
            }
            if r > 0 {
                v -= py[i - w];
            }
            d[i] = v;
        }
    }
    d
}

/// Isotropic total variation `Σ √(∂x² + ∂y²)`.
pub fn total_variation<T: Scalar>(u: &ImageGrid<T>) -> T {
    let (gx, gy) = gradient(u.data(), u.height(), u.width());
    gx.iter().zip(&gy).map(|(&a, &b)| (a * a + b * b).sqrt()).sum()
}

/// `½‖u − x‖² + τ·TV(u)`.
pub fn tv_objective<T: Scalar>(u: &ImageGrid<T>, x: &ImageGrid<T>, tau: T) -> T {
    let fit: T = u.data().iter().zip(x.data()).map(|(&a, &b)| (a - b) * (a - b)).sum();
    T::of(0.5) * fit + tau * total_variation(u)
}

/// Solves `min_u ½‖u − x‖² + τ·TV(u)` with a fixed number of dual steps.
///
/// When `trace` is given, the primal objective after every iteration is
/// appended to it.
pub fn tv_chambolle<T: Scalar>(
    x: &ImageGrid<T>,
    tau: T,
    iterations: usize,
    step: T,
    mut trace: Option<&mut Vec<T>>,
) -> ImageGrid<T> {
    if tau <= T::zero() || iterations == 0 {
        return x.clone();
    }
    let (h, w) = x.shape();
    let n = h * w;
    let inv_tau = T::one() / tau;
    let mut px = vec![T::zero(); n];
    let mut py = vec![T::zero(); n];
    let recover = |px: &[T], py: &[T]| -> ImageGrid<T> {
        let div = divergence(px, py, h, w);
        ImageGrid::from_vec_unchecked(h, w, x.data().iter().zip(&div).map(|(&g, &d)| g - tau * d).collect())
    };
    for _ in 0..iterations {
        let div = divergence(&px, &py, h, w);
        let arg: Vec<T> = div.iter().zip(x.data()).map(|(&d, &g)| d - g * inv_tau).collect();
        let (gx, gy) = gradient(&arg, h, w);
        for i in 0..n {
            let norm = (gx[i] * gx[i] + gy[i] * gy[i]).sqrt();
            let den = T::one() + step * norm;
            px[i] = (px[i] + step * gx[i]) / den;
            py[i] = (py[i] + step * gy[i]) / den;
        }
        if let Some(t) = trace.as_deref_mut() {
            t.push(tv_objective(&recover(&px, &py), x, tau));
        }
    }
    recover(&px, &py)
}
