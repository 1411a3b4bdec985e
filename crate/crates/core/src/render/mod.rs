//! CPU tile rasterizer for isotropic Gaussians: forward compositing of
//! color, depth, opacity and composite flow, and the matching analytic
//! backward pass.
//!
//! Per pixel, splats are composited front to back by camera-space centre
//! depth. A splat's opacity at pixel offset `d` from its projected mean is
//! `o * k(q)` with `q = d^T cov2d^-1 d`. The kernel `k` is the Gaussian
//! falloff `exp(-q/2)` out to `q = 8`, followed by a cubic taper that reaches
//! zero with zero slope at the `q = 9` cut-off (three standard deviations):
//!
//! ```text
//! k(q) = exp(-4) (1 - t)^2 (1 + 1.5 t),   t = q - 8,   8 < q < 9
//! ```
//!
//! The result is clamped to [`ALPHA_MAX`].

mod backward;
mod forward;
mod splat;

pub use backward::{render_backward, GaussianGrad, PassGradient, Upstream};
pub use forward::{render, render_flow, Contributor, RenderOptions, RenderOutput};
pub use splat::{project_gaussian, Splat2D};

/// Isotropic blur (pixels^2) added to every projected covariance.
pub const BLUR: f64 = 0.3;
/// Per-splat opacity clamp.
pub const ALPHA_MAX: f64 = 0.999;
/// Maximum number of composited splats per pixel.
pub const K_MAX: usize = 32;
/// Compositing stops once transmittance falls below this.
pub const T_MIN: f64 = 1e-4;
/// Mahalanobis cut-off of the splat kernel.
pub const Q_MAX: f64 = 9.0;
/// Default tile edge in pixels.
pub const TILE_SIZE: usize = 16;
/// Accumulated opacity below which rendered depth is reported as 0.
pub const DEPTH_ALPHA_EPS: f64 = 1e-6;

/// Start of the kernel taper.
const Q_TAPER: f64 = 8.0;
const EXP_M4: f64 = 0.018_315_638_888_734_18; // exp(-4)

#[inline]
pub(crate) fn kernel(q: f64) -> f64 {
    if q <= Q_TAPER {
        (-0.5 * q).exp()
    } else if q < Q_MAX {
        let t = q - Q_TAPER;
        EXP_M4 * (1.0 - t) * (1.0 - t) * (1.0 + 1.5 * t)
    } else {
        0.0
    }
}

#[inline]
pub(crate) fn kernel_derivative(q: f64) -> f64 {
    if q <= Q_TAPER {
        -0.5 * (-0.5 * q).exp()
    } else if q < Q_MAX {
        let t = q - Q_TAPER;
        EXP_M4 * (1.0 - t) * (-0.5 - 4.5 * t)
    } else {
        0.0
    }
}


#[cfg(test)]
mod tests_forward;
