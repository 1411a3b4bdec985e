//! Scalar objectives with per-pixel gradients, ready to feed the renderer's
//! backward pass.

mod depth;
mod flow;
mod photometric;
mod refine;
mod ssim;

pub use depth::{depth_gradient_difference, loss_depth_reg, loss_scale_invariant};
pub use flow::loss_flow;
pub use photometric::loss_rgb;
pub use refine::{loss_refine, RefineLoss};
pub use ssim::{ssim, ssim_with_grad, SSIM_WINDOW};

use crate::error::{Error, Result};
use crate::image::Image;

/// A loss value with its gradient with respect to the first input.
#[derive(Debug, Clone)]
pub struct Loss<G> {
    pub value: f64,
    pub grad: G,
}

/// Weights of the tracking, keyframe and refinement objectives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    /// Photometric L1.
    pub lambda1: f64,
    /// Depth-gradient regularization.
    pub lambda2: f64,
    /// Scale-invariant log depth.
    pub lambda3: f64,
    /// Gaussian flow against optical flow.
    pub lambda4: f64,
    pub lambda_dssim: f64,
    pub w_h: f64,
    pub w_v: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda1: 0.9,
            lambda2: 0.05,
            lambda3: 0.05,
            lambda4: 0.2,
            lambda_dssim: 0.2,
            w_h: 1.0,
            w_v: 1.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.lambda1,
            self.lambda2,
            self.lambda3,
            self.lambda4,
            self.w_h,
            self.w_v,
        ];
        if all.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidArgument("loss weights must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.lambda_dssim) {
            return Err(Error::InvalidArgument("lambda_dssim must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

pub(crate) fn check_shapes<A, B>(a: &Image<A>, b: &Image<B>, what: &str) -> Result<()> {
    if !a.same_dims(b) {
        return Err(Error::InvalidArgument(format!(
            "{what}: shape {:?} vs {:?}",
            a.dims(),
            b.dims()
        )));
    }
    Ok(())
}
