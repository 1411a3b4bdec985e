use super::{check_shapes, depth_gradient_difference, loss_rgb, ssim_with_grad};
use crate::error::Result;
use crate::image::{DepthMap, Mask, RgbImage};

/// Refinement objective with gradients for both rendered channels.
#[derive(Debug, Clone)]
pub struct RefineLoss {
    pub value: f64,
    pub rgb_grad: RgbImage,
    pub depth_grad: DepthMap,
}

/// `(1 - lambda_dssim) * L1 + lambda_dssim * (1 - SSIM) + |grad D_hat - grad D|^2`.
pub fn loss_refine(
    rendered_rgb: &RgbImage,
    target_rgb: &RgbImage,
    rendered_depth: &DepthMap,
    target_depth: &DepthMap,
    depth_mask: &Mask,
    lambda_dssim: f64,
) -> Result<RefineLoss> {
    check_shapes(rendered_rgb, rendered_depth, "loss_refine")?;
    let full = Mask::filled(rendered_rgb.width(), rendered_rgb.height(), true);
    let l1 = loss_rgb(rendered_rgb, target_rgb, &full)?;
    let depth = depth_gradient_difference(rendered_depth, target_depth, depth_mask)?;
    let mut value = (1.0 - lambda_dssim) * l1.value + depth.value;
    let mut rgb_grad = l1.grad.map(|g| g.map(|v| v * (1.0 - lambda_dssim)));
    if lambda_dssim > 0.0 {
        let (s, g) = ssim_with_grad(rendered_rgb, target_rgb)?;
        value += lambda_dssim * (1.0 - s);
        for (out, gs) in rgb_grad.as_mut_slice().iter_mut().zip(g.as_slice()) {
            for c in 0..3 {
                out[c] -= lambda_dssim * gs[c];
            }
        }
    }
    Ok(RefineLoss {
        value,
        rgb_grad,
        depth_grad: depth.grad,
    })
}
