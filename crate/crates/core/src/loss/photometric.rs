use super::{check_shapes, Loss};
use crate::error::Result;
use crate::image::{Mask, RgbImage};

/// Mean absolute error over masked pixels and all three channels.
pub fn loss_rgb(rendered: &RgbImage, target: &RgbImage, mask: &Mask) -> Result<Loss<RgbImage>> {
    check_shapes(rendered, target, "loss_rgb")?;
    check_shapes(rendered, mask, "loss_rgb mask")?;
    let mut grad = RgbImage::new(rendered.width(), rendered.height());
    let n = 3 * mask.count();
    if n == 0 {
        return Ok(Loss { value: 0.0, grad });
    }
    let inv = 1.0 / n as f64;
    let mut sum = 0.0;
    for i in 0..rendered.len() {
        if !mask[i] {
            continue;
        }
        for c in 0..3 {
            let r = rendered[i][c] - target[i][c];
            sum += r.abs();
            grad[i][c] = if r > 0.0 {
                inv
            } else if r < 0.0 {
                -inv
            } else {
                0.0
            };
        }
    }
    Ok(Loss {
        value: sum * inv,
        grad,
    })
}
