use super::{check_shapes, Loss};
use crate::error::Result;
use crate::image::{FlowField, Mask};

/// Mean Euclidean norm of the flow residual over masked pixels.
pub fn loss_flow(rendered: &FlowField, gt: &FlowField, mask: &Mask) -> Result<Loss<FlowField>> {
    check_shapes(rendered, gt, "loss_flow")?;
    check_shapes(rendered, mask, "loss_flow mask")?;
    let mut grad = FlowField::new(rendered.width(), rendered.height());
    let n = mask.count();
    if n == 0 {
        return Ok(Loss { value: 0.0, grad });
    }
    let inv = 1.0 / n as f64;
    let mut sum = 0.0;
    for i in 0..rendered.len() {
        if !mask[i] {
            continue;
        }
        let du = rendered[i][0] - gt[i][0];
        let dv = rendered[i][1] - gt[i][1];
        let norm = du.hypot(dv);
        sum += norm;
        if norm > 0.0 {
            grad[i] = [du / norm * inv, dv / norm * inv];
        }
    }
    Ok(Loss {
        value: sum * inv,
        grad,
    })
}
