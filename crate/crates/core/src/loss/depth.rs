use super::{check_shapes, Loss};
use crate::error::Result;
use crate::image::{DepthMap, Mask};

/// Smallest rendered depth fed to the logarithm.
const LOG_DEPTH_FLOOR: f64 = 1e-6;

/// Weighted mean absolute forward difference of `depth`, per direction:
/// `w_h * mean|d(x+1,y) - d(x,y)| + w_v * mean|d(x,y+1) - d(x,y)|`, where each
/// mean runs over sites whose two pixels are both masked. A direction with no
/// valid site contributes 0.
pub fn loss_depth_reg(depth: &DepthMap, mask: &Mask, w_h: f64, w_v: f64) -> Result<Loss<DepthMap>> {
    check_shapes(depth, mask, "loss_depth_reg")?;
    let (w, h) = depth.dims();
    let mut grad = DepthMap::new(w, h);
    let mut value = 0.0;
    for (dx, dy, weight) in [(1, 0, w_h), (0, 1, w_v)] {
        let sites: Vec<(usize, usize)> = (0..h.saturating_sub(dy))
            .flat_map(|y| (0..w.saturating_sub(dx)).map(move |x| (x, y)))
            .filter(|&(x, y)| *mask.get(x, y) && *mask.get(x + dx, y + dy))
            .collect();
        if sites.is_empty() {
            continue;
        }
        let scale = weight / sites.len() as f64;
        let mut sum = 0.0;
        for (x, y) in sites {
            let diff = depth.get(x + dx, y + dy) - depth.get(x, y);
            sum += diff.abs();
            let s = if diff > 0.0 {
                scale
            } else if diff < 0.0 {
                -scale
            } else {
                0.0
            };
            *grad.get_mut(x + dx, y + dy) += s;
            *grad.get_mut(x, y) -= s;
        }
        value += sum * scale;
    }
    Ok(Loss { value, grad })
}

/// Scale-invariant log-depth error
/// `mean(g^2) - mean(g)^2`, `g = log(rendered) - log(target)`, over masked
/// pixels with positive target depth. Rendered depth is floored at 1e-6.
pub fn loss_scale_invariant(rendered: &DepthMap, target: &DepthMap, mask: &Mask) -> Result<Loss<DepthMap>> {
    check_shapes(rendered, target, "loss_scale_invariant")?;
    check_shapes(rendered, mask, "loss_scale_invariant mask")?;
    let mut grad = DepthMap::new(rendered.width(), rendered.height());
    let idx: Vec<usize> = (0..rendered.len())
        .filter(|&i| mask[i] && target[i] > 0.0)
        .collect();
    if idx.is_empty() {
        return Ok(Loss { value: 0.0, grad });
    }
    let n = idx.len() as f64;
    let g: Vec<f64> = idx
        .iter()
        .map(|&i| rendered[i].max(LOG_DEPTH_FLOOR).ln() - target[i].ln())
        .collect();
    let mean = g.iter().sum::<f64>() / n;
    // Centred form of mean(g^2) - mean(g)^2: exact zero for constant g.
    let value = g.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    for (&i, &gi) in idx.iter().zip(&g) {
        if rendered[i] > LOG_DEPTH_FLOOR {
            grad[i] = 2.0 / n * (gi - mean) / rendered[i];
        }
    }
    Ok(Loss { value, grad })
}

/// `sum (grad(rendered) - grad(target))^2 / sites` over forward differences in
/// both directions, sites masked as in [`loss_depth_reg`].
pub fn depth_gradient_difference(rendered: &DepthMap, target: &DepthMap, mask: &Mask) -> Result<Loss<DepthMap>> {
    check_shapes(rendered, target, "depth_gradient_difference")?;
    check_shapes(rendered, mask, "depth_gradient_difference mask")?;
    let (w, h) = rendered.dims();
    let mut sites = Vec::new();
    for (dx, dy) in [(1usize, 0usize), (0, 1)] {
        for y in 0..h.saturating_sub(dy) {
            for x in 0..w.saturating_sub(dx) {
                if *mask.get(x, y) && *mask.get(x + dx, y + dy) {
                    sites.push((x, y, dx, dy));
                }
            }
        }
    }
    let mut grad = DepthMap::new(w, h);
    if sites.is_empty() {
        return Ok(Loss { value: 0.0, grad });
    }
    let inv = 1.0 / sites.len() as f64;
    let mut sum = 0.0;
    for (x, y, dx, dy) in sites {
        let r = (rendered.get(x + dx, y + dy) - rendered.get(x, y)) - (target.get(x + dx, y + dy) - target.get(x, y));
        sum += r * r;
        *grad.get_mut(x + dx, y + dy) += 2.0 * r * inv;
        *grad.get_mut(x, y) -= 2.0 * r * inv;
    }
    Ok(Loss {
        value: sum * inv,
        grad,
    })
}
