use nalgebra::{Vector2, Vector3};
use rayon::prelude::*;

use super::forward::{bin_tile, depth_order, splat_alpha, tiles, RenderOutput};
use super::kernel;
use super::kernel_derivative;
use super::splat::{jjt, jjt_gradients, projection_jacobian};
use super::{ALPHA_MAX, DEPTH_ALPHA_EPS};
use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, GaussianMap, Tangent};
use crate::image::{DepthMap, FlowField, Image, RgbImage};

/// Per-pixel loss gradients with respect to each rendered channel.
#[derive(Debug, Clone, Default)]
pub struct Upstream {
    pub color: Option<RgbImage>,
    pub depth: Option<DepthMap>,
    pub alpha: Option<Image<f64>>,
    pub flow: Option<FlowField>,
}

impl Upstream {
    pub fn is_empty(&self) -> bool {
        self.color.is_none() && self.depth.is_none() && self.alpha.is_none() && self.flow.is_none()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GaussianGrad {
    pub center: Vector3<f64>,
    pub scale: f64,
    pub opacity: f64,
    pub color: Vector3<f64>,
}

impl GaussianGrad {
    pub fn add_assign(&mut self, other: &GaussianGrad) {
        self.center += other.center;
        self.scale += other.scale;
        self.opacity += other.opacity;
        self.color += other.color;
    }

    pub fn norm_squared(&self) -> f64 {
        self.center.norm_squared()
            + self.scale * self.scale
            + self.opacity * self.opacity
            + self.color.norm_squared()
    }
}

/// Gradients of one render pass.
#[derive(Debug, Clone)]
pub struct PassGradient {
    pub gaussians: Vec<GaussianGrad>,
    /// Tangent gradient of the rendering camera.
    pub camera: Tangent,
    /// Tangent gradient of the flow target camera, when flow was rendered.
    pub flow_camera: Option<Tangent>,
}

/// Screen-space gradient accumulators for one splat.
#[derive(Debug, Clone, Copy, Default)]
struct SplatAcc {
    mean: Vector2<f64>,
    cov: [f64; 3],
    depth: f64,
    color: Vector3<f64>,
    opacity: f64,
    flow_mean: Vector2<f64>,
}

impl SplatAcc {
    fn add(&mut self, o: &SplatAcc) {
        self.mean += o.mean;
        for i in 0..3 {
            self.cov[i] += o.cov[i];
        }
        self.depth += o.depth;
        self.color += o.color;
        self.opacity += o.opacity;
        self.flow_mean += o.flow_mean;
    }
}

fn check_dims<P>(img: &Option<Image<P>>, k: &CameraIntrinsics, what: &str) -> Result<()> {
    if let Some(i) = img {
        if i.dims() != (k.width, k.height) {
            return Err(Error::InvalidArgument(format!("upstream {what} has wrong size")));
        }
    }
    Ok(())
}

/// Exact gradients of `sum_pixels upstream . channels` with respect to every
/// Gaussian field and to the tangent of each camera taking part in `forward`.
pub fn render_backward(
    map: &GaussianMap,
    forward: &RenderOutput,
    k: &CameraIntrinsics,
    upstream: &Upstream,
) -> Result<PassGradient> {
    let Some(table) = forward.contributors.as_ref() else {
        return Err(Error::Precondition(
            "backward pass needs a forward render with contributor records".into(),
        ));
    };
    if forward.projected.len() != map.len() {
        return Err(Error::Precondition(
            "map changed since the forward pass".into(),
        ));
    }
    check_dims(&upstream.color, k, "color")?;
    check_dims(&upstream.depth, k, "depth")?;
    check_dims(&upstream.alpha, k, "alpha")?;
    check_dims(&upstream.flow, k, "flow")?;
    if upstream.flow.is_some() && forward.flow_camera.is_none() {
        return Err(Error::Precondition("flow gradient given for a render without flow".into()));
    }

    let n = map.len();
    let projected = &forward.projected;
    let flow_means = &forward.flow_means;
    let has_flow = forward.flow_camera.is_some();
    let bg = forward.background;
    let width = k.width;
    let order = depth_order(projected);
    let rects = tiles(k.width, k.height, forward.tile_size);

    // Per tile: accumulate into tile-local slots, reduced afterwards in tile order.
    let partials: Vec<(Vec<usize>, Vec<SplatAcc>)> = rects
        .par_iter()
        .map(|r| {
            let list = bin_tile(&order, projected, r);
            let mut slot = std::collections::HashMap::with_capacity(list.len());
            for (s, &i) in list.iter().enumerate() {
                slot.insert(i as u32, s);
            }
            let mut acc = vec![SplatAcc::default(); list.len()];
            let mut gw = Vec::new();
            let mut trans = Vec::new();
            for y in r.y0..r.y1 {
                for x in r.x0..r.x1 {
                    let pix = y * width + x;
                    let entries = table.pixel(pix);
                    if entries.is_empty() {
                        continue;
                    }
                    let g_color = upstream
                        .color
                        .as_ref()
                        .map(|c| Vector3::from(c[pix]))
                        .unwrap_or_else(Vector3::zeros);
                    let g_depth = upstream.depth.as_ref().map(|d| d[pix]).unwrap_or(0.0);
                    let g_alpha = upstream.alpha.as_ref().map(|a| a[pix]).unwrap_or(0.0);
                    let g_flow = upstream
                        .flow
                        .as_ref()
                        .map(|f| Vector2::from(f[pix]))
                        .unwrap_or_else(Vector2::zeros);

                    let total: f64 = entries.iter().map(|c| c.weight).sum();
                    let depth_active = total > DEPTH_ALPHA_EPS && g_depth != 0.0;
                    let depth = if depth_active {
                        entries
                            .iter()
                            .map(|c| c.weight * projected[c.gaussian as usize].as_ref().unwrap().splat.depth_cam)
                            .sum::<f64>()
                            / total
                    } else {
                        0.0
                    };

                    // Flow normalisation terms.
                    let mut surviving = 0.0;
                    let mut flow_sum = Vector2::zeros();
                    if has_flow {
                        for c in entries {
                            let i = c.gaussian as usize;
                            if let Some((m1, _)) = &flow_means[i] {
                                let m0 = projected[i].as_ref().unwrap().splat.mean2d;
                                surviving += c.weight;
                                flow_sum += (m1 - m0) * c.weight;
                            }
                        }
                    }
                    let flow_active = has_flow && surviving > 0.0;
                    let flow_mean = if flow_active {
                        flow_sum / surviving
                    } else {
                        Vector2::zeros()
                    };

                    gw.clear();
                    trans.clear();
                    let mut t = 1.0;
                    for c in entries {
                        let i = c.gaussian as usize;
                        let p = projected[i].as_ref().unwrap();
                        let s = slot[&c.gaussian];
                        let mut g = g_color.dot(&(p.color - bg)) + g_alpha;
                        acc[s].color += g_color * c.weight;
                        if depth_active {
                            g += g_depth * (p.splat.depth_cam - depth) / total;
                            acc[s].depth += g_depth * c.weight / total;
                        }
                        if flow_active {
                            if let Some((m1, _)) = &flow_means[i] {
                                let f = m1 - p.splat.mean2d;
                                g += g_flow.dot(&(f - flow_mean)) / surviving;
                                let gf = g_flow * (c.weight / surviving);
                                acc[s].flow_mean += gf;
                                acc[s].mean -= gf;
                            }
                        }
                        gw.push(g);
                        trans.push(t);
                        t *= 1.0 - c.alpha;
                    }

                    // Reverse sweep: dL/dalpha_i = T_i g_i - sum_{j>i} g_j w_j / (1 - alpha_i).
                    let mut behind = 0.0;
                    for (j, c) in entries.iter().enumerate().rev() {
                        let i = c.gaussian as usize;
                        let p = projected[i].as_ref().unwrap();
                        let d_alpha = trans[j] * gw[j] - behind / (1.0 - c.alpha);
                        behind += gw[j] * c.weight;
                        let (_, q, d) = splat_alpha(p, x as f64, y as f64).unwrap();
                        let raw = p.opacity * kernel(q);
                        if raw >= ALPHA_MAX {
                            continue;
                        }
                        let s = slot[&c.gaussian];
                        acc[s].opacity += d_alpha * kernel(q);
                        let g_q = d_alpha * p.opacity * kernel_derivative(q);
                        let [a, b, cc] = p.conic;
                        let u = Vector2::new(a * d.x + b * d.y, b * d.x + cc * d.y);
                        // q = d^T C^-1 d with d = pixel - mean.
                        acc[s].mean -= u * (2.0 * g_q);
                        acc[s].cov[0] -= g_q * u.x * u.x;
                        acc[s].cov[1] -= g_q * 2.0 * u.x * u.y;
                        acc[s].cov[2] -= g_q * u.y * u.y;
                    }
                }
            }
            (list, acc)
        })
        .collect();

    let mut screen = vec![SplatAcc::default(); n];
    for (list, acc) in &partials {
        for (&i, a) in list.iter().zip(acc) {
            screen[i].add(a);
        }
    }

    let w2c = forward.camera.world_to_camera();
    let r_view = *w2c.rotation();
    let flow_w2c = forward.flow_camera.map(|p| p.world_to_camera());
    let mut gaussians = vec![GaussianGrad::default(); n];
    let mut cam_grad = Tangent::zeros();
    let mut flow_grad = Tangent::zeros();
    for (i, g) in map.gaussians().iter().enumerate() {
        let Some(p) = &projected[i] else { continue };
        let sa = &screen[i];
        let cam = p.cam;
        let jac = projection_jacobian(k, &cam);
        let s2 = g.scale * g.scale;
        let jj = jjt(k, &cam);
        let djj = jjt_gradients(k, &cam);
        let mut g_cam = jac.transpose() * sa.mean + Vector3::new(0.0, 0.0, sa.depth);
        for (d, c) in djj.iter().zip(&sa.cov) {
            g_cam += d * (s2 * c);
        }
        let out = &mut gaussians[i];
        out.scale = 2.0 * g.scale * (sa.cov[0] * jj[0] + sa.cov[1] * jj[1] + sa.cov[2] * jj[2]);
        out.opacity = sa.opacity;
        out.color = sa.color;
        out.center = r_view.transpose() * g_cam;
        let rot = cam.cross(&g_cam);
        cam_grad += Tangent::new(rot.x, rot.y, rot.z, g_cam.x, g_cam.y, g_cam.z);

        if let (Some(q), Some((_, cam1))) = (&flow_w2c, &flow_means.get(i).copied().flatten()) {
            if sa.flow_mean != Vector2::zeros() {
                let jac1 = projection_jacobian(k, cam1);
                let g_cam1 = jac1.transpose() * sa.flow_mean;
                out.center += q.rotation().transpose() * g_cam1;
                let rot1 = cam1.cross(&g_cam1);
                flow_grad += Tangent::new(rot1.x, rot1.y, rot1.z, g_cam1.x, g_cam1.y, g_cam1.z);
            }
        }
    }

    Ok(PassGradient {
        gaussians,
        camera: cam_grad,
        flow_camera: has_flow.then_some(flow_grad),
    })
}
