use nalgebra::{Vector2, Vector3};
use rayon::prelude::*;

use super::splat::{project_internal, Projected};
use super::{kernel, ALPHA_MAX, DEPTH_ALPHA_EPS, K_MAX, Q_MAX, TILE_SIZE, T_MIN};
use crate::geometry::{CameraIntrinsics, GaussianMap, Pose, Z_NEAR};
use crate::image::{DepthMap, FlowField, Image, RgbImage};

#[derive(Debug, Clone)]
pub struct RenderOptions {
    pub background: Vector3<f64>,
    pub tile_size: usize,
    /// Keep per-pixel contributor records (required by the backward pass).
    pub want_contributors: bool,
    /// When set, also composite the Gaussian flow towards this camera pose.
    pub flow_to: Option<Pose>,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            background: Vector3::zeros(),
            tile_size: TILE_SIZE,
            want_contributors: false,
            flow_to: None,
        }
    }
}

impl RenderOptions {
    pub fn with_contributors(mut self) -> Self {
        self.want_contributors = true;
        self
    }

    pub fn with_flow_to(mut self, pose: Pose) -> Self {
        self.flow_to = Some(pose);
        self
    }
}

/// One composited splat at one pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contributor {
    pub gaussian: u32,
    /// Blend weight `alpha * transmittance`.
    pub weight: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct ContributorTable {
    offsets: Vec<usize>,
    entries: Vec<Contributor>,
}

impl ContributorTable {
    pub fn pixel(&self, i: usize) -> &[Contributor] {
        &self.entries[self.offsets[i]..self.offsets[i + 1]]
    }
}

/// Everything a render produced, plus what the backward pass needs.
#[derive(Debug, Clone)]
pub struct RenderOutput {
    pub color: RgbImage,
    /// Alpha-normalized camera-space depth; 0 where nothing was rendered.
    pub depth: DepthMap,
    pub alpha: Image<f64>,
    pub flow: Option<FlowField>,
    pub(crate) camera: Pose,
    pub(crate) flow_camera: Option<Pose>,
    pub(crate) background: Vector3<f64>,
    pub(crate) projected: Vec<Option<Projected>>,
    /// Projected means under `flow_camera` (`None` when behind it).
    pub(crate) flow_means: Vec<Option<(Vector2<f64>, Vector3<f64>)>>,
    pub(crate) contributors: Option<ContributorTable>,
    pub(crate) tile_size: usize,
}

impl RenderOutput {
    pub fn has_contributors(&self) -> bool {
        self.contributors.is_some()
    }

    /// Composited splats at pixel `(x, y)`, front to back.
    pub fn contributors(&self, x: usize, y: usize) -> Option<&[Contributor]> {
        let w = self.color.width();
        self.contributors.as_ref().map(|t| t.pixel(y * w + x))
    }

    pub fn camera(&self) -> &Pose {
        &self.camera
    }

    /// Sum of blend weights per Gaussian over the whole image.
    pub fn visibility(&self, num_gaussians: usize) -> Vec<f64> {
        let mut vis = vec![0.0; num_gaussians];
        if let Some(table) = &self.contributors {
            for c in &table.entries {
                vis[c.gaussian as usize] += c.weight;
            }
        }
        vis
    }
}

pub(crate) struct TileRect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

pub(crate) fn tiles(width: usize, height: usize, tile: usize) -> Vec<TileRect> {
    let tile = tile.max(1);
    let mut out = Vec::new();
    for y0 in (0..height).step_by(tile) {
        for x0 in (0..width).step_by(tile) {
            out.push(TileRect {
                x0,
                y0,
                x1: (x0 + tile).min(width),
                y1: (y0 + tile).min(height),
            });
        }
    }
    out
}

/// Splat indices touching the tile, sorted front to back.
pub(crate) fn bin_tile(order: &[usize], projected: &[Option<Projected>], r: &TileRect) -> Vec<usize> {
    order
        .iter()
        .copied()
        .filter(|&i| {
            let s = &projected[i].as_ref().unwrap().splat;
            let (mx, my, rad) = (s.mean2d.x, s.mean2d.y, s.radius_px);
            mx + rad >= r.x0 as f64
                && mx - rad <= (r.x1 - 1) as f64
                && my + rad >= r.y0 as f64
                && my - rad <= (r.y1 - 1) as f64
        })
        .collect()
}

pub(crate) fn depth_order(projected: &[Option<Projected>]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..projected.len()).filter(|&i| projected[i].is_some()).collect();
    order.sort_by(|&a, &b| {
        let da = projected[a].as_ref().unwrap().splat.depth_cam;
        let db = projected[b].as_ref().unwrap().splat.depth_cam;
        da.total_cmp(&db).then(a.cmp(&b))
    });
    order
}

/// Opacity of a splat at pixel `(px, py)`; `None` outside its kernel support.
#[inline]
pub(crate) fn splat_alpha(p: &Projected, px: f64, py: f64) -> Option<(f64, f64, Vector2<f64>)> {
    let d = Vector2::new(px - p.splat.mean2d.x, py - p.splat.mean2d.y);
    let [a, b, c] = p.conic;
    let q = a * d.x * d.x + 2.0 * b * d.x * d.y + c * d.y * d.y;
    if q >= Q_MAX {
        return None;
    }
    let raw = p.opacity * kernel(q);
    Some((raw.min(ALPHA_MAX), q, d))
}

struct TileResult {
    color: Vec<Vector3<f64>>,
    depth: Vec<f64>,
    alpha: Vec<f64>,
    flow: Vec<Vector2<f64>>,
    counts: Vec<usize>,
    entries: Vec<Contributor>,
}

/// Composite flow at one pixel: blend-weight-normalized mean of the
/// contributors' centre displacements. Contributors whose centre is behind
/// the second camera are dropped and the rest renormalized.
#[inline]
pub(crate) fn composite_flow(
    entries: &[Contributor],
    projected: &[Option<Projected>],
    flow_means: &[Option<(Vector2<f64>, Vector3<f64>)>],
) -> Vector2<f64> {
    let mut surviving = 0.0;
    let mut acc = Vector2::zeros();
    for c in entries {
        let i = c.gaussian as usize;
        if let Some((m1, _)) = &flow_means[i] {
            let m0 = projected[i].as_ref().unwrap().splat.mean2d;
            surviving += c.weight;
            acc += (m1 - m0) * c.weight;
        }
    }
    if surviving > 0.0 {
        acc / surviving
    } else {
        Vector2::zeros()
    }
}

/// Renders the map seen from `camera` (a camera-to-world pose).
pub fn render(
    map: &GaussianMap,
    camera: &Pose,
    k: &CameraIntrinsics,
    opts: &RenderOptions,
) -> RenderOutput {
    let w2c = camera.world_to_camera();
    let projected: Vec<Option<Projected>> = map
        .gaussians()
        .iter()
        .enumerate()
        .map(|(i, g)| project_internal(i, g, &w2c, k))
        .collect();
    let flow_w2c = opts.flow_to.map(|p| p.world_to_camera());
    let flow_means: Vec<Option<(Vector2<f64>, Vector3<f64>)>> = match &flow_w2c {
        Some(q) => map
            .gaussians()
            .iter()
            .zip(&projected)
            .map(|(g, p)| {
                p.as_ref()?;
                let cam = q.apply(&g.center);
                (cam.z > Z_NEAR).then(|| (k.project_camera(&cam), cam))
            })
            .collect(),
        None => Vec::new(),
    };
    let order = depth_order(&projected);
    let rects = tiles(k.width, k.height, opts.tile_size);
    let want_flow = opts.flow_to.is_some();
    let bg = opts.background;

    let results: Vec<TileResult> = rects
        .par_iter()
        .map(|r| {
            let list = bin_tile(&order, &projected, r);
            let n = (r.x1 - r.x0) * (r.y1 - r.y0);
            let mut out = TileResult {
                color: Vec::with_capacity(n),
                depth: Vec::with_capacity(n),
                alpha: Vec::with_capacity(n),
                flow: Vec::with_capacity(if want_flow { n } else { 0 }),
                counts: Vec::with_capacity(n),
                entries: Vec::new(),
            };
            let mut local: Vec<Contributor> = Vec::with_capacity(K_MAX);
            for y in r.y0..r.y1 {
                for x in r.x0..r.x1 {
                    local.clear();
                    let mut t = 1.0;
                    let mut color = Vector3::zeros();
                    let mut zsum = 0.0;
                    for &i in &list {
                        let p = projected[i].as_ref().unwrap();
                        let Some((alpha, _, _)) = splat_alpha(p, x as f64, y as f64) else {
                            continue;
                        };
                        let weight = alpha * t;
                        color += p.color * weight;
                        zsum += p.splat.depth_cam * weight;
                        local.push(Contributor {
                            gaussian: i as u32,
                            weight,
                            alpha,
                        });
                        t *= 1.0 - alpha;
                        if t < T_MIN || local.len() == K_MAX {
                            break;
                        }
                    }
                    let acc: f64 = local.iter().map(|c| c.weight).sum();
                    out.color.push(color + bg * (1.0 - acc));
                    out.depth.push(if acc > DEPTH_ALPHA_EPS { zsum / acc } else { 0.0 });
                    out.alpha.push(acc);
                    if want_flow {
                        out.flow.push(composite_flow(&local, &projected, &flow_means));
                    }
                    if opts.want_contributors {
                        out.counts.push(local.len());
                        out.entries.extend_from_slice(&local);
                    }
                }
            }
            out
        })
        .collect();

    let (width, height) = (k.width, k.height);
    let mut color = RgbImage::new(width, height);
    let mut depth = DepthMap::new(width, height);
    let mut alpha = Image::<f64>::new(width, height);
    let mut flow = want_flow.then(|| FlowField::new(width, height));
    let mut counts = vec![0usize; if opts.want_contributors { width * height } else { 0 }];
    for (r, res) in rects.iter().zip(&results) {
        let mut j = 0;
        for y in r.y0..r.y1 {
            for x in r.x0..r.x1 {
                let pix = y * width + x;
                let c = res.color[j];
                color[pix] = [c.x, c.y, c.z];
                depth[pix] = res.depth[j];
                alpha[pix] = res.alpha[j];
                if let Some(f) = flow.as_mut() {
                    f[pix] = [res.flow[j].x, res.flow[j].y];
                }
                if opts.want_contributors {
                    counts[pix] = res.counts[j];
                }
                j += 1;
            }
        }
    }

    let contributors = opts.want_contributors.then(|| {
        let mut offsets = Vec::with_capacity(width * height + 1);
        offsets.push(0);
        for c in &counts {
            offsets.push(offsets.last().unwrap() + c);
        }
        let mut entries = vec![
            Contributor {
                gaussian: 0,
                weight: 0.0,
                alpha: 0.0
            };
            *offsets.last().unwrap()
        ];
        for (r, res) in rects.iter().zip(&results) {
            let mut src = 0;
            let mut j = 0;
            for y in r.y0..r.y1 {
                for x in r.x0..r.x1 {
                    let pix = y * width + x;
                    let n = res.counts[j];
                    entries[offsets[pix]..offsets[pix] + n]
                        .copy_from_slice(&res.entries[src..src + n]);
                    src += n;
                    j += 1;
                }
            }
        }
        ContributorTable { offsets, entries }
    });

    RenderOutput {
        color,
        depth,
        alpha,
        flow,
        camera: *camera,
        flow_camera: opts.flow_to,
        background: bg,
        projected,
        flow_means,
        contributors,
        tile_size: opts.tile_size,
    }
}

/// Composite Gaussian flow from `camera_t` to `camera_t1`, blended with the
/// weights of the render at `camera_t`.
pub fn render_flow(
    map: &GaussianMap,
    camera_t: &Pose,
    camera_t1: &Pose,
    k: &CameraIntrinsics,
) -> FlowField {
    let opts = RenderOptions::default().with_flow_to(*camera_t1);
    render(map, camera_t, k, &opts).flow.expect("flow requested")
}
