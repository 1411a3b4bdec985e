//! Sums of per-view losses over a set of cameras, with gradients for every
//! camera tangent and Gaussian field.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, Frame, GaussianMap, Pose, Tangent};
use crate::image::{DepthMap, FlowField, Image, Mask};
use crate::loss::{loss_depth_reg, loss_flow, loss_refine, loss_rgb, loss_scale_invariant, LossWeights};
use crate::render::{render, render_backward, GaussianGrad, RenderOptions, RenderOutput, Upstream};

/// Flow vectors above this magnitude mark unknown flow.
pub const FLOW_UNKNOWN: f64 = 1e9;

/// One rendered view contributing to an objective. Camera fields index into
/// the pose slice given to [`Objective::evaluate`].
#[derive(Debug, Clone, Copy)]
pub enum Term<'a> {
    /// `l1 * L_rgb + l2 * L_reg + l3 * L_scale` against a frame, all read
    /// where the render is opaque and the observed depth valid.
    View { camera: usize, frame: &'a Frame },
    /// `l4 * L_flow` of the Gaussian flow from `from` to `to` against `gt`.
    Flow { from: usize, to: usize, gt: &'a FlowField },
    /// Refinement loss against a frame; `with_depth` adds the regularization
    /// and scale-invariant terms.
    Refine { camera: usize, frame: &'a Frame, with_depth: bool },
}

#[derive(Debug, Clone)]
pub struct Objective<'a> {
    pub terms: Vec<Term<'a>>,
    pub weights: LossWeights,
    pub alpha_threshold: f64,
    pub depth_reg_on_residual: bool,
    pub background: Vector3<f64>,
}

/// Objective value, gradients and the per-term masks that were used.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub value: f64,
    pub gaussians: Vec<GaussianGrad>,
    pub cameras: Vec<Tangent>,
    pub masks: Vec<Mask>,
    /// Per-term values, in term order.
    pub term_values: Vec<f64>,
}

pub fn flow_valid(f: &[f64; 2]) -> bool {
    f[0].is_finite() && f[1].is_finite() && f[0].abs() <= FLOW_UNKNOWN && f[1].abs() <= FLOW_UNKNOWN
}

impl<'a> Objective<'a> {
    pub fn new(weights: LossWeights, alpha_threshold: f64, background: Vector3<f64>) -> Self {
        Self {
            terms: Vec::new(),
            weights,
            alpha_threshold,
            depth_reg_on_residual: true,
            background,
        }
    }

    pub fn push(&mut self, term: Term<'a>) -> &mut Self {
        self.terms.push(term);
        self
    }

    fn active(&self, term: &Term) -> bool {
        let w = &self.weights;
        match term {
            Term::View { .. } => w.lambda1 > 0.0 || w.lambda2 > 0.0 || w.lambda3 > 0.0,
            Term::Flow { .. } => w.lambda4 > 0.0,
            Term::Refine { .. } => true,
        }
    }

    fn alpha_mask(&self, out: &RenderOutput) -> Mask {
        out.alpha.map(|a| *a > self.alpha_threshold)
    }

    /// Evaluates the objective. `frozen` replaces the masks computed from the
    /// current render (one per term), which makes the value a smooth function
    /// of the parameters for finite-difference checks.
    pub fn evaluate(
        &self,
        map: &GaussianMap,
        cameras: &[Pose],
        k: &CameraIntrinsics,
        frozen: Option<&[Mask]>,
        want_grad: bool,
    ) -> Result<Evaluation> {
        if let Some(f) = frozen {
            if f.len() != self.terms.len() {
                return Err(Error::InvalidArgument("one frozen mask per term is required".into()));
            }
        }
        let mut eval = Evaluation {
            value: 0.0,
            gaussians: if want_grad { vec![GaussianGrad::default(); map.len()] } else { Vec::new() },
            cameras: vec![Tangent::zeros(); cameras.len()],
            masks: Vec::with_capacity(self.terms.len()),
            term_values: Vec::with_capacity(self.terms.len()),
        };
        let camera = |i: usize| {
            cameras
                .get(i)
                .ok_or_else(|| Error::InvalidArgument(format!("term refers to camera {i} of {}", cameras.len())))
        };
        for (ti, term) in self.terms.iter().enumerate() {
            if !self.active(term) {
                eval.masks.push(Mask::new(k.width, k.height));
                eval.term_values.push(0.0);
                continue;
            }
            let mut opts = RenderOptions {
                background: self.background,
                ..Default::default()
            };
            opts.want_contributors = want_grad;
            let (cam_index, flow_index) = match *term {
                Term::View { camera: c, .. } | Term::Refine { camera: c, .. } => (c, None),
                Term::Flow { from, to, .. } => {
                    opts.flow_to = Some(*camera(to)?);
                    (from, Some(to))
                }
            };
            let out = render(map, camera(cam_index)?, k, &opts);
            let mask = match frozen {
                Some(f) => f[ti].clone(),
                None => self.term_mask(term, &out),
            };
            let (value, upstream) = self.term_loss(term, &out, &mask, want_grad)?;
            eval.value += value;
            eval.term_values.push(value);
            eval.masks.push(mask);
            if want_grad {
                let g = render_backward(map, &out, k, &upstream)?;
                for (acc, gi) in eval.gaussians.iter_mut().zip(&g.gaussians) {
                    acc.add_assign(gi);
                }
                eval.cameras[cam_index] += g.camera;
                if let (Some(to), Some(fc)) = (flow_index, g.flow_camera) {
                    eval.cameras[to] += fc;
                }
            }
        }
        Ok(eval)
    }

    fn term_mask(&self, term: &Term, out: &RenderOutput) -> Mask {
        let alpha = self.alpha_mask(out);
        match term {
            Term::View { frame, .. } | Term::Refine { frame, .. } => alpha.and(&frame.depth_mask()),
            Term::Flow { gt, .. } => {
                let valid = gt.map(flow_valid);
                alpha.and(&valid)
            }
        }
    }

    fn depth_terms(
        &self,
        rendered: &DepthMap,
        observed: &DepthMap,
        mask: &Mask,
        grad: &mut DepthMap,
    ) -> Result<f64> {
        let w = &self.weights;
        let mut value = 0.0;
        if w.lambda2 > 0.0 {
            let reg = if self.depth_reg_on_residual {
                let residual = Image::from_fn(rendered.width(), rendered.height(), |x, y| {
                    rendered.get(x, y) - observed.get(x, y)
                });
                loss_depth_reg(&residual, mask, w.w_h, w.w_v)?
            } else {
                loss_depth_reg(rendered, mask, w.w_h, w.w_v)?
            };
            value += w.lambda2 * reg.value;
            for (g, r) in grad.as_mut_slice().iter_mut().zip(reg.grad.as_slice()) {
                *g += w.lambda2 * r;
            }
        }
        if w.lambda3 > 0.0 {
            let s = loss_scale_invariant(rendered, observed, mask)?;
            value += w.lambda3 * s.value;
            for (g, r) in grad.as_mut_slice().iter_mut().zip(s.grad.as_slice()) {
                *g += w.lambda3 * r;
            }
        }
        Ok(value)
    }

    fn term_loss(&self, term: &Term, out: &RenderOutput, mask: &Mask, want_grad: bool) -> Result<(f64, Upstream)> {
        let w = &self.weights;
        let (wd, hd) = out.depth.dims();
        let mut up = Upstream::default();
        let value = match *term {
            Term::View { frame, .. } => {
                let mut value = 0.0;
                if w.lambda1 > 0.0 {
                    let l = loss_rgb(&out.color, &frame.rgb, mask)?;
                    value += w.lambda1 * l.value;
                    up.color = Some(l.grad.map(|g| g.map(|v| v * w.lambda1)));
                }
                let mut dgrad = DepthMap::new(wd, hd);
                value += self.depth_terms(&out.depth, &frame.depth, mask, &mut dgrad)?;
                up.depth = Some(dgrad);
                value
            }
            Term::Flow { gt, .. } => {
                let flow = out.flow.as_ref().expect("flow render");
                let l = loss_flow(flow, gt, mask)?;
                up.flow = Some(l.grad.map(|g| [g[0] * w.lambda4, g[1] * w.lambda4]));
                w.lambda4 * l.value
            }
            Term::Refine { frame, with_depth, .. } => {
                let r = loss_refine(&out.color, &frame.rgb, &out.depth, &frame.depth, mask, w.lambda_dssim)?;
                let mut value = r.value;
                let mut dgrad = r.depth_grad;
                if with_depth {
                    value += self.depth_terms(&out.depth, &frame.depth, mask, &mut dgrad)?;
                }
                up.color = Some(r.rgb_grad);
                up.depth = Some(dgrad);
                value
            }
        };
        if !want_grad {
            up = Upstream::default();
        }
        Ok((value, up))
    }
}
