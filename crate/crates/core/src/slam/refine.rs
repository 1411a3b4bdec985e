use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::eval::psnr;
use crate::geometry::{CameraIntrinsics, GaussianMap, Pose};
use crate::render::{render, RenderOptions};

use super::config::SlamConfig;
use super::objective::{Objective, Term};
use super::optimize::Stepper;
use super::state::SlamState;

/// Per-keyframe PSNR before and after refinement, and the order in which
/// keyframes were visited.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RefineReport {
    pub keyframes: Vec<usize>,
    pub psnr_before: Vec<f64>,
    pub psnr_after: Vec<f64>,
    pub stage1_visits: Vec<usize>,
    pub stage2_visits: Vec<usize>,
}

impl RefineReport {
    pub fn mean_before(&self) -> f64 {
        mean(&self.psnr_before)
    }

    pub fn mean_after(&self) -> f64 {
        mean(&self.psnr_after)
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Position of the lowest PSNR; the first one wins ties.
pub fn worst_view(psnrs: &[f64]) -> Option<usize> {
    psnrs
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (i, &p)| match best {
            Some((_, b)) if b <= p => best,
            _ => Some((i, p)),
        })
        .map(|(i, _)| i)
}

fn view_psnr(map: &GaussianMap, pose: &Pose, rgb: &crate::image::RgbImage, k: &CameraIntrinsics, cfg: &SlamConfig) -> Result<f64> {
    let opts = RenderOptions {
        background: cfg.background,
        ..Default::default()
    };
    psnr(&render(map, pose, k, &opts).color, rgb)
}

/// PSNR of every keyframe rendered from its pose, in keyframe order.
pub fn keyframe_psnrs(state: &SlamState, k: &CameraIntrinsics, cfg: &SlamConfig) -> Result<Vec<f64>> {
    state
        .keyframes
        .iter()
        .map(|(i, kf)| view_psnr(&state.map, &state.trajectory[*i], &kf.frame.rgb, k, cfg))
        .collect()
}

/// Two-stage map refinement with poses held fixed. Stage one repeatedly
/// steps on the keyframe with the lowest cached PSNR using the refinement
/// loss plus the depth terms; stage two steps on uniformly drawn keyframes
/// with the refinement loss alone.
pub fn global_refine(state: &mut SlamState, k: &CameraIntrinsics, cfg: &SlamConfig) -> Result<RefineReport> {
    let keyframes: Vec<usize> = state.keyframe_indices();
    let mut cache = keyframe_psnrs(state, k, cfg)?;
    let mut report = RefineReport {
        keyframes: keyframes.clone(),
        psnr_before: cache.clone(),
        ..Default::default()
    };
    if keyframes.is_empty() || state.map.is_empty() {
        report.psnr_after = cache;
        return Ok(report);
    }
    let mut stepper = Stepper::new(Vec::new(), Some(state.map.len()), &cfg.lr, state.scene_extent);
    stepper.min_scale = cfg.min_scale;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let total = cfg.refine_stage1_iters + cfg.refine_stage2_iters;
    for round in 0..total {
        let stage1 = round < cfg.refine_stage1_iters;
        let slot = if stage1 {
            worst_view(&cache).expect("nonempty")
        } else {
            rng.random_range(0..keyframes.len())
        };
        if stage1 {
            report.stage1_visits.push(keyframes[slot]);
        } else {
            report.stage2_visits.push(keyframes[slot]);
        }
        let index = keyframes[slot];
        let frame = &state.keyframes[&index].frame;
        let pose = state.trajectory[index];
        let mut obj = Objective::new(cfg.weights, cfg.alpha_threshold, cfg.background);
        obj.depth_reg_on_residual = cfg.depth_reg_on_residual;
        obj.push(Term::Refine {
            camera: 0,
            frame,
            with_depth: stage1,
        });
        let mut cameras = [pose];
        let eval = obj.evaluate(&state.map, &cameras, k, None, true)?;
        if !eval.value.is_finite() {
            log::warn!("refinement objective not finite at keyframe {index}; stopping");
            break;
        }
        stepper.apply(&eval, &mut state.map, &mut cameras);
        cache[slot] = view_psnr(&state.map, &pose, &frame.rgb, k, cfg)?;
    }
    report.psnr_after = cache;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worst_view_picks_lowest() {
        assert_eq!(worst_view(&[30.0, 20.0, 40.0]), Some(1));
        assert_eq!(worst_view(&[20.0, 30.0, 40.0]), Some(0));
        assert_eq!(worst_view(&[25.0, 25.0]), Some(0));
        assert_eq!(worst_view(&[]), None);
    }
}
