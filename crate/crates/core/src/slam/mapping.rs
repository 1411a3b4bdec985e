use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, Frame, GaussianMap, Pose};
use crate::image::FlowField;
use crate::render::{render, RenderOptions};

use super::config::SlamConfig;
use super::gauss_newton::{solve_pose, GaussNewton};
use super::objective::{Objective, Term};
use super::optimize::{descend, DescentReport, Stepper};
use super::state::{Keyframe, SlamState};
use super::tracking::backproject;

/// Summed blend weight of every Gaussian in the view from `camera`.
pub fn visibility(map: &GaussianMap, camera: &Pose, k: &CameraIntrinsics) -> Vec<f64> {
    let out = render(map, camera, k, &RenderOptions::default().with_contributors());
    out.visibility(map.len())
}

/// Weighted share of the Gaussians visible in `current` that are also visible
/// in `reference`. A Gaussian is visible when its summed weight exceeds
/// `threshold`. An empty view has covisibility 0.
pub fn covisibility(current: &[f64], reference: &[f64], threshold: f64) -> f64 {
    let mut shared = 0.0;
    let mut total = 0.0;
    for (c, r) in current.iter().zip(reference) {
        if *c > threshold {
            total += c;
            if *r > threshold {
                shared += c;
            }
        }
    }
    if total > 0.0 {
        shared / total
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyframeReason {
    /// Enough frames have passed since the last keyframe.
    Cadence,
    /// The view shares too little with the last keyframe.
    Covisibility,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KeyframeDecision {
    pub is_keyframe: bool,
    pub reason: Option<KeyframeReason>,
    pub covisibility: f64,
}

/// Keyframe test for frame `index` tracked at `pose`.
pub fn is_keyframe(
    state: &SlamState,
    index: usize,
    pose: &Pose,
    k: &CameraIntrinsics,
    cfg: &SlamConfig,
) -> KeyframeDecision {
    let Some(last) = state.last_keyframe() else {
        return KeyframeDecision {
            is_keyframe: true,
            reason: Some(KeyframeReason::Cadence),
            covisibility: 0.0,
        };
    };
    let current = visibility(&state.map, pose, k);
    let reference = visibility(&state.map, &state.trajectory[last], k);
    let covis = covisibility(&current, &reference, cfg.visibility_threshold);
    let reason = if index.saturating_sub(last) >= cfg.keyframe_every {
        Some(KeyframeReason::Cadence)
    } else if covis < cfg.covisibility_threshold {
        Some(KeyframeReason::Covisibility)
    } else {
        None
    };
    KeyframeDecision {
        is_keyframe: reason.is_some(),
        reason,
        covisibility: covis,
    }
}

/// Records `frame` as a keyframe and appends it to the window. When the
/// window is full, the member least covisible with the new keyframe leaves
/// first (oldest on ties); its index is returned.
pub fn insert_keyframe(
    state: &mut SlamState,
    frame: &Frame,
    incoming_flow: Option<&FlowField>,
    k: &CameraIntrinsics,
    cfg: &SlamConfig,
) -> Result<Option<usize>> {
    let index = frame.index;
    if index >= state.trajectory.len() {
        return Err(Error::Precondition(format!("frame {index} has no tracked pose")));
    }
    let mut evicted = None;
    if state.window.is_full() {
        let newest = visibility(&state.map, &state.trajectory[index], k);
        let mut worst: Option<(usize, f64)> = None;
        for &m in state.window.members() {
            let vis = visibility(&state.map, &state.trajectory[m], k);
            let c = covisibility(&vis, &newest, cfg.visibility_threshold);
            if worst.is_none_or(|(_, w)| c < w) {
                worst = Some((m, c));
            }
        }
        let (m, _) = worst.expect("full window has members");
        state.window.evict(m)?;
        evicted = Some(m);
    }
    state.window.push(index)?;
    state.keyframes.insert(
        index,
        Keyframe {
            frame: frame.clone(),
            incoming_flow: incoming_flow.cloned(),
        },
    );
    Ok(evicted)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct DensifyReport {
    pub inserted: usize,
    pub pruned: usize,
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    let mid = v.len() / 2;
    let (_, m, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    Some(*m)
}

/// Adds Gaussians where the map fails to explain `frame` seen from `pose`
/// (thin coverage or a large depth error) and drops nearly transparent ones.
pub fn densify_and_prune(
    state: &mut SlamState,
    frame: &Frame,
    pose: &Pose,
    k: &CameraIntrinsics,
    cfg: &SlamConfig,
) -> DensifyReport {
    let out = render(&state.map, pose, k, &RenderOptions::default());
    let covered = |i: usize| out.alpha[i] >= cfg.densify_alpha_threshold;
    let errors: Vec<f64> = (0..frame.depth.len())
        .filter(|&i| frame.depth[i] > 0.0 && covered(i))
        .map(|i| (out.depth[i] - frame.depth[i]).abs())
        .collect();
    let observed: Vec<f64> = frame.depth.as_slice().iter().copied().filter(|d| *d > 0.0).collect();
    let floor = cfg.densify_depth_floor * median(observed).unwrap_or(0.0);
    let threshold = (cfg.densify_depth_factor * median(errors).unwrap_or(0.0)).max(floor);
    let w = k.width;
    let new = backproject(frame, pose, k, cfg, |x, y| {
        let i = y * w + x;
        !covered(i) || (out.depth[i] - frame.depth[i]).abs() > threshold
    });
    let inserted = state.map.extend(new);
    let pruned = state.map.retain(|g| g.opacity >= cfg.prune_opacity);
    DensifyReport { inserted, pruned }
}

/// Joint descent over the window poses (oldest frozen) and the map, with a
/// view term per member and a flow term from each member's predecessor
/// frame where flow is known.
pub fn local_ba(state: &mut SlamState, k: &CameraIntrinsics, cfg: &SlamConfig) -> Result<DescentReport> {
    let members = state.window.members().to_vec();
    if members.len() < 2 {
        return Err(Error::Precondition("bundle adjustment needs two keyframes".into()));
    }
    let mut cameras: Vec<Pose> = members.iter().map(|&m| state.trajectory[m]).collect();
    let mut obj = Objective::new(cfg.weights, cfg.alpha_threshold, cfg.background);
    obj.depth_reg_on_residual = cfg.depth_reg_on_residual;
    let keyframes = &state.keyframes;
    for (slot, &m) in members.iter().enumerate() {
        obj.push(Term::View {
            camera: slot,
            frame: &keyframes[&m].frame,
        });
    }
    for (slot, &m) in members.iter().enumerate() {
        let Some(gt) = keyframes[&m].incoming_flow.as_ref() else {
            continue;
        };
        if m == 0 {
            continue;
        }
        let from = match members.iter().position(|&x| x == m - 1) {
            Some(p) => p,
            None => {
                cameras.push(state.trajectory[m - 1]);
                cameras.len() - 1
            }
        };
        obj.push(Term::Flow { from, to: slot, gt });
    }
    let free: Vec<usize> = (1..members.len()).collect();
    let mut stepper = Stepper::new(free, Some(state.map.len()), &cfg.lr, state.scene_extent);
    stepper.min_scale = cfg.min_scale;
    if cfg.ba_pose_iterations > 0 && cfg.weights.lambda1 > 0.0 {
        let gn = GaussNewton {
            damping: cfg.gn_damping,
            residual_floor: cfg.gn_residual_floor,
        };
        // Each free pose only meets its own view and the flow terms touching
        // it, so the poses can be aligned one at a time.
        for slot in 1..members.len() {
            let mut own = Objective::new(cfg.weights, cfg.alpha_threshold, cfg.background);
            own.depth_reg_on_residual = cfg.depth_reg_on_residual;
            let Term::View { frame, .. } = obj.terms[slot] else {
                unreachable!("view terms come first")
            };
            own.push(Term::View { camera: slot, frame });
            for t in &obj.terms[members.len()..] {
                if matches!(t, Term::Flow { from, to, .. } if *from == slot || *to == slot) {
                    own.push(*t);
                }
            }
            let r = solve_pose(&own, &state.map, &mut cameras, slot, k, &gn, cfg.ba_pose_iterations)?;
            if r.diverged {
                break;
            }
        }
    }
    let report = descend(&obj, &mut state.map, &mut cameras, k, &mut stepper, cfg.iterations_mapping, cfg.lr.final_fraction)?;
    for (slot, &m) in members.iter().enumerate().skip(1) {
        state.trajectory[m] = cameras[slot];
    }
    Ok(report)
}
