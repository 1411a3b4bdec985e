use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, Frame, Gaussian, Pose};
use crate::geometry::GaussianMap;
use crate::image::FlowField;

use super::config::{PoseSolver, SlamConfig};
use super::gauss_newton::{solve_pose, GaussNewton};
use super::objective::{Objective, Term};
use super::optimize::{descend, DescentReport, Stepper};
use super::state::{Keyframe, KeyframeWindow, SlamState};

/// Outcome of optimizing one frame's pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tracked {
    pub pose: Pose,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub iterations: usize,
}

/// Fraction of valid depth the first frame needs.
const MIN_VALID_DEPTH: f64 = 0.01;

/// Gaussians for every `stride`-th pixel with valid depth that `select`
/// accepts, placed by back-projection from `camera`.
pub(crate) fn backproject(
    frame: &Frame,
    camera: &Pose,
    k: &CameraIntrinsics,
    cfg: &SlamConfig,
    mut select: impl FnMut(usize, usize) -> bool,
) -> Vec<Gaussian> {
    let s = cfg.init_stride;
    let mut out = Vec::new();
    for y in (0..k.height).step_by(s) {
        for x in (0..k.width).step_by(s) {
            let d = *frame.depth.get(x, y);
            if d <= 0.0 || !select(x, y) {
                continue;
            }
            let p = camera.apply(&k.unproject(x as f64, y as f64, d));
            let c = frame.rgb.get(x, y);
            let color = nalgebra::Vector3::new(c[0], c[1], c[2]).map(|v| v.clamp(0.0, 1.0));
            let scale = (d * (s as f64 / k.fx) * 0.5).max(cfg.min_scale);
            out.push(Gaussian {
                center: p,
                scale,
                opacity: cfg.init_opacity,
                color,
            });
        }
    }
    out
}

fn objective<'a>(cfg: &SlamConfig) -> Objective<'a> {
    let mut o = Objective::new(cfg.weights, cfg.alpha_threshold, cfg.background);
    o.depth_reg_on_residual = cfg.depth_reg_on_residual;
    o
}

/// Builds the first map from frame 0 seen from the identity pose.
pub fn initialize(frame0: &Frame, k: &CameraIntrinsics, cfg: &SlamConfig) -> Result<SlamState> {
    cfg.validate()?;
    k.validate()?;
    frame0.validate(k)?;
    if frame0.valid_depth_fraction() < MIN_VALID_DEPTH {
        return Err(Error::Initialization(format!(
            "frame {} has valid depth on {:.2}% of pixels",
            frame0.index,
            100.0 * frame0.valid_depth_fraction()
        )));
    }
    let pose = Pose::identity();
    let gaussians = backproject(frame0, &pose, k, cfg, |_, _| true);
    if gaussians.is_empty() {
        return Err(Error::Initialization("no valid depth on the sampling grid".into()));
    }
    let valid: Vec<f64> = frame0.depth.as_slice().iter().copied().filter(|d| *d > 0.0).collect();
    let scene_extent = valid.iter().sum::<f64>() / valid.len() as f64;
    let mut window = KeyframeWindow::new(cfg.window_size);
    window.push(frame0.index)?;
    let mut keyframes = BTreeMap::new();
    keyframes.insert(
        frame0.index,
        Keyframe {
            frame: frame0.clone(),
            incoming_flow: None,
        },
    );
    Ok(SlamState {
        map: GaussianMap::new(gaussians)?,
        window,
        trajectory: vec![pose],
        keyframes,
        scene_extent,
    })
}

/// Map-only descent against the first keyframe, run before tracking starts.
pub fn map_first_frame(state: &mut SlamState, k: &CameraIntrinsics, cfg: &SlamConfig) -> Result<DescentReport> {
    let Some(&first) = state.keyframes.keys().next() else {
        return Err(Error::Precondition("no keyframe to map".into()));
    };
    let mut obj = objective(cfg);
    obj.push(Term::View {
        camera: 0,
        frame: &state.keyframes[&first].frame,
    });
    let mut cameras = [state.trajectory[first]];
    let mut stepper = Stepper::new(Vec::new(), Some(state.map.len()), &cfg.lr, state.scene_extent);
    stepper.min_scale = cfg.min_scale;
    descend(&obj, &mut state.map, &mut cameras, k, &mut stepper, cfg.iterations_init, cfg.lr.final_fraction)
}

fn finish(frame: usize, report: DescentReport, pose: Pose) -> Result<Tracked> {
    if report.diverged {
        return Err(Error::DivergedTracking {
            frame,
            last_pose: Box::new(pose),
        });
    }
    Ok(Tracked {
        pose,
        initial_loss: report.initial,
        final_loss: report.best,
        iterations: report.iterations,
    })
}

/// Optimizes the pose of `frame` (the frame after the last trajectory entry)
/// with the map held fixed, starting from a constant-velocity prediction.
pub fn track_nonkeyframe(state: &SlamState, frame: &Frame, k: &CameraIntrinsics, cfg: &SlamConfig) -> Result<Tracked> {
    track_from(state, frame, state.predict_next(), k, cfg)
}

/// [`track_nonkeyframe`] from an explicit initial pose. The Gauss-Newton
/// solver needs a photometric weight; without one tracking falls back to Adam.
pub fn track_from(
    state: &SlamState,
    frame: &Frame,
    init: Pose,
    k: &CameraIntrinsics,
    cfg: &SlamConfig,
) -> Result<Tracked> {
    frame.validate(k)?;
    let mut obj = objective(cfg);
    obj.push(Term::View { camera: 0, frame });
    if cfg.tracking_solver == PoseSolver::GaussNewton && cfg.weights.lambda1 > 0.0 {
        let gn = GaussNewton {
            damping: cfg.gn_damping,
            residual_floor: cfg.gn_residual_floor,
        };
        let mut cameras = [init];
        let report = solve_pose(&obj, &state.map, &mut cameras, 0, k, &gn, cfg.iterations_tracking)?;
        return finish(frame.index, report, cameras[0]);
    }
    let mut cameras = [init];
    let mut stepper = Stepper::new(vec![0], None, &cfg.lr, state.scene_extent);
    // The stepper leaves the map alone; descend still wants it mutable.
    let mut map = state.map.clone();
    let report = descend(&obj, &mut map, &mut cameras, k, &mut stepper, cfg.iterations_tracking, cfg.lr.final_fraction)?;
    finish(frame.index, report, cameras[0])
}

/// Jointly optimizes the pose of keyframe `frame`, whose tracked pose is the
/// last trajectory entry, and the map. `incoming_flow` is the optical flow
/// from the previous frame; without it the flow term is left out.
pub fn optimize_keyframe(
    state: &mut SlamState,
    frame: &Frame,
    incoming_flow: Option<&FlowField>,
    k: &CameraIntrinsics,
    cfg: &SlamConfig,
) -> Result<Tracked> {
    frame.validate(k)?;
    let n = state.trajectory.len();
    if n < 2 || frame.index != n - 1 {
        return Err(Error::Precondition(format!(
            "keyframe {} must be the last tracked frame after at least one other",
            frame.index
        )));
    }
    let mut obj = objective(cfg);
    obj.push(Term::View { camera: 1, frame });
    match incoming_flow {
        Some(gt) => {
            obj.push(Term::Flow { from: 0, to: 1, gt });
        }
        None => log::warn!("frame {}: no incoming flow, keyframe objective without flow", frame.index),
    }
    let mut cameras = [state.trajectory[n - 2], state.trajectory[n - 1]];
    let mut stepper = Stepper::new(vec![1], Some(state.map.len()), &cfg.lr, state.scene_extent);
    stepper.min_scale = cfg.min_scale;
    let report = descend(&obj, &mut state.map, &mut cameras, k, &mut stepper, cfg.iterations_tracking, cfg.lr.final_fraction)?;
    let tracked = finish(frame.index, report, cameras[1])?;
    state.trajectory[n - 1] = tracked.pose;
    Ok(tracked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::{DepthMap, RgbImage};

    fn plane_frame(w: usize, h: usize, z: f64) -> Frame {
        let rgb = RgbImage::from_fn(w, h, |x, y| [x as f64 / w as f64, y as f64 / h as f64, 0.5]);
        Frame::new(0, rgb, DepthMap::filled(w, h, z))
    }

    fn k64() -> CameraIntrinsics {
        CameraIntrinsics::new(60.0, 60.0, 31.5, 23.5, 64, 48).unwrap()
    }

    #[test]
    fn plane_initialization() {
        let cfg = SlamConfig::default();
        let state = initialize(&plane_frame(64, 48, 2.0), &k64(), &cfg).unwrap();
        assert_eq!(state.map.len(), 32 * 24);
        assert!(state.map.gaussians().iter().all(|g| (g.center.z - 2.0).abs() < 1e-12));
        assert_eq!(state.trajectory, vec![Pose::identity()]);
        assert!(state.is_keyframe(0));
        assert_eq!(state.window.members(), &[0]);
    }

    #[test]
    fn no_depth_fails() {
        let cfg = SlamConfig::default();
        let err = initialize(&plane_frame(64, 48, 0.0), &k64(), &cfg).unwrap_err();
        assert!(matches!(err, Error::Initialization(_)));
    }

    #[test]
    fn keyframe_needs_previous_pose() {
        let cfg = SlamConfig::default();
        let f = plane_frame(64, 48, 2.0);
        let mut state = initialize(&f, &k64(), &cfg).unwrap();
        assert!(optimize_keyframe(&mut state, &f, None, &k64(), &cfg).is_err());
    }
}
