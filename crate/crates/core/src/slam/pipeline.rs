use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::eval::Trajectory;
use crate::geometry::{CameraIntrinsics, Frame};

use super::config::SlamConfig;
use super::mapping::{densify_and_prune, insert_keyframe, is_keyframe, local_ba, KeyframeReason};
use super::refine::{global_refine, RefineReport};
use super::state::SlamState;
use super::tracking::{initialize, map_first_frame, optimize_keyframe, track_nonkeyframe};

/// One line of the per-frame diagnostics stream.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FrameDiagnostics {
    pub index: usize,
    pub keyframe: bool,
    pub reason: Option<KeyframeReason>,
    pub covisibility: Option<f64>,
    pub tracking_initial: Option<f64>,
    pub tracking_final: Option<f64>,
    pub tracking_iterations: usize,
    pub tracking_diverged: bool,
    pub keyframe_initial: Option<f64>,
    pub keyframe_final: Option<f64>,
    pub ba_initial: Option<f64>,
    pub ba_final: Option<f64>,
    pub inserted: usize,
    pub pruned: usize,
    pub gaussians: usize,
    pub evicted: Option<usize>,
    /// Wall time of pose tracking alone.
    pub tracking_ms: f64,
    /// Wall time of the whole frame.
    pub total_ms: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub state: SlamState,
    pub diagnostics: Vec<FrameDiagnostics>,
    pub refine: RefineReport,
}

impl RunOutput {
    pub fn trajectory(&self) -> Trajectory {
        Trajectory::from_poses(&self.state.trajectory)
    }
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Tracks and maps `frames` in order, then refines the map.
pub fn run(frames: &[Frame], k: &CameraIntrinsics, cfg: &SlamConfig) -> Result<RunOutput> {
    let Some(first) = frames.first() else {
        return Err(Error::InvalidArgument("empty sequence".into()));
    };
    if let Some((i, f)) = frames.iter().enumerate().find(|(i, f)| f.index != *i) {
        return Err(Error::InvalidArgument(format!(
            "frame at position {i} has index {}; indices must run 0, 1, 2, ...",
            f.index
        )));
    }
    let start = Instant::now();
    let mut state = initialize(first, k, cfg)?;
    if cfg.iterations_init > 0 {
        map_first_frame(&mut state, k, cfg)?;
    }
    let mut diagnostics = vec![FrameDiagnostics {
        index: 0,
        keyframe: true,
        gaussians: state.map.len(),
        total_ms: ms(start),
        ..Default::default()
    }];

    for frame in &frames[1..] {
        let t = frame.index;
        let start = Instant::now();
        let mut d = FrameDiagnostics {
            index: t,
            ..Default::default()
        };
        let pose = match track_nonkeyframe(&state, frame, k, cfg) {
            Ok(tr) => {
                d.tracking_initial = Some(tr.initial_loss);
                d.tracking_final = Some(tr.final_loss);
                d.tracking_iterations = tr.iterations;
                tr.pose
            }
            Err(Error::DivergedTracking { .. }) => {
                log::warn!("frame {t}: tracking diverged, continuing from the motion prediction");
                d.tracking_diverged = true;
                state.predict_next()
            }
            Err(e) => return Err(e),
        };
        d.tracking_ms = ms(start);
        state.trajectory.push(pose);

        let decision = is_keyframe(&state, t, &pose, k, cfg);
        d.keyframe = decision.is_keyframe;
        d.reason = decision.reason;
        d.covisibility = Some(decision.covisibility);
        if decision.is_keyframe {
            let flow = frames[t - 1].flow_to_next.as_ref();
            match optimize_keyframe(&mut state, frame, flow, k, cfg) {
                Ok(tr) => {
                    d.keyframe_initial = Some(tr.initial_loss);
                    d.keyframe_final = Some(tr.final_loss);
                }
                Err(Error::DivergedTracking { .. }) => {
                    log::warn!("frame {t}: keyframe optimization diverged, keeping the tracked pose");
                }
                Err(e) => return Err(e),
            }
            let kf_pose = state.trajectory[t];
            let dens = densify_and_prune(&mut state, frame, &kf_pose, k, cfg);
            d.inserted = dens.inserted;
            d.pruned = dens.pruned;
            d.evicted = insert_keyframe(&mut state, frame, flow, k, cfg)?;
            let ba = local_ba(&mut state, k, cfg)?;
            d.ba_initial = Some(ba.initial);
            d.ba_final = Some(ba.best);
        }
        d.gaussians = state.map.len();
        d.total_ms = ms(start);
        log::debug!("frame {t}: keyframe={} gaussians={}", d.keyframe, d.gaussians);
        diagnostics.push(d);
    }

    let refine = global_refine(&mut state, k, cfg)?;
    Ok(RunOutput {
        state,
        diagnostics,
        refine,
    })
}

/// Line-delimited JSON, one record per frame.
pub fn diagnostics_jsonl(diagnostics: &[FrameDiagnostics]) -> String {
    let mut s = String::new();
    for d in diagnostics {
        s.push_str(&serde_json::to_string(d).expect("serializable"));
        s.push('\n');
    }
    s
}

pub fn write_diagnostics(path: &Path, diagnostics: &[FrameDiagnostics]) -> Result<()> {
    std::fs::write(path, diagnostics_jsonl(diagnostics)).map_err(|e| Error::io(path, e))
}
