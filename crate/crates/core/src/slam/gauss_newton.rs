//! Damped Gauss-Newton steps for a single camera pose with the map held
//! fixed.
//!
//! The step solves `(H + mu diag(H)) s = -g`, where `g` is the analytic
//! gradient of the objective and `H = J^T W J` is built from the residuals of
//! the terms that see the pose: colour residuals of its view and flow
//! residuals of the flow terms it takes part in, each over that term's mask.
//! `J` is the central-difference Jacobian of those residuals over the six
//! tangent directions, and `W` holds iteratively reweighted L1 weights
//! `1 / max(|r|, floor)` (the vector norm for flow). A step is kept only when
//! it lowers the objective; otherwise the damping grows and the step is
//! retried.

use nalgebra::{Matrix6, Vector6};

use crate::error::Result;
use crate::geometry::{CameraIntrinsics, GaussianMap, Pose, Tangent};
use crate::image::Mask;
use crate::render::{render, RenderOptions};

use super::objective::{Objective, Term};
use super::optimize::DescentReport;

/// Tangent step of the central differences.
const FD_STEP: f64 = 1e-5;
/// Damping changes on rejection and acceptance.
const DAMPING_UP: f64 = 10.0;
const DAMPING_DOWN: f64 = 0.3;
const DAMPING_MIN: f64 = 1e-6;
const DAMPING_MAX: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct GaussNewton {
    pub damping: f64,
    pub residual_floor: f64,
}

/// Residuals of one term at `cameras`, zero outside `mask`, in the order
/// their weights are computed.
fn residuals(map: &GaussianMap, cameras: &[Pose], k: &CameraIntrinsics, term: &Term, bg: &RenderOptions, mask: &Mask) -> Vec<f64> {
    match *term {
        Term::View { camera, frame } | Term::Refine { camera, frame, .. } => {
            let out = render(map, &cameras[camera], k, bg);
            out.color
                .as_slice()
                .iter()
                .zip(frame.rgb.as_slice())
                .zip(mask.as_slice())
                .flat_map(|((r, t), m)| if *m { [r[0] - t[0], r[1] - t[1], r[2] - t[2]] } else { [0.0; 3] })
                .collect()
        }
        Term::Flow { from, to, gt } => {
            let opts = bg.clone().with_flow_to(cameras[to]);
            let out = render(map, &cameras[from], k, &opts);
            let flow = out.flow.expect("flow render");
            flow.as_slice()
                .iter()
                .zip(gt.as_slice())
                .zip(mask.as_slice())
                .flat_map(|((f, g), m)| if *m { [f[0] - g[0], f[1] - g[1]] } else { [0.0; 2] })
                .collect()
        }
    }
}

/// IRLS weights of one term's residuals, including the term's loss weight
/// and normalization.
fn weights(objective: &Objective, term: &Term, r: &[f64], mask: &Mask, floor: f64) -> Vec<f64> {
    let count = mask.count().max(1) as f64;
    match term {
        Term::View { .. } | Term::Refine { .. } => {
            let scale = objective.weights.lambda1 / (3.0 * count);
            r.iter().map(|v| scale / v.abs().max(floor)).collect()
        }
        Term::Flow { .. } => {
            let scale = objective.weights.lambda4 / count;
            r.chunks_exact(2)
                .flat_map(|e| {
                    let w = scale / e[0].hypot(e[1]).max(floor);
                    [w, w]
                })
                .collect()
        }
    }
}

fn touches(term: &Term, slot: usize) -> bool {
    match *term {
        Term::View { camera, .. } | Term::Refine { camera, .. } => camera == slot,
        Term::Flow { from, to, .. } => from == slot || to == slot,
    }
}

fn curvature(
    objective: &Objective,
    map: &GaussianMap,
    cameras: &mut [Pose],
    slot: usize,
    k: &CameraIntrinsics,
    masks: &[Mask],
    floor: f64,
) -> Matrix6<f64> {
    let opts = RenderOptions {
        background: objective.background,
        ..Default::default()
    };
    let pose = cameras[slot];
    let mut h = Matrix6::zeros();
    for (term, mask) in objective.terms.iter().zip(masks) {
        if !touches(term, slot) {
            continue;
        }
        let r0 = residuals(map, cameras, k, term, &opts, mask);
        let w = weights(objective, term, &r0, mask, floor);
        let columns: Vec<Vec<f64>> = (0..6)
            .map(|j| {
                let mut t = Tangent::zeros();
                t[j] = FD_STEP;
                cameras[slot] = pose.retract(&t);
                let plus = residuals(map, cameras, k, term, &opts, mask);
                t[j] = -FD_STEP;
                cameras[slot] = pose.retract(&t);
                let minus = residuals(map, cameras, k, term, &opts, mask);
                plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * FD_STEP)).collect()
            })
            .collect();
        cameras[slot] = pose;
        for a in 0..6 {
            for b in a..6 {
                let v: f64 = (0..r0.len()).map(|i| w[i] * columns[a][i] * columns[b][i]).sum();
                h[(a, b)] += v;
                if a != b {
                    h[(b, a)] += v;
                }
            }
        }
    }
    h
}

/// Minimizes `objective` over `cameras[slot]` with the other cameras fixed,
/// for at most `iterations` accepted steps.
pub(crate) fn solve_pose(
    objective: &Objective,
    map: &GaussianMap,
    cameras: &mut [Pose],
    slot: usize,
    k: &CameraIntrinsics,
    gn: &GaussNewton,
    iterations: usize,
) -> Result<DescentReport> {
    let mut eval = objective.evaluate(map, cameras, k, None, true)?;
    let mut report = DescentReport {
        initial: eval.value,
        best: eval.value,
        iterations: 0,
        diverged: !eval.value.is_finite(),
    };
    if report.diverged {
        return Ok(report);
    }
    let mut mu = gn.damping;
    for it in 0..iterations {
        let g: Vector6<f64> = eval.cameras[slot];
        if g.iter().all(|v| *v == 0.0) {
            break;
        }
        let pose = cameras[slot];
        let h = curvature(objective, map, cameras, slot, k, &eval.masks, gn.residual_floor);
        let mut accepted = false;
        while mu <= DAMPING_MAX {
            let mut damped = h;
            for a in 0..6 {
                damped[(a, a)] += mu * h[(a, a)].max(f64::MIN_POSITIVE);
            }
            let Some(step) = damped.lu().solve(&-g) else {
                mu *= DAMPING_UP;
                continue;
            };
            cameras[slot] = pose.retract(&step);
            let e = objective.evaluate(map, cameras, k, None, true)?;
            if e.value.is_finite() && e.value < eval.value {
                eval = e;
                mu = (mu * DAMPING_DOWN).max(DAMPING_MIN);
                accepted = true;
                break;
            }
            cameras[slot] = pose;
            mu *= DAMPING_UP;
        }
        log::trace!("pose step {it}: objective {} damping {mu:.1e}", eval.value);
        if !accepted {
            break;
        }
        report.iterations += 1;
        report.best = eval.value;
    }
    Ok(report)
}
