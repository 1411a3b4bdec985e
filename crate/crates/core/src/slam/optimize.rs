//! First-order descent of an [`Objective`] over free camera poses and,
//! optionally, the Gaussian map.

use crate::error::Result;
use crate::geometry::{CameraIntrinsics, Gaussian, GaussianMap, Pose, Tangent};
use crate::optim::Adam;

use super::config::LearningRates;
use super::objective::{Evaluation, Objective};

const CAMERA_PARAMS: usize = 6;
const GAUSSIAN_PARAMS: usize = 8;
const OPACITY_EPS: f64 = 1e-6;

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn logit(p: f64) -> f64 {
    let p = p.clamp(OPACITY_EPS, 1.0 - OPACITY_EPS);
    (p / (1.0 - p)).ln()
}

/// Adam over a fixed parameter layout: six tangent entries per free camera,
/// then centre, log-scale, logit-opacity and colour per Gaussian.

#[derive(Debug, Clone)]
pub(crate) struct Stepper {
    adam: Adam,
    lr: Vec<f64>,
    free: Vec<usize>,
    gaussians: Option<usize>,
    grad: Vec<f64>,
    delta: Vec<f64>,
    pub(crate) min_scale: f64,
    /// Multiplier on every learning rate.
    pub(crate) lr_scale: f64,
}

impl Stepper {
    pub(crate) fn new(free: Vec<usize>, gaussians: Option<usize>, rates: &LearningRates, extent: f64) -> Self {
        let n = free.len() * CAMERA_PARAMS + gaussians.unwrap_or(0) * GAUSSIAN_PARAMS;
        let mut lr = Vec::with_capacity(n);
        for _ in &free {
            lr.extend([rates.pose_rotation; 3]);
            lr.extend([rates.pose_translation; 3]);
        }
        for _ in 0..gaussians.unwrap_or(0) {
            lr.extend([rates.center * extent; 3]);
            lr.push(rates.scale);
            lr.push(rates.opacity);
            lr.extend([rates.color; 3]);
        }
        Self {
            adam: Adam::new(n),
            lr,
            free,
            gaussians,
            grad: vec![0.0; n],
            delta: vec![0.0; n],
            min_scale: 1e-5,
            lr_scale: 1.0,
        }
    }

    /// Takes one step from the gradients in `eval`.
    pub(crate) fn apply(&mut self, eval: &Evaluation, map: &mut GaussianMap, cameras: &mut [Pose]) {
        let mut o = 0;
        for &c in &self.free {
            self.grad[o..o + CAMERA_PARAMS].copy_from_slice(eval.cameras[c].as_slice());
            o += CAMERA_PARAMS;
        }
        if let Some(n) = self.gaussians {
            assert_eq!(n, map.len(), "map size changed under the optimizer");
            for (g, gg) in map.gaussians().iter().zip(&eval.gaussians) {
                let s = &mut self.grad[o..o + GAUSSIAN_PARAMS];
                s[0..3].copy_from_slice(gg.center.as_slice());
                s[3] = gg.scale * g.scale;
                s[4] = gg.opacity * g.opacity * (1.0 - g.opacity);
                s[5..8].copy_from_slice(gg.color.as_slice());
                o += GAUSSIAN_PARAMS;
            }
        }
        self.adam.step(&self.grad, &self.lr, &mut self.delta);
        if self.lr_scale != 1.0 {
            for d in &mut self.delta {
                *d *= self.lr_scale;
            }
        }

        let mut o = 0;
        for &c in &self.free {
            let step = Tangent::from_column_slice(&self.delta[o..o + CAMERA_PARAMS]);
            cameras[c] = cameras[c].retract(&step);
            o += CAMERA_PARAMS;
        }
        if self.gaussians.is_some() {
            for g in map.gaussians_mut() {
                let d = &self.delta[o..o + GAUSSIAN_PARAMS];
                g.center.x += d[0];
                g.center.y += d[1];
                g.center.z += d[2];
                g.scale *= d[3].exp();
                if d[4] != 0.0 {
                    g.opacity = sigmoid(logit(g.opacity) + d[4]);
                }
                for c in 0..3 {
                    g.color[c] = (g.color[c] + d[5 + c]).clamp(0.0, 1.0);
                }
                o += GAUSSIAN_PARAMS;
            }
            map.project_to_valid(self.min_scale);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescentReport {
    pub initial: f64,
    /// Objective of the returned iterate.
    pub best: f64,
    pub iterations: usize,
    /// A non-finite objective was met and the run stopped early.
    pub diverged: bool,
}

/// Runs `iterations` steps and leaves the best iterate seen in `map` and
/// `cameras`, so the returned objective never exceeds the initial one.
pub(crate) fn descend(
    objective: &Objective,
    map: &mut GaussianMap,
    cameras: &mut [Pose],
    k: &CameraIntrinsics,
    stepper: &mut Stepper,
    iterations: usize,
    final_lr: f64,
) -> Result<DescentReport> {
    let optimize_map = stepper.gaussians.is_some();
    let mut report = DescentReport {
        initial: f64::NAN,
        best: f64::INFINITY,
        iterations: 0,
        diverged: false,
    };
    let mut best_cameras = cameras.to_vec();
    let mut best_map: Option<Vec<Gaussian>> = optimize_map.then(|| map.gaussians().to_vec());
    for it in 0..=iterations {
        let last = it == iterations;
        let eval = objective.evaluate(map, cameras, k, None, !last)?;
        if it == 0 {
            report.initial = eval.value;
        }
        log::trace!("descent iteration {it}: objective {}", eval.value);
        if !eval.value.is_finite() {
            report.diverged = true;
            break;
        }
        if eval.value < report.best {
            report.best = eval.value;
            best_cameras.copy_from_slice(cameras);
            if let Some(b) = best_map.as_mut() {
                b.copy_from_slice(map.gaussians());
            }
        }
        if last {
            break;
        }
        // Geometric decay from 1 to `final_lr` over the run.
        stepper.lr_scale = if iterations > 1 {
            final_lr.powf(it as f64 / (iterations - 1) as f64)
        } else {
            1.0
        };
        stepper.apply(&eval, map, cameras);
        report.iterations += 1;
    }
    cameras.copy_from_slice(&best_cameras);
    if let Some(b) = best_map {
        map.gaussians_mut().copy_from_slice(&b);
    }
    Ok(report)
}
