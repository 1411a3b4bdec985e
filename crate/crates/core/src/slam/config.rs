use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::loss::LossWeights;

/// Adam learning rates per parameter group.
///
/// Scale and opacity are stepped in log and logit space respectively; centre
/// steps are multiplied by the scene extent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearningRates {
    pub pose_rotation: f64,
    pub pose_translation: f64,
    pub center: f64,
    pub scale: f64,
    pub opacity: f64,
    pub color: f64,
    /// Fraction of the learning rates left at the last step of a tracking
    /// or mapping run; rates decay geometrically towards it.
    pub final_fraction: f64,
}

impl Default for LearningRates {
    fn default() -> Self {
        Self {
            pose_rotation: 2e-3,
            pose_translation: 1e-3,
            center: 1.6e-4,
            scale: 5e-3,
            opacity: 5e-2,
            color: 2.5e-3,
            final_fraction: 1.0,
        }
    }
}

/// How non-keyframe poses are optimized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PoseSolver {
    /// Damped Gauss-Newton steps on the analytic gradient with a colour
    /// residual curvature model.
    #[default]
    GaussNewton,
    /// Adam with the pose learning rates.
    Adam,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlamConfig {
    pub iterations_tracking: usize,
    pub tracking_solver: PoseSolver,
    /// Initial damping of the Gauss-Newton pose steps.
    pub gn_damping: f64,
    /// Residual magnitude below which the L1 reweighting stops growing.
    pub gn_residual_floor: f64,
    pub iterations_mapping: usize,
    /// Gauss-Newton steps on each free window pose, with the map held fixed,
    /// before the joint descent of bundle adjustment. Off by default: on the
    /// synthetic orbits it tightens single poses against the map but loosens
    /// the trajectory as a whole.
    pub ba_pose_iterations: usize,
    /// Map-only steps on the first frame before tracking starts.
    pub iterations_init: usize,
    pub keyframe_every: usize,
    pub covisibility_threshold: f64,
    pub window_size: usize,
    pub lr: LearningRates,
    pub weights: LossWeights,

    /// Pixel stride when back-projecting observations into Gaussians.
    pub init_stride: usize,
    pub init_opacity: f64,
    pub densify_alpha_threshold: f64,
    /// Depth-error insertion threshold as a multiple of the median error.
    pub densify_depth_factor: f64,
    /// Lower bound of the depth-error threshold, as a fraction of the median
    /// observed depth.
    pub densify_depth_floor: f64,
    pub prune_opacity: f64,

    pub refine_stage1_iters: usize,
    pub refine_stage2_iters: usize,

    /// Rendered opacity required before depth and flow losses read a pixel.
    pub alpha_threshold: f64,
    /// Per-Gaussian summed blend weight for it to count as visible.
    pub visibility_threshold: f64,
    /// Apply the depth-gradient term to the rendered-minus-observed residual
    /// rather than to the rendered depth alone.
    pub depth_reg_on_residual: bool,
    pub background: Vector3<f64>,
    pub min_scale: f64,
    pub seed: u64,
}

impl Default for SlamConfig {
    fn default() -> Self {
        Self {
            iterations_tracking: 15,
            tracking_solver: PoseSolver::GaussNewton,
            gn_damping: 1e-3,
            gn_residual_floor: 1e-3,
            iterations_mapping: 15,
            ba_pose_iterations: 0,
            iterations_init: 100,
            keyframe_every: 4,
            covisibility_threshold: 0.8,
            window_size: 8,
            lr: LearningRates::default(),
            weights: LossWeights::default(),
            init_stride: 2,
            init_opacity: 0.7,
            densify_alpha_threshold: 0.3,
            densify_depth_factor: 5.0,
            densify_depth_floor: 0.02,
            prune_opacity: 0.05,
            refine_stage1_iters: 100,
            refine_stage2_iters: 100,
            alpha_threshold: 0.5,
            visibility_threshold: 0.5,
            depth_reg_on_residual: true,
            background: Vector3::zeros(),
            min_scale: 1e-5,
            seed: 0,
        }
    }
}

impl SlamConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.iterations_tracking == 0 || self.iterations_mapping == 0 {
            return bad("iteration counts must be at least 1");
        }
        if self.window_size < 2 {
            return bad("window_size must be at least 2");
        }
        if self.keyframe_every == 0 {
            return bad("keyframe_every must be at least 1");
        }
        if self.init_stride == 0 {
            return bad("init_stride must be at least 1");
        }
        for (name, v) in [
            ("covisibility_threshold", self.covisibility_threshold),
            ("init_opacity", self.init_opacity),
            ("densify_alpha_threshold", self.densify_alpha_threshold),
            ("prune_opacity", self.prune_opacity),
            ("alpha_threshold", self.alpha_threshold),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(&format!("{name} must lie in [0, 1]"));
            }
        }
        let lr = &self.lr;
        if !(lr.final_fraction > 0.0 && lr.final_fraction <= 1.0) {
            return bad("lr.final_fraction must lie in (0, 1]");
        }
        for v in [lr.pose_rotation, lr.pose_translation, lr.center, lr.scale, lr.opacity, lr.color] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad("learning rates must be non-negative");
            }
        }
        if !(self.gn_damping > 0.0 && self.gn_damping.is_finite()) || !(self.gn_residual_floor > 0.0) {
            return bad("gn_damping and gn_residual_floor must be positive");
        }
        if !(self.min_scale > 0.0) || !(self.densify_depth_factor > 0.0) || !(self.densify_depth_floor >= 0.0) {
            return bad("densify thresholds and min_scale must be positive");
        }
        self.weights.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        SlamConfig::default().validate().unwrap();
        assert_eq!(SlamConfig::default().iterations_tracking, 15);
        assert_eq!(SlamConfig::default().iterations_mapping, 15);
    }

    #[test]
    fn rejects_small_window() {
        let cfg = SlamConfig {
            window_size: 1,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
