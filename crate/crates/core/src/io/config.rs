//! `key = value` configuration files. Keys are the [`SlamConfig`] field
//! names, with `lr.` and `weights.` prefixes for the nested groups.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::slam::{PoseSolver, SlamConfig};

fn num<T: FromStr>(v: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    v.parse().map_err(|e: T::Err| e.to_string())
}

fn flag(v: &str) -> std::result::Result<bool, String> {
    match v {
        "true" | "1" => Ok(true),
        "false" | "0" => Ok(false),
        _ => Err(format!("expected true or false, found {v:?}")),
    }
}

fn vector(v: &str) -> std::result::Result<Vector3<f64>, String> {
    let parts: Vec<f64> = v.split_whitespace().map(num).collect::<std::result::Result<_, _>>()?;
    match parts[..] {
        [x, y, z] => Ok(Vector3::new(x, y, z)),
        _ => Err(format!("expected three numbers, found {}", parts.len())),
    }
}

fn solver(v: &str) -> std::result::Result<PoseSolver, String> {
    match v {
        "gauss-newton" => Ok(PoseSolver::GaussNewton),
        "adam" => Ok(PoseSolver::Adam),
        _ => Err(format!("expected gauss-newton or adam, found {v:?}")),
    }
}

/// Sets one field; the error names what was wrong with `value`.
pub fn set_config_value(cfg: &mut SlamConfig, key: &str, value: &str) -> std::result::Result<(), String> {
    let (lr, w) = (&mut cfg.lr, &mut cfg.weights);
    match key {
        "iterations_tracking" => cfg.iterations_tracking = num(value)?,
        "tracking_solver" => cfg.tracking_solver = solver(value)?,
        "gn_damping" => cfg.gn_damping = num(value)?,
        "gn_residual_floor" => cfg.gn_residual_floor = num(value)?,
        "iterations_mapping" => cfg.iterations_mapping = num(value)?,
        "ba_pose_iterations" => cfg.ba_pose_iterations = num(value)?,
        "iterations_init" => cfg.iterations_init = num(value)?,
        "keyframe_every" => cfg.keyframe_every = num(value)?,
        "covisibility_threshold" => cfg.covisibility_threshold = num(value)?,
        "window_size" => cfg.window_size = num(value)?,
        "init_stride" => cfg.init_stride = num(value)?,
        "init_opacity" => cfg.init_opacity = num(value)?,
        "densify_alpha_threshold" => cfg.densify_alpha_threshold = num(value)?,
        "densify_depth_factor" => cfg.densify_depth_factor = num(value)?,
        "densify_depth_floor" => cfg.densify_depth_floor = num(value)?,
        "prune_opacity" => cfg.prune_opacity = num(value)?,
        "refine_stage1_iters" => cfg.refine_stage1_iters = num(value)?,
        "refine_stage2_iters" => cfg.refine_stage2_iters = num(value)?,
        "alpha_threshold" => cfg.alpha_threshold = num(value)?,
        "visibility_threshold" => cfg.visibility_threshold = num(value)?,
        "depth_reg_on_residual" => cfg.depth_reg_on_residual = flag(value)?,
        "background" => cfg.background = vector(value)?,
        "min_scale" => cfg.min_scale = num(value)?,
        "seed" => cfg.seed = num(value)?,
        "lr.pose_rotation" => lr.pose_rotation = num(value)?,
        "lr.pose_translation" => lr.pose_translation = num(value)?,
        "lr.center" => lr.center = num(value)?,
        "lr.scale" => lr.scale = num(value)?,
        "lr.opacity" => lr.opacity = num(value)?,
        "lr.color" => lr.color = num(value)?,
        "lr.final_fraction" => lr.final_fraction = num(value)?,
        "weights.lambda1" => w.lambda1 = num(value)?,
        "weights.lambda2" => w.lambda2 = num(value)?,
        "weights.lambda3" => w.lambda3 = num(value)?,
        "weights.lambda4" => w.lambda4 = num(value)?,
        "weights.lambda_dssim" => w.lambda_dssim = num(value)?,
        "weights.w_h" => w.w_h = num(value)?,
        "weights.w_v" => w.w_v = num(value)?,
        _ => return Err(format!("unknown key {key:?}")),
    }
    Ok(())
}

/// Defaults overridden by the lines of `text`, then validated.
pub fn parse_config(text: &str, path: &Path) -> Result<SlamConfig> {
    let mut cfg = SlamConfig::default();
    for (line, key, value) in super::key_values(text, path)? {
        set_config_value(&mut cfg, key, value).map_err(|message| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("{key}: {message}"),
        })?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn read_config(path: &Path) -> Result<SlamConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, path)
}

/// Every field as a line `parse_config` reads back to the same value.
pub fn config_to_text(cfg: &SlamConfig) -> String {
    // Stops compiling when a field is added without a key.
    let SlamConfig {
        iterations_tracking: _,
        tracking_solver: _,
        gn_damping: _,
        gn_residual_floor: _,
        iterations_mapping: _,
        ba_pose_iterations: _,
        iterations_init: _,
        keyframe_every: _,
        covisibility_threshold: _,
        window_size: _,
        lr: crate::slam::LearningRates {
            pose_rotation: _,
            pose_translation: _,
            center: _,
            scale: _,
            opacity: _,
            color: _,
            final_fraction: _,
        },
        weights: crate::loss::LossWeights {
            lambda1: _,
            lambda2: _,
            lambda3: _,
            lambda4: _,
            lambda_dssim: _,
            w_h: _,
            w_v: _,
        },
        init_stride: _,
        init_opacity: _,
        densify_alpha_threshold: _,
        densify_depth_factor: _,
        densify_depth_floor: _,
        prune_opacity: _,
        refine_stage1_iters: _,
        refine_stage2_iters: _,
        alpha_threshold: _,
        visibility_threshold: _,
        depth_reg_on_residual: _,
        background: _,
        min_scale: _,
        seed: _,
    } = cfg;
    let (lr, w) = (&cfg.lr, &cfg.weights);
    let solver = match cfg.tracking_solver {
        PoseSolver::GaussNewton => "gauss-newton",
        PoseSolver::Adam => "adam",
    };
    let b = cfg.background;
    let mut s = String::new();
    let mut put = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    put("iterations_tracking", cfg.iterations_tracking.to_string());
    put("tracking_solver", solver.into());
    put("gn_damping", cfg.gn_damping.to_string());
    put("gn_residual_floor", cfg.gn_residual_floor.to_string());
    put("iterations_mapping", cfg.iterations_mapping.to_string());
    put("ba_pose_iterations", cfg.ba_pose_iterations.to_string());
    put("iterations_init", cfg.iterations_init.to_string());
    put("keyframe_every", cfg.keyframe_every.to_string());
    put("covisibility_threshold", cfg.covisibility_threshold.to_string());
    put("window_size", cfg.window_size.to_string());
    put("init_stride", cfg.init_stride.to_string());
    put("init_opacity", cfg.init_opacity.to_string());
    put("densify_alpha_threshold", cfg.densify_alpha_threshold.to_string());
    put("densify_depth_factor", cfg.densify_depth_factor.to_string());
    put("densify_depth_floor", cfg.densify_depth_floor.to_string());
    put("prune_opacity", cfg.prune_opacity.to_string());
    put("refine_stage1_iters", cfg.refine_stage1_iters.to_string());
    put("refine_stage2_iters", cfg.refine_stage2_iters.to_string());
    put("alpha_threshold", cfg.alpha_threshold.to_string());
    put("visibility_threshold", cfg.visibility_threshold.to_string());
    put("depth_reg_on_residual", cfg.depth_reg_on_residual.to_string());
    put("background", format!("{} {} {}", b.x, b.y, b.z));
    put("min_scale", cfg.min_scale.to_string());
    put("seed", cfg.seed.to_string());
    put("lr.pose_rotation", lr.pose_rotation.to_string());
    put("lr.pose_translation", lr.pose_translation.to_string());
    put("lr.center", lr.center.to_string());
    put("lr.scale", lr.scale.to_string());
    put("lr.opacity", lr.opacity.to_string());
    put("lr.color", lr.color.to_string());
    put("lr.final_fraction", lr.final_fraction.to_string());
    put("weights.lambda1", w.lambda1.to_string());
    put("weights.lambda2", w.lambda2.to_string());
    put("weights.lambda3", w.lambda3.to_string());
    put("weights.lambda4", w.lambda4.to_string());
    put("weights.lambda_dssim", w.lambda_dssim.to_string());
    put("weights.w_h", w.w_h.to_string());
    put("weights.w_v", w.w_v.to_string());
    s
}
