use nalgebra::Vector3;

use crate::error::Result;
use crate::geometry::{CameraIntrinsics, Frame, GaussianMap, Pose};
use crate::loss::ssim;
use crate::render::{render, RenderOptions};

use super::{depth_rmse, psnr, FrameMetrics};

/// Renders `map` at each pose and compares with the frame of the same
/// position. Depth RMSE is skipped for frames without valid depth.
pub fn view_metrics(
    map: &GaussianMap,
    poses: &[Pose],
    frames: &[&Frame],
    k: &CameraIntrinsics,
    background: Vector3<f64>,
) -> Result<Vec<FrameMetrics>> {
    let opts = RenderOptions {
        background,
        ..Default::default()
    };
    poses
        .iter()
        .zip(frames)
        .map(|(pose, frame)| {
            let out = render(map, pose, k, &opts);
            let color = out.color.map(|c| c.map(|v| v.clamp(0.0, 1.0)));
            let mask = frame.depth_mask();
            let depth = if mask.count() > 0 {
                Some(depth_rmse(&out.depth, &frame.depth, &mask)?)
            } else {
                None
            };
            Ok(FrameMetrics {
                index: frame.index,
                psnr: Some(psnr(&color, &frame.rgb)?),
                ssim: Some(ssim(&color, &frame.rgb)?),
                depth_rmse: depth,
            })
        })
        .collect()
}
