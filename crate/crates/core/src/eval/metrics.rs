use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::image::{DepthMap, Mask, RgbImage};

use super::Trajectory;

/// Reported PSNR for identical images.
pub const PSNR_CAP: f64 = 100.0;

/// `10 log10(1 / MSE)` over all pixels and channels, capped at [`PSNR_CAP`].
pub fn psnr(a: &RgbImage, b: &RgbImage) -> Result<f64> {
    if !a.same_dims(b) || a.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "psnr: shape {:?} vs {:?}",
            a.dims(),
            b.dims()
        )));
    }
    let mut sum = 0.0;
    for (p, q) in a.as_slice().iter().zip(b.as_slice()) {
        for c in 0..3 {
            let d = p[c] - q[c];
            sum += d * d;
        }
    }
    let mse = sum / (3 * a.len()) as f64;
    if mse == 0.0 {
        return Ok(PSNR_CAP);
    }
    Ok((-10.0 * mse.log10()).min(PSNR_CAP))
}

/// Root mean squared difference over masked pixels.
pub fn depth_rmse(estimate: &DepthMap, reference: &DepthMap, mask: &Mask) -> Result<f64> {
    if !estimate.same_dims(reference) || !estimate.same_dims(mask) {
        return Err(Error::InvalidArgument("depth_rmse: shape mismatch".into()));
    }
    let mut sum = 0.0;
    let mut n = 0usize;
    for i in 0..estimate.len() {
        if mask[i] {
            let d = estimate[i] - reference[i];
            sum += d * d;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::UndefinedMetric("depth_rmse over an empty mask".into()));
    }
    Ok((sum / n as f64).sqrt())
}

/// Rotation and translation taking `from` points onto `to` in the least
/// squares sense.
pub fn rigid_alignment(from: &[Vector3<f64>], to: &[Vector3<f64>]) -> (Matrix3<f64>, Vector3<f64>) {
    assert_eq!(from.len(), to.len());
    let n = from.len() as f64;
    let mf = from.iter().sum::<Vector3<f64>>() / n;
    let mt = to.iter().sum::<Vector3<f64>>() / n;
    let mut h = Matrix3::zeros();
    for (a, b) in from.iter().zip(to) {
        h += (a - mf) * (b - mt).transpose();
    }
    let svd = h.svd(true, true);
    let u = svd.u.expect("svd u");
    let v_t = svd.v_t.expect("svd v");
    let v = v_t.transpose();
    let d = (v * u.transpose()).determinant().signum();
    let r = v * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * u.transpose();
    (r, mt - r * mf)
}

/// Matched camera centres of two trajectories, joined on their stamps.
pub fn matched_positions(estimated: &Trajectory, reference: &Trajectory) -> (Vec<Vector3<f64>>, Vec<Vector3<f64>>) {
    let mut est = Vec::new();
    let mut gt = Vec::new();
    for (stamp, pose) in estimated.iter() {
        if let Some(g) = reference.get(stamp) {
            est.push(*pose.translation());
            gt.push(*g.translation());
        }
    }
    (est, gt)
}

/// Position RMSE after rigidly aligning `estimated` onto `reference`.
pub fn ate_rmse(estimated: &Trajectory, reference: &Trajectory) -> Result<f64> {
    let (est, gt) = matched_positions(estimated, reference);
    if est.len() < 3 {
        return Err(Error::UndefinedMetric(format!(
            "ate needs at least 3 matched poses, found {}",
            est.len()
        )));
    }
    let (r, t) = rigid_alignment(&est, &gt);
    let sum: f64 = est.iter().zip(&gt).map(|(e, g)| (r * e + t - g).norm_squared()).sum();
    Ok((sum / est.len() as f64).sqrt())
}

/// Sum of distances between consecutive camera centres.
pub fn trajectory_length(traj: &Trajectory) -> f64 {
    let poses: Vec<_> = traj.iter().map(|(_, p)| *p.translation()).collect();
    poses.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}
