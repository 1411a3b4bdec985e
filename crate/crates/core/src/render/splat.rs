use nalgebra::{Matrix2, Matrix2x3, Vector2, Vector3};

use super::BLUR;
use crate::geometry::{CameraIntrinsics, Gaussian, Pose, Z_NEAR};

/// A Gaussian projected onto the image plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Splat2D {
    pub gaussian_index: usize,
    pub mean2d: Vector2<f64>,
    pub cov2d: Matrix2<f64>,
    pub depth_cam: f64,
    pub radius_px: f64,
}

/// Projection plus the intermediates the backward pass needs.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Projected {
    pub splat: Splat2D,
    /// Camera-frame centre.
    pub cam: Vector3<f64>,
    /// Inverse covariance stored as (a, b, c) of `[[a, b], [b, c]]`.
    pub conic: [f64; 3],
    pub opacity: f64,
    pub color: Vector3<f64>,
}

#[inline]
pub(crate) fn projection_jacobian(k: &CameraIntrinsics, p: &Vector3<f64>) -> Matrix2x3<f64> {
    let iz = 1.0 / p.z;
    let iz2 = iz * iz;
    Matrix2x3::new(
        k.fx * iz,
        0.0,
        -k.fx * p.x * iz2,
        0.0,
        k.fy * iz,
        -k.fy * p.y * iz2,
    )
}

/// Entries (a, b, c) of `J J^T` for the pinhole Jacobian `J` at `p`.
#[inline]
pub(crate) fn jjt(k: &CameraIntrinsics, p: &Vector3<f64>) -> [f64; 3] {
    let z2 = p.z * p.z;
    let iz4 = 1.0 / (z2 * z2);
    [
        k.fx * k.fx * (z2 + p.x * p.x) * iz4,
        k.fx * k.fy * p.x * p.y * iz4,
        k.fy * k.fy * (z2 + p.y * p.y) * iz4,
    ]
}

/// Gradients of the `jjt` entries with respect to the camera-frame point.
#[inline]
pub(crate) fn jjt_gradients(k: &CameraIntrinsics, p: &Vector3<f64>) -> [Vector3<f64>; 3] {
    let (x, y, z) = (p.x, p.y, p.z);
    let z2 = z * z;
    let iz4 = 1.0 / (z2 * z2);
    let iz5 = iz4 / z;
    let fxx = k.fx * k.fx;
    let fxy = k.fx * k.fy;
    let fyy = k.fy * k.fy;
    [
        Vector3::new(fxx * 2.0 * x * iz4, 0.0, fxx * (-2.0 * z2 - 4.0 * x * x) * iz5),
        Vector3::new(fxy * y * iz4, fxy * x * iz4, -4.0 * fxy * x * y * iz5),
        Vector3::new(0.0, fyy * 2.0 * y * iz4, fyy * (-2.0 * z2 - 4.0 * y * y) * iz5),
    ]
}

pub(crate) fn project_internal(
    index: usize,
    g: &Gaussian,
    world_to_camera: &Pose,
    k: &CameraIntrinsics,
) -> Option<Projected> {
    let cam = world_to_camera.apply(&g.center);
    if cam.z <= Z_NEAR {
        return None;
    }
    let mean2d = k.project_camera(&cam);
    let s2 = g.scale * g.scale;
    let [a, b, c] = jjt(k, &cam);
    let (a, b, c) = (s2 * a + BLUR, s2 * b, s2 * c + BLUR);
    let det = a * c - b * b;
    let mid = 0.5 * (a + c);
    let lambda_max = mid + (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let radius_px = 3.0 * lambda_max.sqrt();
    let w = k.width as f64 - 1.0;
    let h = k.height as f64 - 1.0;
    if mean2d.x + radius_px < 0.0
        || mean2d.x - radius_px > w
        || mean2d.y + radius_px < 0.0
        || mean2d.y - radius_px > h
    {
        return None;
    }
    Some(Projected {
        splat: Splat2D {
            gaussian_index: index,
            mean2d,
            cov2d: Matrix2::new(a, b, b, c),
            depth_cam: cam.z,
            radius_px,
        },
        cam,
        conic: [c / det, -b / det, a / det],
        opacity: g.opacity,
        color: g.color,
    })
}

/// Projects one Gaussian; `None` when it is behind the camera or its
/// truncation disk misses the image.
pub fn project_gaussian(
    g: &Gaussian,
    world_to_camera: &Pose,
    k: &CameraIntrinsics,
) -> Option<Splat2D> {
    project_internal(0, g, world_to_camera, k).map(|p| p.splat)
}
