use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::Pose;
use crate::error::{Error, Result};

/// Points at or in front of this camera-space depth are not projected.
pub const Z_NEAR: f64 = 1e-4;

/// Pinhole intrinsics. Pixel `(i, j)` is sampled at coordinate `(i, j)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        let k = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(Error::InvalidArgument("focal lengths must be positive".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidArgument("image size must be at least 1x1".into()));
        }
        if !(0.0..self.width as f64).contains(&self.cx) || !(0.0..self.height as f64).contains(&self.cy)
        {
            return Err(Error::InvalidArgument(
                "principal point outside the image".into(),
            ));
        }
        Ok(())
    }

    pub fn num_pixels(&self) -> usize {
        self.width * self.height
    }

    /// Camera-frame point at `depth` along the ray through pixel `(u, v)`.
    pub fn unproject(&self, u: f64, v: f64, depth: f64) -> Vector3<f64> {
        Vector3::new((u - self.cx) / self.fx * depth, (v - self.cy) / self.fy * depth, depth)
    }

    #[inline]
    pub(crate) fn project_camera(&self, p: &Vector3<f64>) -> Vector2<f64> {
        Vector2::new(self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub pixel: Vector2<f64>,
    pub depth: f64,
}

/// Perspective projection; `None` when the point is not in front of `Z_NEAR`.
pub fn project_point(
    k: &CameraIntrinsics,
    world_to_camera: &Pose,
    x_world: &Vector3<f64>,
) -> Option<Projection> {
    let p = world_to_camera.apply(x_world);
    if p.z <= Z_NEAR {
        return None;
    }
    Some(Projection {
        pixel: k.project_camera(&p),
        depth: p.z,
    })
}
