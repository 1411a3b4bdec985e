use super::{CameraIntrinsics, Pose};
use crate::error::{Error, Result};
use crate::image::{DepthMap, FlowField, Mask, RgbImage};

/// One RGB-D observation. Depth 0 marks invalid pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub index: usize,
    pub rgb: RgbImage,
    pub depth: DepthMap,
    /// Optical flow from this frame to the next one, in pixels.
    pub flow_to_next: Option<FlowField>,
    pub pose_gt: Option<Pose>,
}

impl Frame {
    pub fn new(index: usize, rgb: RgbImage, depth: DepthMap) -> Self {
        Self {
            index,
            rgb,
            depth,
            flow_to_next: None,
            pose_gt: None,
        }
    }

    pub fn validate(&self, k: &CameraIntrinsics) -> Result<()> {
        let dims = (k.width, k.height);
        if self.rgb.dims() != dims || self.depth.dims() != dims {
            return Err(Error::InvalidArgument(format!(
                "frame {} is {:?}, intrinsics expect {:?}",
                self.index,
                self.rgb.dims(),
                dims
            )));
        }
        if let Some(flow) = &self.flow_to_next {
            if flow.dims() != dims {
                return Err(Error::InvalidArgument(format!(
                    "flow of frame {} has wrong size",
                    self.index
                )));
            }
        }
        if self.depth.as_slice().iter().any(|d| !(*d >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "frame {} has negative or NaN depth",
                self.index
            )));
        }
        Ok(())
    }

    pub fn depth_mask(&self) -> Mask {
        self.depth.map(|&d| d > 0.0)
    }

    pub fn valid_depth_fraction(&self) -> f64 {
        if self.depth.is_empty() {
            return 0.0;
        }
        self.depth_mask().count() as f64 / self.depth.len() as f64
    }
}
