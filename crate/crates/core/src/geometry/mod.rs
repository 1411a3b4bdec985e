//! Camera model, rigid transforms and the Gaussian map container.

mod camera;
mod frame;
mod gaussian;
mod pose;

pub use camera::{project_point, CameraIntrinsics, Projection, Z_NEAR};
pub use frame::Frame;
pub use gaussian::{Gaussian, GaussianMap};
pub use pose::{se3_exp, se3_log, skew, Pose, Tangent};
