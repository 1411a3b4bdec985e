//! Image, depth and trajectory metrics.

mod metrics;
mod report;
mod trajectory;
mod views;

pub use metrics::{
    ate_rmse, depth_rmse, matched_positions, psnr, rigid_alignment, trajectory_length, PSNR_CAP,
};
pub use report::{FrameMetrics, MetricsReport};
pub use trajectory::Trajectory;
pub use views::view_metrics;

pub use crate::loss::ssim;
