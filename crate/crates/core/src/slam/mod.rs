//! Tracking, keyframe mapping, window bundle adjustment and global
//! refinement over a Gaussian map.

mod config;
mod gauss_newton;
mod mapping;
pub mod objective;
mod optimize;
mod pipeline;
mod refine;
mod state;
mod tracking;

pub use config::{LearningRates, PoseSolver, SlamConfig};
pub use mapping::{
    covisibility, densify_and_prune, insert_keyframe, is_keyframe, local_ba, visibility, DensifyReport,
    KeyframeDecision, KeyframeReason,
};
pub use objective::{Evaluation, Objective, Term};
pub use optimize::DescentReport;
pub use pipeline::{diagnostics_jsonl, run, write_diagnostics, FrameDiagnostics, RunOutput};
pub use refine::{global_refine, keyframe_psnrs, worst_view, RefineReport};
pub use state::{Keyframe, KeyframeWindow, SlamState};
pub use tracking::{initialize, map_first_frame, optimize_keyframe, track_from, track_nonkeyframe, Tracked};
