use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::eval::Trajectory;
use crate::synth::{generate, SynthScene, DEPTH_SCALE};

use super::{depth_name, flow_name, rgb_name, write_depth_png, write_flo, write_rgb_png, SequenceManifest};

/// Name of the manifest inside a generated directory.
pub const MANIFEST_NAME: &str = "manifest.txt";

/// Generates `scene` and writes it under `out`: frames in `frames/`, flow in
/// `flow/`, the true trajectory as `groundtruth.txt` and the manifest.
pub fn synth_generate(scene: &SynthScene, out: &Path) -> Result<SequenceManifest> {
    let seq = generate(scene)?;
    let frames_dir = out.join("frames");
    let flow_dir = out.join("flow");
    for d in [&frames_dir, &flow_dir] {
        std::fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
    }
    for f in &seq.frames {
        write_rgb_png(&frames_dir.join(rgb_name(f.index)), &f.rgb)?;
        write_depth_png(&frames_dir.join(depth_name(f.index)), &f.depth, DEPTH_SCALE)?;
        if let Some(flow) = &f.flow_to_next {
            write_flo(&flow_dir.join(flow_name(f.index)), flow)?;
        }
    }
    Trajectory::from_poses(&seq.poses).write(&out.join("groundtruth.txt"))?;
    let manifest = SequenceManifest {
        root: out.to_path_buf(),
        intrinsics: seq.intrinsics,
        depth_scale: DEPTH_SCALE,
        frames_dir: PathBuf::from("frames"),
        flow_dir: Some(PathBuf::from("flow")),
        gt_traj: Some(PathBuf::from("groundtruth.txt")),
    };
    super::write_bytes(&out.join(MANIFEST_NAME), manifest.to_text().as_bytes())?;
    Ok(manifest)
}
