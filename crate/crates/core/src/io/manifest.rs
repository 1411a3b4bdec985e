use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::eval::Trajectory;
use crate::geometry::{CameraIntrinsics, Frame};

use super::{key_values, read_depth_png, read_flo, read_rgb_png};

/// A sequence on disk. Frame `i` is `rgb_{i:06}.png` and `depth_{i:06}.png`
/// in the frames directory, with flow to frame `i + 1` in
/// `flow_{i:06}.flo` when a flow directory is given.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceManifest {
    /// Directory that relative paths are resolved against.
    pub root: PathBuf,
    pub intrinsics: CameraIntrinsics,
    /// Scene units per stored depth integer.
    pub depth_scale: f64,
    pub frames_dir: PathBuf,
    pub flow_dir: Option<PathBuf>,
    pub gt_traj: Option<PathBuf>,
}

pub fn rgb_name(i: usize) -> String {
    format!("rgb_{i:06}.png")
}

pub fn depth_name(i: usize) -> String {
    format!("depth_{i:06}.png")
}

pub fn flow_name(i: usize) -> String {
    format!("flow_{i:06}.flo")
}

impl SequenceManifest {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut kv = BTreeMap::new();
        for (line, k, v) in key_values(text, path)? {
            if kv.insert(k, (line, v)).is_some() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: format!("duplicate key {k:?}"),
                });
            }
        }
        let missing = |k: &str| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: format!("missing key {k:?}"),
        };
        let text_of = |k: &str| kv.get(k).map(|(_, v)| *v);
        let number = |k: &str| -> Result<f64> {
            let (line, v) = kv.get(k).ok_or_else(|| missing(k))?;
            v.parse().map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: *line,
                message: format!("{k}: {e}"),
            })
        };
        let count = |k: &str| -> Result<usize> {
            let (line, v) = kv.get(k).ok_or_else(|| missing(k))?;
            v.parse().map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: *line,
                message: format!("{k}: {e}"),
            })
        };
        for (k, (line, _)) in &kv {
            if !KEYS.contains(k) {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: *line,
                    message: format!("unknown key {k:?}"),
                });
            }
        }
        let intrinsics = CameraIntrinsics::new(
            number("fx")?,
            number("fy")?,
            number("cx")?,
            number("cy")?,
            count("width")?,
            count("height")?,
        )?;
        let depth_scale = number("depth_scale")?;
        if !(depth_scale > 0.0 && depth_scale.is_finite()) {
            return Err(Error::InvalidArgument("depth_scale must be positive".into()));
        }
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self {
            root,
            intrinsics,
            depth_scale,
            frames_dir: text_of("frames_dir").ok_or_else(|| missing("frames_dir"))?.into(),
            flow_dir: text_of("flow_dir").map(PathBuf::from),
            gt_traj: text_of("gt_traj").map(PathBuf::from),
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn to_text(&self) -> String {
        let k = &self.intrinsics;
        let mut s = String::new();
        let _ = writeln!(s, "fx = {}\nfy = {}\ncx = {}\ncy = {}", k.fx, k.fy, k.cx, k.cy);
        let _ = writeln!(s, "width = {}\nheight = {}", k.width, k.height);
        let _ = writeln!(s, "depth_scale = {}", self.depth_scale);
        let _ = writeln!(s, "frames_dir = {}", self.frames_dir.display());
        if let Some(d) = &self.flow_dir {
            let _ = writeln!(s, "flow_dir = {}", d.display());
        }
        if let Some(t) = &self.gt_traj {
            let _ = writeln!(s, "gt_traj = {}", t.display());
        }
        s
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.root.join(p)
    }

    /// Frame indices found in the frames directory, checked to run 0..n.
    pub fn frame_indices(&self) -> Result<Vec<usize>> {
        let dir = self.resolve(&self.frames_dir);
        let entries = std::fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))?;
        let mut indices = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(&dir, e))?;
            let name = entry.file_name();
            let Some(name) = name.to_str() else { continue };
            if let Some(i) = name.strip_prefix("rgb_").and_then(|n| n.strip_suffix(".png")) {
                if let Ok(i) = i.parse::<usize>() {
                    indices.push(i);
                }
            }
        }
        indices.sort_unstable();
        if let Some((pos, i)) = indices.iter().enumerate().find(|(pos, i)| *pos != **i) {
            return Err(Error::Load {
                path: dir,
                message: format!("frame indices are not contiguous from 0: expected {pos}, found {i}"),
            });
        }
        if indices.is_empty() {
            return Err(Error::Load {
                path: dir,
                message: "no rgb_*.png frames".into(),
            });
        }
        Ok(indices)
    }

    pub fn load_frame(&self, i: usize) -> Result<Frame> {
        let dir = self.resolve(&self.frames_dir);
        let k = &self.intrinsics;
        let rgb_path = dir.join(rgb_name(i));
        let depth_path = dir.join(depth_name(i));
        let rgb = read_rgb_png(&rgb_path)?;
        let depth = read_depth_png(&depth_path, self.depth_scale)?;
        let dims = (k.width, k.height);
        for (p, d) in [(&rgb_path, rgb.dims()), (&depth_path, depth.dims())] {
            if d != dims {
                return Err(Error::Load {
                    path: p.clone(),
                    message: format!("size {d:?} differs from the manifest's {dims:?}"),
                });
            }
        }
        let mut frame = Frame::new(i, rgb, depth);
        if let Some(fd) = &self.flow_dir {
            let p = self.resolve(fd).join(flow_name(i));
            if p.exists() {
                let flow = read_flo(&p)?;
                if flow.dims() != dims {
                    return Err(Error::Load {
                        path: p,
                        message: format!("size {:?} differs from the manifest's {dims:?}", flow.dims()),
                    });
                }
                frame.flow_to_next = Some(flow);
            }
        }
        Ok(frame)
    }
}

const KEYS: [&str; 10] = ["fx", "fy", "cx", "cy", "width", "height", "depth_scale", "frames_dir", "flow_dir", "gt_traj"];

/// Intrinsics alone, for tools that need no frames.
pub fn read_intrinsics(manifest: &Path) -> Result<CameraIntrinsics> {
    Ok(SequenceManifest::read(manifest)?.intrinsics)
}

/// Loads every frame of a manifest, attaching ground-truth poses when the
/// manifest names a trajectory.
pub fn load_sequence(manifest: &Path) -> Result<(Vec<Frame>, CameraIntrinsics, Option<Trajectory>)> {
    let m = SequenceManifest::read(manifest)?;
    let mut frames = m
        .frame_indices()?
        .into_iter()
        .map(|i| m.load_frame(i))
        .collect::<Result<Vec<_>>>()?;
    let gt = m.gt_traj.as_ref().map(|p| Trajectory::read(&m.resolve(p))).transpose()?;
    if let Some(gt) = &gt {
        for f in &mut frames {
            f.pose_gt = gt.get(f.index as f64).copied();
        }
    }
    Ok((frames, m.intrinsics, gt))
}
