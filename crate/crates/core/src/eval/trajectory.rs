use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Quaternion, UnitQuaternion, Vector3};

use crate::error::{Error, Result};
use crate::geometry::Pose;

/// Camera-to-world poses keyed by strictly increasing stamps.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    entries: Vec<(f64, Pose)>,
}

impl Trajectory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Poses stamped 0, 1, 2, ...
    pub fn from_poses(poses: &[Pose]) -> Self {
        Self {
            entries: poses.iter().enumerate().map(|(i, p)| (i as f64, *p)).collect(),
        }
    }

    pub fn push(&mut self, stamp: f64, pose: Pose) -> Result<()> {
        if !stamp.is_finite() {
            return Err(Error::InvalidArgument("trajectory stamp must be finite".into()));
        }
        if let Some((last, _)) = self.entries.last() {
            if stamp <= *last {
                return Err(Error::InvalidArgument(format!(
                    "trajectory stamps must increase ({stamp} after {last})"
                )));
            }
        }
        self.entries.push((stamp, pose));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &Pose)> {
        self.entries.iter().map(|(s, p)| (*s, p))
    }

    pub fn poses(&self) -> Vec<Pose> {
        self.entries.iter().map(|(_, p)| *p).collect()
    }

    pub fn get(&self, stamp: f64) -> Option<&Pose> {
        self.entries
            .binary_search_by(|(s, _)| s.total_cmp(&stamp))
            .ok()
            .map(|i| &self.entries[i].1)
    }

    /// TUM text: one `stamp tx ty tz qx qy qz qw` line per pose.
    pub fn to_tum(&self) -> String {
        let mut s = String::from("# stamp tx ty tz qx qy qz qw\n");
        for (stamp, p) in &self.entries {
            let t = p.translation();
            let q = p.quaternion();
            let _ = writeln!(s, "{stamp} {} {} {} {} {} {} {}", t.x, t.y, t.z, q.i, q.j, q.k, q.w);
        }
        s
    }

    pub fn parse_tum(text: &str, path: &Path) -> Result<Self> {
        let mut traj = Trajectory::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                path: path.to_path_buf(),
                line: no + 1,
                message,
            };
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|v| v.parse::<f64>().map_err(|e| parse_err(format!("{v:?}: {e}"))))
                .collect::<Result<_>>()?;
            if vals.len() != 8 {
                return Err(parse_err(format!("expected 8 fields, found {}", vals.len())));
            }
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(parse_err("non-finite value".into()));
            }
            let q = Quaternion::new(vals[7], vals[4], vals[5], vals[6]);
            if q.norm() < 1e-12 {
                return Err(parse_err("zero quaternion".into()));
            }
            let pose = Pose::from_quaternion(
                Vector3::new(vals[1], vals[2], vals[3]),
                UnitQuaternion::from_quaternion(q),
            );
            traj.push(vals[0], pose).map_err(|e| parse_err(e.to_string()))?;
        }
        Ok(traj)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_tum()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_tum(&text, path)
    }
}
