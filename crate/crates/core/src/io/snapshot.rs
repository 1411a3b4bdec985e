//! Map snapshots: the bytes `FGSM`, a `u32` version and a `u32` count, then
//! per Gaussian the centre, scale, opacity and colour as eight `f32`, all
//! little-endian.

use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geometry::{Gaussian, GaussianMap};

pub const SNAPSHOT_MAGIC: [u8; 4] = *b"FGSM";
pub const SNAPSHOT_VERSION: u32 = 1;

const HEADER: usize = 12;
const RECORD: usize = 32;

pub fn encode_snapshot(map: &GaussianMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER + RECORD * map.len());
    out.extend_from_slice(&SNAPSHOT_MAGIC);
    out.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
    out.extend_from_slice(&(map.len() as u32).to_le_bytes());
    for g in map.gaussians() {
        let fields = [
            g.center.x, g.center.y, g.center.z, g.scale, g.opacity, g.color.x, g.color.y, g.color.z,
        ];
        for v in fields {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

pub fn decode_snapshot(bytes: &[u8], path: &Path) -> Result<GaussianMap> {
    let bad = |message: String| Error::Format {
        path: path.to_path_buf(),
        message,
    };
    if bytes.len() < HEADER {
        return Err(bad("shorter than the header".into()));
    }
    if bytes[..4] != SNAPSHOT_MAGIC {
        return Err(bad(format!("magic {:?}", &bytes[..4])));
    }
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("four bytes"));
    let version = u32_at(4);
    if version != SNAPSHOT_VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let count = u32_at(8) as usize;
    if bytes.len() != HEADER + RECORD * count {
        return Err(bad(format!("{count} Gaussians need {} bytes, found {}", HEADER + RECORD * count, bytes.len())));
    }
    let gaussians = bytes[HEADER..]
        .chunks_exact(RECORD)
        .map(|r| {
            let f: Vec<f64> = r.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("four bytes")) as f64).collect();
            Gaussian {
                center: Vector3::new(f[0], f[1], f[2]),
                scale: f[3],
                opacity: f[4],
                color: Vector3::new(f[5], f[6], f[7]),
            }
        })
        .collect();
    GaussianMap::new(gaussians).map_err(|e| bad(e.to_string()))
}

pub fn write_snapshot(path: &Path, map: &GaussianMap) -> Result<()> {
    super::write_bytes(path, &encode_snapshot(map))
}

pub fn read_snapshot(path: &Path) -> Result<GaussianMap> {
    decode_snapshot(&super::read_bytes(path)?, path)
}
