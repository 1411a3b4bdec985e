//! Middlebury optical flow files: a float magic, width and height as `i32`,
//! then interleaved `(u, v)` rows of `f32`, all little-endian.

use std::path::Path;

use crate::error::{Error, Result};
use crate::image::FlowField;

pub const FLO_MAGIC: f32 = 202021.25;

const HEADER: usize = 12;

pub fn encode_flo(flow: &FlowField) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER + 8 * flow.len());
    out.extend_from_slice(&FLO_MAGIC.to_le_bytes());
    out.extend_from_slice(&(flow.width() as i32).to_le_bytes());
    out.extend_from_slice(&(flow.height() as i32).to_le_bytes());
    for [u, v] in flow.as_slice() {
        out.extend_from_slice(&(*u as f32).to_le_bytes());
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    out
}

fn word(bytes: &[u8], i: usize) -> [u8; 4] {
    bytes[i..i + 4].try_into().expect("four bytes")
}

/// Decodes a flow file; `path` only labels errors.
pub fn decode_flo(bytes: &[u8], path: &Path) -> Result<FlowField> {
    let bad = |message: String| Error::Format {
        path: path.to_path_buf(),
        message,
    };
    if bytes.len() < HEADER {
        return Err(bad(format!("{} bytes is shorter than the header", bytes.len())));
    }
    let magic = f32::from_le_bytes(word(bytes, 0));
    if magic != FLO_MAGIC {
        return Err(bad(format!("magic {magic} is not {FLO_MAGIC}")));
    }
    let w = i32::from_le_bytes(word(bytes, 4));
    let h = i32::from_le_bytes(word(bytes, 8));
    if w < 0 || h < 0 {
        return Err(bad(format!("negative size {w}x{h}")));
    }
    let (w, h) = (w as usize, h as usize);
    let expected = w
        .checked_mul(h)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(HEADER))
        .ok_or_else(|| bad(format!("size {w}x{h} overflows")))?;
    if bytes.len() != expected {
        return Err(bad(format!("{w}x{h} needs {expected} bytes, found {}", bytes.len())));
    }
    let data = bytes[HEADER..]
        .chunks_exact(8)
        .map(|c| {
            [
                f32::from_le_bytes(word(c, 0)) as f64,
                f32::from_le_bytes(word(c, 4)) as f64,
            ]
        })
        .collect();
    Ok(FlowField::from_vec(w, h, data))
}

pub fn write_flo(path: &Path, flow: &FlowField) -> Result<()> {
    super::write_bytes(path, &encode_flo(flow))
}

pub fn read_flo(path: &Path) -> Result<FlowField> {
    decode_flo(&super::read_bytes(path)?, path)
}
