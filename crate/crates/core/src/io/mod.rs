//! Files on disk: optical flow, frames, sequence manifests, configuration
//! and map snapshots.

mod config;
mod flo;
mod frames;
mod manifest;
mod snapshot;
mod synth_dir;

pub use config::{config_to_text, parse_config, read_config, set_config_value};
pub use flo::{decode_flo, encode_flo, read_flo, write_flo, FLO_MAGIC};
pub use frames::{read_depth_png, read_rgb_png, write_depth_png, write_rgb_png};
pub use manifest::{depth_name, flow_name, load_sequence, read_intrinsics, rgb_name, SequenceManifest};
pub use snapshot::{decode_snapshot, encode_snapshot, read_snapshot, write_snapshot, SNAPSHOT_MAGIC, SNAPSHOT_VERSION};
pub use synth_dir::{synth_generate, MANIFEST_NAME};

pub(crate) fn read_bytes(path: &std::path::Path) -> crate::Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| crate::Error::io(path, e))
}

pub(crate) fn write_bytes(path: &std::path::Path, bytes: &[u8]) -> crate::Result<()> {
    std::fs::write(path, bytes).map_err(|e| crate::Error::io(path, e))
}

/// `key = value` lines with `#` comments, as `(line number, key, value)`.
pub(crate) fn key_values<'a>(text: &'a str, path: &std::path::Path) -> crate::Result<Vec<(usize, &'a str, &'a str)>> {
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(crate::Error::Parse {
                path: path.to_path_buf(),
                line: no + 1,
                message: format!("expected `key = value`, found {line:?}"),
            });
        };
        out.push((no + 1, k.trim(), v.trim()));
    }
    Ok(out)
}
