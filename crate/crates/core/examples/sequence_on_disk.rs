//! Writes a synthetic sequence as PNGs, flow files, a TUM trajectory and a
//! manifest, then loads it back.
//!
//! cargo run --release --example sequence_on_disk -- [out_dir]

use std::path::PathBuf;

use flowsplat::io::{load_sequence, synth_generate, MANIFEST_NAME};
use flowsplat::synth::{generate, SynthScene};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out: PathBuf = std::env::args().nth(1).map(Into::into).unwrap_or_else(|| std::env::temp_dir().join("flowsplat_sequence"));
    let scene = SynthScene {
        seed: 2,
        frames: 6,
        ..Default::default()
    };
    synth_generate(&scene, &out)?;
    let (frames, k, gt) = load_sequence(&out.join(MANIFEST_NAME))?;
    let memory = generate(&scene)?;
    let mut rgb_err: f64 = 0.0;
    let mut depth_err: f64 = 0.0;
    for (a, b) in frames.iter().zip(&memory.frames) {
        for (p, q) in a.rgb.as_slice().iter().zip(b.rgb.as_slice()) {
            rgb_err = rgb_err.max((0..3).map(|c| (p[c] - q[c]).abs()).fold(0.0, f64::max));
        }
        for (p, q) in a.depth.as_slice().iter().zip(b.depth.as_slice()) {
            depth_err = depth_err.max((p - q).abs());
        }
    }
    println!("{} frames of {}x{} from {}", frames.len(), k.width, k.height, out.display());
    println!("flow files   {}", frames.iter().filter(|f| f.flow_to_next.is_some()).count());
    println!("poses        {}", gt.map_or(0, |t| t.len()));
    println!("largest rgb difference {rgb_err:.2e}, depth difference {depth_err:.2e}");
    Ok(())
}
