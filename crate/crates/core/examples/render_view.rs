//! Renders a synthetic map from its first camera and from a nearby novel
//! pose, writing colour and depth PNGs.
//!
//! cargo run --release --example render_view -- [out_dir]

use std::path::PathBuf;

use flowsplat::geometry::Tangent;
use flowsplat::io::{write_depth_png, write_rgb_png};
use flowsplat::render::{render, RenderOptions};
use flowsplat::synth::{generate, SynthScene, DEPTH_SCALE};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out: PathBuf = std::env::args().nth(1).map(Into::into).unwrap_or_else(|| std::env::temp_dir().join("flowsplat_render"));
    std::fs::create_dir_all(&out)?;
    let seq = generate(&SynthScene::default())?;
    let k = seq.intrinsics;
    let novel = seq.poses[0].retract(&Tangent::new(0.0, 0.05, 0.0, 0.1, 0.0, 0.0));
    for (name, pose) in [("first", seq.poses[0]), ("novel", novel)] {
        let r = render(&seq.map, &pose, &k, &RenderOptions::default());
        let covered = r.alpha.as_slice().iter().filter(|a| **a > 0.5).count();
        println!("{name}: {} of {} pixels covered", covered, k.num_pixels());
        write_rgb_png(&out.join(format!("{name}_rgb.png")), &r.color)?;
        write_depth_png(&out.join(format!("{name}_depth.png")), &r.depth, DEPTH_SCALE)?;
    }
    println!("wrote {}", out.display());
    Ok(())
}
