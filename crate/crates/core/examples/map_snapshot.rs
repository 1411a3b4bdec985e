//! Saves a map to the snapshot format, loads it and renders a novel view
//! from both copies.

use flowsplat::eval::psnr;
use flowsplat::geometry::Tangent;
use flowsplat::io::{read_snapshot, write_snapshot};
use flowsplat::render::{render, RenderOptions};
use flowsplat::synth::{generate, SynthScene};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seq = generate(&SynthScene::default())?;
    let path = std::env::temp_dir().join("flowsplat_map.fgsm");
    write_snapshot(&path, &seq.map)?;
    let loaded = read_snapshot(&path)?;
    let bytes = std::fs::metadata(&path)?.len();
    println!("{} Gaussians, {bytes} bytes", loaded.len());
    let pose = seq.poses[7].retract(&Tangent::new(0.0, 0.0, 0.03, 0.0, 0.05, 0.0));
    let opts = RenderOptions::default();
    let a = render(&seq.map, &pose, &seq.intrinsics, &opts).color;
    let b = render(&loaded, &pose, &seq.intrinsics, &opts).color;
    let clamp = |img: &flowsplat::image::RgbImage| img.map(|p| p.map(|c| c.clamp(0.0, 1.0)));
    println!("novel view, original vs loaded: {:.1} dB", psnr(&clamp(&a), &clamp(&b))?);
    Ok(())
}
