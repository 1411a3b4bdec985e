//! Composite Gaussian flow between two true cameras of a generated orbit,
//! checked against reprojecting the rendered depth.
//!
//! cargo run --release --example gaussian_flow -- [out.flo]

use flowsplat::geometry::project_point;
use flowsplat::io::{read_flo, write_flo};
use flowsplat::render::{render, render_flow, RenderOptions};
use flowsplat::synth::{generate, SynthScene};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).map(Into::into).unwrap_or_else(|| std::env::temp_dir().join("flowsplat_flow.flo"));
    let seq = generate(&SynthScene::default())?;
    let k = seq.intrinsics;
    let (a, b) = (seq.poses[5], seq.poses[6]);
    let flow = render_flow(&seq.map, &a, &b, &k);
    let r = render(&seq.map, &a, &k, &RenderOptions::default());
    let to_b = b.world_to_camera();
    let mut errors = Vec::new();
    for y in 0..k.height {
        for x in 0..k.width {
            if *r.alpha.get(x, y) < 0.99 {
                continue;
            }
            let world = a.apply(&k.unproject(x as f64, y as f64, *r.depth.get(x, y)));
            let Some(p) = project_point(&k, &to_b, &world) else { continue };
            let f = flow.get(x, y);
            errors.push(((p.pixel.x - x as f64 - f[0]).powi(2) + (p.pixel.y - y as f64 - f[1]).powi(2)).sqrt());
        }
    }
    errors.sort_by(f64::total_cmp);
    let mean: f64 = flow.as_slice().iter().map(|f| f[0].hypot(f[1])).sum::<f64>() / flow.len() as f64;
    println!("mean flow magnitude       {mean:.3} px");
    println!("reprojection difference   median {:.4} px, 95th percentile {:.4} px", errors[errors.len() / 2], errors[errors.len() * 95 / 100]);
    write_flo(&path, &flow)?;
    let back = read_flo(&path)?;
    println!("wrote {} ({}x{})", path.display(), back.width(), back.height());
    Ok(())
}
