//! Runs the full tracking and mapping loop on a generated orbit and reports
//! trajectory error and keyframe PSNR.
//!
//! cargo run --release --example synthetic_slam -- [seed] [specular] [lambda4]

use flowsplat::eval::{ate_rmse, trajectory_length, Trajectory};
use flowsplat::slam::{run, SlamConfig};
use flowsplat::synth::{generate, SynthScene};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let seed = args.first().map(|s| s.parse()).transpose()?.unwrap_or(1);
    let specular = args.get(1).map(|s| s.parse()).transpose()?.unwrap_or(0.0);
    let scene = SynthScene {
        seed,
        specular,
        ..Default::default()
    };
    let seq = generate(&scene)?;
    let mut cfg = SlamConfig::default();
    if let Some(l4) = args.get(2) {
        cfg.weights.lambda4 = l4.parse()?;
    }
    let start = std::time::Instant::now();
    let out = run(&seq.frames, &seq.intrinsics, &cfg)?;
    let gt = Trajectory::from_poses(&seq.poses);
    let ate = ate_rmse(&out.trajectory(), &gt)?;
    let length = trajectory_length(&gt);
    println!("frames        {}", seq.frames.len());
    println!("keyframes     {:?}", out.state.keyframe_indices());
    println!("gaussians     {}", out.state.map.len());
    println!("ate           {ate:.5} ({:.2}% of {length:.3})", 100.0 * ate / length);
    println!("psnr before   {:.2} dB", out.refine.mean_before());
    println!("psnr after    {:.2} dB", out.refine.mean_after());
    let tracking: f64 = out.diagnostics.iter().map(|d| d.tracking_ms).sum::<f64>() / out.diagnostics.len() as f64;
    println!("tracking      {tracking:.1} ms/frame");
    println!("wall          {:.2} s", start.elapsed().as_secs_f64());
    for (d, (est, truth)) in out.diagnostics.iter().zip(out.state.trajectory.iter().zip(&seq.poses)) {
        let err = (est.translation() - truth.translation()).norm();
        let rot = truth.local(est).fixed_rows::<3>(0).norm();
        println!(
            "frame {:2} kf={} position error {err:.4} rotation error {rot:.4}",
            d.index, d.keyframe as u8
        );
    }
    Ok(())
}
