//! Median trajectory error over several seeds with and without the flow
//! term, and keyframe PSNR before and after global refinement.
//!
//! cargo run --release --example flow_ablation -- [seeds]

use flowsplat::eval::{ate_rmse, Trajectory};
use flowsplat::slam::{run, SlamConfig};
use flowsplat::synth::{generate, SynthScene};

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seeds: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(5);
    let mut with_flow = Vec::new();
    let mut without = Vec::new();
    for seed in 1..=seeds {
        let seq = generate(&SynthScene { seed, ..Default::default() })?;
        let gt = Trajectory::from_poses(&seq.poses);
        for (lambda4, errors) in [(SlamConfig::default().weights.lambda4, &mut with_flow), (0.0, &mut without)] {
            let mut cfg = SlamConfig::default();
            cfg.weights.lambda4 = lambda4;
            let out = run(&seq.frames, &seq.intrinsics, &cfg)?;
            let ate = ate_rmse(&out.trajectory(), &gt)?;
            println!(
                "seed {seed} lambda4 {lambda4}: ate {ate:.5}, psnr {:.2} -> {:.2} dB",
                out.refine.mean_before(),
                out.refine.mean_after()
            );
            errors.push(ate);
        }
    }
    println!("median ate with flow {:.5}, without {:.5}", median(with_flow), median(without));
    Ok(())
}
