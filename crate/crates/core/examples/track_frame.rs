//! Builds the first map of a generated sequence and tracks the second
//! frame with each pose solver, starting from the first camera.

use flowsplat::slam::{initialize, map_first_frame, track_from, PoseSolver, SlamConfig};
use flowsplat::synth::{generate, SynthScene};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seq = generate(&SynthScene::default())?;
    let k = seq.intrinsics;
    for solver in [PoseSolver::GaussNewton, PoseSolver::Adam] {
        let cfg = SlamConfig {
            tracking_solver: solver,
            ..Default::default()
        };
        let mut state = initialize(&seq.frames[0], &k, &cfg)?;
        map_first_frame(&mut state, &k, &cfg)?;
        let start = std::time::Instant::now();
        let t = track_from(&state, &seq.frames[1], state.trajectory[0], &k, &cfg)?;
        let err = (t.pose.translation() - seq.poses[1].translation()).norm();
        let before = seq.poses[1].translation().norm();
        println!(
            "{solver:?}: loss {:.5} -> {:.5} in {} steps, position error {before:.4} -> {err:.4}, {:.0} ms",
            t.initial_loss,
            t.final_loss,
            t.iterations,
            start.elapsed().as_secs_f64() * 1e3
        );
    }
    Ok(())
}
