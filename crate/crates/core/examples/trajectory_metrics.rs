//! Aligned trajectory error: a noisy copy of a trajectory, moved by a rigid
//! transform, written and read back in TUM format.

use flowsplat::eval::{ate_rmse, trajectory_length, Trajectory};
use flowsplat::geometry::{Pose, Tangent};
use nalgebra::{Rotation3, Vector3};
use rand::{Rng, SeedableRng};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
    let truth: Vec<Pose> = (0..30)
        .map(|i| {
            let s = i as f64 / 29.0;
            Pose::identity().retract(&Tangent::new(0.1 * s, 0.2 * s, 0.0, s, (3.0 * s).sin(), 0.3 * s))
        })
        .collect();
    let moved = Pose::new(*Rotation3::from_euler_angles(0.3, -0.2, 1.1).matrix(), Vector3::new(5.0, -1.0, 2.0))?;
    let estimate: Vec<Pose> = truth
        .iter()
        .map(|p| {
            let noise = Vector3::from_fn(|_, _| rng.random_range(-0.01..0.01));
            let noisy = Pose::new(*p.rotation(), p.translation() + noise).expect("valid rotation");
            moved.compose(&noisy)
        })
        .collect();

    let path = std::env::temp_dir().join("flowsplat_estimate.txt");
    Trajectory::from_poses(&estimate).write(&path)?;
    let est = Trajectory::read(&path)?;
    let gt = Trajectory::from_poses(&truth);
    println!("length          {:.3}", trajectory_length(&gt));
    println!("ate after align {:.5}", ate_rmse(&est, &gt)?);
    println!("ate of truth    {:.1e}", ate_rmse(&Trajectory::from_poses(&truth.iter().map(|p| moved.compose(p)).collect::<Vec<_>>()), &gt)?);
    Ok(())
}
