#![allow(dead_code, clippy::neg_cmp_op_on_partial_ord)]

pub mod flow;
pub mod gradients;

use flowsplat::geometry::{CameraIntrinsics, Gaussian, GaussianMap, Pose, Tangent};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn small_intrinsics() -> CameraIntrinsics {
    CameraIntrinsics::new(30.0, 30.0, 15.5, 11.5, 32, 24).unwrap()
}

/// `n` Gaussians scattered in front of the identity camera.
pub fn random_map(rng: &mut ChaCha8Rng, n: usize) -> GaussianMap {
    let gs = (0..n)
        .map(|_| {
            let z = rng.random_range(1.5..3.0);
            Gaussian {
                center: Vector3::new(rng.random_range(-0.6..0.6) * z, rng.random_range(-0.45..0.45) * z, z),
                scale: rng.random_range(0.08..0.2),
                opacity: rng.random_range(0.3..0.95),
                color: Vector3::new(rng.random(), rng.random(), rng.random()),
            }
        })
        .collect();
    GaussianMap::new(gs).unwrap()
}

pub fn random_tangent(rng: &mut ChaCha8Rng, rot: f64, trans: f64) -> Tangent {
    Tangent::new(
        rng.random_range(-rot..rot),
        rng.random_range(-rot..rot),
        rng.random_range(-rot..rot),
        rng.random_range(-trans..trans),
        rng.random_range(-trans..trans),
        rng.random_range(-trans..trans),
    )
}

pub fn random_pose(rng: &mut ChaCha8Rng) -> Pose {
    Pose::identity().retract(&random_tangent(rng, 3.0_f64.min(1.5), 2.0))
}
