mod common;

use std::path::Path;

use flowsplat::eval::{ate_rmse, depth_rmse, psnr, ssim, Trajectory};
use flowsplat::geometry::{project_point, se3_exp, se3_log, CameraIntrinsics, Pose, Tangent};
use flowsplat::image::{DepthMap, Mask, RgbImage};
use nalgebra::{Matrix3, Matrix4, Quaternion, UnitQuaternion, Vector3};
use proptest::prelude::*;
use rand::Rng;

fn tangent(max_angle: f64) -> impl Strategy<Value = Tangent> {
    (
        prop::array::uniform3(-1.0..1.0f64),
        0.0..max_angle,
        prop::array::uniform3(-5.0..5.0f64),
    )
        .prop_filter("direction", |(d, _, _)| Vector3::from(*d).norm() > 1e-3)
        .prop_map(|(d, angle, v)| {
            let w = Vector3::from(d).normalize() * angle;
            Tangent::new(w.x, w.y, w.z, v[0], v[1], v[2])
        })
}

fn pose() -> impl Strategy<Value = Pose> {
    tangent(3.0).prop_map(|t| se3_exp(&t).unwrap())
}

fn pose_diff(a: &Pose, b: &Pose) -> f64 {
    (a.rotation() - b.rotation()).amax().max((a.translation() - b.translation()).amax())
}

proptest! {
    #[test]
    fn log_inverts_exp(t in tangent(3.0)) {
        let back = se3_log(&se3_exp(&t).unwrap());
        prop_assert!((back - t).amax() < 1e-9, "{t:?} -> {back:?}");
    }

    #[test]
    fn compose_is_associative(a in pose(), b in pose(), c in pose()) {
        let left = a.compose(&b).compose(&c);
        let right = a.compose(&b.compose(&c));
        prop_assert!(pose_diff(&left, &right) < 1e-12);
    }

    #[test]
    fn identity_and_inverse(a in pose()) {
        prop_assert!(pose_diff(&a.compose(&Pose::identity()), &a) < 1e-12);
        prop_assert!(pose_diff(&Pose::identity().compose(&a), &a) < 1e-12);
        prop_assert!(pose_diff(&a.compose(&a.inverse()), &Pose::identity()) < 1e-12);
    }

    #[test]
    fn retract_then_local(a in pose(), t in tangent(1.0)) {
        let step = t * 0.1;
        prop_assert!((a.local(&a.retract(&step)) - step).amax() < 1e-9);
    }

    /// Scaling the world and the camera translation together leaves
    /// pixels unchanged and scales depth.
    #[test]
    fn projection_scale_covariance(
        p in prop::array::uniform3(-1.0..1.0f64),
        z in 0.5..5.0f64,
        s in 0.1..10.0f64,
        cam in tangent(0.2),
    ) {
        let k = CameraIntrinsics::new(80.0, 70.0, 40.0, 30.0, 80, 60).unwrap();
        let w2c = se3_exp(&(cam * 0.1)).unwrap();
        let x = Vector3::new(p[0], p[1], z + p[2] * 0.1);
        let Some(a) = project_point(&k, &w2c, &x) else { return Ok(()) };
        let scaled = Pose::new(*w2c.rotation(), w2c.translation() * s).unwrap();
        let b = project_point(&k, &scaled, &(x * s)).unwrap();
        prop_assert!((a.pixel - b.pixel).amax() < 1e-9);
        prop_assert!((a.depth * s - b.depth).abs() < 1e-9 * s.max(1.0));
    }
}

#[test]
fn pinhole_by_hand() {
    // u = 100 * 0.5 / 2 + 64 = 89, v = 90 * -0.2 / 2 + 48 = 39
    let k = CameraIntrinsics::new(100.0, 90.0, 64.0, 48.0, 128, 96).unwrap();
    let p = project_point(&k, &Pose::identity(), &Vector3::new(0.5, -0.2, 2.0)).unwrap();
    assert_eq!((p.pixel.x, p.pixel.y, p.depth), (89.0, 39.0, 2.0));
    // A camera moved 1 along +x sees the point 1 to the left.
    let c2w = Pose::new(Matrix3::identity(), Vector3::new(1.0, 0.0, 0.0)).unwrap();
    let p = project_point(&k, &c2w.world_to_camera(), &Vector3::new(0.5, -0.2, 2.0)).unwrap();
    assert!((p.pixel.x - 39.0).abs() < 1e-12);
    assert!(project_point(&k, &Pose::identity(), &Vector3::new(0.0, 0.0, -1.0)).is_none());
}

/// Rigid alignment by Horn's closed-form quaternion method.
fn horn_ate(est: &[Vector3<f64>], gt: &[Vector3<f64>]) -> f64 {
    let n = est.len() as f64;
    let me = est.iter().sum::<Vector3<f64>>() / n;
    let mg = gt.iter().sum::<Vector3<f64>>() / n;
    let mut s = Matrix3::zeros();
    for (a, b) in est.iter().zip(gt) {
        s += (a - me) * (b - mg).transpose();
    }
    let (sxx, sxy, sxz) = (s[(0, 0)], s[(0, 1)], s[(0, 2)]);
    let (syx, syy, syz) = (s[(1, 0)], s[(1, 1)], s[(1, 2)]);
    let (szx, szy, szz) = (s[(2, 0)], s[(2, 1)], s[(2, 2)]);
    #[rustfmt::skip]
    let nm = Matrix4::new(
        sxx + syy + szz, syz - szy, szx - sxz, sxy - syx,
        syz - szy, sxx - syy - szz, sxy + syx, szx + sxz,
        szx - sxz, sxy + syx, -sxx + syy - szz, syz + szy,
        sxy - syx, szx + sxz, syz + szy, -sxx - syy + szz,
    );
    let eig = nm.symmetric_eigen();
    let best = eig.eigenvalues.imax();
    let q = eig.eigenvectors.column(best);
    let r = UnitQuaternion::from_quaternion(Quaternion::new(q[0], q[1], q[2], q[3]));
    let sum: f64 = est.iter().zip(gt).map(|(a, b)| (r * (a - me) + mg - b).norm_squared()).sum();
    (sum / n).sqrt()
}

fn random_trajectory(rng: &mut rand_chacha::ChaCha8Rng, n: usize, noise: f64) -> (Trajectory, Trajectory) {
    let gt: Vec<Pose> = (0..n).map(|_| common::random_pose(rng)).collect();
    let est: Vec<Pose> = gt.iter().map(|p| p.retract(&common::random_tangent(rng, noise, noise))).collect();
    (Trajectory::from_poses(&est), Trajectory::from_poses(&gt))
}

#[test]
fn ate_matches_quaternion_alignment() {
    for seed in 0..20 {
        let mut rng = common::rng(seed);
        let (est, gt) = random_trajectory(&mut rng, 30, 0.1);
        let positions = |t: &Trajectory| t.poses().iter().map(|p| *p.translation()).collect::<Vec<_>>();
        let oracle = horn_ate(&positions(&est), &positions(&gt));
        let got = ate_rmse(&est, &gt).unwrap();
        assert!((got - oracle).abs() < 1e-6, "seed {seed}: {got} vs {oracle}");
    }
}

#[test]
fn ate_is_rigid_invariant() {
    for seed in 0..20 {
        let mut rng = common::rng(100 + seed);
        let (est, gt) = random_trajectory(&mut rng, 25, 0.05);
        let g = common::random_pose(&mut rng);
        let moved = Trajectory::from_poses(&est.poses().iter().map(|p| g.compose(p)).collect::<Vec<_>>());
        let a = ate_rmse(&est, &gt).unwrap();
        let b = ate_rmse(&moved, &gt).unwrap();
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        assert!(ate_rmse(&gt, &gt).unwrap() < 1e-9);
    }
}

#[test]
fn psnr_closed_forms() {
    let a = RgbImage::filled(8, 6, [0.5; 3]);
    let b = a.map(|p| p.map(|c| c + 0.1));
    assert!((psnr(&a, &b).unwrap() - 20.0).abs() < 1e-9);
    assert_eq!(psnr(&a, &a).unwrap(), 100.0);
    let mut rng = common::rng(5);
    let base = RgbImage::from_fn(16, 12, |_, _| [rng.random(), rng.random(), rng.random()]);
    let dirs = RgbImage::from_fn(16, 12, |_, _| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]);
    let mut last = f64::INFINITY;
    for sigma in [0.01, 0.03, 0.1, 0.3] {
        let noisy = RgbImage::from_fn(16, 12, |x, y| {
            let (p, d) = (base.get(x, y), dirs.get(x, y));
            [p[0] + sigma * d[0], p[1] + sigma * d[1], p[2] + sigma * d[2]]
        });
        let v = psnr(&base, &noisy).unwrap();
        assert!(v < last);
        last = v;
    }
}

#[test]
fn ssim_closed_forms() {
    let (c1, c2) = (0.01f64.powi(2), 0.03f64.powi(2));
    let black = RgbImage::filled(16, 16, [0.0; 3]);
    let white = RgbImage::filled(16, 16, [1.0; 3]);
    let expected = c1 * c2 / ((1.0 + c1) * c2);
    assert!((ssim(&black, &white).unwrap() - expected).abs() < 1e-12);
    assert!((ssim(&white, &white).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn depth_rmse_matches_loop() {
    let mut rng = common::rng(8);
    for _ in 0..10 {
        let a = DepthMap::from_fn(20, 15, |_, _| rng.random_range(0.0..5.0));
        let b = DepthMap::from_fn(20, 15, |_, _| rng.random_range(0.0..5.0));
        let m = Mask::from_fn(20, 15, |_, _| rng.random_bool(0.6));
        let (mut sum, mut n) = (0.0, 0.0);
        for y in 0..15 {
            for x in 0..20 {
                if *m.get(x, y) {
                    sum += (a.get(x, y) - b.get(x, y)).powi(2);
                    n += 1.0;
                }
            }
        }
        assert!((depth_rmse(&a, &b, &m).unwrap() - (sum / n).sqrt()).abs() < 1e-12);
    }
    let a = DepthMap::filled(4, 4, 1.0);
    let full = Mask::filled(4, 4, true);
    assert_eq!(depth_rmse(&a, &a.map(|d| d + 2.0), &full).unwrap(), 2.0);
    assert!(depth_rmse(&a, &a, &Mask::new(4, 4)).is_err());
}

#[test]
fn tum_round_trip() {
    let mut rng = common::rng(11);
    let mut traj = Trajectory::new();
    let mut stamp = 0.0;
    for _ in 0..50 {
        stamp += rng.random_range(0.01..1.0);
        traj.push(stamp, common::random_pose(&mut rng)).unwrap();
    }
    let back = Trajectory::parse_tum(&traj.to_tum(), Path::new("t")).unwrap();
    assert_eq!(back.len(), 50);
    for ((s, p), (t, q)) in traj.iter().zip(back.iter()) {
        assert_eq!(s, t);
        assert!(pose_diff(p, q) < 1e-12);
    }
}

#[test]
fn tum_identity_line() {
    let traj = Trajectory::from_poses(&[Pose::identity()]);
    assert_eq!(traj.to_tum(), "# stamp tx ty tz qx qy qz qw\n0 0 0 0 0 0 0 1\n");
}
