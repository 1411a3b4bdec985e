use nalgebra::{Vector3, Vector6};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::geometry::{se3_exp, CameraIntrinsics, Gaussian, GaussianMap, Pose};
use crate::image::{FlowField, Image, RgbImage};

fn k_small() -> CameraIntrinsics {
    CameraIntrinsics::new(30.0, 30.0, 15.5, 11.5, 32, 24).unwrap()
}

fn random_map(rng: &mut ChaCha8Rng, n: usize) -> GaussianMap {
    let gs = (0..n)
        .map(|_| {
            let z = rng.random_range(1.5..3.0);
            Gaussian::new(
                Vector3::new(rng.random_range(-0.6..0.6) * z, rng.random_range(-0.45..0.45) * z, z),
                rng.random_range(0.05..0.2),
                rng.random_range(0.2..0.9),
                Vector3::new(rng.random(), rng.random(), rng.random()),
            )
            .unwrap()
        })
        .collect();
    GaussianMap::new(gs).unwrap()
}

fn small_pose(rng: &mut ChaCha8Rng, mag: f64) -> Pose {
    let xi = Vector6::from_fn(|_, _| rng.random_range(-mag..mag));
    se3_exp(&xi).unwrap()
}

#[test]
fn single_gaussian_center_pixel() {
    let k = CameraIntrinsics::new(100.0, 100.0, 50.0, 50.0, 100, 100).unwrap();
    let g = Gaussian::new(Vector3::new(0.0, 0.0, 2.0), 0.1, 1.0, Vector3::new(1.0, 0.0, 0.0)).unwrap();
    let map = GaussianMap::new(vec![g]).unwrap();
    let opts = RenderOptions {
        background: Vector3::new(0.0, 0.0, 1.0),
        ..Default::default()
    };
    let out = render(&map, &Pose::identity(), &k, &opts);
    let c = out.color.get(50, 50);
    assert!((c[0] - 0.999).abs() < 1e-12);
    assert!((c[2] - 0.001).abs() < 1e-12);
    assert!((out.alpha.get(50, 50) - 0.999).abs() < 1e-12);
    assert!((out.depth.get(50, 50) - 2.0).abs() < 1e-12);
}

#[test]
fn empty_map_is_background() {
    let k = k_small();
    let opts = RenderOptions {
        background: Vector3::new(0.1, 0.2, 0.3),
        ..Default::default()
    };
    let out = render(&GaussianMap::default(), &Pose::identity(), &k, &opts);
    assert!(out.color.as_slice().iter().all(|c| *c == [0.1, 0.2, 0.3]));
    assert!(out.alpha.as_slice().iter().all(|a| *a == 0.0));
    assert!(out.depth.as_slice().iter().all(|d| *d == 0.0));
}

#[test]
fn two_layer_compositing() {
    let k = CameraIntrinsics::new(100.0, 100.0, 50.0, 50.0, 100, 100).unwrap();
    let red = Gaussian::new(Vector3::new(0.0, 0.0, 2.0), 0.1, 0.6, Vector3::new(1.0, 0.0, 0.0)).unwrap();
    let blue = Gaussian::new(Vector3::new(0.0, 0.0, 3.0), 0.1, 1.0, Vector3::new(0.0, 0.0, 1.0)).unwrap();
    let map = GaussianMap::new(vec![blue, red]).unwrap();
    let out = render(&map, &Pose::identity(), &k, &RenderOptions::default().with_contributors());
    let (w1, w2) = (0.6, 0.4 * 0.999);
    let c = out.color.get(50, 50);
    assert!((c[0] - w1).abs() < 1e-6 && (c[2] - w2).abs() < 1e-6 && c[1].abs() < 1e-12);
    let contrib = out.contributors(50, 50).unwrap();
    assert_eq!(contrib.len(), 2);
    assert_eq!(contrib[0].gaussian, 1);
    assert!((contrib[0].weight - w1).abs() < 1e-12);
    assert!((contrib[1].weight - w2).abs() < 1e-12);
    let depth = (w1 * 2.0 + w2 * 3.0) / (w1 + w2);
    assert!((out.depth.get(50, 50) - depth).abs() < 1e-12);
}

#[test]
fn weights_sum_to_alpha() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let map = random_map(&mut rng, 40);
    let k = k_small();
    let out = render(&map, &Pose::identity(), &k, &RenderOptions::default().with_contributors());
    for y in 0..k.height {
        for x in 0..k.width {
            let c = out.contributors(x, y).unwrap();
            let s: f64 = c.iter().map(|c| c.weight).sum();
            assert!(c.iter().all(|c| c.weight >= 0.0));
            assert!(s <= 1.0 + 1e-12);
            assert!((s - out.alpha.get(x, y)).abs() < 1e-6);
        }
    }
}

#[test]
fn permutation_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let map = random_map(&mut rng, 30);
    let mut shuffled = map.gaussians().to_vec();
    shuffled.shuffle(&mut rng);
    let shuffled = GaussianMap::new(shuffled).unwrap();
    let k = k_small();
    let cam = small_pose(&mut rng, 0.05);
    let a = render(&map, &cam, &k, &RenderOptions::default());
    let b = render(&shuffled, &cam, &k, &RenderOptions::default());
    for i in 0..a.color.len() {
        for c in 0..3 {
            assert!((a.color[i][c] - b.color[i][c]).abs() < 1e-12);
        }
        assert!((a.depth[i] - b.depth[i]).abs() < 1e-12);
    }
}

#[test]
fn tile_decomposition_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let map = random_map(&mut rng, 50);
    let k = CameraIntrinsics::new(40.0, 40.0, 31.5, 23.5, 64, 48).unwrap();
    let cam = small_pose(&mut rng, 0.05);
    let next = small_pose(&mut rng, 0.05);
    let tiled = RenderOptions::default().with_flow_to(next);
    let single = RenderOptions {
        tile_size: 64,
        ..tiled.clone()
    };
    let a = render(&map, &cam, &k, &tiled);
    let b = render(&map, &cam, &k, &single);
    for i in 0..a.color.len() {
        for c in 0..3 {
            assert!((a.color[i][c] - b.color[i][c]).abs() < 1e-9);
        }
        assert!((a.depth[i] - b.depth[i]).abs() < 1e-9);
        let (fa, fb) = (a.flow.as_ref().unwrap()[i], b.flow.as_ref().unwrap()[i]);
        assert!((fa[0] - fb[0]).abs() < 1e-9 && (fa[1] - fb[1]).abs() < 1e-9);
    }
}

#[test]
fn static_camera_has_zero_flow() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let map = random_map(&mut rng, 30);
    let cam = small_pose(&mut rng, 0.05);
    let flow = render_flow(&map, &cam, &cam, &k_small());
    assert!(flow.as_slice().iter().all(|f| *f == [0.0, 0.0]));
}

#[test]
fn translation_shifts_flow() {
    // One opaque Gaussian whose projection moves from (50, 50) to (53, 50).
    let k = CameraIntrinsics::new(100.0, 100.0, 50.0, 50.0, 100, 100).unwrap();
    let g = Gaussian::new(Vector3::new(0.0, 0.0, 2.0), 0.05, 1.0, Vector3::new(1.0, 1.0, 1.0)).unwrap();
    let map = GaussianMap::new(vec![g]).unwrap();
    // Moving the camera by -0.06 in x shifts the point by +3 px at depth 2.
    let moved = Pose::from_quaternion(Vector3::new(-0.06, 0.0, 0.0), Default::default());
    let flow = render_flow(&map, &Pose::identity(), &moved, &k);
    let out = render(&map, &Pose::identity(), &k, &RenderOptions::default());
    let mut covered = 0;
    for i in 0..flow.len() {
        if out.alpha[i] > 0.0 {
            covered += 1;
            assert!((flow[i][0] - 3.0).abs() < 1e-6 && flow[i][1].abs() < 1e-6);
        }
    }
    assert!(covered > 10);
}

#[test]
fn flow_drops_contributors_behind_next_camera() {
    let k = CameraIntrinsics::new(100.0, 100.0, 50.0, 50.0, 100, 100).unwrap();
    let near = Gaussian::new(Vector3::new(0.0, 0.0, 0.5), 0.01, 0.5, Vector3::new(1.0, 0.0, 0.0)).unwrap();
    let far = Gaussian::new(Vector3::new(0.0, 0.0, 3.0), 0.1, 1.0, Vector3::new(0.0, 1.0, 0.0)).unwrap();
    let map = GaussianMap::new(vec![near, far]).unwrap();
    // Next camera sits at z = 1, so the near Gaussian is behind it.
    let next = Pose::from_quaternion(Vector3::new(0.01, 0.0, 1.0), Default::default());
    let out = render(&map, &Pose::identity(), &k, &RenderOptions::default().with_flow_to(next).with_contributors());
    let flow = out.flow.as_ref().unwrap();
    let f = flow.get(50, 50);
    // Only the far Gaussian survives: its displacement, scaled by total/surviving weight.
    assert_eq!(out.contributors(50, 50).unwrap().len(), 2);
    // Only the far Gaussian survives, so the pixel carries its displacement.
    let disp = 100.0 * (-0.01) / 2.0;
    assert!((f[0] - disp).abs() < 1e-9, "{f:?}");
    assert!(f[1].abs() < 1e-12);
}

/// Linear loss `sum upstream . channels`; the backward pass must match its
/// central finite differences.
fn linear_loss(out: &RenderOutput, up: &Upstream) -> f64 {
    let mut s = 0.0;
    for i in 0..out.color.len() {
        if let Some(c) = &up.color {
            s += (0..3).map(|j| c[i][j] * out.color[i][j]).sum::<f64>();
        }
        if let Some(d) = &up.depth {
            s += d[i] * out.depth[i];
        }
        if let Some(a) = &up.alpha {
            s += a[i] * out.alpha[i];
        }
        if let (Some(f), Some(of)) = (&up.flow, &out.flow) {
            s += f[i][0] * of[i][0] + f[i][1] * of[i][1];
        }
    }
    s
}

#[test]
fn backward_matches_finite_differences_for_linear_loss() {
    let k = k_small();
    for seed in 0..4 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let map = random_map(&mut rng, 20);
        let cam = small_pose(&mut rng, 0.03);
        let next = small_pose(&mut rng, 0.03);
        let (w, h) = (k.width, k.height);
        let up = Upstream {
            color: Some(RgbImage::from_fn(w, h, |_, _| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])),
            depth: Some(Image::from_fn(w, h, |_, _| rng.random_range(-1.0..1.0))),
            alpha: Some(Image::from_fn(w, h, |_, _| rng.random_range(-1.0..1.0))),
            flow: Some(FlowField::from_fn(w, h, |_, _| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])),
        };
        let fwd = render(&map, &cam, &k, &RenderOptions::default().with_flow_to(next).with_contributors());
        // Normalized depth and flow jump where coverage starts; the losses only
        // read them where alpha > 0.5, so the upstream does the same.
        let mut up = up;
        for i in 0..fwd.alpha.len() {
            if fwd.alpha[i] <= 0.5 {
                up.depth.as_mut().unwrap()[i] = 0.0;
                up.flow.as_mut().unwrap()[i] = [0.0, 0.0];
            }
        }
        let up = up;
        let eval = |m: &GaussianMap, c: &Pose, n: &Pose| {
            let o = RenderOptions::default().with_flow_to(*n);
            linear_loss(&render(m, c, &k, &o), &up)
        };
        let grad = render_backward(&map, &fwd, &k, &up).unwrap();
        let hstep = 1e-5;
        let check = |name: &str, fd: f64, an: f64| {
            let ok = (fd - an).abs() <= 1e-3 * fd.abs().max(an.abs()) || (fd - an).abs() < 1e-6;
            assert!(ok, "seed {seed} {name}: fd {fd} analytic {an}");
        };
        for i in 0..map.len() {
            for axis in 0..3 {
                let mut p = map.clone();
                let mut m = map.clone();
                p.gaussians_mut()[i].center[axis] += hstep;
                m.gaussians_mut()[i].center[axis] -= hstep;
                let fd = (eval(&p, &cam, &next) - eval(&m, &cam, &next)) / (2.0 * hstep);
                check(&format!("g{i} center{axis}"), fd, grad.gaussians[i].center[axis]);
            }
            let mut p = map.clone();
            let mut m = map.clone();
            p.gaussians_mut()[i].scale += hstep;
            m.gaussians_mut()[i].scale -= hstep;
            let fd = (eval(&p, &cam, &next) - eval(&m, &cam, &next)) / (2.0 * hstep);
            check(&format!("g{i} scale"), fd, grad.gaussians[i].scale);
            let mut p = map.clone();
            let mut m = map.clone();
            p.gaussians_mut()[i].opacity += hstep;
            m.gaussians_mut()[i].opacity -= hstep;
            let fd = (eval(&p, &cam, &next) - eval(&m, &cam, &next)) / (2.0 * hstep);
            check(&format!("g{i} opacity"), fd, grad.gaussians[i].opacity);
            for c in 0..3 {
                let mut p = map.clone();
                let mut m = map.clone();
                p.gaussians_mut()[i].color[c] += hstep;
                m.gaussians_mut()[i].color[c] -= hstep;
                let fd = (eval(&p, &cam, &next) - eval(&m, &cam, &next)) / (2.0 * hstep);
                check(&format!("g{i} color{c}"), fd, grad.gaussians[i].color[c]);
            }
        }
        for j in 0..6 {
            let mut d = Vector6::zeros();
            d[j] = hstep;
            let fd = (eval(&map, &cam.retract(&d), &next) - eval(&map, &cam.retract(&-d), &next)) / (2.0 * hstep);
            check(&format!("camera {j}"), fd, grad.camera[j]);
            let fd = (eval(&map, &cam, &next.retract(&d)) - eval(&map, &cam, &next.retract(&-d))) / (2.0 * hstep);
            check(&format!("flow camera {j}"), fd, grad.flow_camera.unwrap()[j]);
        }
    }
}

#[test]
fn backward_requires_contributors() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let map = random_map(&mut rng, 5);
    let k = k_small();
    let out = render(&map, &Pose::identity(), &k, &RenderOptions::default());
    assert!(matches!(
        render_backward(&map, &out, &k, &Upstream::default()),
        Err(crate::Error::Precondition(_))
    ));
}

#[test]
fn zero_upstream_gives_zero_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let map = random_map(&mut rng, 10);
    let k = k_small();
    let out = render(&map, &Pose::identity(), &k, &RenderOptions::default().with_contributors());
    let up = Upstream {
        color: Some(RgbImage::new(k.width, k.height)),
        ..Default::default()
    };
    let g = render_backward(&map, &out, &k, &up).unwrap();
    assert!(g.gaussians.iter().all(|g| g.norm_squared() == 0.0));
    assert_eq!(g.camera, Vector6::zeros());
}


