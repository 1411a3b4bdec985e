use flowsplat::geometry::{project_point, CameraIntrinsics, GaussianMap, Pose};
use flowsplat::render::{project_gaussian, render_flow, ALPHA_MAX, K_MAX, Q_MAX, T_MIN};
use nalgebra::Vector2;

fn kernel(q: f64) -> f64 {
    if q <= 8.0 {
        (-0.5 * q).exp()
    } else if q < Q_MAX {
        let t = q - 8.0;
        (-4.0f64).exp() * (1.0 - t).powi(2) * (1.0 + 1.5 * t)
    } else {
        0.0
    }
}

/// Loops over every Gaussian at every pixel: front to back by centre depth,
/// keeping blend weights and the centre displacement between the cameras.
pub fn brute_force_flow(map: &GaussianMap, a: &Pose, b: &Pose, k: &CameraIntrinsics) -> (Vec<[f64; 2]>, Vec<bool>) {
    let (wa, wb) = (a.world_to_camera(), b.world_to_camera());
    let mut splats: Vec<_> = map
        .gaussians()
        .iter()
        .enumerate()
        .filter_map(|(i, g)| project_gaussian(g, &wa, k).map(|s| (i, s, g.opacity)))
        .collect();
    splats.sort_by(|x, y| x.1.depth_cam.total_cmp(&y.1.depth_cam).then(x.0.cmp(&y.0)));
    let mut flow = Vec::new();
    let mut dropped_any = Vec::new();
    for y in 0..k.height {
        for x in 0..k.width {
            let mut t = 1.0;
            let mut count = 0;
            let (mut acc, mut mass) = (Vector2::zeros(), 0.0);
            let mut dropped = false;
            for (i, s, opacity) in &splats {
                let d = Vector2::new(x as f64 - s.mean2d.x, y as f64 - s.mean2d.y);
                let q = (d.transpose() * s.cov2d.try_inverse().unwrap() * d)[0];
                if q >= Q_MAX {
                    continue;
                }
                let alpha = (opacity * kernel(q)).min(ALPHA_MAX);
                let w = alpha * t;
                match project_point(k, &wb, &map.gaussians()[*i].center) {
                    Some(p) => {
                        acc += (p.pixel - s.mean2d) * w;
                        mass += w;
                    }
                    None => dropped = true,
                }
                t *= 1.0 - alpha;
                count += 1;
                if t < T_MIN || count == K_MAX {
                    break;
                }
            }
            let f = if mass > 0.0 { acc / mass } else { Vector2::zeros() };
            flow.push([f.x, f.y]);
            dropped_any.push(dropped);
        }
    }
    (flow, dropped_any)
}


/// Compares `render_flow` with the brute-force loop on `pairs` random
/// scene and pose pairs. Returns the number of pixels where a contributor
/// was dropped.
pub fn check_flow_oracle(pairs: u64) -> Result<usize, String> {
    let k = super::small_intrinsics();
    let mut dropped_pixels = 0;
    for seed in 0..pairs {
        let mut rng = super::rng(seed);
        let map = super::random_map(&mut rng, 10);
        let a = Pose::identity().retract(&super::random_tangent(&mut rng, 0.05, 0.1));
        // Some pairs move far enough to put centres behind the second camera.
        let b = a.retract(&super::random_tangent(&mut rng, 0.3, if seed % 5 == 0 { 3.0 } else { 0.3 }));
        let got = render_flow(&map, &a, &b, &k);
        let (want, dropped) = brute_force_flow(&map, &a, &b, &k);
        dropped_pixels += dropped.iter().filter(|d| **d).count();
        for (i, (g, w)) in got.as_slice().iter().zip(&want).enumerate() {
            if (0..2).any(|c| !((g[c] - w[c]).abs() < 1e-9)) {
                return Err(format!("seed {seed} pixel {i}: {g:?} vs {w:?}"));
            }
        }
    }
    Ok(dropped_pixels)
}

/// With identical poses, flow is exactly zero wherever no contributor was
/// dropped.
pub fn check_static_flow(scenes: u64) -> Result<(), String> {
    let k = super::small_intrinsics();
    for seed in 0..scenes {
        let mut rng = super::rng(100 + seed);
        let map = super::random_map(&mut rng, 10);
        let a = Pose::identity().retract(&super::random_tangent(&mut rng, 0.05, 0.1));
        let flow = render_flow(&map, &a, &a, &k);
        let (_, dropped) = brute_force_flow(&map, &a, &a, &k);
        for (i, (f, d)) in flow.as_slice().iter().zip(&dropped).enumerate() {
            if !d && *f != [0.0, 0.0] {
                return Err(format!("seed {seed} pixel {i}: {f:?}"));
            }
        }
    }
    Ok(())
}
