use flowsplat::geometry::{Frame, Gaussian, GaussianMap, Pose, Tangent};
use flowsplat::image::DepthMap;
use flowsplat::loss::LossWeights;
use flowsplat::render::{render, render_flow, RenderOptions};
use flowsplat::slam::{Objective, Term};
use nalgebra::Vector3;
use rand::Rng;

const H: f64 = 1e-6;

fn close(analytic: f64, numeric: f64) -> bool {
    (analytic - numeric).abs() <= (1e-2 * analytic.abs().max(numeric.abs())).max(1e-6)
}

/// Checks every Gaussian field and both camera tangents of the tracking
/// objective plus a flow term against central differences on one random
/// 32x24 scene of `n` Gaussians. Returns how many entries were compared and
/// how many of those had a numeric derivative above 1e-6.
pub fn check_scene(seed: u64, n: usize) -> Result<(usize, usize), String> {
    let mut rng = super::rng(seed);
    let k = super::small_intrinsics();
    let map = super::random_map(&mut rng, n);
    let truth = [Pose::identity(), Pose::identity().retract(&super::random_tangent(&mut rng, 0.03, 0.08))];
    // Targets come from a disturbed copy of the map so no residual vanishes.
    let mut target_map = map.clone();
    for g in target_map.gaussians_mut() {
        g.center += Vector3::new(rng.random_range(-0.02..0.02), rng.random_range(-0.02..0.02), rng.random_range(-0.05..0.05));
        g.color = g.color.map(|c| (c + rng.random_range(-0.1..0.1)).clamp(0.0, 1.0));
    }
    let r = render(&target_map, &truth[0], &k, &RenderOptions::default());
    let depth = DepthMap::from_fn(k.width, k.height, |x, y| if *r.alpha.get(x, y) > 0.5 { *r.depth.get(x, y) } else { 0.0 });
    let frame = Frame::new(0, r.color, depth);
    let gt_flow = render_flow(&target_map, &truth[0], &truth[1], &k);
    let cams = [
        truth[0].retract(&super::random_tangent(&mut rng, 0.01, 0.02)),
        truth[1].retract(&super::random_tangent(&mut rng, 0.01, 0.02)),
    ];

    let mut obj = Objective::new(LossWeights::default(), 0.5, Vector3::zeros());
    obj.push(Term::View { camera: 0, frame: &frame });
    obj.push(Term::Flow { from: 0, to: 1, gt: &gt_flow });
    let eval = obj.evaluate(&map, &cams, &k, None, true).map_err(|e| e.to_string())?;
    let masks = eval.masks.clone();
    let value = |m: &GaussianMap, c: &[Pose]| obj.evaluate(m, c, &k, Some(&masks), false).map(|e| e.value).map_err(|e| e.to_string());

    let mut compared = 0;
    let mut nonzero = 0;
    for cam in 0..2 {
        for j in 0..6 {
            let mut t = Tangent::zeros();
            t[j] = H;
            let mut plus = cams;
            plus[cam] = cams[cam].retract(&t);
            let mut minus = cams;
            minus[cam] = cams[cam].retract(&-t);
            let fd = (value(&map, &plus)? - value(&map, &minus)?) / (2.0 * H);
            let a = eval.cameras[cam][j];
            if !close(a, fd) {
                return Err(format!("seed {seed} camera {cam} tangent {j}: analytic {a:e} numeric {fd:e}"));
            }
            compared += 1;
            nonzero += (fd.abs() > 1e-6) as usize;
        }
    }
    type Field = (&'static str, fn(&mut Gaussian) -> &mut f64);
    let fields: [Field; 8] = [
        ("center.x", |g| &mut g.center.x),
        ("center.y", |g| &mut g.center.y),
        ("center.z", |g| &mut g.center.z),
        ("scale", |g| &mut g.scale),
        ("opacity", |g| &mut g.opacity),
        ("color.r", |g| &mut g.color.x),
        ("color.g", |g| &mut g.color.y),
        ("color.b", |g| &mut g.color.z),
    ];
    for i in 0..map.len() {
        let grad = &eval.gaussians[i];
        let analytic = [
            grad.center.x,
            grad.center.y,
            grad.center.z,
            grad.scale,
            grad.opacity,
            grad.color.x,
            grad.color.y,
            grad.color.z,
        ];
        for ((name, field), a) in fields.iter().zip(analytic) {
            let shifted = |d: f64| {
                let mut m = map.clone();
                *field(&mut m.gaussians_mut()[i]) += d;
                value(&m, &cams)
            };
            let fd = (shifted(H)? - shifted(-H)?) / (2.0 * H);
            if !close(a, fd) {
                return Err(format!("seed {seed} gaussian {i} {name}: analytic {a:e} numeric {fd:e}"));
            }
            compared += 1;
            nonzero += (fd.abs() > 1e-6) as usize;
        }
    }
    Ok((compared, nonzero))
}
