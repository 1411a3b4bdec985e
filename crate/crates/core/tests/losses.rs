mod common;

use flowsplat::image::{DepthMap, FlowField, Mask, RgbImage};
use flowsplat::loss::{depth_gradient_difference, loss_depth_reg, loss_flow, loss_refine, loss_rgb, loss_scale_invariant};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const W: usize = 16;
const H: usize = 12;
const STEP: f64 = 1e-6;

fn close(analytic: f64, numeric: f64) -> bool {
    (analytic - numeric).abs() <= 1e-3 * analytic.abs().max(numeric.abs()).max(1e-6)
}

fn random_mask(rng: &mut ChaCha8Rng) -> Mask {
    Mask::from_fn(W, H, |_, _| rng.random_bool(0.8))
}

/// A value at least 1e-2 away from zero with a random sign.
fn offset(rng: &mut ChaCha8Rng) -> f64 {
    let v = rng.random_range(0.01..0.3);
    if rng.random_bool(0.5) {
        v
    } else {
        -v
    }
}

/// Depth whose neighbouring values differ by at least 1e-2.
fn stepped_depth(rng: &mut ChaCha8Rng) -> DepthMap {
    DepthMap::from_fn(W, H, |x, y| 2.0 + 0.05 * (x + 3 * y) as f64 + 0.03 * ((x * 7 + y * 5) % 4) as f64 + rng.random_range(0.0..0.001))
}

/// Central differences of `f` with respect to every entry of the scalar
/// channel slice `at` must match `grad`.
fn check_fd(name: &str, values: &mut [f64], grad: &[f64], f: &dyn Fn(&[f64]) -> f64) {
    for i in 0..values.len() {
        let v = values[i];
        values[i] = v + STEP;
        let plus = f(values);
        values[i] = v - STEP;
        let minus = f(values);
        values[i] = v;
        let fd = (plus - minus) / (2.0 * STEP);
        assert!(close(grad[i], fd), "{name} entry {i}: analytic {} numeric {fd}", grad[i]);
    }
}

fn flatten3(img: &RgbImage) -> Vec<f64> {
    img.as_slice().iter().flat_map(|p| *p).collect()
}

fn unflatten3(v: &[f64]) -> RgbImage {
    RgbImage::from_vec(W, H, v.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect())
}

#[test]
fn gradients_match_central_differences() {
    for seed in 0..3 {
        let mut rng = common::rng(seed);
        let mask = random_mask(&mut rng);

        let target = RgbImage::from_fn(W, H, |_, _| [rng.random(), rng.random(), rng.random()]);
        let rendered = target.map(|p| p.map(|c| c + offset(&mut rng)));
        let l = loss_rgb(&rendered, &target, &mask).unwrap();
        check_fd("rgb", &mut flatten3(&rendered), &flatten3(&l.grad), &|v| loss_rgb(&unflatten3(v), &target, &mask).unwrap().value);

        let depth = stepped_depth(&mut rng);
        let l = loss_depth_reg(&depth, &mask, 0.7, 1.3).unwrap();
        check_fd("depth reg", &mut depth.as_slice().to_vec(), l.grad.as_slice(), &|v| {
            loss_depth_reg(&DepthMap::from_vec(W, H, v.to_vec()), &mask, 0.7, 1.3).unwrap().value
        });

        let observed = DepthMap::from_fn(W, H, |_, _| rng.random_range(1.0..3.0));
        let l = loss_scale_invariant(&depth, &observed, &mask).unwrap();
        check_fd("scale invariant", &mut depth.as_slice().to_vec(), l.grad.as_slice(), &|v| {
            loss_scale_invariant(&DepthMap::from_vec(W, H, v.to_vec()), &observed, &mask).unwrap().value
        });

        let gt = FlowField::from_fn(W, H, |_, _| [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]);
        let flow = gt.map(|f| [f[0] + offset(&mut rng), f[1] + offset(&mut rng)]);
        let l = loss_flow(&flow, &gt, &mask).unwrap();
        let flat = |f: &FlowField| f.as_slice().iter().flat_map(|p| *p).collect::<Vec<f64>>();
        check_fd("flow", &mut flat(&flow), &flat(&l.grad), &|v| {
            let f = FlowField::from_vec(W, H, v.chunks_exact(2).map(|c| [c[0], c[1]]).collect());
            loss_flow(&f, &gt, &mask).unwrap().value
        });

        let r = loss_refine(&rendered, &target, &depth, &observed, &mask, 0.2).unwrap();
        check_fd("refine rgb", &mut flatten3(&rendered), &flatten3(&r.rgb_grad), &|v| {
            loss_refine(&unflatten3(v), &target, &depth, &observed, &mask, 0.2).unwrap().value
        });
        check_fd("refine depth", &mut depth.as_slice().to_vec(), r.depth_grad.as_slice(), &|v| {
            loss_refine(&rendered, &target, &DepthMap::from_vec(W, H, v.to_vec()), &observed, &mask, 0.2).unwrap().value
        });
    }
}

#[test]
fn masked_out_pixels_are_never_read() {
    let mut rng = common::rng(9);
    let mask = random_mask(&mut rng);
    let poison = |m: &Mask, img: &DepthMap| DepthMap::from_fn(W, H, |x, y| if *m.get(x, y) { *img.get(x, y) } else { 1e6 });
    let a = stepped_depth(&mut rng);
    let b = DepthMap::from_fn(W, H, |_, _| rng.random_range(1.0..3.0));
    let (pa, pb) = (poison(&mask, &a), poison(&mask, &b));
    assert_eq!(loss_depth_reg(&a, &mask, 1.0, 1.0).unwrap().value, loss_depth_reg(&pa, &mask, 1.0, 1.0).unwrap().value);
    assert_eq!(loss_scale_invariant(&a, &b, &mask).unwrap().value, loss_scale_invariant(&pa, &pb, &mask).unwrap().value);
    assert_eq!(depth_gradient_difference(&a, &b, &mask).unwrap().value, depth_gradient_difference(&pa, &pb, &mask).unwrap().value);

    let c = RgbImage::from_fn(W, H, |_, _| [rng.random(), rng.random(), rng.random()]);
    let d = RgbImage::from_fn(W, H, |_, _| [rng.random(), rng.random(), rng.random()]);
    let pc = RgbImage::from_fn(W, H, |x, y| if *mask.get(x, y) { *c.get(x, y) } else { [1e6; 3] });
    assert_eq!(loss_rgb(&c, &d, &mask).unwrap().value, loss_rgb(&pc, &d, &mask).unwrap().value);

    let f = FlowField::from_fn(W, H, |_, _| [rng.random(), rng.random()]);
    let g = FlowField::from_fn(W, H, |_, _| [rng.random(), rng.random()]);
    let pf = FlowField::from_fn(W, H, |x, y| if *mask.get(x, y) { *f.get(x, y) } else { [1e6; 2] });
    assert_eq!(loss_flow(&f, &g, &mask).unwrap().value, loss_flow(&pf, &g, &mask).unwrap().value);
}

#[test]
fn non_negative_and_zero_on_exact_match() {
    let mut rng = common::rng(3);
    let mask = random_mask(&mut rng);
    let img = RgbImage::from_fn(W, H, |_, _| [rng.random(), rng.random(), rng.random()]);
    let other = RgbImage::from_fn(W, H, |_, _| [rng.random(), rng.random(), rng.random()]);
    let d = stepped_depth(&mut rng);
    let e = DepthMap::from_fn(W, H, |_, _| rng.random_range(1.0..3.0));
    let f = FlowField::from_fn(W, H, |_, _| [rng.random(), rng.random()]);
    let g = FlowField::from_fn(W, H, |_, _| [rng.random(), rng.random()]);
    assert_eq!(loss_rgb(&img, &img, &mask).unwrap().value, 0.0);
    assert_eq!(loss_scale_invariant(&d, &d, &mask).unwrap().value, 0.0);
    assert_eq!(loss_flow(&f, &f, &mask).unwrap().value, 0.0);
    assert_eq!(depth_gradient_difference(&d, &d, &mask).unwrap().value, 0.0);
    assert!(loss_refine(&img, &img, &d, &d, &mask, 0.2).unwrap().value.abs() < 1e-12);
    for v in [
        loss_rgb(&img, &other, &mask).unwrap().value,
        loss_depth_reg(&d, &mask, 1.0, 1.0).unwrap().value,
        loss_scale_invariant(&d, &e, &mask).unwrap().value,
        loss_flow(&f, &g, &mask).unwrap().value,
        loss_refine(&img, &other, &d, &e, &mask, 0.2).unwrap().value,
    ] {
        assert!(v > 0.0);
    }
}

/// `mean(g^2) - mean(g)^2` summed directly, without centring.
fn scale_invariant_oracle(a: &DepthMap, b: &DepthMap, mask: &Mask) -> f64 {
    let (mut s1, mut s2, mut n) = (0.0, 0.0, 0.0);
    for y in 0..a.height() {
        for x in 0..a.width() {
            if *mask.get(x, y) && *b.get(x, y) > 0.0 {
                let g = (a.get(x, y) / b.get(x, y)).ln();
                s1 += g;
                s2 += g * g;
                n += 1.0;
            }
        }
    }
    s2 / n - (s1 / n).powi(2)
}

#[test]
fn scale_invariant_matches_direct_formula() {
    for seed in 0..10 {
        let mut rng = common::rng(40 + seed);
        let mask = random_mask(&mut rng);
        let a = DepthMap::from_fn(W, H, |_, _| rng.random_range(0.5..4.0));
        let b = DepthMap::from_fn(W, H, |_, _| if rng.random_bool(0.9) { rng.random_range(0.5..4.0) } else { 0.0 });
        let got = loss_scale_invariant(&a, &b, &mask).unwrap().value;
        assert!((got - scale_invariant_oracle(&a, &b, &mask)).abs() < 1e-12);
        for c in [0.1, 1.0, 7.3] {
            let scaled = b.map(|d| c * d);
            assert!(loss_scale_invariant(&scaled, &b, &mask).unwrap().value < 1e-12);
        }
    }
}

#[test]
fn depth_reg_closed_forms() {
    let full = Mask::filled(4, 4, true);
    let ramp = DepthMap::from_fn(4, 4, |x, _| x as f64);
    assert_eq!(loss_depth_reg(&ramp, &full, 0.7, 1.3).unwrap().value, 0.7);
    assert_eq!(loss_depth_reg(&DepthMap::filled(4, 4, 2.5), &full, 0.7, 1.3).unwrap().value, 0.0);
    let tilted = DepthMap::from_fn(4, 4, |x, y| 0.5 * x as f64 + 2.0 * y as f64);
    assert!((loss_depth_reg(&tilted, &full, 1.0, 1.0).unwrap().value - 2.5).abs() < 1e-15);
}
