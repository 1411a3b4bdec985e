//! Every loss evaluated between a frame and the render from a slightly
//! wrong pose, including how the depth losses treat a depth map scaled by a
//! constant.

use flowsplat::geometry::Tangent;
use flowsplat::image::DepthMap;
use flowsplat::loss::{loss_depth_reg, loss_flow, loss_refine, loss_rgb, loss_scale_invariant, ssim, LossWeights};
use flowsplat::render::{render, render_flow, RenderOptions};
use flowsplat::synth::{generate, SynthScene};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seq = generate(&SynthScene::default())?;
    let k = seq.intrinsics;
    let frame = &seq.frames[3];
    let truth = seq.poses[3];
    let off = truth.retract(&Tangent::new(0.0, 0.01, 0.0, 0.02, 0.0, 0.0));
    let r = render(&seq.map, &off, &k, &RenderOptions::default());
    let mask = frame.depth_mask().and(&r.alpha.map(|a| *a > 0.5));
    let w = LossWeights::default();

    println!("pixels read        {}", mask.count());
    println!("rgb L1             {:.5}", loss_rgb(&r.color, &frame.rgb, &mask)?.value);
    println!("ssim               {:.5}", ssim(&r.color, &frame.rgb)?);
    let residual = DepthMap::from_fn(k.width, k.height, |x, y| r.depth.get(x, y) - frame.depth.get(x, y));
    println!("depth reg          {:.3e}", loss_depth_reg(&residual, &mask, w.w_h, w.w_v)?.value);
    println!("scale invariant    {:.3e}", loss_scale_invariant(&r.depth, &frame.depth, &mask)?.value);
    let scaled = frame.depth.map(|d| 3.0 * d);
    println!("  against 3 x depth {:.3e}", loss_scale_invariant(&r.depth, &scaled, &mask)?.value);
    let flow = render_flow(&seq.map, &off, &seq.poses[4], &k);
    let gt = frame.flow_to_next.as_ref().expect("flow to the next frame");
    println!("flow               {:.5}", loss_flow(&flow, gt, &mask)?.value);
    let refine = loss_refine(&r.color, &frame.rgb, &r.depth, &frame.depth, &mask, w.lambda_dssim)?;
    println!("refine             {:.5}", refine.value);
    Ok(())
}
