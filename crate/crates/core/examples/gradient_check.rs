//! Analytic gradients of a tracking-plus-flow objective against central
//! finite differences on a small random scene.

use flowsplat::geometry::{Gaussian, GaussianMap, Pose, Tangent};
use flowsplat::loss::LossWeights;
use flowsplat::render::render_flow;
use flowsplat::slam::{Objective, Term};
use flowsplat::synth::{generate, SynthScene};
use nalgebra::Vector3;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seq = generate(&SynthScene {
        gaussians: 60,
        width: 32,
        height: 24,
        frames: 2,
        ..Default::default()
    })?;
    let k = seq.intrinsics;
    let cams = [seq.poses[0].retract(&Tangent::new(0.002, -0.001, 0.0, 0.01, 0.0, 0.0)), seq.poses[1]];
    let flow = render_flow(&seq.map, &seq.poses[0], &seq.poses[1], &k);
    let mut obj = Objective::new(LossWeights::default(), 0.5, Vector3::zeros());
    obj.push(Term::View { camera: 0, frame: &seq.frames[0] });
    obj.push(Term::Flow { from: 0, to: 1, gt: &flow });
    let eval = obj.evaluate(&seq.map, &cams, &k, None, true)?;
    // Masks stay frozen so the finite differences see a smooth function.
    let masks = eval.masks.clone();
    let value = |map: &GaussianMap, cams: &[Pose]| obj.evaluate(map, cams, &k, Some(&masks), false).map(|e| e.value);
    let h = 1e-6;

    println!("objective {:.6}", eval.value);
    for j in 0..6 {
        let mut t = Tangent::zeros();
        t[j] = h;
        let plus = value(&seq.map, &[cams[0].retract(&t), cams[1]])?;
        let minus = value(&seq.map, &[cams[0].retract(&-t), cams[1]])?;
        println!("pose[{j}]      analytic {:+.6e}  numeric {:+.6e}", eval.cameras[0][j], (plus - minus) / (2.0 * h));
    }
    let g = (0..seq.map.len()).max_by(|a, b| eval.gaussians[*a].norm_squared().total_cmp(&eval.gaussians[*b].norm_squared())).unwrap_or(0);
    let perturbed = |f: &dyn Fn(&mut Gaussian)| -> Result<f64, flowsplat::Error> {
        let mut map = seq.map.clone();
        f(&mut map.gaussians_mut()[g]);
        value(&map, &cams)
    };
    for axis in 0..3 {
        let plus = perturbed(&|q| q.center[axis] += h)?;
        let minus = perturbed(&|q| q.center[axis] -= h)?;
        println!("center[{axis}]    analytic {:+.6e}  numeric {:+.6e}", eval.gaussians[g].center[axis], (plus - minus) / (2.0 * h));
    }
    let plus = perturbed(&|q| q.scale += h)?;
    let minus = perturbed(&|q| q.scale -= h)?;
    println!("scale        analytic {:+.6e}  numeric {:+.6e}", eval.gaussians[g].scale, (plus - minus) / (2.0 * h));
    Ok(())
}
