use crate::error::{Error, Result};
use crate::image::RgbImage;

/// Side of the square Gaussian window.
pub const SSIM_WINDOW: usize = 11;
const SIGMA: f64 = 1.5;
const C1: f64 = 0.01 * 0.01;
const C2: f64 = 0.03 * 0.03;

fn window() -> [f64; SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW];
    let half = (SSIM_WINDOW / 2) as f64;
    for (i, v) in w.iter_mut().enumerate() {
        let d = i as f64 - half;
        *v = (-d * d / (2.0 * SIGMA * SIGMA)).exp();
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

/// Valid-mode separable filtering: output is (w - 10) x (h - 10).
fn filter(src: &[f64], w: usize, h: usize, k: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let ow = w + 1 - SSIM_WINDOW;
    let oh = h + 1 - SSIM_WINDOW;
    let mut tmp = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            tmp[y * ow + x] = (0..SSIM_WINDOW).map(|t| k[t] * src[y * w + x + t]).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..SSIM_WINDOW).map(|t| k[t] * tmp[(y + t) * ow + x]).sum();
        }
    }
    out
}

/// Adjoint of [`filter`]: scatters a (w - 10) x (h - 10) map back to w x h.
fn filter_adjoint(src: &[f64], w: usize, h: usize, k: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let ow = w + 1 - SSIM_WINDOW;
    let oh = h + 1 - SSIM_WINDOW;
    let mut tmp = vec![0.0; ow * h];
    for y in 0..oh {
        for x in 0..ow {
            let v = src[y * ow + x];
            for t in 0..SSIM_WINDOW {
                tmp[(y + t) * ow + x] += k[t] * v;
            }
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..ow {
            let v = tmp[y * ow + x];
            for t in 0..SSIM_WINDOW {
                out[y * w + x + t] += k[t] * v;
            }
        }
    }
    out
}

fn compute(a: &RgbImage, b: &RgbImage, want_grad: bool) -> Result<(f64, Option<RgbImage>)> {
    if !a.same_dims(b) {
        return Err(Error::InvalidArgument("ssim: shape mismatch".into()));
    }
    let (w, h) = a.dims();
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::InvalidArgument(format!(
            "ssim needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {w}x{h}"
        )));
    }
    let k = window();
    let positions = (w + 1 - SSIM_WINDOW) * (h + 1 - SSIM_WINDOW);
    let norm = 1.0 / (3 * positions) as f64;
    let mut total = 0.0;
    let mut grad = want_grad.then(|| RgbImage::new(w, h));
    for c in 0..3 {
        let pa: Vec<f64> = a.as_slice().iter().map(|p| p[c]).collect();
        let pb: Vec<f64> = b.as_slice().iter().map(|p| p[c]).collect();
        let aa: Vec<f64> = pa.iter().map(|v| v * v).collect();
        let bb: Vec<f64> = pb.iter().map(|v| v * v).collect();
        let ab: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| x * y).collect();
        let mu_a = filter(&pa, w, h, &k);
        let mu_b = filter(&pb, w, h, &k);
        let s_aa = filter(&aa, w, h, &k);
        let s_bb = filter(&bb, w, h, &k);
        let s_ab = filter(&ab, w, h, &k);
        let mut g_mu = vec![0.0; positions];
        let mut g_aa = vec![0.0; positions];
        let mut g_ab = vec![0.0; positions];
        for p in 0..positions {
            let (ma, mb) = (mu_a[p], mu_b[p]);
            let var_a = s_aa[p] - ma * ma;
            let var_b = s_bb[p] - mb * mb;
            let cov = s_ab[p] - ma * mb;
            let a1 = 2.0 * ma * mb + C1;
            let a2 = 2.0 * cov + C2;
            let b1 = ma * ma + mb * mb + C1;
            let b2 = var_a + var_b + C2;
            let s = a1 * a2 / (b1 * b2);
            total += s;
            if want_grad {
                g_mu[p] = norm * (2.0 * mb * (a2 - a1) / (b1 * b2) - 2.0 * ma * s * (1.0 / b1 - 1.0 / b2));
                g_aa[p] = norm * (-s / b2);
                g_ab[p] = norm * (2.0 * a1 / (b1 * b2));
            }
        }
        if let Some(grad) = grad.as_mut() {
            let d_mu = filter_adjoint(&g_mu, w, h, &k);
            let d_aa = filter_adjoint(&g_aa, w, h, &k);
            let d_ab = filter_adjoint(&g_ab, w, h, &k);
            for i in 0..w * h {
                grad[i][c] = d_mu[i] + 2.0 * pa[i] * d_aa[i] + pb[i] * d_ab[i];
            }
        }
    }
    Ok((total * norm, grad))
}

/// Mean SSIM over channels and valid window positions (11x11 Gaussian window,
/// sigma 1.5, unit dynamic range).
pub fn ssim(a: &RgbImage, b: &RgbImage) -> Result<f64> {
    compute(a, b, false).map(|(v, _)| v)
}

/// SSIM together with its gradient with respect to `a`.
pub fn ssim_with_grad(a: &RgbImage, b: &RgbImage) -> Result<(f64, RgbImage)> {
    compute(a, b, true).map(|(v, g)| (v, g.unwrap()))
}
