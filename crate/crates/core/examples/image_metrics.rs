//! PSNR and SSIM of a rendered frame against noisier and noisier copies.

use flowsplat::eval::{psnr, ssim};
use flowsplat::synth::{generate, SynthScene};
use rand::{Rng, SeedableRng};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seq = generate(&SynthScene::default())?;
    let clean = &seq.frames[0].rgb;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    for amplitude in [0.0, 0.01, 0.03, 0.1] {
        let noisy = clean.map(|p| p.map(|c| (c + amplitude * rng.random_range(-1.0..1.0)).clamp(0.0, 1.0)));
        println!("noise {amplitude:<5} psnr {:6.2} dB  ssim {:.4}", psnr(clean, &noisy)?, ssim(clean, &noisy)?);
    }
    Ok(())
}
