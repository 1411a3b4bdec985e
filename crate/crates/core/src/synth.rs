//! Seeded synthetic scenes and camera sequences with exact depth, optical
//! flow and poses.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, Frame, Gaussian, GaussianMap, Pose};
use crate::image::{FlowField, Image, RgbImage};
use crate::render::{render, render_flow, RenderOptions};

/// Flow written where the scene does not cover a pixel.
pub const UNKNOWN_FLOW: f64 = 1e10;

/// Opacity below which rendered depth and flow are marked unknown.
const COVERAGE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryKind {
    /// A full circle in a plane facing the surface.
    Orbit,
    /// A straight sideways sweep with a slow yaw.
    Line,
    Static,
}

impl std::str::FromStr for TrajectoryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "orbit" => Ok(Self::Orbit),
            "line" => Ok(Self::Line),
            "static" => Ok(Self::Static),
            _ => Err(Error::InvalidArgument(format!("unknown trajectory {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TextureMode {
    RandomColor,
    Gradient,
}

impl std::str::FromStr for TextureMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random-color" => Ok(Self::RandomColor),
            "gradient" => Ok(Self::Gradient),
            _ => Err(Error::InvalidArgument(format!("unknown texture {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthScene {
    pub seed: u64,
    pub gaussians: usize,
    pub trajectory: TrajectoryKind,
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    pub texture: TextureMode,
    /// Orbit radius, or half the sweep length of a line.
    pub motion_radius: f64,
    /// Peak brightness of a highlight fixed in the image, a stand-in for a
    /// specular reflection of a light carried by the camera.
    pub specular: f64,
    /// Gaussian standard deviation as a multiple of the sampling grid step.
    pub blob_scale: f64,
    /// Amplitude of the surface's undulation around its mean depth.
    pub relief: f64,
    /// Share of a random-colour Gaussian's colour drawn independently; the
    /// rest follows a smooth random field over the surface.
    pub color_jitter: f64,
    /// Horizontal field of view in degrees.
    pub field_of_view: f64,
    /// Extra depth at the middle of the surface, falling off towards its
    /// edges like the far end of a lumen.
    pub cavity: f64,
}

impl Default for SynthScene {
    fn default() -> Self {
        Self {
            seed: 0,
            gaussians: 800,
            trajectory: TrajectoryKind::Orbit,
            frames: 20,
            width: 64,
            height: 48,
            texture: TextureMode::RandomColor,
            motion_radius: 0.1,
            specular: 0.0,
            blob_scale: 0.7,
            relief: 0.15,
            color_jitter: 0.3,
            field_of_view: 56.0,
            cavity: 2.0,
        }
    }
}

impl SynthScene {
    pub fn validate(&self) -> Result<()> {
        if self.gaussians == 0 || self.frames == 0 || self.width == 0 || self.height == 0 {
            return Err(Error::InvalidArgument("synthetic scene counts must be at least 1".into()));
        }
        if !(self.motion_radius >= 0.0) || !(0.0..=1.0).contains(&self.specular) || !(self.blob_scale > 0.0) || !(0.0..SURFACE_DEPTH).contains(&self.relief) || !(0.0..=1.0).contains(&self.color_jitter)
            || !(1.0..170.0).contains(&self.field_of_view)
            || !(self.cavity >= 0.0)
        {
            return Err(Error::InvalidArgument("bad motion radius or specular amplitude".into()));
        }
        Ok(())
    }

    pub fn intrinsics(&self) -> CameraIntrinsics {
        let f = 0.5 * self.width as f64 / (0.5 * self.field_of_view.to_radians()).tan();
        CameraIntrinsics {
            fx: f,
            fy: f,
            cx: (self.width as f64 - 1.0) / 2.0,
            cy: (self.height as f64 - 1.0) / 2.0,
            width: self.width,
            height: self.height,
        }
    }
}

/// A generated sequence held in memory.
#[derive(Debug, Clone)]
pub struct SynthSequence {
    pub scene: SynthScene,
    pub intrinsics: CameraIntrinsics,
    pub map: GaussianMap,
    pub frames: Vec<Frame>,
    pub poses: Vec<Pose>,
}

const SURFACE_DEPTH: f64 = 2.0;
const CAVITY_WIDTH: f64 = 0.6;

fn surface_z(scene: &SynthScene, x: f64, y: f64, phase: f64) -> f64 {
    let bowl = scene.cavity * (-(x * x + y * y) / (2.0 * CAVITY_WIDTH * CAVITY_WIDTH)).exp();
    SURFACE_DEPTH + bowl + scene.relief * (2.1 * x + phase).sin() * (1.7 * y - 0.5 * phase).cos() + 0.05 * x
}

fn look_at(center: Vector3<f64>, target: Vector3<f64>) -> Pose {
    let z = (target - center).normalize();
    let x = Vector3::new(0.0, 1.0, 0.0).cross(&z).normalize();
    let y = z.cross(&x);
    Pose::new(Matrix3::from_columns(&[x, y, z]), center).expect("orthonormal frame")
}

fn trajectory(scene: &SynthScene) -> Vec<Pose> {
    let r = scene.motion_radius;
    let n = scene.frames;
    (0..n)
        .map(|i| match scene.trajectory {
            TrajectoryKind::Static => Pose::identity(),
            TrajectoryKind::Orbit => {
                let th = 2.0 * PI * i as f64 / n as f64;
                let c = Vector3::new(r * th.cos() - r, r * th.sin(), 0.0);
                // Facing the surface with a gentle wobble of the viewing direction.
                let target = c + Vector3::new(0.4 * r * (2.0 * th).sin(), 0.3 * r * th.sin(), SURFACE_DEPTH);
                look_at(c, target)
            }
            TrajectoryKind::Line => {
                let s = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
                let c = Vector3::new(-r + 2.0 * r * s, 0.2 * r * s, 0.0);
                look_at(c, c + Vector3::new(0.3 * r * s, 0.0, SURFACE_DEPTH))
            }
        })
        .collect()
}

const WAVES: usize = 4;

fn sample_map(scene: &SynthScene, rng: &mut ChaCha8Rng, world_from_first: &Pose) -> GaussianMap {
    // Jittered grid over a patch just wide enough for every view.
    let r = scene.motion_radius;
    let k = scene.intrinsics();
    let reach = SURFACE_DEPTH + scene.relief;
    let hw = reach * 0.5 * k.width as f64 / k.fx + 1.5 * r + 0.2;
    let hh = reach * 0.5 * k.height as f64 / k.fy + 1.5 * r + 0.2;
    let aspect = hw / hh;
    let ny = ((scene.gaussians as f64 / aspect).sqrt().round() as usize).max(1);
    let nx = scene.gaussians.div_ceil(ny);
    let dx = 2.0 * hw / nx as f64;
    let dy = 2.0 * hh / ny as f64;
    let phase = rng.random_range(0.0..2.0 * PI);
    // Per channel, a sum of plane waves with wavelengths of a few pixels.
    let waves: Vec<[(f64, f64, f64); WAVES]> = (0..3)
        .map(|_| {
            std::array::from_fn(|_| {
                let angle = rng.random_range(0.0..PI);
                let freq = 2.0 * PI / rng.random_range(0.35..0.9);
                (freq * angle.cos(), freq * angle.sin(), rng.random_range(0.0..2.0 * PI))
            })
        })
        .collect();
    let field = |c: usize, x: f64, y: f64| {
        let sum: f64 = waves[c].iter().map(|(kx, ky, p)| (kx * x + ky * y + p).sin()).sum();
        (0.5 + 0.5 * sum / (WAVES as f64).sqrt()).clamp(0.0, 1.0)
    };
    let mut gs = Vec::with_capacity(scene.gaussians);
    for idx in 0..scene.gaussians {
        let (i, j) = (idx % nx, idx / nx);
        let x = -hw + (i as f64 + rng.random_range(0.25..0.75)) * dx;
        let y = -hh + (j as f64 + rng.random_range(0.25..0.75)) * dy;
        let z = surface_z(scene, x, y, phase);
        let color = match scene.texture {
            TextureMode::RandomColor => {
                let own = Vector3::new(rng.random::<f64>(), rng.random(), rng.random());
                let smooth = Vector3::new(field(0, x, y), field(1, x, y), field(2, x, y));
                smooth * (1.0 - scene.color_jitter) + own * scene.color_jitter
            }
            TextureMode::Gradient => Vector3::new(
                0.5 + 0.4 * (1.3 * x).sin(),
                0.5 + 0.4 * (1.1 * y + 0.7).cos(),
                0.5 + 0.3 * (x + y).sin(),
            ),
        };
        let color = color.map(|c: f64| 0.05 + 0.9 * c);
        gs.push(Gaussian {
            center: world_from_first.apply(&Vector3::new(x, y, z)),
            scale: dx.max(dy) * scene.blob_scale * rng.random_range(0.85..1.15),
            opacity: rng.random_range(0.85..1.0),
            color,
        });
    }
    GaussianMap::new(gs).expect("valid synthetic Gaussians")
}

fn quantize_rgb(img: &RgbImage) -> RgbImage {
    img.map(|p| p.map(|c| (c.clamp(0.0, 1.0) * 255.0).round() / 255.0))
}

/// Stored depth step of generated sequences.
pub const DEPTH_SCALE: f64 = 1e-4;

fn quantize_depth(d: f64) -> f64 {
    (d / DEPTH_SCALE).round().min(u16::MAX as f64) * DEPTH_SCALE
}

fn add_highlight(img: &mut RgbImage, amplitude: f64, t: usize) {
    if amplitude == 0.0 {
        return;
    }
    let (w, h) = img.dims();
    let (w, h) = (w as f64, h as f64);
    // A small wobble keeps the spot from being perfectly static.
    let cx = 0.6 * w + 0.03 * w * (0.9 * t as f64).sin();
    let cy = 0.4 * h + 0.03 * h * (0.7 * t as f64).cos();
    let s = 0.08 * w;
    for y in 0..img.height() {
        for x in 0..img.width() {
            let r2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
            let v = amplitude * (-0.5 * r2 / (s * s)).exp();
            let p = img.get_mut(x, y);
            for c in p.iter_mut() {
                *c = (*c + v).min(1.0);
            }
        }
    }
}

/// Renders the scene along its trajectory. Images and depth are quantized
/// to what the on-disk formats store.
pub fn generate(scene: &SynthScene) -> Result<SynthSequence> {
    scene.validate()?;
    let k = scene.intrinsics();
    let mut rng = ChaCha8Rng::seed_from_u64(scene.seed);
    // Everything is expressed relative to the first camera.
    let raw = trajectory(scene);
    let origin = raw[0].inverse();
    let poses: Vec<Pose> = raw.iter().map(|p| origin.compose(p)).collect();
    let map = sample_map(scene, &mut rng, &origin);
    let opts = RenderOptions::default();
    let mut frames = Vec::with_capacity(scene.frames);
    for (t, pose) in poses.iter().enumerate() {
        let out = render(&map, pose, &k, &opts);
        let mut rgb = out.color;
        add_highlight(&mut rgb, scene.specular, t);
        let depth = Image::from_fn(k.width, k.height, |x, y| {
            if *out.alpha.get(x, y) >= COVERAGE {
                quantize_depth(*out.depth.get(x, y))
            } else {
                0.0
            }
        });
        let mut frame = Frame::new(t, quantize_rgb(&rgb), depth);
        frame.pose_gt = Some(*pose);
        if t + 1 < poses.len() {
            let flow = render_flow(&map, pose, &poses[t + 1], &k);
            frame.flow_to_next = Some(FlowField::from_fn(k.width, k.height, |x, y| {
                if *out.alpha.get(x, y) >= COVERAGE {
                    *flow.get(x, y)
                } else {
                    [UNKNOWN_FLOW, UNKNOWN_FLOW]
                }
            }));
        }
        frames.push(frame);
    }
    Ok(SynthSequence {
        scene: scene.clone(),
        intrinsics: k,
        map,
        frames,
        poses,
    })
}
