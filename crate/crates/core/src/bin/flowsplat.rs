use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nalgebra::{Quaternion, UnitQuaternion, Vector3};

use flowsplat::eval::{ate_rmse, depth_rmse, psnr, ssim, view_metrics, FrameMetrics, MetricsReport, Trajectory};
use flowsplat::geometry::Pose;
use flowsplat::io::{
    config_to_text, depth_name, load_sequence, read_config, read_depth_png, read_intrinsics, read_rgb_png,
    read_snapshot, rgb_name, synth_generate, write_depth_png, write_rgb_png, write_snapshot,
};
use flowsplat::render::{render, RenderOptions};
use flowsplat::slam::{run, write_diagnostics, SlamConfig};
use flowsplat::synth::{SynthScene, TextureMode, TrajectoryKind, DEPTH_SCALE};
use flowsplat::Error;

#[derive(Parser)]
#[command(name = "flowsplat", version, about = "Gaussian splatting SLAM with optical flow constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Track and map a sequence, then write the trajectory, map and reports.
    Run {
        #[arg(long)]
        manifest: PathBuf,
        /// `key = value` overrides of the default configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare trajectories, and optionally rendered images with targets.
    Eval {
        #[arg(long)]
        est: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Directory of `rgb_NNNNNN.png` (and optionally `depth_NNNNNN.png`) renders.
        #[arg(long, requires = "targets")]
        renders: Option<PathBuf>,
        #[arg(long, requires = "renders")]
        targets: Option<PathBuf>,
        /// Scene units per stored depth integer.
        #[arg(long, default_value_t = DEPTH_SCALE)]
        depth_scale: f64,
        /// Also write `metrics.txt` and `metrics.jsonl` here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic sequence with ground truth.
    Synth {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        frames: usize,
        /// orbit, line or static.
        #[arg(long, default_value = "orbit")]
        traj: TrajectoryKind,
        /// random-color or gradient.
        #[arg(long, default_value = "random-color")]
        texture: TextureMode,
        #[arg(long, default_value_t = 800)]
        gaussians: usize,
        #[arg(long, default_value_t = 64)]
        width: usize,
        #[arg(long, default_value_t = 48)]
        height: usize,
        /// Amplitude of a highlight that moves with the camera.
        #[arg(long, default_value_t = 0.0)]
        specular: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a saved map from a camera pose.
    Render {
        #[arg(long)]
        map: PathBuf,
        /// Camera-to-world pose as "x y z qx qy qz qw".
        #[arg(long, allow_hyphen_values = true)]
        pose: String,
        /// Manifest supplying the intrinsics.
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write a 16-bit depth PNG.
        #[arg(long)]
        depth_out: Option<PathBuf>,
    },
}

fn parse_pose(s: &str) -> Result<Pose, Error> {
    let v: Vec<f64> = s
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|e| Error::InvalidArgument(format!("pose value {t:?}: {e}"))))
        .collect::<Result<_, _>>()?;
    if v.len() != 7 || v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(format!("pose needs 7 finite numbers, found {:?}", s)));
    }
    let q = Quaternion::new(v[6], v[3], v[4], v[5]);
    if q.norm() < 1e-12 {
        return Err(Error::InvalidArgument("zero quaternion".into()));
    }
    Ok(Pose::from_quaternion(Vector3::new(v[0], v[1], v[2]), UnitQuaternion::from_quaternion(q)))
}

fn create_dir(dir: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn cmd_run(manifest: &Path, config: Option<&Path>, out: &Path) -> Result<(), Error> {
    let cfg = match config {
        Some(p) => read_config(p)?,
        None => SlamConfig::default(),
    };
    let (frames, k, gt) = load_sequence(manifest)?;
    log::info!("{} frames of {}x{}", frames.len(), k.width, k.height);
    let result = run(&frames, &k, &cfg)?;
    create_dir(out)?;
    let est = result.trajectory();
    est.write(&out.join("trajectory.txt"))?;
    write_snapshot(&out.join("map.fgsm"), &result.state.map)?;
    write_diagnostics(&out.join("diagnostics.jsonl"), &result.diagnostics)?;
    write_text(&out.join("config.txt"), &config_to_text(&cfg))?;
    let refine = serde_json::to_string(&result.refine).expect("serializable");
    write_text(&out.join("refine.json"), &(refine + "\n"))?;
    if let Some(gt) = gt {
        let keyframes = result.state.keyframe_indices();
        let poses: Vec<Pose> = keyframes.iter().map(|&i| result.state.trajectory[i]).collect();
        let views: Vec<_> = keyframes.iter().map(|&i| &frames[i]).collect();
        let mut report = MetricsReport {
            ate_rmse: Some(ate_rmse(&est, &gt)?),
            frames: view_metrics(&result.state.map, &poses, &views, &k, cfg.background)?,
            ..Default::default()
        };
        report.summarize();
        report.write(out)?;
    }
    Ok(())
}

fn cmd_eval(
    est: &Path,
    gt: &Path,
    images: Option<(&Path, &Path)>,
    depth_scale: f64,
    out: Option<&Path>,
) -> Result<(), Error> {
    let mut report = MetricsReport {
        ate_rmse: Some(ate_rmse(&Trajectory::read(est)?, &Trajectory::read(gt)?)?),
        ..Default::default()
    };
    if let Some((renders, targets)) = images {
        for i in 0.. {
            let (r, t) = (renders.join(rgb_name(i)), targets.join(rgb_name(i)));
            if !r.exists() || !t.exists() {
                break;
            }
            let (a, b) = (read_rgb_png(&r)?, read_rgb_png(&t)?);
            let mut m = FrameMetrics {
                index: i,
                psnr: Some(psnr(&a, &b)?),
                ssim: Some(ssim(&a, &b)?),
                depth_rmse: None,
            };
            let (rd, td) = (renders.join(depth_name(i)), targets.join(depth_name(i)));
            if rd.exists() && td.exists() {
                let (a, b) = (read_depth_png(&rd, depth_scale)?, read_depth_png(&td, depth_scale)?);
                let mask = b.map(|d| *d > 0.0);
                if mask.count() > 0 {
                    m.depth_rmse = Some(depth_rmse(&a, &b, &mask)?);
                }
            }
            report.frames.push(m);
        }
        report.summarize();
    }
    print!("{}", report.to_text());
    if let Some(out) = out {
        create_dir(out)?;
        report.write(out)?;
    }
    Ok(())
}

fn cmd_render(map: &Path, pose: &str, manifest: &Path, out: &Path, depth_out: Option<&Path>) -> Result<(), Error> {
    let pose = parse_pose(pose)?;
    let k = read_intrinsics(manifest)?;
    let map = read_snapshot(map)?;
    let r = render(&map, &pose, &k, &RenderOptions::default());
    write_rgb_png(out, &r.color)?;
    if let Some(p) = depth_out {
        write_depth_png(p, &r.depth, DEPTH_SCALE)?;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { manifest, config, out } => cmd_run(&manifest, config.as_deref(), &out),
        Command::Eval {
            est,
            gt,
            renders,
            targets,
            depth_scale,
            out,
        } => cmd_eval(&est, &gt, renders.as_deref().zip(targets.as_deref()), depth_scale, out.as_deref()),
        Command::Synth {
            seed,
            frames,
            traj,
            texture,
            gaussians,
            width,
            height,
            specular,
            out,
        } => {
            let scene = SynthScene {
                seed,
                frames,
                trajectory: traj,
                texture,
                gaussians,
                width,
                height,
                specular,
                ..Default::default()
            };
            synth_generate(&scene, &out).map(|_| ())
        }
        Command::Render {
            map,
            pose,
            manifest,
            out,
            depth_out,
        } => cmd_render(&map, &pose, &manifest, &out, depth_out.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
