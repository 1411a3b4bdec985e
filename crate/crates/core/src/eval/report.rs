use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FrameMetrics {
    pub index: usize,
    pub psnr: Option<f64>,
    pub ssim: Option<f64>,
    pub depth_rmse: Option<f64>,
}

/// Summary metrics; absent entries had no data to compare against.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MetricsReport {
    pub psnr: Option<f64>,
    pub ssim: Option<f64>,
    pub depth_rmse: Option<f64>,
    pub ate_rmse: Option<f64>,
    pub frames: Vec<FrameMetrics>,
}

fn mean(v: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

impl MetricsReport {
    /// Fills the image summaries with per-frame means.
    pub fn summarize(&mut self) {
        self.psnr = mean(self.frames.iter().filter_map(|f| f.psnr));
        self.ssim = mean(self.frames.iter().filter_map(|f| f.ssim));
        self.depth_rmse = mean(self.frames.iter().filter_map(|f| f.depth_rmse));
    }

    /// `key = value` lines; per-frame entries use `frame.<index>.<metric>`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |key: &str, v: Option<f64>| {
            if let Some(v) = v {
                let _ = writeln!(s, "{key} = {v}");
            }
        };
        put("psnr", self.psnr);
        put("ssim", self.ssim);
        put("depth_rmse", self.depth_rmse);
        put("ate_rmse", self.ate_rmse);
        for f in &self.frames {
            put(&format!("frame.{}.psnr", f.index), f.psnr);
            put(&format!("frame.{}.ssim", f.index), f.ssim);
            put(&format!("frame.{}.depth_rmse", f.index), f.depth_rmse);
        }
        s
    }

    /// One JSON object per line: the summary first, then each frame.
    pub fn to_jsonl(&self) -> String {
        #[derive(Serialize)]
        struct Summary {
            psnr: Option<f64>,
            ssim: Option<f64>,
            depth_rmse: Option<f64>,
            ate_rmse: Option<f64>,
        }
        let summary = Summary {
            psnr: self.psnr,
            ssim: self.ssim,
            depth_rmse: self.depth_rmse,
            ate_rmse: self.ate_rmse,
        };
        let mut s = serde_json::to_string(&summary).expect("serializable");
        s.push('\n');
        for f in &self.frames {
            s.push_str(&serde_json::to_string(f).expect("serializable"));
            s.push('\n');
        }
        s
    }

    /// Writes `metrics.txt` and `metrics.jsonl` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let txt = dir.join("metrics.txt");
        std::fs::write(&txt, self.to_text()).map_err(|e| Error::io(&txt, e))?;
        let jsonl = dir.join("metrics.jsonl");
        std::fs::write(&jsonl, self.to_jsonl()).map_err(|e| Error::io(&jsonl, e))
    }
}
