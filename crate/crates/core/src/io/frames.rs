//! 8-bit RGB and 16-bit depth PNGs.

use std::path::Path;

use image::{DynamicImage, ImageBuffer, Luma, Rgb};

use crate::error::{Error, Result};
use crate::image::{DepthMap, RgbImage};

fn load(path: &Path) -> Result<DynamicImage> {
    let bytes = super::read_bytes(path)?;
    image::load_from_memory_with_format(&bytes, image::ImageFormat::Png).map_err(|e| Error::Load {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn save(img: DynamicImage, path: &Path) -> Result<()> {
    let mut bytes = std::io::Cursor::new(Vec::new());
    img.write_to(&mut bytes, image::ImageFormat::Png).map_err(|e| Error::Load {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    super::write_bytes(path, bytes.get_ref())
}

/// Reads an 8-bit colour PNG into `[0, 1]`.
pub fn read_rgb_png(path: &Path) -> Result<RgbImage> {
    let img = load(path)?;
    if !matches!(img, DynamicImage::ImageRgb8(_) | DynamicImage::ImageRgba8(_) | DynamicImage::ImageLuma8(_)) {
        return Err(Error::Load {
            path: path.to_path_buf(),
            message: format!("expected an 8-bit image, found {:?}", img.color()),
        });
    }
    let rgb = img.to_rgb8();
    let (w, h) = rgb.dimensions();
    Ok(RgbImage::from_fn(w as usize, h as usize, |x, y| {
        rgb.get_pixel(x as u32, y as u32).0.map(|c| c as f64 / 255.0)
    }))
}

/// Colours are clamped to `[0, 1]` and rounded to the nearest level.
pub fn write_rgb_png(path: &Path, img: &RgbImage) -> Result<()> {
    let (w, h) = img.dims();
    let buf = ImageBuffer::<Rgb<u8>, _>::from_fn(w as u32, h as u32, |x, y| {
        Rgb(img.get(x as usize, y as usize).map(|c| (c.clamp(0.0, 1.0) * 255.0).round() as u8))
    });
    save(DynamicImage::ImageRgb8(buf), path)
}

/// Reads a 16-bit grayscale PNG, multiplying stored values by `scale`.
pub fn read_depth_png(path: &Path, scale: f64) -> Result<DepthMap> {
    match load(path)? {
        DynamicImage::ImageLuma16(buf) => {
            let (w, h) = buf.dimensions();
            Ok(DepthMap::from_fn(w as usize, h as usize, |x, y| {
                buf.get_pixel(x as u32, y as u32).0[0] as f64 * scale
            }))
        }
        other => Err(Error::Load {
            path: path.to_path_buf(),
            message: format!("expected 16-bit grayscale depth, found {:?}", other.color()),
        }),
    }
}

/// Stores `depth / scale` rounded and clamped to the 16-bit range.
pub fn write_depth_png(path: &Path, depth: &DepthMap, scale: f64) -> Result<()> {
    if !(scale > 0.0) {
        return Err(Error::InvalidArgument("depth scale must be positive".into()));
    }
    let (w, h) = depth.dims();
    let buf = ImageBuffer::<Luma<u16>, _>::from_fn(w as u32, h as u32, |x, y| {
        let d = *depth.get(x as usize, y as usize) / scale;
        Luma([d.round().clamp(0.0, u16::MAX as f64) as u16])
    });
    save(DynamicImage::ImageLuma16(buf), path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_scaling() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.png");
        write_depth_png(&p, &DepthMap::filled(3, 2, 5.0), 0.001).unwrap();
        let d = read_depth_png(&p, 0.001).unwrap();
        assert_eq!(d.dims(), (3, 2));
        assert!((d.get(1, 1) - 5.0).abs() < 1e-12);
        assert!(read_rgb_png(&p).is_err());
    }

    #[test]
    fn rgb_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.png");
        let img = RgbImage::from_fn(4, 3, |x, y| [x as f64 / 4.0, y as f64 / 3.0, 0.5]);
        write_rgb_png(&p, &img).unwrap();
        let back = read_rgb_png(&p).unwrap();
        for (a, b) in img.as_slice().iter().zip(back.as_slice()) {
            for c in 0..3 {
                assert!((a[c] - b[c]).abs() <= 0.5 / 255.0 + 1e-12);
            }
        }
        assert!(read_depth_png(&p, 1.0).is_err());
    }
}
