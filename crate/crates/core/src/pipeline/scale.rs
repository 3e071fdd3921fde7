//! Linear downscaling with bilinear or nearest-neighbor resampling.

use serde::{Deserialize, Serialize};

use super::raster::RasterImage;
use crate::error::{Error, Result};
use crate::model::ScaleAlgorithm;

/// Per-axis linear scale in percent, `(0, 100]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleSpec {
    pub percent: f64,
    #[serde(default)]
    pub algorithm: ScaleAlgorithm,
}

impl ScaleSpec {
    pub fn new(percent: f64, algorithm: ScaleAlgorithm) -> Result<Self> {
        let spec = Self { percent, algorithm };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.percent > 0.0 && self.percent <= 100.0) {
            return Err(Error::InvalidParameter(format!(
                "scale percent {} outside (0, 100]",
                self.percent
            )));
        }
        Ok(())
    }
}

/// Output length of one axis: `dim · percent / 100`, rounded half away from
/// zero and clamped to at least 1.
pub fn scaled_dim(dim: u32, percent: f64) -> u32 {
    let v = (f64::from(dim) * percent / 100.0).round();
    (v as u32).max(1)
}

pub fn scaled_dims(width: u32, height: u32, percent: f64) -> (u32, u32) {
    (scaled_dim(width, percent), scaled_dim(height, percent))
}

// Center-aligned source coordinate for a destination index.
fn source_coord(dst: u32, ratio: f64) -> f64 {
    (f64::from(dst) + 0.5) * ratio - 0.5
}

pub fn scale_image(img: &RasterImage, spec: &ScaleSpec) -> Result<RasterImage> {
    spec.validate()?;
    let (dw, dh) = scaled_dims(img.width(), img.height(), spec.percent);
    let out = match spec.algorithm {
        ScaleAlgorithm::NearestNeighbor => nearest(img, dw, dh),
        ScaleAlgorithm::Bilinear => bilinear(img, dw, dh),
    };
    RasterImage::new(dw, dh, img.channels(), out)
}

fn nearest_index(dst: u32, ratio: f64, src_len: u32) -> usize {
    // closest pixel to the center-aligned coordinate: floor(src + 0.5)
    let s = (source_coord(dst, ratio) + 0.5).floor();
    (s.max(0.0) as usize).min(src_len as usize - 1)
}

fn nearest(img: &RasterImage, dw: u32, dh: u32) -> Vec<u8> {
    let c = img.channels() as usize;
    let (sw, sh) = (img.width(), img.height());
    let rx = f64::from(sw) / f64::from(dw);
    let ry = f64::from(sh) / f64::from(dh);
    let xs: Vec<usize> = (0..dw).map(|x| nearest_index(x, rx, sw)).collect();
    let src = img.data();
    let mut out = Vec::with_capacity(dw as usize * dh as usize * c);
    for y in 0..dh {
        let sy = nearest_index(y, ry, sh);
        let row = sy * sw as usize * c;
        for &sx in &xs {
            let i = row + sx * c;
            out.extend_from_slice(&src[i..i + c]);
        }
    }
    out
}

#[derive(Clone, Copy)]
struct Tap {
    lo: usize,
    hi: usize,
    frac: f64,
}

fn bilinear_tap(dst: u32, ratio: f64, src_len: u32) -> Tap {
    let max = f64::from(src_len - 1);
    let s = source_coord(dst, ratio).clamp(0.0, max);
    let lo = s.floor() as usize;
    let hi = (lo + 1).min(src_len as usize - 1);
    Tap {
        lo,
        hi,
        frac: s - lo as f64,
    }
}

fn bilinear(img: &RasterImage, dw: u32, dh: u32) -> Vec<u8> {
    let c = img.channels() as usize;
    let (sw, sh) = (img.width(), img.height());
    let rx = f64::from(sw) / f64::from(dw);
    let ry = f64::from(sh) / f64::from(dh);
    let xtaps: Vec<Tap> = (0..dw).map(|x| bilinear_tap(x, rx, sw)).collect();
    let src = img.data();
    let stride = sw as usize * c;
    let mut out = Vec::with_capacity(dw as usize * dh as usize * c);
    for y in 0..dh {
        let ty = bilinear_tap(y, ry, sh);
        let top = ty.lo * stride;
        let bottom = ty.hi * stride;
        for tx in &xtaps {
            for ch in 0..c {
                let p00 = f64::from(src[top + tx.lo * c + ch]);
                let p10 = f64::from(src[top + tx.hi * c + ch]);
                let p01 = f64::from(src[bottom + tx.lo * c + ch]);
                let p11 = f64::from(src[bottom + tx.hi * c + ch]);
                let upper = p00 + (p10 - p00) * tx.frac;
                let lower = p01 + (p11 - p01) * tx.frac;
                let v = upper + (lower - upper) * ty.frac;
                out.push(v.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    out
}
