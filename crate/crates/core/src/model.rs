//! Shared domain types: boxes, annotations, detections and image records.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box over a continuous pixel plane.
///
/// Stored as `(xmin, ymin, xmax, ymax)` regardless of the order a file or a
/// backend prints it in; parsers normalize at the boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hbb {
    xmin: f64,
    ymin: f64,
    xmax: f64,
    ymax: f64,
}

impl Hbb {
    pub fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Result<Self> {
        if ![xmin, ymin, xmax, ymax].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite box coordinate in ({xmin}, {ymin}, {xmax}, {ymax})"
            )));
        }
        if xmin > xmax || ymin > ymax {
            return Err(Error::InvalidParameter(format!(
                "inverted box ({xmin}, {ymin}, {xmax}, {ymax})"
            )));
        }
        Ok(Self {
            xmin,
            ymin,
            xmax,
            ymax,
        })
    }

    pub fn xmin(&self) -> f64 {
        self.xmin
    }

    pub fn ymin(&self) -> f64 {
        self.ymin
    }

    pub fn xmax(&self) -> f64 {
        self.xmax
    }

    pub fn ymax(&self) -> f64 {
        self.ymax
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Overlap with `other`, or `None` when the boxes do not touch.
    pub fn intersection(&self, other: &Hbb) -> Option<Hbb> {
        let xmin = self.xmin.max(other.xmin);
        let ymin = self.ymin.max(other.ymin);
        let xmax = self.xmax.min(other.xmax);
        let ymax = self.ymax.min(other.ymax);
        (xmin <= xmax && ymin <= ymax).then_some(Hbb {
            xmin,
            ymin,
            xmax,
            ymax,
        })
    }

    pub fn scaled(&self, factor: f64) -> Hbb {
        Hbb {
            xmin: self.xmin * factor,
            ymin: self.ymin * factor,
            xmax: self.xmax * factor,
            ymax: self.ymax * factor,
        }
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Hbb {
        Hbb {
            xmin: self.xmin + dx,
            ymin: self.ymin + dy,
            xmax: self.xmax + dx,
            ymax: self.ymax + dy,
        }
    }
}

/// Intersection over union of two boxes. Degenerate pairs (zero-area union)
/// yield 0.
pub fn iou(a: &Hbb, b: &Hbb) -> f64 {
    let iw = (a.xmax.min(b.xmax) - a.xmin.max(b.xmin)).max(0.0);
    let ih = (a.ymax.min(b.ymax) - a.ymin.max(b.ymin)).max(0.0);
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    if union > 0.0 {
        inter / union
    } else {
        0.0
    }
}

/// Four corner points of a source annotation, in file order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad(pub [(f64, f64); 4]);

impl Quad {
    pub fn points(&self) -> &[(f64, f64); 4] {
        &self.0
    }

    pub fn scaled(&self, factor: f64) -> Quad {
        Quad(self.0.map(|(x, y)| (x * factor, y * factor)))
    }
}

/// Axis-aligned envelope of a quadrilateral.
pub fn hbb_from_quad(quad: &Quad) -> Result<Hbb> {
    if quad.0.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::MalformedAnnotation {
            line: 0,
            reason: "non-finite quadrilateral coordinate".into(),
        });
    }
    let (mut xmin, mut ymin) = (f64::INFINITY, f64::INFINITY);
    let (mut xmax, mut ymax) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &quad.0 {
        xmin = xmin.min(x);
        ymin = ymin.min(y);
        xmax = xmax.max(x);
        ymax = ymax.max(y);
    }
    Hbb::new(xmin, ymin, xmax, ymax)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthBox {
    pub quad: Quad,
    pub hbb: Hbb,
    pub category: String,
    pub difficult: bool,
}

impl GroundTruthBox {
    pub fn from_quad(quad: Quad, category: impl Into<String>, difficult: bool) -> Result<Self> {
        Ok(Self {
            hbb: hbb_from_quad(&quad)?,
            quad,
            category: category.into(),
            difficult,
        })
    }

    /// Ground truth whose quad is the box's own corners.
    pub fn from_hbb(hbb: Hbb, category: impl Into<String>) -> Self {
        let quad = Quad([
            (hbb.xmin, hbb.ymin),
            (hbb.xmax, hbb.ymin),
            (hbb.xmax, hbb.ymax),
            (hbb.xmin, hbb.ymax),
        ]);
        Self {
            quad,
            hbb,
            category: category.into(),
            difficult: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub hbb: Hbb,
    pub category: String,
    pub confidence: f64,
}

impl Detection {
    pub fn new(hbb: Hbb, category: impl Into<String>, confidence: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(Error::InvalidParameter(format!(
                "confidence {confidence} outside [0, 1]"
            )));
        }
        Ok(Self {
            hbb,
            category: category.into(),
            confidence,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ScaleAlgorithm {
    #[default]
    Bilinear,
    NearestNeighbor,
}

impl fmt::Display for ScaleAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScaleAlgorithm::Bilinear => "bilinear",
            ScaleAlgorithm::NearestNeighbor => "nearest-neighbor",
        })
    }
}

impl std::str::FromStr for ScaleAlgorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bilinear" => Ok(ScaleAlgorithm::Bilinear),
            "nearest" | "nearest-neighbor" => Ok(ScaleAlgorithm::NearestNeighbor),
            other => Err(Error::InvalidParameter(format!(
                "unknown scaling algorithm {other:?}"
            ))),
        }
    }
}

/// Where an image came from. Derived variants name their parent image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    Original,
    Scaled {
        parent_id: String,
        percent: f64,
        algorithm: ScaleAlgorithm,
    },
    Recompressed {
        parent_id: String,
        level: u8,
    },
    Tile {
        parent_id: String,
        offset_x: u32,
        offset_y: u32,
    },
}

impl Provenance {
    pub fn parent_id(&self) -> Option<&str> {
        match self {
            Provenance::Original => None,
            Provenance::Scaled { parent_id, .. }
            | Provenance::Recompressed { parent_id, .. }
            | Provenance::Tile { parent_id, .. } => Some(parent_id),
        }
    }

    pub fn is_original(&self) -> bool {
        matches!(self, Provenance::Original)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub id: String,
    pub width: u32,
    pub height: u32,
    pub file_size: u64,
    pub bit_depth: u8,
    pub provenance: Provenance,
}

impl ImageRecord {
    pub fn new(id: impl Into<String>, width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter("image dimensions must be >= 1".into()));
        }
        Ok(Self {
            id: id.into(),
            width,
            height,
            file_size: 0,
            bit_depth: 24,
            provenance: Provenance::Original,
        })
    }

    pub fn total_pixels(&self) -> u64 {
        total_pixels(self.width, self.height)
    }
}

pub fn total_pixels(width: u32, height: u32) -> u64 {
    u64::from(width) * u64::from(height)
}
