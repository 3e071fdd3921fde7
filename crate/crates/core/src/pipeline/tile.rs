//! Square tiling with overlap, and the matching ground-truth remap.

use serde::{Deserialize, Serialize};

use super::raster::RasterImage;
use crate::error::{Error, Result};
use crate::model::{GroundTruthBox, Hbb, Quad};

pub const DEFAULT_OVERLAP: f64 = 0.10;
pub const DEFAULT_KEEP_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TileSpec {
    pub tile_side: u32,
    #[serde(default = "default_overlap")]
    pub overlap_fraction: f64,
}

fn default_overlap() -> f64 {
    DEFAULT_OVERLAP
}

impl TileSpec {
    pub fn new(tile_side: u32, overlap_fraction: f64) -> Result<Self> {
        let spec = Self {
            tile_side,
            overlap_fraction,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tile_side < 1 {
            return Err(Error::InvalidParameter("tile side must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.overlap_fraction) {
            return Err(Error::InvalidParameter(format!(
                "overlap fraction {} outside [0, 1)",
                self.overlap_fraction
            )));
        }
        Ok(())
    }

    /// `floor(side · (1 − overlap))`, at least 1.
    pub fn stride(&self) -> u32 {
        let raw = f64::from(self.tile_side) * (1.0 - self.overlap_fraction);
        // absorb representation error such as 10 · 0.7 = 6.999…
        ((raw + 1e-9).floor() as u32).max(1)
    }
}

/// A tile's placement inside its parent image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TileRect {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
}

impl TileRect {
    pub fn as_hbb(&self) -> Hbb {
        Hbb::new(
            f64::from(self.x),
            f64::from(self.y),
            f64::from(self.x + self.width),
            f64::from(self.y + self.height),
        )
        .expect("tile rect is well-formed")
    }
}

/// Origins along one axis: multiples of `stride`, with the last tile pulled
/// back so it ends on the image edge.
pub fn axis_origins(len: u32, side: u32, stride: u32) -> Vec<u32> {
    if side >= len {
        return vec![0];
    }
    let last = len - side;
    let mut origins = vec![0];
    loop {
        let next = origins[origins.len() - 1] + stride;
        if next >= last {
            if origins[origins.len() - 1] != last {
                origins.push(last);
            }
            return origins;
        }
        origins.push(next);
    }
}

/// Tile rectangles for an image of the given size.
///
/// An image no larger than the tile on both axes yields one whole-image
/// tile. Otherwise the side is capped at the shorter image dimension so every
/// tile stays square.
pub fn tile_layout(width: u32, height: u32, spec: &TileSpec) -> Result<Vec<TileRect>> {
    spec.validate()?;
    if spec.tile_side >= width && spec.tile_side >= height {
        return Ok(vec![TileRect {
            x: 0,
            y: 0,
            width,
            height,
        }]);
    }
    let side = spec.tile_side.min(width).min(height);
    let stride = TileSpec {
        tile_side: side,
        ..*spec
    }
    .stride();
    let xs = axis_origins(width, side, stride);
    let ys = axis_origins(height, side, stride);
    Ok(ys
        .iter()
        .flat_map(|&y| {
            xs.iter().map(move |&x| TileRect {
                x,
                y,
                width: side,
                height: side,
            })
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct Tile {
    pub rect: TileRect,
    pub image: RasterImage,
}

pub fn split_into_squares(img: &RasterImage, spec: &TileSpec) -> Result<Vec<Tile>> {
    tile_layout(img.width(), img.height(), spec)?
        .into_iter()
        .map(|rect| {
            Ok(Tile {
                image: img.crop(rect.x, rect.y, rect.width, rect.height)?,
                rect,
            })
        })
        .collect()
}

/// Intersects each box with the tile and shifts it into tile coordinates.
/// A box survives when its clipped area is at least `keep_fraction` of its
/// original area.
pub fn clip_annotations_to_tile(
    boxes: &[GroundTruthBox],
    tile: &TileRect,
    keep_fraction: f64,
) -> Vec<GroundTruthBox> {
    let bounds = tile.as_hbb();
    let (dx, dy) = (-f64::from(tile.x), -f64::from(tile.y));
    boxes
        .iter()
        .filter_map(|b| {
            let clipped = b.hbb.intersection(&bounds)?;
            if clipped.area() < keep_fraction * b.hbb.area() {
                return None;
            }
            let local = clipped.translated(dx, dy);
            let quad = if clipped == b.hbb {
                Quad(b.quad.0.map(|(x, y)| (x + dx, y + dy)))
            } else {
                GroundTruthBox::from_hbb(local, "").quad
            };
            Some(GroundTruthBox {
                quad,
                hbb: local,
                category: b.category.clone(),
                difficult: b.difficult,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gt(x0: f64, y0: f64, x1: f64, y1: f64) -> GroundTruthBox {
        GroundTruthBox::from_hbb(Hbb::new(x0, y0, x1, y1).unwrap(), "plane")
    }

    #[test]
    fn wide_image_offsets() {
        let spec = TileSpec::new(4287, 0.10).unwrap();
        assert_eq!(spec.stride(), 3858);
        let rects = tile_layout(13383, 4287, &spec).unwrap();
        let xs: Vec<u32> = rects.iter().map(|r| r.x).collect();
        assert_eq!(xs, [0, 3858, 7716, 9096]);
        assert!(rects.iter().all(|r| r.y == 0 && r.width == 4287 && r.height == 4287));
    }

    #[test]
    fn square_image_single_tile() {
        let rects = tile_layout(500, 500, &TileSpec::new(500, 0.1).unwrap()).unwrap();
        assert_eq!(
            rects,
            [TileRect {
                x: 0,
                y: 0,
                width: 500,
                height: 500
            }]
        );
    }

    #[test]
    fn small_image_is_one_whole_tile() {
        let rects = tile_layout(120, 80, &TileSpec::new(200, 0.1).unwrap()).unwrap();
        assert_eq!(rects.len(), 1);
        assert_eq!((rects[0].width, rects[0].height), (120, 80));
    }

    #[test]
    fn oversize_side_capped_to_short_axis() {
        let rects = tile_layout(300, 100, &TileSpec::new(150, 0.1).unwrap()).unwrap();
        assert!(rects.iter().all(|r| r.width == 100 && r.height == 100));
        assert_eq!(rects.last().unwrap().x, 200);
    }

    #[test]
    fn invalid_specs() {
        assert!(TileSpec::new(0, 0.1).is_err());
        assert!(TileSpec::new(10, 1.0).is_err());
        assert!(TileSpec::new(10, -0.1).is_err());
    }

    #[test]
    fn stride_survives_representation_error() {
        assert_eq!(TileSpec::new(10, 0.3).unwrap().stride(), 7);
        assert_eq!(TileSpec::new(100, 0.1).unwrap().stride(), 90);
        assert_eq!(TileSpec::new(1, 0.5).unwrap().stride(), 1);
    }

    #[test]
    fn clip_inside_outside_and_half() {
        let tile = TileRect {
            x: 100,
            y: 100,
            width: 100,
            height: 100,
        };
        let kept = clip_annotations_to_tile(&[gt(110.0, 120.0, 130.0, 140.0)], &tile, 0.5);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].hbb, Hbb::new(10.0, 20.0, 30.0, 40.0).unwrap());
        assert_eq!(kept[0].quad.points()[0], (10.0, 20.0));

        assert!(clip_annotations_to_tile(&[gt(0.0, 0.0, 50.0, 50.0)], &tile, 0.5).is_empty());

        // straddles the right edge: exactly half the area stays inside
        let half = clip_annotations_to_tile(&[gt(180.0, 150.0, 220.0, 160.0)], &tile, 0.5);
        assert_eq!(half.len(), 1);
        assert_eq!(half[0].hbb, Hbb::new(80.0, 50.0, 100.0, 60.0).unwrap());
        assert_eq!(half[0].quad.points()[2], (100.0, 60.0));

        // just under half is dropped
        let under = clip_annotations_to_tile(&[gt(181.0, 150.0, 221.0, 160.0)], &tile, 0.5);
        assert!(under.is_empty());
    }

    #[test]
    fn split_crops_pixels() {
        let data: Vec<u8> = (0..30 * 10 * 3).map(|i| (i % 256) as u8).collect();
        let img = RasterImage::new(30, 10, 3, data).unwrap();
        let tiles = split_into_squares(&img, &TileSpec::new(10, 0.1).unwrap()).unwrap();
        // stride 9: origins 0, 9, 18, then 20 snapped to the edge
        assert_eq!(tiles.len(), 4);
        assert_eq!(tiles[3].rect.x, 20);
        for t in &tiles {
            assert_eq!(t.image.pixel(0, 0), img.pixel(t.rect.x, 0));
        }
    }
}
