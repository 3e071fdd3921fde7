//! Image modification: linear scaling, lossless recompression, square tiling
//! and the annotation transforms that keep derived images evaluable.

pub mod codec;
pub mod manifest;
pub mod raster;
pub mod scale;
pub mod tile;
pub mod transform;

pub use codec::{decode_png, encode_png, read_png, recompress_lossless, write_png, EFFORT_LEVELS};
pub use raster::{drop_alpha, RasterImage};
pub use scale::{scale_image, scaled_dims, ScaleSpec};
pub use tile::{clip_annotations_to_tile, split_into_squares, tile_layout, Tile, TileRect, TileSpec};
pub use transform::transform_annotations_scale;
