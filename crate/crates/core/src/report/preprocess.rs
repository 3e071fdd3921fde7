//! Derived datasets: scaled copies, lossless recompressions and tiles of
//! every original image, written as `<out>/images`, `<out>/labelTxt` and
//! `<out>/manifest.txt`.
//!
//! Derived ids are `<id>__s<percent>`, `<id>__z<effort>` and
//! `<id>__t<x>_<y>`.

use std::path::Path;

use super::config::PreprocessConfig;
use super::{create_dir, write_file};
use crate::annotation::{write_ground_truth, DatasetIndex};
use crate::error::{Error, Result};
use crate::model::{GroundTruthBox, ImageRecord, Provenance};
use crate::pipeline::manifest::write_manifest;
use crate::pipeline::{
    clip_annotations_to_tile, drop_alpha, encode_png, read_png, recompress_lossless, scale_image,
    split_into_squares, transform_annotations_scale, RasterImage, ScaleSpec, TileSpec,
};

struct Writer<'a> {
    images: &'a Path,
    labels: &'a Path,
    records: Vec<ImageRecord>,
}

impl Writer<'_> {
    fn emit(
        &mut self,
        id: String,
        img: &RasterImage,
        bytes: Vec<u8>,
        boxes: &[GroundTruthBox],
        provenance: Provenance,
    ) -> Result<()> {
        write_file(&self.images.join(format!("{id}.png")), &bytes)?;
        write_file(&self.labels.join(format!("{id}.txt")), write_ground_truth(boxes))?;
        let mut rec = ImageRecord::new(id, img.width(), img.height())?;
        rec.bit_depth = img.bit_depth();
        rec.file_size = bytes.len() as u64;
        rec.provenance = provenance;
        self.records.push(rec);
        Ok(())
    }
}

fn validate(cfg: &PreprocessConfig) -> Result<Option<TileSpec>> {
    for &p in &cfg.scale_percents {
        ScaleSpec::new(p, cfg.algorithm)?;
    }
    if let Some(&e) = cfg.effort_levels.iter().chain([&cfg.output_effort]).find(|&&e| e > 9) {
        return Err(Error::InvalidParameter(format!("effort {e} outside 0..=9")));
    }
    if !(0.0..=1.0).contains(&cfg.keep_fraction) {
        return Err(Error::InvalidParameter(format!(
            "keep fraction {} outside [0, 1]",
            cfg.keep_fraction
        )));
    }
    cfg.tile_side
        .map(|side| TileSpec::new(side, cfg.overlap_fraction))
        .transpose()
}

/// Derives images from every original in `dataset`. Output is deterministic,
/// so re-running over the same input rewrites identical files. Returns the
/// manifest records.
pub fn cmd_preprocess(
    dataset: &DatasetIndex,
    cfg: &PreprocessConfig,
    out: &Path,
) -> Result<Vec<ImageRecord>> {
    let tiles = validate(cfg)?;
    let images = out.join("images");
    let labels = out.join("labelTxt");
    create_dir(&images)?;
    create_dir(&labels)?;
    let mut w = Writer {
        images: &images,
        labels: &labels,
        records: Vec::new(),
    };

    for rec in dataset.images.iter().filter(|r| r.provenance.is_original()) {
        let Some(path) = dataset.path(&rec.id) else {
            return Err(Error::InvalidParameter(format!(
                "{}: no image file to preprocess",
                rec.id
            )));
        };
        let img = read_png(path)?;
        let gts = dataset.ground_truth(&rec.id);

        for &percent in &cfg.scale_percents {
            let scaled = scale_image(&img, &ScaleSpec::new(percent, cfg.algorithm)?)?;
            let bytes = encode_png(&scaled, cfg.output_effort)?;
            w.emit(
                format!("{}__s{percent}", rec.id),
                &scaled,
                bytes,
                &transform_annotations_scale(gts, percent),
                Provenance::Scaled {
                    parent_id: rec.id.clone(),
                    percent,
                    algorithm: cfg.algorithm,
                },
            )?;
        }

        if !cfg.effort_levels.is_empty() {
            let rgb = drop_alpha(&img);
            for &level in &cfg.effort_levels {
                let bytes = recompress_lossless(&rgb, level)?;
                w.emit(
                    format!("{}__z{level}", rec.id),
                    &rgb,
                    bytes,
                    gts,
                    Provenance::Recompressed {
                        parent_id: rec.id.clone(),
                        level,
                    },
                )?;
            }
        }

        if let Some(spec) = &tiles {
            for tile in split_into_squares(&img, spec)? {
                let r = tile.rect;
                let bytes = encode_png(&tile.image, cfg.output_effort)?;
                w.emit(
                    format!("{}__t{}_{}", rec.id, r.x, r.y),
                    &tile.image,
                    bytes,
                    &clip_annotations_to_tile(gts, &r, cfg.keep_fraction),
                    Provenance::Tile {
                        parent_id: rec.id.clone(),
                        offset_x: r.x,
                        offset_y: r.y,
                    },
                )?;
            }
        }
    }

    write_file(&out.join("manifest.txt"), write_manifest(&w.records))?;
    Ok(w.records)
}
