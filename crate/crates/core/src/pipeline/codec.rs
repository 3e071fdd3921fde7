//! Lossless PNG encoding and decoding.

use std::fs::{self, File};
use std::io::{BufReader, Cursor};
use std::path::Path;

use png::{BitDepth, ColorType, DeflateCompression, Transformations};

use super::raster::RasterImage;
use crate::error::{Error, Result};
use crate::model::{ImageRecord, Provenance};

/// Encoder effort levels used for the three recompression settings.
pub const EFFORT_LEVELS: [u8; 3] = [3, 6, 9];

fn codec_err(e: impl std::fmt::Display) -> Error {
    Error::Codec(e.to_string())
}

/// Encodes `img` as PNG with DEFLATE effort 0 (stored) through 9.
pub fn encode_png(img: &RasterImage, effort: u8) -> Result<Vec<u8>> {
    if effort > 9 {
        return Err(Error::InvalidParameter(format!(
            "effort {effort} outside 0..=9"
        )));
    }
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, img.width(), img.height());
        enc.set_color(match img.channels() {
            3 => ColorType::Rgb,
            _ => ColorType::Rgba,
        });
        enc.set_depth(BitDepth::Eight);
        enc.set_deflate_compression(match effort {
            0 => DeflateCompression::NoCompression,
            level => DeflateCompression::Level(level),
        });
        let mut writer = enc.write_header().map_err(codec_err)?;
        writer.write_image_data(img.data()).map_err(codec_err)?;
        writer.finish().map_err(codec_err)?;
    }
    Ok(out)
}

/// Recompression entry point: RGB input only, output decodes to the same
/// pixels.
pub fn recompress_lossless(img: &RasterImage, effort: u8) -> Result<Vec<u8>> {
    if img.channels() != 3 {
        return Err(Error::InvalidParameter(
            "recompression expects 24-bit RGB; drop alpha first".into(),
        ));
    }
    encode_png(img, effort)
}

fn decode_reader<R: std::io::BufRead + std::io::Seek>(reader: R) -> Result<RasterImage> {
    let mut dec = png::Decoder::new_with_limits(reader, png::Limits { bytes: usize::MAX });
    dec.set_transformations(Transformations::EXPAND | Transformations::STRIP_16);
    let mut reader = dec.read_info().map_err(codec_err)?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Codec("image too large".into()))?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf).map_err(codec_err)?;
    buf.truncate(info.buffer_size());
    let (w, h) = (info.width, info.height);
    let data = match info.color_type {
        ColorType::Rgb => buf,
        ColorType::Rgba => return RasterImage::new(w, h, 4, buf),
        ColorType::Grayscale => buf.iter().flat_map(|&v| [v, v, v]).collect(),
        ColorType::GrayscaleAlpha => {
            let data = buf
                .chunks_exact(2)
                .flat_map(|p| [p[0], p[0], p[0], p[1]])
                .collect();
            return RasterImage::new(w, h, 4, data);
        }
        ColorType::Indexed => return Err(Error::Codec("palette not expanded".into())),
    };
    RasterImage::new(w, h, 3, data)
}

pub fn decode_png(bytes: &[u8]) -> Result<RasterImage> {
    decode_reader(Cursor::new(bytes))
}

pub fn read_png(path: &Path) -> Result<RasterImage> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    decode_reader(BufReader::new(file))
        .map_err(|e| Error::Codec(format!("{}: {e}", path.display())))
}

pub fn write_png(path: &Path, img: &RasterImage, effort: u8) -> Result<u64> {
    let bytes = encode_png(img, effort)?;
    fs::write(path, &bytes).map_err(|e| Error::io(path, e))?;
    Ok(bytes.len() as u64)
}

/// Builds an [`ImageRecord`] from the PNG header without decoding pixels.
pub fn read_record(path: &Path, id: &str) -> Result<ImageRecord> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let file_size = file.metadata().map_err(|e| Error::io(path, e))?.len();
    let mut dec = png::Decoder::new(BufReader::new(file));
    let info = dec
        .read_header_info()
        .map_err(|e| Error::Codec(format!("{}: {e}", path.display())))?;
    let bit_depth = match info.color_type {
        ColorType::Rgba | ColorType::GrayscaleAlpha => 32,
        _ => 24,
    };
    let mut rec = ImageRecord::new(id, info.width, info.height)?;
    rec.file_size = file_size;
    rec.bit_depth = bit_depth;
    rec.provenance = Provenance::Original;
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_black_pixel_round_trips() {
        let img = RasterImage::filled(1, 1, 3, 0).unwrap();
        let bytes = recompress_lossless(&img, 9).unwrap();
        assert_eq!(&bytes[..8], b"\x89PNG\r\n\x1a\n");
        assert_eq!(decode_png(&bytes).unwrap(), img);
    }

    #[test]
    fn every_effort_round_trips() {
        let data: Vec<u8> = (0..40 * 30 * 3).map(|i| (i * 7 % 256) as u8).collect();
        let img = RasterImage::new(40, 30, 3, data).unwrap();
        for effort in 0..=9 {
            let bytes = recompress_lossless(&img, effort).unwrap();
            assert_eq!(decode_png(&bytes).unwrap(), img, "effort {effort}");
        }
    }

    #[test]
    fn rgba_needs_alpha_dropped() {
        let img = RasterImage::filled(2, 2, 4, 9).unwrap();
        assert!(recompress_lossless(&img, 6).is_err());
        assert_eq!(decode_png(&encode_png(&img, 6).unwrap()).unwrap(), img);
    }

    #[test]
    fn effort_out_of_range() {
        let img = RasterImage::filled(1, 1, 3, 0).unwrap();
        assert!(encode_png(&img, 10).is_err());
    }

    #[test]
    fn garbage_is_codec_error() {
        assert!(matches!(decode_png(b"not a png"), Err(Error::Codec(_))));
    }
}
