//! Provenance manifest: one derived image per line as space-separated
//! `key=value` pairs in a fixed key order.
//!
//! ```text
//! id=P1854__s59 op=scaled parent=P1854 percent=59 algorithm=bilinear width=7896 height=2529 bit_depth=24 file_size=123456
//! id=P2310__z6 op=recompressed parent=P2310 level=6 width=475 height=546 bit_depth=24 file_size=160012
//! id=P1854__t0_0 op=tile parent=P1854 offset_x=0 offset_y=0 width=4287 height=4287 bit_depth=24 file_size=9912345
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{ImageRecord, Provenance};

pub fn manifest_line(rec: &ImageRecord) -> String {
    let mut line = format!("id={}", rec.id);
    match &rec.provenance {
        Provenance::Original => line.push_str(" op=original"),
        Provenance::Scaled {
            parent_id,
            percent,
            algorithm,
        } => {
            let _ = write!(
                line,
                " op=scaled parent={parent_id} percent={percent} algorithm={algorithm}"
            );
        }
        Provenance::Recompressed { parent_id, level } => {
            let _ = write!(line, " op=recompressed parent={parent_id} level={level}");
        }
        Provenance::Tile {
            parent_id,
            offset_x,
            offset_y,
        } => {
            let _ = write!(
                line,
                " op=tile parent={parent_id} offset_x={offset_x} offset_y={offset_y}"
            );
        }
    }
    let _ = write!(
        line,
        " width={} height={} bit_depth={} file_size={}",
        rec.width, rec.height, rec.bit_depth, rec.file_size
    );
    line
}

pub fn write_manifest(records: &[ImageRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&manifest_line(r));
        out.push('\n');
    }
    out
}

fn field<'a>(map: &HashMap<&str, &'a str>, key: &str, line: usize) -> Result<&'a str> {
    map.get(key)
        .copied()
        .ok_or_else(|| Error::InvalidParameter(format!("manifest line {line}: missing {key}")))
}

fn num<T: std::str::FromStr>(map: &HashMap<&str, &str>, key: &str, line: usize) -> Result<T> {
    let raw = field(map, key, line)?;
    raw.parse()
        .map_err(|_| Error::InvalidParameter(format!("manifest line {line}: bad {key}={raw}")))
}

pub fn parse_manifest(text: &str) -> Result<Vec<ImageRecord>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let raw = raw.trim();
        if raw.is_empty() || raw.starts_with('#') {
            continue;
        }
        let mut map = HashMap::new();
        for tok in raw.split_whitespace() {
            let (k, v) = tok.split_once('=').ok_or_else(|| {
                Error::InvalidParameter(format!("manifest line {line_no}: bad token {tok:?}"))
            })?;
            map.insert(k, v);
        }
        let parent = || field(&map, "parent", line_no).map(str::to_owned);
        let provenance = match field(&map, "op", line_no)? {
            "original" => Provenance::Original,
            "scaled" => Provenance::Scaled {
                parent_id: parent()?,
                percent: num(&map, "percent", line_no)?,
                algorithm: field(&map, "algorithm", line_no)?.parse()?,
            },
            "recompressed" => Provenance::Recompressed {
                parent_id: parent()?,
                level: num(&map, "level", line_no)?,
            },
            "tile" => Provenance::Tile {
                parent_id: parent()?,
                offset_x: num(&map, "offset_x", line_no)?,
                offset_y: num(&map, "offset_y", line_no)?,
            },
            other => {
                return Err(Error::InvalidParameter(format!(
                    "manifest line {line_no}: unknown op {other:?}"
                )))
            }
        };
        let mut rec = ImageRecord::new(
            field(&map, "id", line_no)?,
            num(&map, "width", line_no)?,
            num(&map, "height", line_no)?,
        )?;
        rec.bit_depth = num(&map, "bit_depth", line_no)?;
        rec.file_size = num(&map, "file_size", line_no)?;
        rec.provenance = provenance;
        out.push(rec);
    }
    Ok(out)
}
