//! Ground-truth label files, label maps, detection files and the dataset index.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model::{Detection, GroundTruthBox, Hbb, ImageRecord, Quad};
use crate::pipeline::codec;

/// DOTA-v1.0 categories in label-map id order.
pub const DOTA_V1_CATEGORIES: [&str; 15] = [
    "plane",
    "baseball-diamond",
    "bridge",
    "ground-track-field",
    "small-vehicle",
    "large-vehicle",
    "ship",
    "tennis-court",
    "basketball-court",
    "storage-tank",
    "soccer-ball-field",
    "roundabout",
    "harbor",
    "swimming-pool",
    "helicopter",
];

/// Ordered id → name table. Ids run contiguously from 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    names: Vec<String>,
}

impl LabelMap {
    pub fn from_entries(entries: Vec<(u32, String)>) -> Result<Self> {
        let mut seen_ids = HashSet::new();
        let mut seen_names = HashSet::new();
        for (id, name) in &entries {
            if !seen_ids.insert(*id) {
                return Err(Error::LabelMap(format!("duplicate id {id}")));
            }
            if !seen_names.insert(name.as_str()) {
                return Err(Error::LabelMap(format!("duplicate name {name:?}")));
            }
        }
        let mut entries = entries;
        entries.sort_by_key(|(id, _)| *id);
        for (expected, (id, _)) in (1u32..).zip(&entries) {
            if *id != expected {
                return Err(Error::LabelMap(format!(
                    "ids must be contiguous from 1; expected {expected}, found {id}"
                )));
            }
        }
        Ok(Self {
            names: entries.into_iter().map(|(_, n)| n).collect(),
        })
    }

    pub fn dota_v1() -> Self {
        Self {
            names: DOTA_V1_CATEGORIES.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.names.iter().any(|n| n == name)
    }

    pub fn id_of(&self, name: &str) -> Option<u32> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| i as u32 + 1)
    }

    pub fn name_of(&self, id: u32) -> Option<&str> {
        let idx = id.checked_sub(1)? as usize;
        self.names.get(idx).map(String::as_str)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }

    /// Plain two-column rendering, one `id<TAB>name` per line.
    pub fn to_plain(&self) -> String {
        let mut out = String::new();
        for (i, name) in self.names.iter().enumerate() {
            let _ = writeln!(out, "{}\t{}", i + 1, name);
        }
        out
    }
}

/// Parses either the `item { id: N name: 'x' }` block format or plain
/// `id name` lines; the format is detected from the content.
pub fn load_label_map(text: &str) -> Result<LabelMap> {
    if text.contains("item") && text.contains('{') {
        parse_block_label_map(text)
    } else {
        parse_plain_label_map(text)
    }
}

fn parse_plain_label_map(text: &str) -> Result<LabelMap> {
    let mut entries = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(id), Some(name), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::LabelMap(format!(
                "line {}: expected `id name`, got {line:?}",
                n + 1
            )));
        };
        let id = id
            .parse::<u32>()
            .map_err(|_| Error::LabelMap(format!("line {}: bad id {id:?}", n + 1)))?;
        entries.push((id, name.to_string()));
    }
    LabelMap::from_entries(entries)
}

fn parse_block_label_map(text: &str) -> Result<LabelMap> {
    let mut entries = Vec::new();
    let mut rest = text;
    while let Some(start) = rest.find("item") {
        let after = &rest[start + 4..];
        let open = after
            .find('{')
            .ok_or_else(|| Error::LabelMap("`item` without `{`".into()))?;
        let close = after
            .find('}')
            .ok_or_else(|| Error::LabelMap("unterminated item block".into()))?;
        if close < open {
            return Err(Error::LabelMap("unbalanced braces".into()));
        }
        let body = &after[open + 1..close];
        let mut id = None;
        let mut name = None;
        for field in body.lines().flat_map(|l| l.split(',')) {
            let Some((key, value)) = field.split_once(':') else {
                continue;
            };
            let value = value.trim().trim_matches(|c| c == '\'' || c == '"');
            match key.trim() {
                "id" => {
                    id = Some(value.parse::<u32>().map_err(|_| {
                        Error::LabelMap(format!("bad id {value:?} in item block"))
                    })?)
                }
                "name" => name = Some(value.to_string()),
                _ => {}
            }
        }
        match (id, name) {
            (Some(id), Some(name)) => entries.push((id, name)),
            _ => return Err(Error::LabelMap("item block missing id or name".into())),
        }
        rest = &after[close + 1..];
    }
    LabelMap::from_entries(entries)
}

fn is_header_line(line: &str) -> bool {
    line.split_whitespace()
        .next()
        .is_some_and(|tok| tok.contains(':'))
}

fn parse_gt_record(line: &str, line_no: usize, labels: &LabelMap) -> Result<GroundTruthBox> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 10 {
        return Err(Error::MalformedAnnotation {
            line: line_no,
            reason: format!("expected 10 fields, found {}", fields.len()),
        });
    }
    let mut coords = [0.0f64; 8];
    for (slot, tok) in coords.iter_mut().zip(&fields[..8]) {
        *slot = tok
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::MalformedAnnotation {
                line: line_no,
                reason: format!("bad coordinate {tok:?}"),
            })?;
    }
    let category = fields[8];
    if !labels.contains(category) {
        return Err(Error::UnknownCategory {
            line: line_no,
            token: category.to_string(),
        });
    }
    let difficult = match fields[9] {
        "0" => false,
        "1" => true,
        other => {
            return Err(Error::MalformedAnnotation {
                line: line_no,
                reason: format!("difficulty must be 0 or 1, got {other:?}"),
            })
        }
    };
    let quad = Quad([
        (coords[0], coords[1]),
        (coords[2], coords[3]),
        (coords[4], coords[5]),
        (coords[6], coords[7]),
    ]);
    GroundTruthBox::from_quad(quad, category, difficult).map_err(|e| match e {
        Error::MalformedAnnotation { reason, .. } => Error::MalformedAnnotation {
            line: line_no,
            reason,
        },
        other => other,
    })
}

/// Parses every record line, collecting failures instead of stopping at the
/// first one. Header (`key:value`) and blank lines are skipped.
pub fn parse_ground_truth_lenient(
    text: &str,
    labels: &LabelMap,
) -> (Vec<GroundTruthBox>, Vec<Error>) {
    let mut boxes = Vec::new();
    let mut errors = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || is_header_line(line) {
            continue;
        }
        match parse_gt_record(line, idx + 1, labels) {
            Ok(b) => boxes.push(b),
            Err(e) => errors.push(e),
        }
    }
    (boxes, errors)
}

pub fn parse_ground_truth(text: &str, labels: &LabelMap) -> Result<Vec<GroundTruthBox>> {
    let (boxes, errors) = parse_ground_truth_lenient(text, labels);
    match errors.into_iter().next() {
        Some(e) => Err(e),
        None => Ok(boxes),
    }
}

/// Renders ground truth back into DOTA lines (quad, category, difficulty).
pub fn write_ground_truth(boxes: &[GroundTruthBox]) -> String {
    let mut out = String::new();
    for b in boxes {
        for (x, y) in b.quad.points() {
            let _ = write!(out, "{x} {y} ");
        }
        let _ = writeln!(out, "{} {}", b.category, u8::from(b.difficult));
    }
    out
}

/// One `category confidence xmin ymin xmax ymax` line per detection. Floats
/// use the shortest representation that parses back to the same value.
pub fn write_detections(dets: &[Detection], labels: &LabelMap) -> Result<String> {
    let mut out = String::new();
    for (i, d) in dets.iter().enumerate() {
        if !labels.contains(&d.category) {
            return Err(Error::UnknownCategory {
                line: i + 1,
                token: d.category.clone(),
            });
        }
        let b = &d.hbb;
        let _ = writeln!(
            out,
            "{} {} {} {} {} {}",
            d.category,
            d.confidence,
            b.xmin(),
            b.ymin(),
            b.xmax(),
            b.ymax()
        );
    }
    Ok(out)
}

pub(crate) fn parse_detection_fields(fields: &[&str], line: usize) -> Result<Detection> {
    let bad = |reason: String| Error::MalformedDetection { line, reason };
    if fields.len() != 6 {
        return Err(bad(format!("expected 6 fields, found {}", fields.len())));
    }
    let mut nums = [0.0f64; 5];
    for (slot, tok) in nums.iter_mut().zip(&fields[1..]) {
        *slot = tok
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| bad(format!("bad number {tok:?}")))?;
    }
    let [confidence, xmin, ymin, xmax, ymax] = nums;
    if !(0.0..=1.0).contains(&confidence) {
        return Err(bad(format!("confidence {confidence} outside [0, 1]")));
    }
    if xmax < xmin || ymax < ymin {
        return Err(bad(format!(
            "inverted box ({xmin}, {ymin}, {xmax}, {ymax})"
        )));
    }
    let hbb = Hbb::new(xmin, ymin, xmax, ymax).map_err(|e| bad(e.to_string()))?;
    Ok(Detection {
        hbb,
        category: fields[0].to_string(),
        confidence,
    })
}

pub fn parse_detections(text: &str) -> Result<Vec<Detection>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        out.push(parse_detection_fields(&fields, idx + 1)?);
    }
    Ok(out)
}

/// Images plus their ground truth, keyed by image id.
#[derive(Debug, Clone, Default)]
pub struct DatasetIndex {
    pub images: Vec<ImageRecord>,
    pub annotations: BTreeMap<String, Vec<GroundTruthBox>>,
    /// Image files on disk, when the index was loaded from a directory.
    pub paths: BTreeMap<String, PathBuf>,
}

impl DatasetIndex {
    pub fn new(
        images: Vec<ImageRecord>,
        annotations: BTreeMap<String, Vec<GroundTruthBox>>,
    ) -> Result<Self> {
        let mut ids = HashSet::new();
        for img in &images {
            if !ids.insert(img.id.as_str()) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate image id {}",
                    img.id
                )));
            }
        }
        if let Some(orphan) = annotations.keys().find(|k| !ids.contains(k.as_str())) {
            return Err(Error::InvalidParameter(format!(
                "annotations for unindexed image {orphan}"
            )));
        }
        check_provenance_acyclic(&images)?;
        Ok(Self {
            images,
            annotations,
            paths: BTreeMap::new(),
        })
    }

    pub fn get(&self, id: &str) -> Option<&ImageRecord> {
        self.images.iter().find(|i| i.id == id)
    }

    pub fn ground_truth(&self, id: &str) -> &[GroundTruthBox] {
        self.annotations.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn path(&self, id: &str) -> Option<&Path> {
        self.paths.get(id).map(PathBuf::as_path)
    }

    /// Image ids ascending by pixel count, ties by id.
    pub fn ids_by_pixels(&self) -> Vec<String> {
        let mut imgs: Vec<&ImageRecord> = self.images.iter().collect();
        imgs.sort_by(|a, b| {
            a.total_pixels()
                .cmp(&b.total_pixels())
                .then_with(|| a.id.cmp(&b.id))
        });
        imgs.into_iter().map(|i| i.id.clone()).collect()
    }

    pub fn instance_count(&self) -> usize {
        self.annotations.values().map(Vec::len).sum()
    }

    /// Loads `<root>/images/*.png` and `<root>/labelTxt/*.txt`. Images
    /// without a label file are returned in the second element, not treated
    /// as fatal. Provenance comes from `<root>/manifest.txt` when present.
    pub fn load_dir(root: &Path, labels: &LabelMap) -> Result<(Self, Vec<String>)> {
        let image_dir = root.join("images");
        let label_dir = ["labelTxt", "labels"]
            .iter()
            .map(|d| root.join(d))
            .find(|p| p.is_dir())
            .unwrap_or_else(|| root.join("labelTxt"));

        let mut entries: Vec<PathBuf> = fs::read_dir(&image_dir)
            .map_err(|e| Error::io(&image_dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension()
                    .is_some_and(|ext| ext.eq_ignore_ascii_case("png"))
            })
            .collect();
        entries.sort();

        let mut images = Vec::new();
        let mut annotations = BTreeMap::new();
        let mut paths = BTreeMap::new();
        let mut missing = Vec::new();
        for path in entries {
            let Some(id) = path.file_stem().and_then(|s| s.to_str()).map(str::to_owned) else {
                continue;
            };
            let mut rec = codec::read_record(&path, &id)?;
            rec.provenance = crate::model::Provenance::Original;
            let label_path = label_dir.join(format!("{id}.txt"));
            match fs::read_to_string(&label_path) {
                Ok(text) => {
                    let boxes = parse_ground_truth(&text, labels).map_err(|e| {
                        Error::InvalidParameter(format!("{}: {e}", label_path.display()))
                    })?;
                    annotations.insert(id.clone(), boxes);
                }
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => missing.push(id.clone()),
                Err(e) => return Err(Error::io(&label_path, e)),
            }
            paths.insert(id, path);
            images.push(rec);
        }
        let manifest = root.join("manifest.txt");
        if manifest.is_file() {
            let text = fs::read_to_string(&manifest).map_err(|e| Error::io(&manifest, e))?;
            let recorded: BTreeMap<String, crate::model::Provenance> =
                crate::pipeline::manifest::parse_manifest(&text)?
                    .into_iter()
                    .map(|r| (r.id, r.provenance))
                    .collect();
            for img in &mut images {
                if let Some(p) = recorded.get(&img.id) {
                    img.provenance = p.clone();
                }
            }
        }
        let mut index = Self::new(images, annotations)?;
        index.paths = paths;
        Ok((index, missing))
    }
}

fn check_provenance_acyclic(images: &[ImageRecord]) -> Result<()> {
    let parents: BTreeMap<&str, Option<&str>> = images
        .iter()
        .map(|i| (i.id.as_str(), i.provenance.parent_id()))
        .collect();
    for img in images {
        let mut cur = img.provenance.parent_id();
        let mut steps = 0;
        while let Some(p) = cur {
            steps += 1;
            if p == img.id || steps > images.len() {
                return Err(Error::InvalidParameter(format!(
                    "provenance cycle through image {}",
                    img.id
                )));
            }
            cur = parents.get(p).copied().flatten();
        }
    }
    Ok(())
}
