//! Reference implementations used as test oracles. Written for clarity
//! rather than speed; each mirrors a definition directly.

#![allow(dead_code)]

use std::cmp::Ordering;
use std::path::{Path, PathBuf};

use edgebench::annotation::{parse_detections, parse_ground_truth, LabelMap};
use edgebench::eval::{ImageEval, MatchConfig};
use edgebench::pipeline::RasterImage;
use edgebench::{iou, Detection, GroundTruthBox, Hbb};
use num_rational::Ratio;
use rand::Rng;

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// Ground truth and detections of one accuracy fixture.
pub fn accuracy_fixture(id: &str) -> ImageEval {
    let dir = fixture_dir().join("accuracy");
    let labels = LabelMap::dota_v1();
    let gt_text = std::fs::read_to_string(dir.join("labelTxt").join(format!("{id}.txt"))).unwrap();
    let det_text = std::fs::read_to_string(dir.join("detections").join(format!("{id}.txt"))).unwrap();
    ImageEval {
        id: id.to_string(),
        gts: parse_ground_truth(&gt_text, &labels).unwrap(),
        dets: parse_detections(&det_text).unwrap(),
    }
}

/// Exact IoU of integer boxes `[x0, y0, x1, y1]` via interval overlaps.
pub fn rational_iou(a: [i64; 4], b: [i64; 4]) -> Ratio<i64> {
    let overlap = |lo_a: i64, hi_a: i64, lo_b: i64, hi_b: i64| (hi_a.min(hi_b) - lo_a.max(lo_b)).max(0);
    let inter = overlap(a[0], a[2], b[0], b[2]) * overlap(a[1], a[3], b[1], b[3]);
    let area = |r: [i64; 4]| (r[2] - r[0]) * (r[3] - r[1]);
    let union = area(a) + area(b) - inter;
    if union == 0 {
        Ratio::from_integer(0)
    } else {
        Ratio::new(inter, union)
    }
}

pub fn hbb(b: [i64; 4]) -> Hbb {
    Hbb::new(b[0] as f64, b[1] as f64, b[2] as f64, b[3] as f64).unwrap()
}

pub fn random_box<R: Rng>(rng: &mut R, span: i64, max_side: i64) -> [i64; 4] {
    let x = rng.gen_range(0..span);
    let y = rng.gen_range(0..span);
    [x, y, x + rng.gen_range(0..=max_side), y + rng.gen_range(0..=max_side)]
}

pub const ORACLE_CLASSES: [&str; 3] = ["plane", "ship", "bridge"];

/// A small matching instance on a crowded canvas so boxes overlap often.
pub fn random_instance<R: Rng>(rng: &mut R, max_gt: usize, max_det: usize) -> (Vec<GroundTruthBox>, Vec<Detection>) {
    let n_gt = rng.gen_range(0..=max_gt);
    let n_det = rng.gen_range(0..=max_det);
    let gts = (0..n_gt)
        .map(|_| {
            let b = random_box(rng, 20, 12);
            let b = [b[0], b[1], b[2].max(b[0] + 1), b[3].max(b[1] + 1)];
            GroundTruthBox::from_hbb(hbb(b), ORACLE_CLASSES[rng.gen_range(0..ORACLE_CLASSES.len())])
        })
        .collect();
    let dets = (0..n_det)
        .map(|_| {
            let b = random_box(rng, 20, 12);
            let b = [b[0], b[1], b[2].max(b[0] + 1), b[3].max(b[1] + 1)];
            // coarse confidences make ties likely
            let conf = f64::from(rng.gen_range(1..=10u32)) / 10.0;
            Detection::new(hbb(b), ORACLE_CLASSES[rng.gen_range(0..ORACLE_CLASSES.len())], conf).unwrap()
        })
        .collect();
    (gts, dets)
}

#[derive(Clone, Copy)]
struct Edge {
    gt: usize,
    det: usize,
    product: f64,
    confidence: f64,
}

fn edge_rank(a: &Edge, b: &Edge) -> Ordering {
    a.product
        .total_cmp(&b.product)
        .then(a.confidence.total_cmp(&b.confidence))
        .then(b.det.cmp(&a.det))
        .then(b.gt.cmp(&a.gt))
}

/// Compares two matchings by their edges sorted best-first,
/// lexicographically; a strict prefix ranks lower.
fn matching_rank(a: &[Edge], b: &[Edge]) -> Ordering {
    let sorted = |m: &[Edge]| {
        let mut v = m.to_vec();
        v.sort_by(|x, y| edge_rank(y, x));
        v
    };
    let (a, b) = (sorted(a), sorted(b));
    for (x, y) in a.iter().zip(&b) {
        match edge_rank(x, y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

fn enumerate(edges: &[Edge], from: usize, used_gt: u64, used_det: u64, cur: &mut Vec<Edge>, best: &mut Vec<Edge>) {
    if matching_rank(cur, best) == Ordering::Greater {
        *best = cur.clone();
    }
    for i in from..edges.len() {
        let e = edges[i];
        if used_gt & (1 << e.gt) != 0 || used_det & (1 << e.det) != 0 {
            continue;
        }
        cur.push(e);
        enumerate(edges, i + 1, used_gt | 1 << e.gt, used_det | 1 << e.det, cur, best);
        cur.pop();
    }
}

/// Exhaustive search over every one-to-one assignment of admissible pairs,
/// keeping the assignment whose best-first edge list ranks highest. Returns
/// sorted `(gt, det, true_positive)` triples.
pub fn exhaustive_match(gts: &[GroundTruthBox], dets: &[Detection], cfg: &MatchConfig) -> Vec<(usize, usize, bool)> {
    assert!(gts.len() <= 64 && dets.len() <= 64);
    let mut edges = Vec::new();
    for (g, gt) in gts.iter().enumerate() {
        for (d, det) in dets.iter().enumerate() {
            if det.confidence < cfg.min_confidence {
                continue;
            }
            if cfg.require_class_match && gt.category != det.category {
                continue;
            }
            let v = iou(&gt.hbb, &det.hbb);
            if v > 0.0 && v >= cfg.iou_floor {
                edges.push(Edge {
                    gt: g,
                    det: d,
                    product: v * det.confidence,
                    confidence: det.confidence,
                });
            }
        }
    }
    let mut best = Vec::new();
    enumerate(&edges, 0, 0, 0, &mut Vec::new(), &mut best);
    let mut out: Vec<(usize, usize, bool)> = best
        .iter()
        .map(|e| {
            let tp = iou(&gts[e.gt].hbb, &dets[e.det].hbb) >= cfg.iou_threshold
                && gts[e.gt].category == dets[e.det].category;
            (e.gt, e.det, tp)
        })
        .collect();
    out.sort_unstable();
    out
}

/// 11-point AP by sweeping every confidence cutoff with exact rationals.
/// `outcomes` are `(confidence, true_positive)` with distinct confidences.
pub fn brute_force_ap(outcomes: &[(f64, bool)], n_gt: usize) -> Option<Ratio<i64>> {
    if n_gt == 0 {
        return None;
    }
    let mut points = Vec::new();
    for &(cutoff, _) in outcomes {
        let kept: Vec<bool> = outcomes.iter().filter(|o| o.0 >= cutoff).map(|o| o.1).collect();
        let tp = kept.iter().filter(|&&t| t).count() as i64;
        let precision = Ratio::new(tp, kept.len() as i64);
        let recall = Ratio::new(tp, n_gt as i64);
        points.push((precision, recall));
    }
    let mut sum = Ratio::from_integer(0);
    for level in 0..=10 {
        let r = Ratio::new(level, 10);
        let best = points
            .iter()
            .filter(|(_, rec)| *rec >= r)
            .map(|(p, _)| *p)
            .max()
            .unwrap_or_else(|| Ratio::from_integer(0));
        sum += best;
    }
    Some(sum / 11)
}

pub fn ratio_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

pub fn random_image<R: Rng>(rng: &mut R, max_side: u32, channels: u8) -> RasterImage {
    let w = rng.gen_range(1..=max_side);
    let h = rng.gen_range(1..=max_side);
    let len = w as usize * h as usize * channels as usize;
    // mix of smooth gradients and noise so the encoder has real work
    let data = (0..len)
        .map(|i| if rng.gen_bool(0.5) { (i / 7 % 256) as u8 } else { rng.gen() })
        .collect();
    RasterImage::new(w, h, channels, data).unwrap()
}
