//! `eval` command: scores a detections directory against ground truth and
//! writes `eval_report.txt` and `eval_summary.json`.
//!
//! The text report holds one record per line, prefixed by its kind:
//!
//! ```text
//! class <name> gt=<n> det=<n> tp=<n> fp=<n> fn=<n> fn_misclassified=<n> precision=<p> recall=<r> ap=<ap|NA>
//! ladder iou=<t> map=<m>
//! summary map=<m> coco_ap=<a> ap50=<a> ap75=<a>
//! accuracy <accurate>/<total> <fraction>
//! image <id> gt=<n> det=<n> accurate=<a>/<t>
//! pair <id> gt=<i> det=<j> <category> iou=<0.0000> confidence=<0.0000> <tp|fp>
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::Config;
use super::{write_file, write_json, DatasetFingerprint, RunManifest};
use crate::annotation::{parse_detections, DatasetIndex};
use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalReport, ImageEval};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOutput {
    pub manifest: RunManifest,
    pub report: EvalReport,
}

fn opt4(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |v| format!("{v:.4}"))
}

pub fn render_eval_text(out: &EvalOutput) -> String {
    let r = &out.report;
    let mut s = out.manifest.comment_line();
    s.push('\n');
    for c in &r.classes {
        let _ = writeln!(
            s,
            "class {} gt={} det={} tp={} fp={} fn={} fn_misclassified={} precision={:.4} recall={:.4} ap={}",
            c.class,
            c.num_ground_truth,
            c.num_detections,
            c.counts.tp,
            c.counts.fp,
            c.counts.fn_,
            c.counts.fn_misclassified,
            c.precision,
            c.recall,
            opt4(c.ap)
        );
    }
    for l in &r.coco.ladder {
        let _ = writeln!(s, "ladder iou={:.2} map={:.4}", l.iou_threshold, l.map);
    }
    let _ = writeln!(
        s,
        "summary map={:.4} coco_ap={:.4} ap50={} ap75={}",
        r.map,
        r.coco.ap,
        opt4(r.coco.ap50),
        opt4(r.coco.ap75)
    );
    let _ = writeln!(
        s,
        "accuracy {}/{} {:.4}",
        r.accuracy.accurate,
        r.accuracy.total,
        r.accuracy.fraction()
    );
    for img in &r.images {
        let _ = writeln!(
            s,
            "image {} gt={} det={} accurate={}/{}",
            img.id, img.num_ground_truth, img.num_detections, img.accuracy.accurate, img.accuracy.total
        );
    }
    for img in &r.images {
        for p in &img.pairs {
            let _ = writeln!(
                s,
                "pair {} gt={} det={} {} iou={:.4} confidence={:.4} {}",
                img.id,
                p.gt,
                p.det,
                p.category,
                p.iou,
                p.confidence,
                if p.true_positive { "tp" } else { "fp" }
            );
        }
    }
    s
}

/// Reads `<det_dir>/<id>.txt` for every image in `dataset`. A missing file
/// counts as zero detections.
pub fn load_detections(dataset: &DatasetIndex, det_dir: &Path) -> Result<Vec<ImageEval>> {
    if !det_dir.is_dir() {
        return Err(Error::InvalidParameter(format!(
            "detections directory {} does not exist",
            det_dir.display()
        )));
    }
    dataset
        .images
        .iter()
        .map(|rec| {
            let path = det_dir.join(format!("{}.txt", rec.id));
            let dets = match fs::read_to_string(&path) {
                Ok(text) => parse_detections(&text)
                    .map_err(|e| Error::InvalidParameter(format!("{}: {e}", path.display())))?,
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                    log::warn!("{}: no detections file; counting zero detections", rec.id);
                    Vec::new()
                }
                Err(e) => return Err(Error::io(&path, e)),
            };
            Ok(ImageEval {
                id: rec.id.clone(),
                gts: dataset.ground_truth(&rec.id).to_vec(),
                dets,
            })
        })
        .collect()
}

pub fn cmd_eval(
    dataset: &DatasetIndex,
    det_dir: &Path,
    config: &Config,
    out: Option<&Path>,
) -> Result<EvalOutput> {
    let mut manifest = RunManifest::start("eval", config);
    manifest.dataset = Some(DatasetFingerprint::of(dataset));
    let images = load_detections(dataset, det_dir)?;
    let report = evaluate(&images, &config.eval)?;
    manifest.finish();
    let output = EvalOutput { manifest, report };
    if let Some(out) = out {
        write_file(&out.join("eval_report.txt"), render_eval_text(&output))?;
        write_json(&out.join("eval_summary.json"), &output)?;
    }
    Ok(output)
}
