//! Dataset-level evaluation: per-class AP, mAP, the COCO IoU ladder and the
//! accuracy count.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::matching::{match_detections, ClassCounts, MatchConfig, MatchResult};
use super::metrics::{interpolated_ap, mean_ap, precision, recall, PrCurve};
use crate::error::{Error, Result};
use crate::model::{Detection, GroundTruthBox};

/// IoU thresholds 0.50, 0.55, …, 0.95.
pub fn coco_ladder() -> Vec<f64> {
    (0..10).map(|k| f64::from(50 + 5 * k) / 100.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub iou_threshold: f64,
    /// Lowest confidence kept when building PR curves.
    pub score_threshold: f64,
    /// Confidence needed for a detection to count towards accuracy.
    pub accuracy_confidence: f64,
    pub require_class_match: bool,
    pub iou_floor: f64,
    pub include_difficult: bool,
    pub ladder: Vec<f64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            iou_threshold: 0.5,
            score_threshold: 0.01,
            accuracy_confidence: 0.5,
            require_class_match: true,
            iou_floor: 0.1,
            include_difficult: true,
            ladder: coco_ladder(),
        }
    }
}

impl EvalConfig {
    pub fn match_config(&self, iou_threshold: f64, min_confidence: f64) -> MatchConfig {
        MatchConfig {
            iou_threshold,
            min_confidence,
            require_class_match: self.require_class_match,
            iou_floor: self.iou_floor,
            include_difficult: self.include_difficult,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.match_config(self.iou_threshold, self.score_threshold)
            .validate()?;
        self.match_config(self.iou_threshold, self.accuracy_confidence)
            .validate()?;
        for &t in &self.ladder {
            self.match_config(t, self.score_threshold).validate()?;
        }
        Ok(())
    }
}

/// Ground truth and detections for one image.
#[derive(Debug, Clone)]
pub struct ImageEval {
    pub id: String,
    pub gts: Vec<GroundTruthBox>,
    pub dets: Vec<Detection>,
}

impl ImageEval {
    fn filtered_gts(&self, include_difficult: bool) -> Vec<GroundTruthBox> {
        self.gts
            .iter()
            .filter(|g| include_difficult || !g.difficult)
            .cloned()
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub class: String,
    pub num_ground_truth: usize,
    pub num_detections: usize,
    #[serde(flatten)]
    pub counts: ClassCounts,
    pub precision: f64,
    pub recall: f64,
    pub ap: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderEntry {
    pub iou_threshold: f64,
    pub map: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoSummary {
    /// Mean over the whole ladder.
    pub ap: f64,
    pub ap50: Option<f64>,
    pub ap75: Option<f64>,
    pub ladder: Vec<LadderEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub accurate: usize,
    pub total: usize,
}

impl Accuracy {
    pub fn fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.accurate as f64 / self.total as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairListing {
    pub gt: usize,
    pub det: usize,
    pub category: String,
    pub iou: f64,
    pub confidence: f64,
    pub true_positive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageReport {
    pub id: String,
    pub num_ground_truth: usize,
    pub num_detections: usize,
    pub accuracy: Accuracy,
    pub pairs: Vec<PairListing>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: EvalConfig,
    pub classes: Vec<ClassReport>,
    pub map: f64,
    pub coco: CocoSummary,
    pub accuracy: Accuracy,
    pub images: Vec<ImageReport>,
}

impl EvalReport {
    pub fn class(&self, name: &str) -> Option<&ClassReport> {
        self.classes.iter().find(|c| c.class == name)
    }
}

struct ThresholdRun {
    classes: Vec<ClassReport>,
    map: f64,
    matches: Vec<MatchResult>,
}

fn run_at(images: &[ImageEval], gts: &[Vec<GroundTruthBox>], cfg: &MatchConfig) -> Result<ThresholdRun> {
    let mut counts: BTreeMap<String, ClassCounts> = BTreeMap::new();
    let mut num_gt: BTreeMap<String, usize> = BTreeMap::new();
    let mut outcomes: BTreeMap<String, Vec<(f64, bool)>> = BTreeMap::new();
    let mut matches = Vec::with_capacity(images.len());

    for (img, gts) in images.iter().zip(gts) {
        let m = match_detections(gts, &img.dets, cfg);
        for g in gts {
            *num_gt.entry(g.category.clone()).or_default() += 1;
        }
        for (class, c) in &m.per_class {
            counts.entry(class.clone()).or_default().add(c);
        }
        for &d in &m.retained {
            let det = &img.dets[d];
            outcomes
                .entry(det.category.clone())
                .or_default()
                .push((det.confidence, m.is_true_positive(d)));
        }
        matches.push(m);
    }

    let names: BTreeSet<&String> = num_gt.keys().chain(outcomes.keys()).collect();
    let classes: Vec<ClassReport> = names
        .into_iter()
        .map(|class| {
            let n = num_gt.get(class).copied().unwrap_or(0);
            let outs = outcomes.get(class).map(Vec::as_slice).unwrap_or(&[]);
            let c = counts.get(class).copied().unwrap_or_default();
            let curve = PrCurve::from_outcomes(class.clone(), n, outs);
            ClassReport {
                class: class.clone(),
                num_ground_truth: n,
                num_detections: outs.len(),
                counts: c,
                precision: precision(c.tp, c.fp),
                recall: recall(c.tp, c.fn_),
                ap: interpolated_ap(&curve),
            }
        })
        .collect();
    for c in classes.iter().filter(|c| c.ap.is_none()) {
        log::info!("class {} has no ground truth; excluded from mAP", c.class);
    }
    let map = mean_ap(classes.iter().map(|c| c.ap))?;
    Ok(ThresholdRun {
        classes,
        map,
        matches,
    })
}

fn sorted_inputs(images: &[ImageEval], cfg: &EvalConfig) -> (Vec<ImageEval>, Vec<Vec<GroundTruthBox>>) {
    let mut images = images.to_vec();
    images.sort_by(|a, b| a.id.cmp(&b.id));
    let gts = images
        .iter()
        .map(|i| i.filtered_gts(cfg.include_difficult))
        .collect();
    (images, gts)
}

/// mAP at every ladder threshold; the first field is the ladder mean.
pub fn coco_ap_suite(images: &[ImageEval], cfg: &EvalConfig) -> Result<CocoSummary> {
    let (images, gts) = sorted_inputs(images, cfg);
    ladder_summary(&images, &gts, cfg)
}

fn ladder_summary(
    images: &[ImageEval],
    gts: &[Vec<GroundTruthBox>],
    cfg: &EvalConfig,
) -> Result<CocoSummary> {
    let mut ladder = Vec::with_capacity(cfg.ladder.len());
    for &t in &cfg.ladder {
        let run = run_at(images, gts, &cfg.match_config(t, cfg.score_threshold))?;
        ladder.push(LadderEntry {
            iou_threshold: t,
            map: run.map,
        });
    }
    if ladder.is_empty() {
        return Err(Error::Evaluation("empty IoU ladder".into()));
    }
    let at = |t: f64| {
        ladder
            .iter()
            .find(|e| (e.iou_threshold - t).abs() < 1e-9)
            .map(|e| e.map)
    };
    Ok(CocoSummary {
        ap: ladder.iter().map(|e| e.map).sum::<f64>() / ladder.len() as f64,
        ap50: at(0.5),
        ap75: at(0.75),
        ladder,
    })
}

/// Full evaluation. Results do not depend on the order of `images`.
pub fn evaluate(images: &[ImageEval], cfg: &EvalConfig) -> Result<EvalReport> {
    cfg.validate()?;
    let (images, gts) = sorted_inputs(images, cfg);
    let main = run_at(&images, &gts, &cfg.match_config(cfg.iou_threshold, cfg.score_threshold))?;
    let coco = ladder_summary(&images, &gts, cfg)?;
    let acc_cfg = cfg.match_config(cfg.iou_threshold, cfg.accuracy_confidence);

    let mut total = Accuracy {
        accurate: 0,
        total: 0,
    };
    let mut reports = Vec::with_capacity(images.len());
    for ((img, gts), m) in images.iter().zip(&gts).zip(&main.matches) {
        let acc = Accuracy {
            accurate: match_detections(gts, &img.dets, &acc_cfg).tp(),
            total: gts.len(),
        };
        total.accurate += acc.accurate;
        total.total += acc.total;
        reports.push(ImageReport {
            id: img.id.clone(),
            num_ground_truth: gts.len(),
            num_detections: m.retained.len(),
            accuracy: acc,
            pairs: m
                .pairs
                .iter()
                .map(|p| PairListing {
                    gt: p.gt,
                    det: p.det,
                    category: gts[p.gt].category.clone(),
                    iou: p.iou,
                    confidence: p.confidence,
                    true_positive: p.true_positive,
                })
                .collect(),
        });
    }

    Ok(EvalReport {
        config: cfg.clone(),
        classes: main.classes,
        map: main.map,
        coco,
        accuracy: total,
        images: reports,
    })
}
