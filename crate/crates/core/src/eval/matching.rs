//! One-to-one assignment of detections to ground truth.
//!
//! Candidates are all `(gt, det)` pairs with IoU at or above the enumeration
//! floor (and equal classes when required). Pairs are taken greedily in
//! descending order of `iou · confidence`, ties broken by higher confidence,
//! then lower detection index, then lower ground-truth index. A pair is
//! accepted when neither side is already assigned. Accepted pairs at or above
//! the IoU threshold with matching classes are true positives.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{iou, Detection, GroundTruthBox};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchConfig {
    pub iou_threshold: f64,
    pub min_confidence: f64,
    pub require_class_match: bool,
    pub iou_floor: f64,
    /// Keep ground truth flagged difficult. Excluded boxes are removed
    /// before matching.
    pub include_difficult: bool,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            iou_threshold: 0.5,
            min_confidence: 0.5,
            require_class_match: true,
            iou_floor: 0.1,
            include_difficult: true,
        }
    }
}

impl MatchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.iou_threshold > 0.0 && self.iou_threshold <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "iou threshold {} outside (0, 1]",
                self.iou_threshold
            )));
        }
        if !(0.0..=1.0).contains(&self.min_confidence) {
            return Err(Error::InvalidParameter(format!(
                "min confidence {} outside [0, 1]",
                self.min_confidence
            )));
        }
        if !(0.0..=self.iou_threshold).contains(&self.iou_floor) {
            return Err(Error::InvalidParameter(format!(
                "iou floor {} must lie in [0, iou threshold]",
                self.iou_floor
            )));
        }
        Ok(())
    }

    pub fn with_threshold(self, iou_threshold: f64) -> Self {
        Self {
            iou_threshold,
            ..self
        }
    }

    pub fn with_min_confidence(self, min_confidence: f64) -> Self {
        Self {
            min_confidence,
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchPair {
    pub gt: usize,
    pub det: usize,
    pub iou: f64,
    pub confidence: f64,
    pub true_positive: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// False negatives overlapping a retained detection of another class at
    /// or above the threshold.
    pub fn_misclassified: usize,
}

impl ClassCounts {
    pub fn add(&mut self, other: &ClassCounts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.fn_misclassified += other.fn_misclassified;
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MatchResult {
    /// Accepted assignments, including ones below the IoU threshold.
    pub pairs: Vec<MatchPair>,
    /// Detections that passed the confidence filter, by original index.
    pub retained: Vec<usize>,
    /// Ground truths not covered by a true positive.
    pub unmatched_gt: Vec<usize>,
    /// Retained detections that are not true positives.
    pub unmatched_det: Vec<usize>,
    pub per_class: BTreeMap<String, ClassCounts>,
}

impl MatchResult {
    pub fn tp(&self) -> usize {
        self.pairs.iter().filter(|p| p.true_positive).count()
    }

    pub fn fp(&self) -> usize {
        self.unmatched_det.len()
    }

    pub fn fn_(&self) -> usize {
        self.unmatched_gt.len()
    }

    pub fn is_true_positive(&self, det: usize) -> bool {
        self.pairs.iter().any(|p| p.det == det && p.true_positive)
    }

    /// `(gt, det)` pairs, sorted, for set comparisons.
    pub fn pair_set(&self) -> Vec<(usize, usize)> {
        let mut v: Vec<_> = self.pairs.iter().map(|p| (p.gt, p.det)).collect();
        v.sort_unstable();
        v
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Candidate {
    pub gt: usize,
    pub det: usize,
    pub iou: f64,
    pub confidence: f64,
    pub product: f64,
}

/// Strict total order on candidates: greater means taken first.
pub(crate) fn candidate_order(a: &Candidate, b: &Candidate) -> Ordering {
    a.product
        .total_cmp(&b.product)
        .then_with(|| a.confidence.total_cmp(&b.confidence))
        .then_with(|| b.det.cmp(&a.det))
        .then_with(|| b.gt.cmp(&a.gt))
}

pub(crate) fn candidates(
    gts: &[GroundTruthBox],
    dets: &[Detection],
    retained: &[usize],
    cfg: &MatchConfig,
) -> Vec<Candidate> {
    let mut out = Vec::new();
    for (g, gt) in gts.iter().enumerate() {
        for &d in retained {
            let det = &dets[d];
            if cfg.require_class_match && det.category != gt.category {
                continue;
            }
            let v = iou(&gt.hbb, &det.hbb);
            if v >= cfg.iou_floor && v > 0.0 {
                out.push(Candidate {
                    gt: g,
                    det: d,
                    iou: v,
                    confidence: det.confidence,
                    product: v * det.confidence,
                });
            }
        }
    }
    out
}

pub fn match_detections(
    gts: &[GroundTruthBox],
    dets: &[Detection],
    cfg: &MatchConfig,
) -> MatchResult {
    let retained: Vec<usize> = (0..dets.len())
        .filter(|&d| dets[d].confidence >= cfg.min_confidence)
        .collect();
    let mut cands = candidates(gts, dets, &retained, cfg);
    cands.sort_by(|a, b| candidate_order(b, a));

    let mut gt_taken = vec![false; gts.len()];
    let mut det_taken = vec![false; dets.len()];
    let mut pairs = Vec::new();
    for c in cands {
        if gt_taken[c.gt] || det_taken[c.det] {
            continue;
        }
        gt_taken[c.gt] = true;
        det_taken[c.det] = true;
        pairs.push(MatchPair {
            gt: c.gt,
            det: c.det,
            iou: c.iou,
            confidence: c.confidence,
            true_positive: c.iou >= cfg.iou_threshold
                && gts[c.gt].category == dets[c.det].category,
        });
    }
    finish(gts, dets, cfg, retained, pairs)
}

pub(crate) fn finish(
    gts: &[GroundTruthBox],
    dets: &[Detection],
    cfg: &MatchConfig,
    retained: Vec<usize>,
    pairs: Vec<MatchPair>,
) -> MatchResult {
    let mut gt_tp = vec![false; gts.len()];
    let mut det_tp = vec![false; dets.len()];
    for p in pairs.iter().filter(|p| p.true_positive) {
        gt_tp[p.gt] = true;
        det_tp[p.det] = true;
    }
    let unmatched_gt: Vec<usize> = (0..gts.len()).filter(|&g| !gt_tp[g]).collect();
    let unmatched_det: Vec<usize> = retained.iter().copied().filter(|&d| !det_tp[d]).collect();

    let mut per_class: BTreeMap<String, ClassCounts> = BTreeMap::new();
    for p in pairs.iter().filter(|p| p.true_positive) {
        per_class.entry(gts[p.gt].category.clone()).or_default().tp += 1;
    }
    for &d in &unmatched_det {
        per_class.entry(dets[d].category.clone()).or_default().fp += 1;
    }
    for &g in &unmatched_gt {
        let gt = &gts[g];
        let counts = per_class.entry(gt.category.clone()).or_default();
        counts.fn_ += 1;
        let misclassified = retained.iter().any(|&d| {
            dets[d].category != gt.category && iou(&gt.hbb, &dets[d].hbb) >= cfg.iou_threshold
        });
        if misclassified {
            counts.fn_misclassified += 1;
        }
    }

    MatchResult {
        pairs,
        retained,
        unmatched_gt,
        unmatched_det,
        per_class,
    }
}

/// `(accurate, total)`: true positives at the configured confidence over the
/// number of ground-truth objects, pooled across classes.
pub fn accuracy_count(
    gts: &[GroundTruthBox],
    dets: &[Detection],
    cfg: &MatchConfig,
) -> (usize, usize) {
    (match_detections(gts, dets, cfg).tp(), gts.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Hbb;

    fn gt(cat: &str, b: (f64, f64, f64, f64)) -> GroundTruthBox {
        GroundTruthBox::from_hbb(Hbb::new(b.0, b.1, b.2, b.3).unwrap(), cat)
    }

    fn det(cat: &str, b: (f64, f64, f64, f64), conf: f64) -> Detection {
        Detection::new(Hbb::new(b.0, b.1, b.2, b.3).unwrap(), cat, conf).unwrap()
    }

    #[test]
    fn identical_box_is_tp() {
        let r = match_detections(
            &[gt("plane", (0.0, 0.0, 10.0, 10.0))],
            &[det("plane", (0.0, 0.0, 10.0, 10.0), 0.9)],
            &MatchConfig::default(),
        );
        assert_eq!((r.tp(), r.fp(), r.fn_()), (1, 0, 0));
    }

    #[test]
    fn duplicate_resolved_by_product() {
        // both dets have IoU 0.8 with the gt: 10x10 gt, 10x8 dets inside it
        let g = [gt("ship", (0.0, 0.0, 10.0, 10.0))];
        let d = [
            det("ship", (0.0, 0.0, 10.0, 8.0), 0.6),
            det("ship", (0.0, 2.0, 10.0, 10.0), 0.9),
        ];
        let r = match_detections(&g, &d, &MatchConfig::default());
        assert_eq!(r.pairs.len(), 1);
        assert_eq!(r.pairs[0].det, 1);
        assert_eq!((r.tp(), r.fp(), r.fn_()), (1, 1, 0));
        assert_eq!(r.unmatched_det, [0]);
    }

    #[test]
    fn confidence_filter_and_threshold() {
        let g = [gt("ship", (0.0, 0.0, 10.0, 10.0))];
        let low = [det("ship", (0.0, 0.0, 10.0, 10.0), 0.3)];
        let r = match_detections(&g, &low, &MatchConfig::default());
        assert!(r.retained.is_empty());
        assert_eq!((r.tp(), r.fp(), r.fn_()), (0, 0, 1));

        // IoU 0.4 wins the pair but stays below 0.5
        let weak = [det("ship", (0.0, 0.0, 10.0, 4.0), 0.9)];
        let r = match_detections(&g, &weak, &MatchConfig::default());
        assert_eq!(r.pairs.len(), 1);
        assert_eq!((r.tp(), r.fp(), r.fn_()), (0, 1, 1));
        let r = match_detections(&g, &weak, &MatchConfig::default().with_threshold(0.3));
        assert_eq!(r.tp(), 1);
    }

    #[test]
    fn wrong_class_is_never_tp() {
        let g = [gt("plane", (0.0, 0.0, 10.0, 10.0))];
        let d = [det("ship", (0.0, 0.0, 10.0, 10.0), 0.9)];
        let strict = match_detections(&g, &d, &MatchConfig::default());
        assert!(strict.pairs.is_empty());
        assert_eq!(strict.per_class["plane"].fn_misclassified, 1);

        let loose = MatchConfig {
            require_class_match: false,
            ..MatchConfig::default()
        };
        let r = match_detections(&g, &d, &loose);
        assert_eq!(r.pairs.len(), 1);
        assert_eq!((r.tp(), r.fp(), r.fn_()), (0, 1, 1));
        assert_eq!(r.per_class["plane"].fn_misclassified, 1);
        assert_eq!(r.per_class["ship"].fp, 1);
    }

    #[test]
    fn det_goes_to_higher_product_gt() {
        let g = [
            gt("car", (0.0, 0.0, 10.0, 10.0)),
            gt("car", (2.0, 0.0, 12.0, 10.0)),
        ];
        let d = [det("car", (2.0, 0.0, 12.0, 10.0), 0.8)];
        let r = match_detections(&g, &d, &MatchConfig::default());
        assert_eq!(r.pair_set(), [(1, 0)]);
        assert_eq!(r.unmatched_gt, [0]);
    }

    #[test]
    fn config_validation() {
        assert!(MatchConfig::default().validate().is_ok());
        assert!(MatchConfig::default().with_threshold(0.0).validate().is_err());
        assert!(MatchConfig::default().with_threshold(0.05).validate().is_err());
        assert!(MatchConfig::default().with_min_confidence(1.5).validate().is_err());
    }

    #[test]
    fn accuracy_with_no_detections() {
        let g = [gt("plane", (0.0, 0.0, 1.0, 1.0)), gt("plane", (5.0, 5.0, 6.0, 6.0))];
        assert_eq!(accuracy_count(&g, &[], &MatchConfig::default()), (0, 2));
    }
}
