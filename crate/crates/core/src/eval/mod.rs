//! Accuracy metrics: matching, precision/recall, interpolated AP and mAP.

pub mod dataset;
pub mod matching;
pub mod metrics;

pub use dataset::{
    coco_ap_suite, coco_ladder, evaluate, Accuracy, ClassReport, CocoSummary, EvalConfig,
    EvalReport, ImageEval, ImageReport, PairListing,
};
pub use matching::{accuracy_count, match_detections, ClassCounts, MatchConfig, MatchPair, MatchResult};
pub use metrics::{interpolated_ap, mean_ap, precision, recall, PrCurve, PrPoint};
