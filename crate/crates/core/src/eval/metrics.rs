use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `tp / (tp + fp)`, 0 when nothing was predicted.
pub fn precision(tp: usize, fp: usize) -> f64 {
    ratio(tp, tp + fp)
}

/// `tp / (tp + fn)`, 0 when there is no ground truth.
pub fn recall(tp: usize, fn_: usize) -> f64 {
    ratio(tp, tp + fn_)
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub confidence: f64,
    pub tp: usize,
    pub fp: usize,
    pub precision: f64,
    pub recall: f64,
}

/// Cumulative precision/recall down a confidence-ranked detection list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    pub class: String,
    pub num_ground_truth: usize,
    pub points: Vec<PrPoint>,
}

impl PrCurve {
    /// `outcomes` holds `(confidence, is_true_positive)` per detection. The
    /// ranking is by descending confidence; equal confidences keep input
    /// order.
    pub fn from_outcomes(
        class: impl Into<String>,
        num_ground_truth: usize,
        outcomes: &[(f64, bool)],
    ) -> Self {
        let mut ranked: Vec<(f64, bool)> = outcomes.to_vec();
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
        let (mut tp, mut fp) = (0, 0);
        let points = ranked
            .into_iter()
            .map(|(confidence, hit)| {
                if hit {
                    tp += 1;
                } else {
                    fp += 1;
                }
                PrPoint {
                    confidence,
                    tp,
                    fp,
                    precision: precision(tp, fp),
                    recall: ratio(tp, num_ground_truth),
                }
            })
            .collect();
        Self {
            class: class.into(),
            num_ground_truth,
            points,
        }
    }
}

/// Recall levels 0.0, 0.1, …, 1.0.
pub const RECALL_LEVELS: usize = 11;

/// 11-point interpolated AP. `None` when the class has no ground truth.
///
/// At each recall level `r` the interpolated precision is the highest
/// precision among points whose recall is at least `r` (0 if none).
/// Recall comparisons use integer counts so levels like 0.3 compare exactly.
pub fn interpolated_ap(curve: &PrCurve) -> Option<f64> {
    let n = curve.num_ground_truth;
    if n == 0 {
        return None;
    }
    let sum: f64 = (0..RECALL_LEVELS)
        .map(|level| {
            curve
                .points
                .iter()
                .filter(|p| 10 * p.tp >= level * n)
                .map(|p| p.precision)
                .fold(0.0, f64::max)
        })
        .sum();
    Some(sum / RECALL_LEVELS as f64)
}

/// Unweighted mean over classes with a defined AP.
pub fn mean_ap(aps: impl IntoIterator<Item = Option<f64>>) -> Result<f64> {
    let defined: Vec<f64> = aps.into_iter().flatten().collect();
    if defined.is_empty() {
        return Err(Error::Evaluation(
            "no class has ground truth; mAP undefined".into(),
        ));
    }
    Ok(defined.iter().sum::<f64>() / defined.len() as f64)
}
