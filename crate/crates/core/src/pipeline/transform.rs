use crate::model::GroundTruthBox;

/// Multiplies every quad and box coordinate by `percent / 100`.
pub fn transform_annotations_scale(boxes: &[GroundTruthBox], percent: f64) -> Vec<GroundTruthBox> {
    let factor = percent / 100.0;
    boxes
        .iter()
        .map(|b| GroundTruthBox {
            quad: b.quad.scaled(factor),
            hbb: b.hbb.scaled(factor),
            category: b.category.clone(),
            difficult: b.difficult,
        })
        .collect()
}
