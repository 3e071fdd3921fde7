use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DatasetFingerprint;
use crate::annotation::{DatasetIndex, LabelMap};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexStats {
    pub image_count: usize,
    pub instance_count: usize,
    pub mean_boxes_per_image: f64,
    pub smallest: Option<(String, u64)>,
    pub largest: Option<(String, u64)>,
    /// Images with no label file.
    pub missing_labels: Vec<String>,
}

impl IndexStats {
    pub fn of(dataset: &DatasetIndex, missing_labels: Vec<String>) -> Self {
        let fp = DatasetFingerprint::of(dataset);
        let labelled = dataset.annotations.len();
        Self {
            image_count: fp.image_count,
            instance_count: fp.instance_count,
            mean_boxes_per_image: if labelled == 0 {
                0.0
            } else {
                fp.instance_count as f64 / labelled as f64
            },
            smallest: fp.smallest,
            largest: fp.largest,
            missing_labels,
        }
    }
}

impl fmt::Display for IndexStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "images: {}", self.image_count)?;
        writeln!(f, "instances: {}", self.instance_count)?;
        writeln!(f, "mean boxes/image: {:.2}", self.mean_boxes_per_image)?;
        if let Some((id, px)) = &self.smallest {
            writeln!(f, "smallest: {id} ({px} pixels)")?;
        }
        if let Some((id, px)) = &self.largest {
            writeln!(f, "largest: {id} ({px} pixels)")?;
        }
        if !self.missing_labels.is_empty() {
            writeln!(
                f,
                "missing labels ({}): {}",
                self.missing_labels.len(),
                self.missing_labels.join(" ")
            )?;
        }
        Ok(())
    }
}

pub fn cmd_index(root: &Path, labels: &LabelMap) -> Result<(DatasetIndex, IndexStats)> {
    let (dataset, missing) = DatasetIndex::load_dir(root, labels)?;
    for id in &missing {
        log::warn!("{id}: no label file");
    }
    let stats = IndexStats::of(&dataset, missing);
    Ok((dataset, stats))
}
