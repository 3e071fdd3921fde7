//! TOML configuration. Every key is optional; defaults reproduce the
//! measurement and evaluation settings the toolkit was built around.
//!
//! ```toml
//! label_map = "dota_label_map.pbtxt"
//!
//! [eval]
//! iou_threshold = 0.5          # 0.3 for R-FCN-style evaluation
//! score_threshold = 0.01
//! accuracy_confidence = 0.5
//! require_class_match = true
//! iou_floor = 0.1
//! include_difficult = true
//! ladder = [0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95]
//!
//! [preprocess]
//! scale_percents = [80, 50, 30]
//! algorithm = "bilinear"       # or "nearest-neighbor"
//! effort_levels = [3, 6, 9]
//! output_effort = 6
//! tile_side = 4287             # omit to disable tiling
//! overlap_fraction = 0.1
//! keep_fraction = 0.5
//!
//! [bench]
//! baseline_repetitions = 5
//! derived_repetitions = 3
//! order = "by_total_pixels_asc" # or "as_listed"
//! warmup_image = "P2310"        # default: smallest image
//! detection_threshold = 0.01
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::annotation::{load_label_map, LabelMap};
use crate::bench::{Repetitions, RunOrder};
use crate::error::{Error, Result};
use crate::eval::EvalConfig;
use crate::model::ScaleAlgorithm;
use crate::pipeline::tile::{DEFAULT_KEEP_FRACTION, DEFAULT_OVERLAP};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub scale_percents: Vec<f64>,
    pub algorithm: ScaleAlgorithm,
    pub effort_levels: Vec<u8>,
    /// Encoder effort for scaled images and tiles.
    pub output_effort: u8,
    pub tile_side: Option<u32>,
    pub overlap_fraction: f64,
    pub keep_fraction: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            scale_percents: vec![80.0, 50.0, 30.0],
            algorithm: ScaleAlgorithm::Bilinear,
            effort_levels: crate::pipeline::EFFORT_LEVELS.to_vec(),
            output_effort: 6,
            tile_side: None,
            overlap_fraction: DEFAULT_OVERLAP,
            keep_fraction: DEFAULT_KEEP_FRACTION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub baseline_repetitions: u32,
    pub derived_repetitions: u32,
    pub order: RunOrder,
    pub warmup_image: Option<String>,
    pub detection_threshold: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        let reps = Repetitions::default();
        Self {
            baseline_repetitions: reps.baseline,
            derived_repetitions: reps.derived,
            order: RunOrder::ByTotalPixelsAsc,
            warmup_image: None,
            detection_threshold: 0.01,
        }
    }
}

impl BenchConfig {
    pub fn repetitions(&self) -> Repetitions {
        Repetitions {
            baseline: self.baseline_repetitions,
            derived: self.derived_repetitions,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Label map file; the built-in DOTA-v1.0 map when absent.
    pub label_map: Option<PathBuf>,
    pub eval: EvalConfig,
    pub preprocess: PreprocessConfig,
    pub bench: BenchConfig,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.eval.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        // label map paths are relative to the config file
        if let (Some(lm), Some(dir)) = (&cfg.label_map, path.parent()) {
            if lm.is_relative() {
                cfg.label_map = Some(dir.join(lm));
            }
        }
        Ok(cfg)
    }

    pub fn labels(&self) -> Result<LabelMap> {
        match &self.label_map {
            None => Ok(LabelMap::dota_v1()),
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                load_label_map(&text)
            }
        }
    }
}
