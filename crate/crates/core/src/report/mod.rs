//! Command implementations behind the `edgebench` binary, plus the run
//! manifest every emitted report carries.

pub mod bench;
pub mod compare;
pub mod config;
pub mod eval;
pub mod index;
pub mod preprocess;
pub mod svg;

use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::annotation::DatasetIndex;
use crate::error::{Error, Result};

pub use bench::{cmd_bench, BenchRun};
pub use compare::{cmd_compare, Comparison, ImageDelta};
pub use config::{BenchConfig, Config, PreprocessConfig};
pub use eval::{cmd_eval, render_eval_text};
pub use index::{cmd_index, IndexStats};
pub use preprocess::cmd_preprocess;

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Pixel-count extremes and size of the dataset a report was produced from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetFingerprint {
    pub image_count: usize,
    pub instance_count: usize,
    pub smallest: Option<(String, u64)>,
    pub largest: Option<(String, u64)>,
}

impl DatasetFingerprint {
    pub fn of(dataset: &DatasetIndex) -> Self {
        let ids = dataset.ids_by_pixels();
        let entry = |id: Option<&String>| {
            id.and_then(|id| dataset.get(id))
                .map(|r| (r.id.clone(), r.total_pixels()))
        };
        Self {
            image_count: dataset.images.len(),
            instance_count: dataset.instance_count(),
            smallest: entry(ids.first()),
            largest: entry(ids.last()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub toolkit_version: String,
    pub command: String,
    /// Seconds since the Unix epoch. `SOURCE_DATE_EPOCH` overrides the clock
    /// so reports can be reproduced byte for byte.
    pub started_at: u64,
    pub finished_at: u64,
    pub config: Config,
    pub dataset: Option<DatasetFingerprint>,
    pub backends: Vec<String>,
}

pub fn now_epoch_seconds() -> u64 {
    if let Some(fixed) = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.trim().parse().ok())
    {
        return fixed;
    }
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl RunManifest {
    pub fn start(command: &str, config: &Config) -> Self {
        let t = now_epoch_seconds();
        Self {
            toolkit_version: TOOLKIT_VERSION.to_string(),
            command: command.to_string(),
            started_at: t,
            finished_at: t,
            config: config.clone(),
            dataset: None,
            backends: Vec::new(),
        }
    }

    pub fn finish(&mut self) {
        self.finished_at = now_epoch_seconds();
    }

    /// Single comment line for text outputs.
    pub fn comment_line(&self) -> String {
        format!(
            "# manifest {}",
            serde_json::to_string(self).expect("manifest serializes")
        )
    }

    /// Recovers the manifest from a text report written with
    /// [`RunManifest::comment_line`].
    pub fn from_text(text: &str) -> Option<Self> {
        text.lines()
            .find_map(|l| l.strip_prefix("# manifest "))
            .and_then(|json| serde_json::from_str(json).ok())
    }
}

/// Places the manifest in a `<metadata>` element right after the opening
/// `<svg>` tag.
pub fn embed_in_svg(svg: &str, manifest: &RunManifest) -> String {
    let json = serde_json::to_string(manifest).expect("manifest serializes");
    let json = json.replace('&', "&amp;").replace('<', "&lt;");
    match svg.find('>') {
        Some(end) => format!("{}\n<metadata>{json}</metadata>{}", &svg[..=end], &svg[end + 1..]),
        None => svg.to_string(),
    }
}

pub(crate) fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(path, text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ImageRecord;

    #[test]
    fn manifest_survives_text_embedding() {
        let ds = DatasetIndex::new(
            vec![
                ImageRecord::new("P2310", 475, 546).unwrap(),
                ImageRecord::new("P1854", 13383, 4287).unwrap(),
            ],
            Default::default(),
        )
        .unwrap();
        let mut m = RunManifest::start("index", &Config::default());
        m.dataset = Some(DatasetFingerprint::of(&ds));
        m.backends.push("ssd".into());
        let text = format!("{}\nrest\n", m.comment_line());
        assert_eq!(RunManifest::from_text(&text), Some(m.clone()));
        let fp = m.dataset.unwrap();
        assert_eq!(fp.smallest, Some(("P2310".into(), 259_350)));
        assert_eq!(fp.largest, Some(("P1854".into(), 57_372_921)));
    }
}
