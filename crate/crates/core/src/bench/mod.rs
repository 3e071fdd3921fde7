//! Measurement protocol: one discarded warm-up run, then every image a fixed
//! number of times in sequence, stopping an image's repetitions at its first
//! out-of-memory failure.

pub mod backend;
pub mod memory;
pub mod process;
pub mod protocol;
pub mod samples;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::annotation::DatasetIndex;
use crate::error::{Error, Result};
use crate::model::{Detection, ImageRecord};

pub use backend::{Backend, BackendKind, BackendSpec, ReplayBackend, RunReport, SyntheticBackend, SyntheticModel};
pub use memory::{MemoryReading, MemorySampler};
pub use process::ExternalProcessBackend;

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Ok(Vec<Detection>),
    Oom,
    BackendError(String),
}

impl Outcome {
    pub fn is_ok(&self) -> bool {
        matches!(self, Outcome::Ok(_))
    }

    pub fn is_oom(&self) -> bool {
        matches!(self, Outcome::Oom)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Ok(_) => "ok",
            Outcome::Oom => "oom",
            Outcome::BackendError(_) => "error",
        }
    }

    pub fn detections(&self) -> Option<&[Detection]> {
        match self {
            Outcome::Ok(d) => Some(d),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimingSource {
    /// Detection phase timed by the backend.
    Backend,
    /// Request round-trip timed by the harness.
    Harness,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSample {
    pub image_id: String,
    /// 0 for the warm-up run, then 1-based.
    pub run_index: u32,
    pub outcome: Outcome,
    pub wall_time: f64,
    pub harness_time: f64,
    pub timing: TimingSource,
    pub peak_rss: Option<u64>,
    pub final_swap: Option<u64>,
    pub discarded: bool,
}

impl BenchSample {
    fn from_report(image_id: &str, run_index: u32, discarded: bool, r: RunReport) -> Self {
        Self {
            image_id: image_id.to_string(),
            run_index,
            wall_time: r.wall_time(),
            harness_time: r.harness_time,
            timing: r.timing_source(),
            peak_rss: r.peak_rss,
            final_swap: r.final_swap,
            discarded,
            outcome: r.outcome,
        }
    }
}

/// Runs per image: originals count as baseline images, derived images use
/// the modified-image count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Repetitions {
    pub baseline: u32,
    pub derived: u32,
}

impl Default for Repetitions {
    fn default() -> Self {
        Self {
            baseline: 5,
            derived: 3,
        }
    }
}

impl Repetitions {
    pub fn fixed(n: u32) -> Self {
        Self {
            baseline: n,
            derived: n,
        }
    }

    pub fn for_image(&self, img: &ImageRecord) -> u32 {
        if img.provenance.is_original() {
            self.baseline
        } else {
            self.derived
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunOrder {
    #[default]
    ByTotalPixelsAsc,
    AsListed,
}

#[derive(Debug, Clone)]
pub struct BenchPlan {
    pub dataset: DatasetIndex,
    pub repetitions: Repetitions,
    /// Defaults to the smallest image.
    pub warmup_image: Option<String>,
    pub order: RunOrder,
}

impl BenchPlan {
    pub fn new(dataset: DatasetIndex) -> Self {
        Self {
            dataset,
            repetitions: Repetitions::default(),
            warmup_image: None,
            order: RunOrder::default(),
        }
    }

    pub fn ordered_ids(&self) -> Vec<String> {
        match self.order {
            RunOrder::ByTotalPixelsAsc => order_by_pixels(&self.dataset),
            RunOrder::AsListed => self.dataset.images.iter().map(|i| i.id.clone()).collect(),
        }
    }

    pub fn warmup_id(&self) -> Result<String> {
        match &self.warmup_image {
            Some(id) if self.dataset.get(id).is_some() => Ok(id.clone()),
            Some(id) => Err(Error::InvalidParameter(format!(
                "warm-up image {id} is not in the dataset"
            ))),
            None => order_by_pixels(&self.dataset)
                .into_iter()
                .next()
                .ok_or_else(|| Error::InvalidParameter("empty dataset".into())),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dataset.images.is_empty() {
            return Err(Error::InvalidParameter("empty dataset".into()));
        }
        if self.repetitions.baseline < 1 || self.repetitions.derived < 1 {
            return Err(Error::InvalidParameter("repetitions must be >= 1".into()));
        }
        self.warmup_id().map(|_| ())
    }
}

/// Ascending by pixel count, ties by id.
pub fn order_by_pixels(dataset: &DatasetIndex) -> Vec<String> {
    dataset.ids_by_pixels()
}

/// Executes the plan strictly sequentially. Fails only when the backend
/// cannot be prepared; per-image failures are recorded as samples.
pub fn run_benchmark(plan: &BenchPlan, backend: &mut dyn Backend) -> Result<Vec<BenchSample>> {
    plan.validate()?;
    let order = plan.ordered_ids();
    backend.prepare(&order)?;

    let warmup = plan.warmup_id()?;
    let rec = plan.dataset.get(&warmup).expect("validated warm-up id");
    let mut samples = Vec::new();
    let report = backend.run(rec, plan.dataset.path(&warmup));
    samples.push(BenchSample::from_report(&warmup, 0, true, report));

    for id in &order {
        let rec = plan.dataset.get(id).expect("ordered ids come from the dataset");
        let path = plan.dataset.path(id);
        for run in 1..=plan.repetitions.for_image(rec) {
            let report = backend.run(rec, path);
            let oom = report.outcome.is_oom();
            if let Outcome::BackendError(msg) = &report.outcome {
                log::warn!("{id} run {run}: backend error: {msg}");
            }
            samples.push(BenchSample::from_report(id, run, false, report));
            if oom {
                log::info!("{id} ran out of memory; skipping its remaining runs");
                break;
            }
        }
    }
    backend.shutdown()?;
    Ok(samples)
}

/// Per-image aggregate over measured (non-warm-up) samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageSummary {
    pub image_id: String,
    pub total_pixels: Option<u64>,
    pub attempted_runs: u32,
    pub ok_runs: u32,
    pub oom: bool,
    pub runnable: bool,
    pub mean_wall_time: Option<f64>,
    pub mean_peak_rss: Option<f64>,
    pub mean_final_swap: Option<f64>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Aggregates in first-seen image order. `pixels` supplies pixel counts when
/// available.
pub fn summarize(samples: &[BenchSample], pixels: &dyn Fn(&str) -> Option<u64>) -> Vec<ImageSummary> {
    let mut order: Vec<&str> = Vec::new();
    let mut groups: BTreeMap<&str, Vec<&BenchSample>> = BTreeMap::new();
    for s in samples.iter().filter(|s| !s.discarded) {
        let g = groups.entry(&s.image_id).or_default();
        if g.is_empty() {
            order.push(&s.image_id);
        }
        g.push(s);
    }
    order
        .into_iter()
        .map(|id| {
            let runs = &groups[id];
            let ok: Vec<&&BenchSample> = runs.iter().filter(|s| s.outcome.is_ok()).collect();
            ImageSummary {
                image_id: id.to_string(),
                total_pixels: pixels(id),
                attempted_runs: runs.len() as u32,
                ok_runs: ok.len() as u32,
                oom: runs.iter().any(|s| s.outcome.is_oom()),
                runnable: ok.len() == runs.len(),
                mean_wall_time: mean(ok.iter().map(|s| s.wall_time)),
                mean_peak_rss: mean(ok.iter().filter_map(|s| s.peak_rss).map(|v| v as f64)),
                mean_final_swap: mean(ok.iter().filter_map(|s| s.final_swap).map(|v| v as f64)),
            }
        })
        .collect()
}

/// Share of attempted images whose every measured run succeeded.
pub fn runnable_fraction(samples: &[BenchSample]) -> f64 {
    let summaries = summarize(samples, &|_| None);
    if summaries.is_empty() {
        return 0.0;
    }
    let runnable = summaries.iter().filter(|s| s.runnable).count();
    runnable as f64 / summaries.len() as f64
}
