//! Detector backends: the synthetic cost model, detection-file replay, and
//! the spec parser that builds either one or an external process.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::process::ExternalProcessBackend;
use super::{Outcome, TimingSource};
use crate::annotation::parse_detections;
use crate::error::{Error, Result};
use crate::model::ImageRecord;

/// What one backend invocation produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub outcome: Outcome,
    /// Detection-phase seconds as reported by the backend or model.
    pub reported_time: Option<f64>,
    /// Request round-trip measured by the harness.
    pub harness_time: f64,
    pub peak_rss: Option<u64>,
    pub final_swap: Option<u64>,
}

impl RunReport {
    pub fn wall_time(&self) -> f64 {
        self.reported_time.unwrap_or(self.harness_time)
    }

    pub fn timing_source(&self) -> TimingSource {
        if self.reported_time.is_some() {
            TimingSource::Backend
        } else {
            TimingSource::Harness
        }
    }
}

pub trait Backend {
    fn id(&self) -> &str;

    /// Called once before any run; failing here aborts the benchmark.
    fn prepare(&mut self, image_ids: &[String]) -> Result<()>;

    fn run(&mut self, image: &ImageRecord, path: Option<&Path>) -> RunReport;

    fn shutdown(&mut self) -> Result<()> {
        Ok(())
    }

    /// True when one backend process serves many images.
    fn persistent(&self) -> bool {
        false
    }
}

/// Deterministic cost model: `time = overhead + coeff · pixels`, memory is
/// the decoded RGB buffer, and images above the pixel limit run out of
/// memory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticModel {
    pub memory_limit_pixels: u64,
    pub seconds_per_pixel: f64,
    pub overhead_seconds: f64,
}

impl SyntheticModel {
    pub fn validate(&self) -> Result<()> {
        let ok = self.seconds_per_pixel >= 0.0
            && self.overhead_seconds >= 0.0
            && self.seconds_per_pixel + self.overhead_seconds > 0.0
            && self.seconds_per_pixel.is_finite()
            && self.overhead_seconds.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(
                "synthetic model needs non-negative, not-both-zero time terms".into(),
            ))
        }
    }

    pub fn time_for(&self, pixels: u64) -> f64 {
        self.overhead_seconds + self.seconds_per_pixel * pixels as f64
    }

    pub fn fits(&self, pixels: u64) -> bool {
        pixels <= self.memory_limit_pixels
    }
}

pub struct SyntheticBackend {
    id: String,
    model: SyntheticModel,
}

impl SyntheticBackend {
    pub fn new(id: impl Into<String>, model: SyntheticModel) -> Result<Self> {
        model.validate()?;
        Ok(Self {
            id: id.into(),
            model,
        })
    }
}

impl Backend for SyntheticBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn prepare(&mut self, _image_ids: &[String]) -> Result<()> {
        Ok(())
    }

    fn run(&mut self, image: &ImageRecord, _path: Option<&Path>) -> RunReport {
        let pixels = image.total_pixels();
        if !self.model.fits(pixels) {
            return RunReport {
                outcome: Outcome::Oom,
                reported_time: None,
                harness_time: 0.0,
                peak_rss: None,
                final_swap: None,
            };
        }
        let t = self.model.time_for(pixels);
        RunReport {
            outcome: Outcome::Ok(Vec::new()),
            reported_time: Some(t),
            harness_time: t,
            peak_rss: Some(pixels * 3),
            final_swap: None,
        }
    }
}

/// A `# time: <seconds>` comment in a replay file.
fn recorded_time(text: &str) -> Option<f64> {
    text.lines()
        .filter_map(|l| l.trim().strip_prefix('#'))
        .filter_map(|l| l.trim().strip_prefix("time:"))
        .find_map(|v| v.trim().parse().ok())
        .filter(|t: &f64| t.is_finite() && *t >= 0.0)
}

/// Serves detections recorded earlier as `<dir>/<image-id>.txt`. A
/// `# time: <seconds>` line, if present, is reported as the detection time,
/// which makes replays fully deterministic.
pub struct ReplayBackend {
    id: String,
    dir: PathBuf,
}

impl ReplayBackend {
    pub fn new(id: impl Into<String>, dir: impl Into<PathBuf>) -> Self {
        Self {
            id: id.into(),
            dir: dir.into(),
        }
    }

    pub fn file_for(&self, image_id: &str) -> PathBuf {
        self.dir.join(format!("{image_id}.txt"))
    }
}

impl Backend for ReplayBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn prepare(&mut self, image_ids: &[String]) -> Result<()> {
        let missing: Vec<&str> = image_ids
            .iter()
            .filter(|id| !self.file_for(id).is_file())
            .map(String::as_str)
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::Backend(format!(
                "replay directory {} lacks detections for: {}",
                self.dir.display(),
                missing.join(", ")
            )))
        }
    }

    fn run(&mut self, image: &ImageRecord, _path: Option<&Path>) -> RunReport {
        let start = Instant::now();
        let path = self.file_for(&image.id);
        let mut reported_time = None;
        let outcome = match fs::read_to_string(&path) {
            Ok(text) => {
                reported_time = recorded_time(&text);
                match parse_detections(&text) {
                    Ok(dets) => Outcome::Ok(dets),
                    Err(e) => Outcome::BackendError(format!("{}: {e}", path.display())),
                }
            }
            Err(e) => Outcome::BackendError(format!("{}: {e}", path.display())),
        };
        RunReport {
            outcome,
            reported_time,
            harness_time: start.elapsed().as_secs_f64(),
            peak_rss: None,
            final_swap: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BackendKind {
    ExternalProcess {
        command: Vec<String>,
        #[serde(default)]
        persistent: bool,
    },
    Replay {
        dir: PathBuf,
    },
    Synthetic(SyntheticModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendSpec {
    pub id: String,
    /// Network input side in pixels, informational only.
    #[serde(default)]
    pub input_side: Option<u32>,
    #[serde(flatten)]
    pub kind: BackendKind,
}

impl BackendSpec {
    pub fn build(&self) -> Result<Box<dyn Backend>> {
        Ok(match &self.kind {
            BackendKind::ExternalProcess {
                command,
                persistent,
            } => Box::new(ExternalProcessBackend::new(
                self.id.clone(),
                command.clone(),
                *persistent,
            )?),
            BackendKind::Replay { dir } => Box::new(ReplayBackend::new(self.id.clone(), dir)),
            BackendKind::Synthetic(model) => {
                Box::new(SyntheticBackend::new(self.id.clone(), *model)?)
            }
        })
    }

    /// Parses the command-line form:
    ///
    /// * `synthetic:limit=<pixels>,coeff=<s/pixel>,overhead=<s>`
    /// * `replay:<dir>`
    /// * `exec:<command line>` or `exec-persistent:<command line>`
    ///
    /// An optional `<id>=` prefix names the backend, e.g. `ssd=exec:python3 adapter.py`.
    pub fn parse(text: &str) -> Result<Self> {
        let (id, body) = match text.split_once('=') {
            Some((id, body)) if !id.contains(':') && !id.is_empty() => {
                (Some(id.to_string()), body)
            }
            _ => (None, text),
        };
        let (kind, arg) = body.split_once(':').ok_or_else(|| {
            Error::Config(format!("backend spec {text:?} lacks a `kind:` prefix"))
        })?;
        let kind = match kind {
            "replay" => BackendKind::Replay { dir: arg.into() },
            "exec" | "exec-persistent" => {
                let command: Vec<String> = arg.split_whitespace().map(str::to_owned).collect();
                if command.is_empty() {
                    return Err(Error::Config("empty backend command".into()));
                }
                BackendKind::ExternalProcess {
                    command,
                    persistent: kind == "exec-persistent",
                }
            }
            "synthetic" => {
                let mut model = SyntheticModel {
                    memory_limit_pixels: u64::MAX,
                    seconds_per_pixel: 0.0,
                    overhead_seconds: 0.0,
                };
                for part in arg.split(',').filter(|p| !p.is_empty()) {
                    let (k, v) = part
                        .split_once('=')
                        .ok_or_else(|| Error::Config(format!("bad synthetic field {part:?}")))?;
                    let bad = || Error::Config(format!("bad synthetic value {part:?}"));
                    match k {
                        "limit" => model.memory_limit_pixels = v.parse().map_err(|_| bad())?,
                        "coeff" => model.seconds_per_pixel = v.parse().map_err(|_| bad())?,
                        "overhead" => model.overhead_seconds = v.parse().map_err(|_| bad())?,
                        _ => return Err(bad()),
                    }
                }
                model.validate()?;
                BackendKind::Synthetic(model)
            }
            other => return Err(Error::Config(format!("unknown backend kind {other:?}"))),
        };
        Ok(Self {
            id: id.unwrap_or_else(|| match &kind {
                BackendKind::Synthetic(_) => "synthetic".into(),
                BackendKind::Replay { .. } => "replay".into(),
                BackendKind::ExternalProcess { .. } => "external".into(),
            }),
            input_side: None,
            kind,
        })
    }
}
