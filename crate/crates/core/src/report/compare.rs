//! `compare` command: per-image deltas between two run directories, each
//! holding a `bench_summary.json` and optionally an `eval_summary.json`.
//!
//! Images pair up by exact id first, then by base id (the part before
//! `__`), so a run over `P1854__s30` compares against `P1854`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::bench::{bench_series, BenchRun};
use super::config::Config;
use super::eval::EvalOutput;
use super::svg::scatter;
use super::{embed_in_svg, write_file, write_json, RunManifest};
use crate::bench::ImageSummary;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageDelta {
    pub id_a: String,
    pub id_b: String,
    pub pixels_a: Option<u64>,
    pub pixels_b: Option<u64>,
    pub oom_a: bool,
    pub oom_b: bool,
    pub time_a: Option<f64>,
    pub time_b: Option<f64>,
    /// B minus A; absent unless both sides have a value.
    pub time_delta: Option<f64>,
    pub peak_rss_delta: Option<f64>,
    pub accuracy_a: Option<f64>,
    pub accuracy_b: Option<f64>,
    pub accuracy_delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub manifest: RunManifest,
    pub backend_a: String,
    pub backend_b: String,
    pub deltas: Vec<ImageDelta>,
}

/// The run loaded from one directory.
#[derive(Debug, Clone)]
pub struct RunDir {
    pub bench: BenchRun,
    pub eval: Option<EvalOutput>,
}

impl RunDir {
    pub fn load(dir: &Path) -> Result<Self> {
        let read = |name: &str| -> Result<Option<String>> {
            let p = dir.join(name);
            match fs::read_to_string(&p) {
                Ok(t) => Ok(Some(t)),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
                Err(e) => Err(Error::io(&p, e)),
            }
        };
        let bench_text = read("bench_summary.json")?.ok_or_else(|| {
            Error::InvalidParameter(format!("{} has no bench_summary.json", dir.display()))
        })?;
        let eval = read("eval_summary.json")?
            .map(|t| serde_json::from_str(&t))
            .transpose()?;
        Ok(Self {
            bench: serde_json::from_str(&bench_text)?,
            eval,
        })
    }

    fn accuracy(&self, id: &str) -> Option<f64> {
        self.eval
            .as_ref()?
            .report
            .images
            .iter()
            .find(|i| i.id == id)
            .map(|i| i.accuracy.fraction())
    }
}

pub fn base_id(id: &str) -> &str {
    id.split_once("__").map_or(id, |(b, _)| b)
}

fn diff(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    Some(b? - a?)
}

fn pair_up<'a>(a: &'a [ImageSummary], b: &'a [ImageSummary]) -> Vec<(&'a ImageSummary, &'a ImageSummary)> {
    let exact: BTreeMap<&str, &ImageSummary> = a.iter().map(|s| (s.image_id.as_str(), s)).collect();
    let mut by_base: BTreeMap<&str, Vec<&ImageSummary>> = BTreeMap::new();
    for s in a {
        by_base.entry(base_id(&s.image_id)).or_default().push(s);
    }
    b.iter()
        .filter_map(|sb| {
            let partner = exact
                .get(sb.image_id.as_str())
                .or_else(|| exact.get(base_id(&sb.image_id)))
                .copied()
                .or_else(|| match by_base.get(base_id(&sb.image_id)).map(Vec::as_slice) {
                    Some([only]) => Some(*only),
                    _ => None,
                })?;
            Some((partner, sb))
        })
        .collect()
}

pub fn compare_runs(a: &RunDir, b: &RunDir, config: &Config) -> Result<Comparison> {
    let pairs = pair_up(&a.bench.images, &b.bench.images);
    if pairs.is_empty() {
        return Err(Error::InvalidParameter(
            "the two runs share no image ids".into(),
        ));
    }
    let mean_time = |s: &ImageSummary| if s.oom { None } else { s.mean_wall_time };
    let deltas = pairs
        .into_iter()
        .map(|(sa, sb)| {
            let (acc_a, acc_b) = (a.accuracy(&sa.image_id), b.accuracy(&sb.image_id));
            ImageDelta {
                id_a: sa.image_id.clone(),
                id_b: sb.image_id.clone(),
                pixels_a: sa.total_pixels,
                pixels_b: sb.total_pixels,
                oom_a: sa.oom,
                oom_b: sb.oom,
                time_a: mean_time(sa),
                time_b: mean_time(sb),
                time_delta: diff(mean_time(sa), mean_time(sb)),
                peak_rss_delta: diff(sa.mean_peak_rss, sb.mean_peak_rss),
                accuracy_a: acc_a,
                accuracy_b: acc_b,
                accuracy_delta: diff(acc_a, acc_b),
            }
        })
        .collect();
    let mut manifest = RunManifest::start("compare", config);
    manifest.backends = vec![a.bench.backend.clone(), b.bench.backend.clone()];
    Ok(Comparison {
        manifest,
        backend_a: a.bench.backend.clone(),
        backend_b: b.bench.backend.clone(),
        deltas,
    })
}

fn cell(v: Option<f64>, oom: bool) -> String {
    if oom {
        "X".into()
    } else {
        v.map_or_else(|| "NA".into(), |v| format!("{v:.4}"))
    }
}

pub fn render_compare_text(c: &Comparison) -> String {
    let mut out = c.manifest.comment_line();
    out.push('\n');
    let _ = writeln!(
        out,
        "{:<24} {:<24} {:>10} {:>10} {:>11} {:>14} {:>9}",
        "image_a", "image_b", "time_a", "time_b", "time_delta", "rss_delta_mib", "acc_delta"
    );
    for d in &c.deltas {
        let either = d.oom_a || d.oom_b;
        let _ = writeln!(
            out,
            "{:<24} {:<24} {:>10} {:>10} {:>11} {:>14} {:>9}",
            d.id_a,
            d.id_b,
            cell(d.time_a, d.oom_a),
            cell(d.time_b, d.oom_b),
            cell(d.time_delta, either),
            cell(d.peak_rss_delta.map(|v| v / (1024.0 * 1024.0)), either),
            cell(d.accuracy_delta, false)
        );
    }
    out
}

/// Writes `compare.txt`, `compare.json` and `compare.svg` into `out`.
pub fn cmd_compare(dir_a: &Path, dir_b: &Path, config: &Config, out: &Path) -> Result<Comparison> {
    let a = RunDir::load(dir_a)?;
    let b = RunDir::load(dir_b)?;
    let mut cmp = compare_runs(&a, &b, config)?;
    cmp.manifest.finish();
    write_file(&out.join("compare.txt"), render_compare_text(&cmp))?;
    write_json(&out.join("compare.json"), &cmp)?;
    let label = |dir: &Path, backend: &str| format!("{backend} ({})", dir.display());
    let svg = scatter(
        "time vs pixels",
        &[
            bench_series(&label(dir_a, &a.bench.backend), &a.bench.images),
            bench_series(&label(dir_b, &b.bench.backend), &b.bench.images),
        ],
    );
    write_file(&out.join("compare.svg"), embed_in_svg(&svg, &cmp.manifest))?;
    Ok(cmp)
}
