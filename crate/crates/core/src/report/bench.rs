//! `bench` command: runs the measurement protocol and writes
//! `samples.tsv`, `detections/<id>.txt`, `bench_summary.json`,
//! `bench_table.txt` and `bench.svg`.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::Config;
use super::svg::{scatter, Point, Series};
use super::{create_dir, embed_in_svg, write_file, write_json, DatasetFingerprint, RunManifest};
use crate::annotation::{write_detections, DatasetIndex, LabelMap};
use crate::bench::samples::write_samples;
use crate::bench::{run_benchmark, summarize, Backend, BenchPlan, BenchSample, ImageSummary};
use crate::error::Result;
use crate::model::Detection;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRun {
    pub manifest: RunManifest,
    pub backend: String,
    pub runnable_fraction: f64,
    /// Mean time of the largest runnable image over that of the smallest.
    pub time_ratio: Option<f64>,
    pub images: Vec<ImageSummary>,
}

impl BenchRun {
    pub fn image(&self, id: &str) -> Option<&ImageSummary> {
        self.images.iter().find(|s| s.image_id == id)
    }
}

fn time_ratio(images: &[ImageSummary]) -> Option<f64> {
    let mut timed: Vec<(u64, f64)> = images
        .iter()
        .filter(|s| s.runnable)
        .filter_map(|s| Some((s.total_pixels?, s.mean_wall_time?)))
        .collect();
    timed.sort_by_key(|t| t.0);
    let (small, large) = (timed.first()?, timed.last()?);
    (small.1 > 0.0).then(|| large.1 / small.1)
}

fn mib(bytes: Option<f64>) -> String {
    bytes.map_or_else(|| "NA".into(), |b| format!("{:.1}", b / (1024.0 * 1024.0)))
}

/// Fixed-width table; every measured cell of an out-of-memory image is `X`.
pub fn render_bench_table(run: &BenchRun) -> String {
    let mut out = run.manifest.comment_line();
    out.push('\n');
    let _ = writeln!(
        out,
        "{:<24} {:>12} {:>5} {:>5} {:>12} {:>9} {:>12} {:>10}",
        "image", "pixels", "runs", "ok", "mean_time_s", "rel_time", "peak_rss_mib", "swap_mib"
    );
    let fastest = run
        .images
        .iter()
        .filter(|s| s.runnable)
        .filter_map(|s| s.mean_wall_time)
        .fold(f64::INFINITY, f64::min);
    for s in &run.images {
        let px = s.total_pixels.map_or_else(|| "NA".into(), |p| p.to_string());
        if s.oom {
            let _ = writeln!(
                out,
                "{:<24} {:>12} {:>5} {:>5} {:>12} {:>9} {:>12} {:>10}",
                s.image_id, px, s.attempted_runs, s.ok_runs, "X", "X", "X", "X"
            );
            continue;
        }
        let (t, rel) = match s.mean_wall_time {
            Some(t) => (
                format!("{t:.4}"),
                if fastest.is_finite() && fastest > 0.0 {
                    format!("{:.2}", t / fastest)
                } else {
                    "NA".into()
                },
            ),
            None => ("NA".into(), "NA".into()),
        };
        let _ = writeln!(
            out,
            "{:<24} {:>12} {:>5} {:>5} {:>12} {:>9} {:>12} {:>10}",
            s.image_id,
            px,
            s.attempted_runs,
            s.ok_runs,
            t,
            rel,
            mib(s.mean_peak_rss),
            mib(s.mean_final_swap)
        );
    }
    let runnable = run.images.iter().filter(|s| s.runnable).count();
    let _ = writeln!(
        out,
        "runnable: {runnable}/{} ({:.2}%)",
        run.images.len(),
        100.0 * run.runnable_fraction
    );
    if let Some(r) = run.time_ratio {
        let _ = writeln!(out, "largest/smallest time ratio: {r:.2}");
    }
    out
}

pub fn bench_series(name: &str, images: &[ImageSummary]) -> Series {
    Series {
        name: name.to_string(),
        points: images
            .iter()
            .map(|s| Point {
                label: s.image_id.clone(),
                pixels: s.total_pixels.unwrap_or(0),
                time: if s.oom { None } else { s.mean_wall_time },
            })
            .collect(),
    }
}

/// Detections of the first successful measured run per image, at or above
/// `threshold`.
fn first_detections(samples: &[BenchSample], id: &str, threshold: f64) -> Option<Vec<Detection>> {
    samples
        .iter()
        .filter(|s| !s.discarded && s.image_id == id)
        .find_map(|s| s.outcome.detections())
        .map(|d| d.iter().filter(|d| d.confidence >= threshold).cloned().collect())
}

pub fn cmd_bench(
    dataset: &DatasetIndex,
    backend: &mut dyn Backend,
    config: &Config,
    labels: &LabelMap,
    out: &Path,
) -> Result<(BenchRun, Vec<BenchSample>)> {
    let mut manifest = RunManifest::start("bench", config);
    manifest.dataset = Some(DatasetFingerprint::of(dataset));
    manifest.backends.push(backend.id().to_string());

    let mut plan = BenchPlan::new(dataset.clone());
    plan.repetitions = config.bench.repetitions();
    plan.order = config.bench.order;
    plan.warmup_image = config.bench.warmup_image.clone();
    let samples = run_benchmark(&plan, backend)?;
    manifest.finish();

    let det_dir = out.join("detections");
    create_dir(&det_dir)?;
    for id in plan.ordered_ids() {
        if let Some(dets) = first_detections(&samples, &id, config.bench.detection_threshold) {
            write_file(&det_dir.join(format!("{id}.txt")), write_detections(&dets, labels)?)?;
        }
    }

    let pixels = |id: &str| dataset.get(id).map(|r| r.total_pixels());
    let images = summarize(&samples, &pixels);
    let runnable = images.iter().filter(|s| s.runnable).count();
    let run = BenchRun {
        backend: backend.id().to_string(),
        runnable_fraction: if images.is_empty() {
            0.0
        } else {
            runnable as f64 / images.len() as f64
        },
        time_ratio: time_ratio(&images),
        images,
        manifest,
    };

    let mut tsv = run.manifest.comment_line();
    tsv.push('\n');
    tsv.push_str(&write_samples(&samples));
    write_file(&out.join("samples.tsv"), tsv)?;
    write_json(&out.join("bench_summary.json"), &run)?;
    write_file(&out.join("bench_table.txt"), render_bench_table(&run))?;
    let svg = scatter(
        &format!("{}: time vs pixels", run.backend),
        &[bench_series(&run.backend, &run.images)],
    );
    write_file(&out.join("bench.svg"), embed_in_svg(&svg, &run.manifest))?;
    Ok((run, samples))
}
