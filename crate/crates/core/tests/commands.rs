mod common;

use std::fs;
use std::path::Path;

use edgebench::annotation::{write_ground_truth, DatasetIndex, LabelMap};
use edgebench::bench::{ReplayBackend, SyntheticBackend, SyntheticModel};
use edgebench::pipeline::manifest::parse_manifest;
use edgebench::pipeline::{write_png, RasterImage};
use edgebench::report::svg::count_oom_markers;
use edgebench::report::{cmd_bench, cmd_compare, cmd_eval, cmd_index, cmd_preprocess, Config, RunManifest};
use edgebench::{GroundTruthBox, Provenance};
use tempfile::TempDir;

fn gradient(w: u32, h: u32) -> RasterImage {
    let data = (0..h)
        .flat_map(|y| (0..w).flat_map(move |x| [(x % 256) as u8, (y % 256) as u8, ((x + y) % 256) as u8]))
        .collect();
    RasterImage::new(w, h, 3, data).unwrap()
}

/// Writes `images/<id>.png` and, when boxes are given, `labelTxt/<id>.txt`.
fn add_image(root: &Path, id: &str, w: u32, h: u32, boxes: Option<&[GroundTruthBox]>) {
    fs::create_dir_all(root.join("images")).unwrap();
    fs::create_dir_all(root.join("labelTxt")).unwrap();
    write_png(&root.join("images").join(format!("{id}.png")), &gradient(w, h), 6).unwrap();
    if let Some(b) = boxes {
        fs::write(root.join("labelTxt").join(format!("{id}.txt")), write_ground_truth(b)).unwrap();
    }
}

fn plane(x: f64, y: f64, side: f64) -> GroundTruthBox {
    GroundTruthBox::from_hbb(edgebench::Hbb::new(x, y, x + side, y + side).unwrap(), "plane")
}

fn three_image_dataset() -> TempDir {
    let dir = TempDir::new().unwrap();
    add_image(dir.path(), "A", 40, 30, Some(&[plane(2.0, 2.0, 10.0), plane(20.0, 10.0, 8.0)]));
    add_image(dir.path(), "B", 64, 48, Some(&[plane(10.0, 10.0, 20.0)]));
    add_image(dir.path(), "C", 20, 20, None);
    dir
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

fn strip_manifest(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with("# manifest"))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn index_counts_and_missing_labels() {
    let ds = three_image_dataset();
    let (index, stats) = cmd_index(ds.path(), &LabelMap::dota_v1()).unwrap();
    assert_eq!(stats.image_count, 3);
    assert_eq!(stats.instance_count, 3);
    assert_eq!(stats.missing_labels, ["C"]);
    assert_eq!(stats.smallest, Some(("C".into(), 400)));
    assert_eq!(stats.largest, Some(("B".into(), 3072)));
    assert_eq!(stats.mean_boxes_per_image, 1.5);
    assert_eq!(index.images.len(), 3);
    assert!(stats.to_string().contains("images: 3"));
}

#[test]
fn preprocess_scales_and_is_idempotent() {
    let ds = three_image_dataset();
    let (index, _) = cmd_index(ds.path(), &LabelMap::dota_v1()).unwrap();
    let mut cfg = Config::default().preprocess;
    cfg.effort_levels.clear();
    let out = TempDir::new().unwrap();
    let records = cmd_preprocess(&index, &cfg, out.path()).unwrap();
    assert_eq!(records.len(), 9);
    let first = read_dir_sorted(&out.path().join("images"));
    let manifest = fs::read_to_string(out.path().join("manifest.txt")).unwrap();

    cmd_preprocess(&index, &cfg, out.path()).unwrap();
    assert_eq!(read_dir_sorted(&out.path().join("images")), first);
    assert_eq!(fs::read_to_string(out.path().join("manifest.txt")).unwrap(), manifest);

    let parsed = parse_manifest(&manifest).unwrap();
    let b30 = parsed.iter().find(|r| r.id == "B__s30").unwrap();
    assert_eq!((b30.width, b30.height), (19, 14));
    assert!(matches!(b30.provenance, Provenance::Scaled { ref parent_id, .. } if parent_id == "B"));

    // the derived set loads back with provenance and scaled labels
    let (derived, missing) = DatasetIndex::load_dir(out.path(), &LabelMap::dota_v1()).unwrap();
    assert!(missing.is_empty());
    assert!(!derived.get("A__s50").unwrap().provenance.is_original());
    let boxes = derived.ground_truth("B__s50");
    assert_eq!(boxes[0].hbb, edgebench::Hbb::new(5.0, 5.0, 15.0, 15.0).unwrap());
}

#[test]
fn preprocess_recompresses_and_tiles() {
    let ds = three_image_dataset();
    let (index, _) = cmd_index(ds.path(), &LabelMap::dota_v1()).unwrap();
    let mut cfg = Config::default().preprocess;
    cfg.scale_percents.clear();
    cfg.tile_side = Some(30);
    let out = TempDir::new().unwrap();
    let records = cmd_preprocess(&index, &cfg, out.path()).unwrap();
    let recompressed: Vec<_> = records.iter().filter(|r| r.id.contains("__z")).collect();
    assert_eq!(recompressed.len(), 9);
    for r in &recompressed {
        let Provenance::Recompressed { parent_id, .. } = &r.provenance else { panic!() };
        let original = edgebench::pipeline::read_png(index.path(parent_id).unwrap()).unwrap();
        let copy = edgebench::pipeline::read_png(&out.path().join("images").join(format!("{}.png", r.id))).unwrap();
        assert_eq!(original, copy);
    }
    let tiles: Vec<_> = records.iter().filter(|r| r.id.starts_with("B__t")).collect();
    assert!(tiles.iter().all(|t| t.width == 30 && t.height == 30));
    // the 20-pixel plane at (10, 10) survives only in the tiles that contain most of it
    let first = fs::read_to_string(out.path().join("labelTxt/B__t0_0.txt")).unwrap();
    assert_eq!(first.lines().count(), 1);
}

fn replay_dir(ids_and_times: &[(&str, f64, &str)]) -> TempDir {
    let dir = TempDir::new().unwrap();
    for (id, t, body) in ids_and_times {
        fs::write(dir.path().join(format!("{id}.txt")), format!("# time: {t}\n{body}")).unwrap();
    }
    dir
}

#[test]
fn replay_bench_is_deterministic() {
    let ds = three_image_dataset();
    let labels = LabelMap::dota_v1();
    let (index, _) = cmd_index(ds.path(), &labels).unwrap();
    let replay = replay_dir(&[
        ("A", 0.25, "plane 0.9 2 2 12 12\nplane 0.005 0 0 1 1\n"),
        ("B", 0.5, "plane 0.8 10 10 30 30\n"),
        ("C", 0.125, ""),
    ]);
    let run = |out: &Path| {
        let mut backend = ReplayBackend::new("replay", replay.path());
        cmd_bench(&index, &mut backend, &Config::default(), &labels, out).unwrap()
    };
    let (o1, o2) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let (summary, samples) = run(o1.path());
    run(o2.path());
    let tsv = |d: &TempDir| strip_manifest(&fs::read_to_string(d.path().join("samples.tsv")).unwrap());
    assert_eq!(tsv(&o1), tsv(&o2));
    assert_eq!(samples.len(), 1 + 3 * 5);
    assert_eq!(summary.image("B").unwrap().mean_wall_time, Some(0.5));
    // sub-threshold detections are not persisted
    let a = fs::read_to_string(o1.path().join("detections/A.txt")).unwrap();
    assert_eq!(a, "plane 0.9 2 2 12 12\n");
    assert!(RunManifest::from_text(&fs::read_to_string(o1.path().join("samples.tsv")).unwrap()).is_some());

    // and the persisted detections evaluate end to end
    let eval_out = TempDir::new().unwrap();
    let result = cmd_eval(&index, &o1.path().join("detections"), &Config::default(), Some(eval_out.path())).unwrap();
    assert_eq!(result.report.accuracy.accurate, 2);
    assert_eq!(result.report.accuracy.total, 3);
    let text = fs::read_to_string(eval_out.path().join("eval_report.txt")).unwrap();
    assert!(text.contains("pair A gt=0 det=0 plane iou=1.0000 confidence=0.9000 tp"));
}

fn synthetic(limit: u64) -> SyntheticBackend {
    // time = 0.4 + 1e-5 * pixels puts a 4x spread between 10k and 160k pixels
    SyntheticBackend::new(
        "syn",
        SyntheticModel {
            memory_limit_pixels: limit,
            seconds_per_pixel: 1e-5,
            overhead_seconds: 0.4,
        },
    )
    .unwrap()
}

fn sized_dataset(dims: &[(&str, u32, u32)]) -> TempDir {
    let dir = TempDir::new().unwrap();
    for (id, w, h) in dims {
        add_image(dir.path(), id, *w, *h, Some(&[plane(1.0, 1.0, 5.0)]));
    }
    dir
}

#[test]
fn synthetic_table_shows_ratio_and_oom() {
    let ds = sized_dataset(&[("small", 100, 100), ("mid", 200, 200), ("large", 400, 400)]);
    let labels = LabelMap::dota_v1();
    let (index, _) = cmd_index(ds.path(), &labels).unwrap();
    let out = TempDir::new().unwrap();
    let (run, _) = cmd_bench(&index, &mut synthetic(u64::MAX), &Config::default(), &labels, out.path()).unwrap();
    assert!((run.time_ratio.unwrap() - 4.0).abs() < 1e-9);
    let table = fs::read_to_string(out.path().join("bench_table.txt")).unwrap();
    assert!(table.contains("largest/smallest time ratio: 4.00"), "{table}");

    let out = TempDir::new().unwrap();
    let (run, _) = cmd_bench(&index, &mut synthetic(50_000), &Config::default(), &labels, out.path()).unwrap();
    assert!(run.image("large").unwrap().oom);
    let table = fs::read_to_string(out.path().join("bench_table.txt")).unwrap();
    let row = table.lines().find(|l| l.starts_with("large")).unwrap();
    assert_eq!(row.split_whitespace().filter(|c| *c == "X").count(), 4);
    let svg = fs::read_to_string(out.path().join("bench.svg")).unwrap();
    assert_eq!(count_oom_markers(&svg), 1);
}

#[test]
fn eval_treats_missing_detection_files_as_empty() {
    let ds = three_image_dataset();
    let (index, _) = cmd_index(ds.path(), &LabelMap::dota_v1()).unwrap();
    let dets = TempDir::new().unwrap();
    let result = cmd_eval(&index, dets.path(), &Config::default(), None).unwrap();
    assert_eq!(result.report.map, 0.0);
    assert_eq!(result.report.class("plane").unwrap().counts.fn_, 3);
}

#[test]
fn eval_report_lists_ground_track_field_pair() {
    let root = TempDir::new().unwrap();
    add_image(root.path(), "P2794", 8, 8, None);
    let fixtures = common::fixture_dir().join("accuracy");
    fs::copy(fixtures.join("labelTxt/P2794.txt"), root.path().join("labelTxt/P2794.txt")).unwrap();
    let (index, _) = cmd_index(root.path(), &LabelMap::dota_v1()).unwrap();
    let out = TempDir::new().unwrap();
    cmd_eval(&index, &fixtures.join("detections"), &Config::default(), Some(out.path())).unwrap();
    let text = fs::read_to_string(out.path().join("eval_report.txt")).unwrap();
    let line = text.lines().find(|l| l.contains("ground-track-field") && l.starts_with("pair")).unwrap();
    assert!(line.ends_with("iou=0.8219 confidence=0.9684 tp"), "{line}");
    assert!(text.contains("class ship gt=54"));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.path().join("eval_summary.json")).unwrap()).unwrap();
    assert_eq!(json["manifest"]["command"], "eval");
}

#[test]
fn compare_identical_runs_has_zero_deltas() {
    let ds = sized_dataset(&[("a", 50, 50), ("b", 80, 60)]);
    let labels = LabelMap::dota_v1();
    let (index, _) = cmd_index(ds.path(), &labels).unwrap();
    let run = TempDir::new().unwrap();
    cmd_bench(&index, &mut synthetic(u64::MAX), &Config::default(), &labels, run.path()).unwrap();
    let out = TempDir::new().unwrap();
    let cmp = cmd_compare(run.path(), run.path(), &Config::default(), out.path()).unwrap();
    assert_eq!(cmp.deltas.len(), 2);
    assert!(cmp.deltas.iter().all(|d| d.time_delta == Some(0.0) && d.id_a == d.id_b));
    assert!(out.path().join("compare.svg").is_file());
}

#[test]
fn compare_scaled_run_against_baseline() {
    let labels = LabelMap::dota_v1();
    let base = sized_dataset(&[("a", 100, 100), ("b", 300, 200)]);
    let (base_index, _) = cmd_index(base.path(), &labels).unwrap();
    let mut cfg = Config::default().preprocess;
    cfg.scale_percents = vec![30.0];
    cfg.effort_levels.clear();
    let scaled = TempDir::new().unwrap();
    cmd_preprocess(&base_index, &cfg, scaled.path()).unwrap();
    let (scaled_index, _) = cmd_index(scaled.path(), &labels).unwrap();

    // the baseline's larger image runs out of memory; its scaled copy fits
    let (run_a, run_b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    cmd_bench(&base_index, &mut synthetic(20_000), &Config::default(), &labels, run_a.path()).unwrap();
    cmd_bench(&scaled_index, &mut synthetic(20_000), &Config::default(), &labels, run_b.path()).unwrap();
    let out = TempDir::new().unwrap();
    let cmp = cmd_compare(run_a.path(), run_b.path(), &Config::default(), out.path()).unwrap();

    let a = cmp.deltas.iter().find(|d| d.id_b == "a__s30").unwrap();
    assert_eq!(a.id_a, "a");
    let expected = 1e-5 * (30.0 * 30.0 - 100.0 * 100.0);
    assert!((a.time_delta.unwrap() - expected).abs() < 1e-9);
    let b = cmp.deltas.iter().find(|d| d.id_b == "b__s30").unwrap();
    assert!(b.oom_a && !b.oom_b && b.time_delta.is_none());

    let svg = fs::read_to_string(out.path().join("compare.svg")).unwrap();
    assert_eq!(count_oom_markers(&svg), 1);
    let text = fs::read_to_string(out.path().join("compare.txt")).unwrap();
    assert!(text.lines().any(|l| l.starts_with("b ") && l.contains(" X ")));
}

#[test]
fn compare_rejects_disjoint_runs() {
    let labels = LabelMap::dota_v1();
    let one = sized_dataset(&[("a", 10, 10)]);
    let two = sized_dataset(&[("z", 10, 10)]);
    let (ia, _) = cmd_index(one.path(), &labels).unwrap();
    let (ib, _) = cmd_index(two.path(), &labels).unwrap();
    let (ra, rb) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    cmd_bench(&ia, &mut synthetic(u64::MAX), &Config::default(), &labels, ra.path()).unwrap();
    cmd_bench(&ib, &mut synthetic(u64::MAX), &Config::default(), &labels, rb.path()).unwrap();
    let out = TempDir::new().unwrap();
    assert!(cmd_compare(ra.path(), rb.path(), &Config::default(), out.path()).is_err());
}
