mod common;

use common::accuracy_fixture;
use edgebench::eval::{evaluate, match_detections, EvalConfig, MatchConfig};

fn class_tp(id: &str, class: &str) -> (usize, usize) {
    let img = accuracy_fixture(id);
    let r = match_detections(&img.gts, &img.dets, &MatchConfig::default());
    let total = img.gts.iter().filter(|g| g.category == class).count();
    (r.per_class.get(class).map_or(0, |c| c.tp), total)
}

#[test]
fn baseline_fixture_class_counts() {
    assert_eq!(class_tp("P2794", "ship"), (25, 54));
    assert_eq!(class_tp("P2794", "small-vehicle"), (0, 90));
}

#[test]
fn aspect_ratio_fixtures() {
    let count = |id: &str| {
        let img = accuracy_fixture(id);
        edgebench::eval::accuracy_count(&img.gts, &img.dets, &MatchConfig::default())
    };
    assert_eq!(count("P1854__square"), (32, 74));
    assert_eq!(count("P1854__s80"), (1, 221));
}

#[test]
fn ground_track_field_pair_is_listed() {
    let report = evaluate(&[accuracy_fixture("P2794")], &EvalConfig::default()).unwrap();
    let pair = report.images[0]
        .pairs
        .iter()
        .find(|p| p.category == "ground-track-field")
        .unwrap();
    assert!(pair.true_positive);
    assert_eq!(format!("{:.4}", pair.iou), "0.8219");
    assert_eq!(format!("{:.4}", pair.confidence), "0.9684");
}

#[test]
fn score_threshold_only_widens_the_curve() {
    // accuracy uses the 0.5 cut; AP sees everything down to 0.01
    let report = evaluate(&[accuracy_fixture("P2794")], &EvalConfig::default()).unwrap();
    let ships = report.class("ship").unwrap();
    assert_eq!(ships.num_ground_truth, 54);
    assert!(ships.num_detections >= 25);
    assert_eq!(report.accuracy.accurate, 26);
    assert_eq!(report.accuracy.total, 145);
}
