use std::path::{Path, PathBuf};

use lmt_cli::document::parse_tree;
use lmt_cli::serialize_tree;
use lmt_core::{induced_matrix, interleaving_distance, LabeledMergeTree, SymMatrix};
use lmt_testkit as kit;
use serde_json::Value;

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");

fn lmt(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("lmt").chain(args.iter().copied());
    let code = lmt_cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(args: &[&str]) -> Value {
    let (code, out, err) = lmt(args);
    assert_eq!(code, 0, "{err}");
    serde_json::from_str(&out).unwrap()
}

fn write_trees(dir: &Path, trees: &[LabeledMergeTree]) -> Vec<String> {
    trees
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let p = dir.join(format!("t{k}.json"));
            std::fs::write(&p, serialize_tree(t).unwrap()).unwrap();
            p.display().to_string()
        })
        .collect()
}

fn fixture(set: &str, n: usize, ext: &str) -> Vec<String> {
    (0..n).map(|k| format!("{FIXTURES}/{set}/member-{k}.{ext}")).collect()
}

fn refs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn distance_to_itself_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = kit::rng(4);
    let ts = kit::random_ensemble(&mut rng, 2, 5, false);
    let p = write_trees(dir.path(), &ts);
    assert_eq!(lmt(&["distance", &p[0], &p[0]]), (0, "0\n".to_string(), String::new()));
    let (code, out, _) = lmt(&["distance", &p[0], &p[1]]);
    assert_eq!(code, 0);
    let d: f64 = out.trim().parse().unwrap();
    let exact = interleaving_distance(&ts[0], &ts[1]).unwrap();
    assert!((d - exact).abs() <= 1e-11 * exact.max(1.0));
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(lmt(&[]).0, 1);
    assert_eq!(lmt(&["nonsense"]).0, 1);
    assert_eq!(lmt(&["center"]).0, 1);
    assert_eq!(lmt(&["center", "a.json", "--mode", "sideways"]).0, 1);
    assert_eq!(lmt(&["extract", "g.csv", "--connectivity", "6"]).0, 1);
    let (code, out, _) = lmt(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("sweep-delta"));
}

#[test]
fn data_errors_exit_with_two_and_a_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json").display().to_string();
    let (code, _, err) = lmt(&["distance", &missing, &missing]);
    assert_eq!(code, 2);
    let diag: Value = serde_json::from_str(&err).unwrap();
    assert_eq!(diag["error"]["kind"], "io");

    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"version": 1, "nodes": [{"id": "a", "f": 1, "parent": "m", "labels": [1]},
            {"id": "b", "f": 0, "parent": "m", "labels": [2]},
            {"id": "m", "f": 1, "parent": "r"}, {"id": "r", "f": "inf"}]}"#,
    )
    .unwrap();
    let bad = bad.display().to_string();
    let (code, _, err) = lmt(&["distance", &bad, &bad]);
    assert_eq!(code, 2);
    let diag: Value = serde_json::from_str(&err).unwrap();
    assert_eq!(diag["error"]["kind"], "invalid_tree");
    assert!(diag["error"]["violations"][0].as_str().unwrap().contains("equal_values_on_edge"));

    let mut rng = kit::rng(5);
    let a = kit::random_tree(&mut rng, 3, false);
    let b = kit::random_tree(&mut rng, 4, false);
    let p = write_trees(dir.path(), &[a, b]);
    let (code, _, err) = lmt(&["center", &p[0], &p[1], "--mode", "full"]);
    assert_eq!(code, 2);
    let diag: Value = serde_json::from_str(&err).unwrap();
    assert_eq!(diag["error"]["kind"], "agreement");
    assert!(diag["error"]["hint"].as_str().unwrap().contains("relabel"));
    let (code, _, err) = lmt(&["consistency", &p[0], &p[1], "--lambda", "0.5"]);
    assert_eq!(code, 2);
    assert!(err.contains("configuration"));
}

#[test]
fn center_radius_is_half_the_largest_range() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = kit::rng(11);
    let ts = kit::random_ensemble(&mut rng, 6, 7, false);
    let p = write_trees(dir.path(), &ts);
    let v = json(&[&["center", "--mode", "full"], refs(&p).as_slice()].concat());
    let ms: Vec<SymMatrix> = ts.iter().map(|t| induced_matrix(t).unwrap()).collect();
    let (lo, hi) = kit::entry_extremes(&ms);
    let half = lo
        .iter()
        .flatten()
        .zip(hi.iter().flatten())
        .map(|(a, b)| (b - a) / 2.0)
        .fold(0.0, f64::max);
    assert!((f(&v["radius"]) - half).abs() <= 1e-9);
    assert_eq!(v["member_distances"].as_array().unwrap().len(), 6);
    let center = parse_tree(v["center"].to_string().as_bytes()).unwrap();
    for (k, t) in ts.iter().enumerate() {
        let d = interleaving_distance(&center, t).unwrap();
        assert!((d - f(&v["member_distances"][k])).abs() <= 1e-9);
        assert!(d <= half + 1e-9);
    }
}

#[test]
fn relabel_reports_the_pivot_and_renamed_labels() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = kit::rng(8);
    let a = kit::random_embedded_tree(&mut rng, 5, false);
    let b = kit::random_embedded_tree(&mut rng, 4, false);
    let p = write_trees(dir.path(), &[a, b]);
    let v = json(&["relabel", &p[0], &p[1], "--mode", "disagree"]);
    assert_eq!(v["pivot"], 0);
    assert_eq!(v["reports"][0]["member"], 1);
    assert_eq!(v["reports"][0]["renamed"].as_array().unwrap().len(), 4);
    let relabeled = parse_tree(v["members"][1].to_string().as_bytes()).unwrap();
    let pivot = parse_tree(v["members"][0].to_string().as_bytes()).unwrap();
    assert_eq!(relabeled.domain(), pivot.domain());
}

#[test]
fn consistency_report_covers_every_center_label() {
    let p = fixture("delta_sweep", 6, "json");
    let v = json(&[&["consistency", "--mode", "full", "--delta", "0.1"], refs(&p).as_slice()].concat());
    let center = parse_tree(v["center"].to_string().as_bytes()).unwrap();
    let labels = v["labels"].as_array().unwrap();
    assert_eq!(labels.len(), center.labels().len());
    assert!(center.is_vertex_complete());
    let max = f(&v["variational"]["max_deviation"]);
    for l in labels {
        assert_eq!(l["consistency"].as_array().unwrap().len(), 6);
        let s = &l["five_number"];
        assert!(f(&s["min"]) <= f(&s["q1"]) && f(&s["q1"]) <= f(&s["median"]));
        assert!(f(&s["median"]) <= f(&s["q3"]) && f(&s["q3"]) <= f(&s["max"]));
        for (d, r) in l["deviations"].as_array().unwrap().iter().zip(l["radii"].as_array().unwrap()) {
            assert!((f(r) - f(d) / (2.0 * max)).abs() <= 1e-11);
        }
    }
    assert_eq!(v["member_edges"].as_array().unwrap().len(), 6);
    assert_eq!(v["center_edges"].as_array().unwrap().len(), center.vertex_count() - 2);
}

#[test]
fn sweep_delta_on_the_fixture_is_monotone() {
    let p = fixture("delta_sweep", 6, "json");
    let v = json(&[&["sweep-delta", "--mode", "full"], refs(&p).as_slice()].concat());
    let reports = v["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 4);
    let means: Vec<f64> = reports.iter().map(|r| f(&r["mean_deviation"])).collect();
    assert!(means.windows(2).all(|w| w[1] <= w[0]), "{means:?}");
    let single = json(&[&["consistency", "--mode", "full", "--delta", "0.07"], refs(&p).as_slice()].concat());
    assert_eq!(reports[1]["report"], single);
}

#[test]
fn geodesic_frames_start_and_end_at_the_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = kit::rng(21);
    let ts = kit::random_ensemble(&mut rng, 2, 6, false);
    let p = write_trees(dir.path(), &ts);
    let v = json(&["geodesic", &p[0], &p[1], "--steps", "5", "--consistency"]);
    let frames = v["frames"].as_array().unwrap();
    assert_eq!(frames.len(), 5);
    let m0 = induced_matrix(&ts[0]).unwrap();
    let m1 = induced_matrix(&ts[1]).unwrap();
    let first = parse_tree(frames[0]["tree"].to_string().as_bytes()).unwrap();
    let last = parse_tree(frames[4]["tree"].to_string().as_bytes()).unwrap();
    assert_eq!(induced_matrix(&first).unwrap(), m0);
    assert_eq!(induced_matrix(&last).unwrap(), m1);
    assert!(frames[4]["consistency"].as_array().unwrap().iter().all(|c| (f(&c["value"]) - 1.0).abs() <= 1e-12));
    let (code, _, err) = lmt(&["geodesic", &p[0], &p[1], "--mode", "linear"]);
    assert_eq!(code, 2);
    assert!(err.contains("configuration"));
}

#[test]
fn extract_reads_csv_and_binary_grids() {
    let dir = tempfile::tempdir().unwrap();
    let counts: Vec<usize> = fixture("wells", 3, "csv")
        .iter()
        .map(|p| {
            let v = json(&["extract", p]);
            assert_eq!(v["metadata"]["connectivity"], 4);
            parse_tree(v.to_string().as_bytes()).unwrap().leaf_count()
        })
        .collect();
    assert_eq!(counts, vec![3, 4, 4]);

    let mut rng = kit::rng(2);
    let g = kit::random_grid(&mut rng, 6, true);
    let bin = dir.path().join("g.bin");
    std::fs::write(&bin, g.to_binary()).unwrap();
    let csv = dir.path().join("g.csv");
    std::fs::write(&csv, g.to_csv()).unwrap();
    let (b, c) = (bin.display().to_string(), csv.display().to_string());
    for extra in [&[][..], &["--augmented"][..], &["--connectivity", "8"][..]] {
        let from_bin = json(&[&["extract", b.as_str()], extra].concat());
        let from_csv = json(&[&["extract", c.as_str()], extra].concat());
        assert_eq!(from_bin, from_csv);
    }
    let aug = parse_tree(json(&["extract", &c, "--augmented"]).to_string().as_bytes()).unwrap();
    assert_eq!(aug.vertex_count(), g.width() * g.height() + 1);
}

#[test]
fn out_flag_writes_the_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let p = fixture("label_flip", 5, "json");
    let target: PathBuf = dir.path().join("center.json");
    let t = target.display().to_string();
    let (code, stdout, _) = lmt(&[&["center", "--mode", "full"], refs(&p).as_slice()].concat());
    assert_eq!(code, 0);
    let (code, empty, _) = lmt(&[&["center", "--mode", "full", "--out", t.as_str()], refs(&p).as_slice()].concat());
    assert_eq!((code, empty.as_str()), (0, ""));
    assert_eq!(std::fs::read_to_string(&target).unwrap(), stdout);
}
