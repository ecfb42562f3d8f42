use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn rakelink(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rakelink"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn six_service(dir: &Path) -> (PathBuf, PathBuf) {
    let out = dir.join("six_service");
    assert!(rakelink(&["gen", "--six-service", "--out", p(&out)]).status.success());
    (out.join("timetable.csv"), out.join("topology.csv"))
}

#[test]
fn solve_six_service() {
    let dir = tempfile::tempdir().unwrap();
    let (tt, topo) = six_service(dir.path());
    let cover = dir.path().join("cover.json");
    let o = rakelink(&[
        "solve", "--timetable", p(&tt), "--topology", p(&topo), "--w-max", "3600", "--d-max", "0",
        "--out", p(&cover),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l == "fleet=3"), "{text}");
    assert!(text.contains("peak_density=2"));
    let doc: serde_json::Value = serde_json::from_slice(&fs::read(&cover).unwrap()).unwrap();
    assert_eq!(doc["fleet_size"], 3);
    assert_eq!(doc["bounds"]["v_avg_max"], "inf");

    let csv_out = dir.path().join("cover.csv");
    let o = rakelink(&[
        "solve", "--timetable", p(&tt), "--topology", p(&topo), "--format", "csv", "--out", p(&csv_out),
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("fleet=2"));
    let rows = fs::read_to_string(&csv_out).unwrap();
    assert_eq!(rows.lines().next(), Some("rake_index,seq,service_id"));
    assert_eq!(rows.lines().count(), 7);
}

#[test]
fn graph_export() {
    let dir = tempfile::tempdir().unwrap();
    let (tt, topo) = six_service(dir.path());
    let o = rakelink(&[
        "graph", "--timetable", p(&tt), "--topology", p(&topo), "--w-max", "3600", "--d-max", "0",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 6, "{text}");

    let o = rakelink(&[
        "graph", "--timetable", p(&tt), "--topology", p(&topo), "--w-max", "3600", "--d-max", "0",
        "--format", "json",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["edges"].as_array().unwrap().len(), 5);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (tt, topo) = six_service(dir.path());

    let o = rakelink(&["solve", "--timetable", p(&tt), "--topology", p(&topo), "--w-min", "600", "--w-max", "600"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("w_max"));

    let o = rakelink(&["solve", "--timetable", p(&tt), "--topology", p(&topo), "--d-max", "far"]);
    assert_eq!(o.status.code(), Some(1));

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "service_id,origin,destination,dep_time,arr_time,run_distance_km\n1,A,B,900,800,5\n").unwrap();
    let o = rakelink(&["solve", "--timetable", p(&bad), "--topology", p(&topo)]);
    assert_eq!(o.status.code(), Some(1));

    let missing = dir.path().join("missing.csv");
    let o = rakelink(&["solve", "--timetable", p(&missing), "--topology", p(&topo)]);
    assert_eq!(o.status.code(), Some(2));

    assert_eq!(rakelink(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(rakelink(&["--help"]).status.code(), Some(0));
}

#[test]
fn density_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (tt, _) = six_service(dir.path());
    let full = dir.path().join("density.csv");
    assert!(rakelink(&["density", "--timetable", p(&tt), "--out", p(&full)]).status.success());
    let text = fs::read_to_string(&full).unwrap();
    assert_eq!(text.lines().count(), 86401);

    let o = rakelink(&["density", "--timetable", p(&tt), "--rle"]);
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("start_second,end_second,count"));
    assert_eq!(lines.next(), Some("0,500,0"));
    assert_eq!(lines.next(), Some("500,1000,1"));
}

#[test]
fn sweep_and_analysis() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let o = rakelink(&["gen", "--seed", "3", "--services", "100", "--out", p(&data)]);
    assert!(o.status.success());
    let (tt, topo) = (data.join("timetable.csv"), data.join("topology.csv"));
    let runs = dir.path().join("runs");
    let o = rakelink(&[
        "sweep", "--timetable", p(&tt), "--topology", p(&topo), "--grid", "demo", "--jobs", "2",
        "--out", p(&runs),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let run_dir = PathBuf::from(stdout(&o).trim());
    assert!(run_dir.starts_with(&runs));
    assert_eq!(fs::read_to_string(run_dir.join("manifest.jsonl")).unwrap().lines().count(), 576);
    assert!(run_dir.join("run.json").exists());

    // Re-running the same sweep reuses the finished directory.
    let again = rakelink(&[
        "sweep", "--timetable", p(&tt), "--topology", p(&topo), "--grid", "demo", "--out", p(&runs),
    ]);
    assert_eq!(stdout(&again), stdout(&o));

    let analysis = dir.path().join("analysis");
    let o = rakelink(&["pareto", "--manifest", p(&run_dir), "--out", p(&analysis)]);
    assert!(o.status.success());
    let fronts = fs::read_to_string(analysis.join("fronts.csv")).unwrap();
    assert_eq!(fronts.lines().count(), 577);
    let minima = fs::read_to_string(analysis.join("front_minima.csv")).unwrap();
    assert_eq!(minima.lines().next(), Some("front,min_f1,min_f2,min_f3,min_f4,min_f5"));

    let o = rakelink(&[
        "clusters", "--manifest", p(&run_dir.join("manifest.jsonl")), "--eps", "0",
        "--filter", "v_avg_max!=inf", "--out", p(&analysis),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let clusters = fs::read_to_string(analysis.join("clusters.csv")).unwrap();
    assert!(clusters.starts_with("front,cluster_id,record_id,w_min,w_max,d_max,v_avg_max,f1,f2,f3,f4,f5"));
    assert_eq!(clusters.lines().count(), 433);
    assert!(!clusters.lines().skip(1).any(|l| l.split(',').nth(6) == Some("inf")));

    let o = rakelink(&["report", "--manifest", p(&run_dir), "--baseline", "1000,86400,1000,1000,1000"]);
    assert!(o.status.success());
    let report = stdout(&o);
    assert_eq!(report.lines().count(), 32);
    assert_eq!(report.lines().last(), Some("f1+f2+f3+f4+f5,576"));

    let o = rakelink(&["report", "--manifest", p(&run_dir), "--baseline", "1,2,3"]);
    assert_eq!(o.status.code(), Some(1));
    let o = rakelink(&["pareto", "--manifest", p(&dir.path().join("nope")), "--out", p(&analysis)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn generator_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        assert!(rakelink(&["gen", "--seed", "9", "--services", "50", "--out", p(&out)]).status.success());
    }
    for file in ["timetable.csv", "topology.csv"] {
        assert_eq!(
            fs::read(dir.path().join("a").join(file)).unwrap(),
            fs::read(dir.path().join("b").join(file)).unwrap()
        );
    }
}
