use std::fs;
use std::sync::Mutex;

use sha2::{Digest, Sha256};

use rakelink::demo_data::{generate, GeneratorConfig};
use rakelink::sweep::{
    load_manifest, load_run_info, run_sweep, run_sweep_to_dir, BoundsGrid, SweepError,
    MANIFEST_FILE, SOLUTIONS_DIR,
};
use rakelink::{Limit, Timetable, Topology};

fn small() -> (Timetable, Topology) {
    generate(&GeneratorConfig {
        services_target: 120,
        seed: 5,
        ..Default::default()
    })
    .unwrap()
}

fn grid() -> BoundsGrid {
    BoundsGrid {
        w_min: vec![Limit::new(0.0), Limit::new(300.0)],
        w_max: vec![Limit::new(1800.0), Limit::new(3600.0), Limit::INFINITE],
        d_max: vec![Limit::new(0.0), Limit::new(25.0), Limit::INFINITE],
        v_avg_max: vec![Limit::new(30.0), Limit::INFINITE],
    }
}

#[test]
fn directory_run_matches_in_memory_run() {
    let (tt, topo) = small();
    let dir = tempfile::tempdir().unwrap();
    let (run_dir, m) = run_sweep_to_dir(&tt, &topo, &grid(), 3, dir.path(), &|_, _| {}).unwrap();
    let mem = run_sweep(&tt, &topo, &grid(), 2);
    assert_eq!(m.records, mem.records);
    assert_eq!(m.run_id, mem.run_id);
    assert_eq!(fs::read(run_dir.join(MANIFEST_FILE)).unwrap(), m.to_jsonl());

    let info = load_run_info(&run_dir).unwrap();
    assert_eq!(info.total, 36);
    assert_eq!(info.grid, grid());
    assert_eq!(load_manifest(&run_dir.join(MANIFEST_FILE)).unwrap().records, m.records);
}

#[test]
fn solution_files_are_content_addressed() {
    let (tt, topo) = small();
    let dir = tempfile::tempdir().unwrap();
    let (run_dir, m) = run_sweep_to_dir(&tt, &topo, &grid(), 2, dir.path(), &|_, _| {}).unwrap();
    let mut refs = std::collections::BTreeSet::new();
    for (_, rec, o) in m.solved() {
        let hash = rec.solution_ref.as_deref().unwrap();
        let bytes = fs::read(run_dir.join(SOLUTIONS_DIR).join(format!("{hash}.json"))).unwrap();
        assert_eq!(hex::encode(Sha256::digest(&bytes)), hash);
        let doc: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(doc["fleet_size"], o.f1);
        let covered: usize = doc["links"].as_array().unwrap().iter().map(|l| l.as_array().unwrap().len()).sum();
        assert_eq!(covered, tt.len());
        refs.insert(hash.to_owned());
    }
    let files = fs::read_dir(run_dir.join(SOLUTIONS_DIR)).unwrap().count();
    assert_eq!(files, refs.len());
}

#[test]
fn resume_after_torn_write() {
    let (tt, topo) = small();
    let dir = tempfile::tempdir().unwrap();
    let (run_dir, full) = run_sweep_to_dir(&tt, &topo, &grid(), 2, dir.path(), &|_, _| {}).unwrap();
    let path = run_dir.join(MANIFEST_FILE);
    let bytes = fs::read(&path).unwrap();
    let cut = bytes.iter().enumerate().filter(|(_, &b)| b == b'\n').nth(9).unwrap().0 + 1;
    fs::write(&path, &bytes[..cut + 7]).unwrap();

    let seen = Mutex::new(Vec::new());
    let (_, resumed) = run_sweep_to_dir(&tt, &topo, &grid(), 4, dir.path(), &|done, total| {
        seen.lock().unwrap().push((done, total));
    })
    .unwrap();
    let seen = seen.into_inner().unwrap();
    assert_eq!(seen.first(), Some(&(10, 36)));
    assert_eq!(seen.last(), Some(&(36, 36)));
    assert!(seen.windows(2).all(|w| w[0].0 <= w[1].0));
    assert_eq!(fs::read(&path).unwrap(), bytes);
    assert_eq!(resumed.records, full.records);
    assert_eq!(resumed.created_at, full.created_at);
}

#[test]
fn foreign_manifest_is_rejected() {
    let (tt, topo) = small();
    let dir = tempfile::tempdir().unwrap();
    let (run_dir, _) = run_sweep_to_dir(&tt, &topo, &grid(), 1, dir.path(), &|_, _| {}).unwrap();
    let path = run_dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<&str> = text.lines().take(5).collect();
    lines.swap(0, 1);
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    let err = run_sweep_to_dir(&tt, &topo, &grid(), 1, dir.path(), &|_, _| {}).unwrap_err();
    assert!(matches!(err, SweepError::ManifestMismatch { line: 1, .. }), "{err}");
}

#[test]
fn run_id_tracks_inputs() {
    let (tt, topo) = small();
    let (tt2, topo2) = generate(&GeneratorConfig {
        services_target: 120,
        seed: 6,
        ..Default::default()
    })
    .unwrap();
    let a = rakelink::sweep::run_id(&tt, &topo, &grid());
    assert_eq!(a, rakelink::sweep::run_id(&tt, &topo, &grid()));
    assert_ne!(a, rakelink::sweep::run_id(&tt2, &topo2, &grid()));
    assert_ne!(a, rakelink::sweep::run_id(&tt, &topo, &BoundsGrid::demo()));
}
