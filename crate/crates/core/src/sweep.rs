//! Exhaustive sweeps over a grid of bounds.
//!
//! Every admissible bounds tuple of the grid is solved independently. Results
//! are kept in grid order, so a sweep is reproducible byte for byte whatever
//! the worker count. On disk a run lives in `<out>/<run_id>/`:
//!
//! - `manifest.jsonl`: one record per line, in grid order
//! - `solutions/<hash>.json`: content-addressed covers, shared between records
//! - `run.json`: run metadata (grid, record count, creation time)

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::{Bounds, Limit, Timetable, Topology};
use crate::objectives::{evaluate, ObjectiveVector, OBJECTIVE_NAMES};
use crate::pareto::dominates;
use crate::pathcover::min_fleet;

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const RUN_FILE: &str = "run.json";
pub const SOLUTIONS_DIR: &str = "solutions";

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("manifest line {line} does not match the grid ({reason})")]
    ManifestMismatch { line: usize, reason: String },
    #[error("invalid filter: {0}")]
    Filter(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Candidate values per bound. Each list is strictly ascending, so an
/// infinite value can only come last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsGrid {
    pub w_min: Vec<Limit>,
    pub w_max: Vec<Limit>,
    pub d_max: Vec<Limit>,
    pub v_avg_max: Vec<Limit>,
}

fn limits(values: impl IntoIterator<Item = f64>) -> Vec<Limit> {
    values.into_iter().map(Limit::new).collect()
}

impl BoundsGrid {
    /// The full-scale value sets: 7 x 56 x 13 x 7 raw tuples.
    pub fn paper() -> BoundsGrid {
        let inf = f64::INFINITY;
        BoundsGrid {
            w_min: limits([0.0, 60.0, 120.0, 180.0, 240.0, 300.0, inf]),
            w_max: limits((6..=60).map(|m| f64::from(m) * 60.0).chain([inf])),
            d_max: limits((0..=10).map(|k| f64::from(k) * 5.0).chain([51.0, inf])),
            v_avg_max: limits([10.0, 20.0, 30.0, 40.0, 50.0, 60.0, inf]),
        }
    }

    /// A 6 x 6 x 4 x 4 grid sized for the synthetic demo network.
    pub fn demo() -> BoundsGrid {
        let inf = f64::INFINITY;
        BoundsGrid {
            w_min: limits([0.0, 60.0, 120.0, 180.0, 240.0, 300.0]),
            w_max: limits([900.0, 1800.0, 2700.0, 3600.0, 5400.0, inf]),
            d_max: limits([0.0, 10.0, 25.0, inf]),
            v_avg_max: limits([20.0, 40.0, 60.0, inf]),
        }
    }

    /// `paper`, `demo`, or a path to a JSON grid file.
    pub fn resolve(spec: &str) -> Result<BoundsGrid, SweepError> {
        let grid = match spec {
            "paper" => BoundsGrid::paper(),
            "demo" => BoundsGrid::demo(),
            path => serde_json::from_reader(BufReader::new(File::open(path)?))?,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        for (name, values, positive) in [
            ("w_min", &self.w_min, false),
            ("w_max", &self.w_max, false),
            ("d_max", &self.d_max, false),
            ("v_avg_max", &self.v_avg_max, true),
        ] {
            if values.is_empty() {
                return Err(SweepError::InvalidGrid(format!("{name} is empty")));
            }
            if let Some(bad) = values
                .iter()
                .find(|l| l.value().is_nan() || l.value() < 0.0 || (positive && l.value() == 0.0))
            {
                return Err(SweepError::InvalidGrid(format!("{name} contains {bad}")));
            }
            if values.windows(2).any(|w| w[0] >= w[1]) {
                return Err(SweepError::InvalidGrid(format!(
                    "{name} must be strictly ascending"
                )));
            }
        }
        Ok(())
    }

    pub fn raw_size(&self) -> usize {
        self.w_min.len() * self.w_max.len() * self.d_max.len() * self.v_avg_max.len()
    }
}

/// Cartesian product in `(w_min, w_max, d_max, v_avg_max)` lexicographic
/// order, without tuples where `w_max <= w_min`.
pub fn generate_grid(g: &BoundsGrid) -> Vec<Bounds> {
    let mut out = Vec::new();
    for &w_min in &g.w_min {
        for &w_max in &g.w_max {
            if w_max <= w_min {
                continue;
            }
            for &d_max in &g.d_max {
                for &v_avg_max in &g.v_avg_max {
                    out.push(Bounds {
                        w_min,
                        w_max,
                        d_max,
                        v_avg_max,
                    });
                }
            }
        }
    }
    out
}

/// Outcome of one grid point. Exactly one of `objectives` or `error` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub bounds: Bounds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objectives: Option<ObjectiveVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution_ref: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SweepRecord {
    pub fn is_ok(&self) -> bool {
        self.objectives.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepManifest {
    pub run_id: String,
    pub created_at: u64,
    pub records: Vec<SweepRecord>,
}

impl SweepManifest {
    /// Records with objectives, paired with their manifest index.
    pub fn solved(&self) -> impl Iterator<Item = (usize, &SweepRecord, &ObjectiveVector)> {
        self.records
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.objectives.as_ref().map(|o| (i, r, o)))
    }

    /// The JSON-lines body, exactly as written to `manifest.jsonl`.
    pub fn to_jsonl(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for r in &self.records {
            serde_json::to_writer(&mut out, r).expect("records serialize");
            out.push(b'\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub run_id: String,
    pub created_at: u64,
    pub total: usize,
    pub grid: BoundsGrid,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Content hash identifying a sweep: timetable, topology and grid.
pub fn run_id(tt: &Timetable, topo: &Topology, grid: &BoundsGrid) -> String {
    let doc = serde_json::json!({ "timetable": tt, "topology": topo, "grid": grid });
    sha256_hex(&serde_json::to_vec(&doc).expect("inputs serialize"))
}

fn now_secs() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

/// A solved grid point and, when solved, the canonical bytes of its cover.
struct Solved {
    record: SweepRecord,
    solution: Option<Vec<u8>>,
}

fn solve_point(tt: &Timetable, topo: &Topology, bounds: Bounds) -> Solved {
    let failed = |e: String| Solved {
        record: SweepRecord {
            bounds,
            objectives: None,
            solution_ref: None,
            error: Some(e),
        },
        solution: None,
    };
    let cover = match min_fleet(tt, topo, &bounds) {
        Ok(c) => c,
        Err(e) => return failed(e.to_string()),
    };
    let objectives = match evaluate(&cover, tt, topo) {
        Ok(o) => o,
        Err(e) => return failed(e.to_string()),
    };
    let bytes = serde_json::to_vec(&cover.to_document(tt, false)).expect("cover serializes");
    Solved {
        record: SweepRecord {
            bounds,
            objectives: Some(objectives),
            solution_ref: Some(sha256_hex(&bytes)),
            error: None,
        },
        solution: Some(bytes),
    }
}

fn worker_pool(jobs: usize) -> rayon::ThreadPool {
    let jobs = if jobs == 0 {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        jobs
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("thread pool")
}

fn solve_all(pool: &rayon::ThreadPool, tt: &Timetable, topo: &Topology, points: &[Bounds]) -> Vec<Solved> {
    pool.install(|| points.par_iter().map(|&b| solve_point(tt, topo, b)).collect())
}

/// Solves every grid point in memory. `jobs = 0` uses all cores.
pub fn run_sweep(tt: &Timetable, topo: &Topology, grid: &BoundsGrid, jobs: usize) -> SweepManifest {
    let pool = worker_pool(jobs);
    let points = generate_grid(grid);
    let records = solve_all(&pool, tt, topo, &points)
        .into_iter()
        .map(|s| s.record)
        .collect();
    SweepManifest {
        run_id: run_id(tt, topo, grid),
        created_at: now_secs(),
        records,
    }
}

/// Reads the complete lines of a manifest, truncating a trailing partial
/// line left behind by an interrupted writer.
fn read_manifest_lines(path: &Path) -> Result<Vec<SweepRecord>, SweepError> {
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let complete = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1);
    if complete < bytes.len() {
        OpenOptions::new().write(true).open(path)?.set_len(complete as u64)?;
    }
    let mut out = Vec::new();
    for (i, line) in bytes[..complete].split(|&b| b == b'\n').enumerate() {
        if line.is_empty() {
            continue;
        }
        let rec: SweepRecord = serde_json::from_slice(line).map_err(|e| SweepError::ManifestMismatch {
            line: i + 1,
            reason: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

fn write_atomically(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(tmp, path)
}

/// Runs (or resumes) a sweep into `<out_root>/<run_id>/`, calling
/// `progress(done, total)` after each flushed batch.
pub fn run_sweep_to_dir(
    tt: &Timetable,
    topo: &Topology,
    grid: &BoundsGrid,
    jobs: usize,
    out_root: &Path,
    progress: &(dyn Fn(usize, usize) + Sync),
) -> Result<(PathBuf, SweepManifest), SweepError> {
    grid.validate()?;
    let id = run_id(tt, topo, grid);
    let dir = out_root.join(&id);
    let solutions = dir.join(SOLUTIONS_DIR);
    fs::create_dir_all(&solutions)?;

    let points = generate_grid(grid);
    let run_path = dir.join(RUN_FILE);
    let info = match fs::read(&run_path) {
        Ok(bytes) => serde_json::from_slice::<RunInfo>(&bytes)?,
        Err(_) => {
            let info = RunInfo {
                run_id: id.clone(),
                created_at: now_secs(),
                total: points.len(),
                grid: grid.clone(),
            };
            write_atomically(&run_path, &serde_json::to_vec_pretty(&info)?)?;
            info
        }
    };

    let manifest_path = dir.join(MANIFEST_FILE);
    let mut records = read_manifest_lines(&manifest_path)?;
    if records.len() > points.len() {
        return Err(SweepError::ManifestMismatch {
            line: points.len() + 1,
            reason: "more records than grid points".into(),
        });
    }
    for (i, (rec, b)) in records.iter().zip(&points).enumerate() {
        if rec.bounds != *b {
            return Err(SweepError::ManifestMismatch {
                line: i + 1,
                reason: format!("expected bounds {b}, found {}", rec.bounds),
            });
        }
    }

    let mut writer = OpenOptions::new().create(true).append(true).open(&manifest_path)?;
    let pool = worker_pool(jobs);
    let batch = (pool.current_num_threads() * 16).max(64);
    progress(records.len(), points.len());
    while records.len() < points.len() {
        let end = (records.len() + batch).min(points.len());
        let solved = solve_all(&pool, tt, topo, &points[records.len()..end]);
        let mut lines = Vec::new();
        for s in solved {
            if let (Some(hash), Some(bytes)) = (&s.record.solution_ref, &s.solution) {
                let path = solutions.join(format!("{hash}.json"));
                if !path.exists() {
                    write_atomically(&path, bytes)?;
                }
            }
            serde_json::to_writer(&mut lines, &s.record)?;
            lines.push(b'\n');
            records.push(s.record);
        }
        writer.write_all(&lines)?;
        writer.flush()?;
        progress(records.len(), points.len());
    }
    Ok((
        dir,
        SweepManifest {
            run_id: info.run_id,
            created_at: info.created_at,
            records,
        },
    ))
}

/// Loads a run directory (or a `manifest.jsonl` path inside one).
pub fn load_manifest(path: &Path) -> Result<SweepManifest, SweepError> {
    let dir = if path.is_dir() {
        path.to_path_buf()
    } else {
        path.parent().map(Path::to_path_buf).unwrap_or_default()
    };
    let manifest_path = if path.is_dir() { dir.join(MANIFEST_FILE) } else { path.to_path_buf() };
    let (run_id, created_at) = match fs::read(dir.join(RUN_FILE)) {
        Ok(bytes) => {
            let info: RunInfo = serde_json::from_slice(&bytes)?;
            (info.run_id, info.created_at)
        }
        Err(_) => (String::new(), 0),
    };
    let mut records = Vec::new();
    for (i, line) in BufReader::new(File::open(&manifest_path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line).map_err(|e| SweepError::ManifestMismatch {
            line: i + 1,
            reason: e.to_string(),
        })?);
    }
    Ok(SweepManifest {
        run_id,
        created_at,
        records,
    })
}

pub fn load_run_info(dir: &Path) -> Result<RunInfo, SweepError> {
    Ok(serde_json::from_slice(&fs::read(dir.join(RUN_FILE))?)?)
}

/// Stable-order subset of records.
pub fn filter_records(
    m: &SweepManifest,
    predicate: impl Fn(&SweepRecord) -> bool,
) -> Vec<&SweepRecord> {
    m.records.iter().filter(|r| predicate(r)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Bound(usize),
    Objective(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Operand {
    Value(f64),
    Min,
    Max,
}

#[derive(Debug, Clone, PartialEq)]
struct Clause {
    field: Field,
    op: Op,
    operand: Operand,
}

/// A conjunction of comparisons such as `v_avg_max!=inf,f1=min`.
///
/// Fields are the four bounds and `f1`..`f5`; operators are
/// `= != < <= > >=`; values are numbers, `inf`, or (objectives only) `min`
/// and `max` over the solved records. Objective clauses never match a
/// failed record.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RecordFilter {
    clauses: Vec<Clause>,
}

const BOUND_FIELDS: [&str; 4] = ["w_min", "w_max", "d_max", "v_avg_max"];

impl RecordFilter {
    pub fn parse(expr: &str) -> Result<RecordFilter, SweepError> {
        let mut clauses = Vec::new();
        for raw in expr.split(',').map(str::trim).filter(|c| !c.is_empty()) {
            let pos = raw
                .find(['=', '!', '<', '>'])
                .ok_or_else(|| SweepError::Filter(format!("`{raw}` has no comparison")))?;
            let (name, rest) = raw.split_at(pos);
            let (op, value) = [
                ("<=", Op::Le),
                (">=", Op::Ge),
                ("!=", Op::Ne),
                ("=", Op::Eq),
                ("<", Op::Lt),
                (">", Op::Gt),
            ]
            .into_iter()
            .find_map(|(tok, op)| rest.strip_prefix(tok).map(|v| (op, v.trim())))
            .ok_or_else(|| SweepError::Filter(format!("`{raw}` has an unknown operator")))?;
            let name = name.trim();
            let field = if let Some(k) = BOUND_FIELDS.iter().position(|f| *f == name) {
                Field::Bound(k)
            } else if let Some(k) = OBJECTIVE_NAMES.iter().position(|f| *f == name) {
                Field::Objective(k)
            } else {
                return Err(SweepError::Filter(format!("unknown field `{name}`")));
            };
            let operand = match (value, field) {
                ("min", Field::Objective(_)) => Operand::Min,
                ("max", Field::Objective(_)) => Operand::Max,
                _ => Operand::Value(
                    value
                        .parse::<Limit>()
                        .map_err(SweepError::Filter)?
                        .value(),
                ),
            };
            clauses.push(Clause { field, op, operand });
        }
        Ok(RecordFilter { clauses })
    }

    /// Resolves `min`/`max` against `m` and returns the matching records.
    pub fn apply<'m>(&self, m: &'m SweepManifest) -> Vec<(usize, &'m SweepRecord)> {
        let mut lo = [f64::INFINITY; 5];
        let mut hi = [f64::NEG_INFINITY; 5];
        for (_, _, o) in m.solved() {
            for (k, x) in o.to_array().into_iter().enumerate() {
                lo[k] = lo[k].min(x);
                hi[k] = hi[k].max(x);
            }
        }
        m.records
            .iter()
            .enumerate()
            .filter(|(_, r)| {
                self.clauses.iter().all(|c| {
                    let lhs = match c.field {
                        Field::Bound(k) => {
                            let b = &r.bounds;
                            [b.w_min, b.w_max, b.d_max, b.v_avg_max][k].value()
                        }
                        Field::Objective(k) => match &r.objectives {
                            Some(o) => o.to_array()[k],
                            None => return false,
                        },
                    };
                    let k = match c.field {
                        Field::Objective(k) | Field::Bound(k) => k,
                    };
                    let rhs = match c.operand {
                        Operand::Value(v) => v,
                        Operand::Min => lo[k],
                        Operand::Max => hi[k],
                    };
                    match c.op {
                        Op::Eq => lhs == rhs,
                        Op::Ne => lhs != rhs,
                        Op::Lt => lhs < rhs,
                        Op::Le => lhs <= rhs,
                        Op::Gt => lhs > rhs,
                        Op::Ge => lhs >= rhs,
                    }
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetCount {
    /// Objective names in the subset, e.g. `["f1", "f3"]`.
    pub objectives: Vec<&'static str>,
    /// Records strictly better than the baseline on every objective of the subset.
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImprovementReport {
    pub baseline: ObjectiveVector,
    pub solved_records: usize,
    /// All 31 non-empty subsets, by size and then lexicographically.
    pub subsets: Vec<SubsetCount>,
    /// Manifest indices of records strictly better on all five objectives.
    pub better_in_all: Vec<usize>,
    /// Manifest indices of records that Pareto-dominate the baseline.
    pub dominating: Vec<usize>,
}

impl ImprovementReport {
    pub fn write_table(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "subset,count")?;
        for s in &self.subsets {
            writeln!(w, "{},{}", s.objectives.join("+"), s.count)?;
        }
        Ok(())
    }
}

/// Subsets of `{0..5}` as bit masks, by size then lexicographic order.
fn objective_subsets() -> Vec<u32> {
    let mut masks: Vec<u32> = (1u32..32).collect();
    masks.sort_by_key(|&m| {
        let members: Vec<u32> = (0..5).filter(|k| m & (1 << k) != 0).collect();
        (m.count_ones(), members)
    });
    masks
}

pub fn improvement_report(m: &SweepManifest, baseline: &ObjectiveVector) -> ImprovementReport {
    let base = baseline.to_array();
    let solved: Vec<(usize, [f64; 5])> = m.solved().map(|(i, _, o)| (i, o.to_array())).collect();
    let better_mask = |v: &[f64; 5]| -> u32 {
        (0..5).filter(|&k| v[k] < base[k]).fold(0, |acc, k| acc | (1 << k))
    };
    let masks: Vec<u32> = solved.iter().map(|(_, v)| better_mask(v)).collect();
    let subsets = objective_subsets()
        .into_iter()
        .map(|s| SubsetCount {
            objectives: (0..5).filter(|k| s & (1 << k) != 0).map(|k| OBJECTIVE_NAMES[k]).collect(),
            count: masks.iter().filter(|&&mask| mask & s == s).count(),
        })
        .collect();
    ImprovementReport {
        baseline: *baseline,
        solved_records: solved.len(),
        subsets,
        better_in_all: solved
            .iter()
            .zip(&masks)
            .filter(|(_, &mask)| mask == 0b11111)
            .map(|((i, _), _)| *i)
            .collect(),
        dominating: solved
            .iter()
            .filter(|(_, v)| dominates(v, &base))
            .map(|(i, _)| *i)
            .collect(),
    }
}
