//! `rakelink` command-line interface.
//!
//! Results go to stdout or to files; logs go to stderr. Exit status is 0 on
//! success, 1 for invalid input or usage, 2 for runtime failures.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::demo_data::{six_service_instance, generate, GeneratorConfig};
use crate::feasgraph::build_graph;
use crate::io::{load_dataset, write_timetable, write_topology, IoError};
use crate::model::{Bounds, Limit, Timetable, Topology};
use crate::objectives::{density_profile, evaluate, ObjectiveVector, OBJECTIVE_NAMES};
use crate::pareto::{find_clusters, front_minima, sort_fronts, write_front_minima_csv};
use crate::pathcover::min_fleet;
use crate::server::{parse_epsilon, serve, ServerConfig};
use crate::sweep::{
    improvement_report, load_manifest, run_sweep_to_dir, BoundsGrid, RecordFilter, SweepError,
    SweepManifest,
};

#[derive(Debug)]
pub enum CliError {
    /// Bad input or usage; exit status 1.
    Validation(String),
    /// Everything else; exit status 2.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

impl From<SweepError> for CliError {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::Io(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

type CliResult = Result<(), CliError>;

#[derive(Debug, Parser)]
#[command(name = "rakelink", version, about = "Minimum-fleet rake-link planning and bounds sweeps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Timetable CSV (`service_id,origin,destination,dep_time,arr_time,run_distance_km`).
    #[arg(long)]
    pub timetable: PathBuf,
    /// Topology CSV (`station_a,station_b,distance_km`).
    #[arg(long)]
    pub topology: PathBuf,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    /// Minimum headway between consecutive services of a rake, seconds.
    #[arg(long, default_value = "0")]
    pub w_min: Limit,
    /// Maximum headway, seconds, or `inf`.
    #[arg(long, default_value = "inf")]
    pub w_max: Limit,
    /// Maximum deadhead distance, km, or `inf`.
    #[arg(long, default_value = "inf")]
    pub d_max: Limit,
    /// Maximum average deadhead speed, km/h, or `inf`.
    #[arg(long = "v-max", alias = "v-avg-max", default_value = "inf")]
    pub v_max: Limit,
}

impl BoundArgs {
    fn bounds(&self) -> Result<Bounds, CliError> {
        let b = Bounds {
            w_min: self.w_min,
            w_max: self.w_max,
            d_max: self.d_max,
            v_avg_max: self.v_max,
        };
        b.validate().map_err(|e| CliError::Validation(e.to_string()))?;
        Ok(b)
    }
}

#[derive(Debug, Args)]
pub struct ManifestArgs {
    /// Sweep run directory or its `manifest.jsonl`.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Record filter, e.g. `v_avg_max!=inf` or `f1=min,d_max<=25`.
    #[arg(long, default_value = "")]
    pub filter: String,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic suburban timetable and topology.
    Gen {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 887)]
        services: usize,
        #[arg(long, default_value_t = 24)]
        stations: usize,
        #[arg(long, default_value_t = 60.0)]
        corridor_km: f64,
        /// Emit the six-service textbook instance instead.
        #[arg(long)]
        six_service: bool,
        /// Output directory for `timetable.csv` and `topology.csv`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the link feasibility graph and export its edges.
    Graph {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        bounds: BoundArgs,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Solve the minimum fleet for one set of bounds.
    Solve {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        bounds: BoundArgs,
        /// Write the cover solution here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Solve every admissible point of a bounds grid.
    Sweep {
        #[command(flatten)]
        data: DataArgs,
        /// `paper`, `demo`, or a JSON grid file.
        #[arg(long, default_value = "demo")]
        grid: String,
        /// Worker threads; 0 uses all cores.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Root directory; the run is written to `<out>/<run_id>/`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Non-dominated sorting of a sweep: `fronts.csv`, `front_minima.csv`.
    Pareto {
        #[command(flatten)]
        manifest: ManifestArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Objective-space clusters per front: `clusters.csv`.
    Clusters {
        #[command(flatten)]
        manifest: ManifestArgs,
        /// Tolerance: one value or five comma-separated values.
        #[arg(long, default_value = "0")]
        eps: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-second live-service density profile.
    Density {
        #[arg(long)]
        timetable: PathBuf,
        /// Output CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run-length encode the profile.
        #[arg(long)]
        rle: bool,
    },
    /// Count sweep records that beat a baseline on each objective subset.
    Report {
        #[command(flatten)]
        manifest: ManifestArgs,
        /// Incumbent objectives `f1,f2,f3,f4,f5`.
        #[arg(long)]
        baseline: String,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Start the HTTP audit service (no authentication).
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long)]
        data_dir: PathBuf,
        /// Sweeps run concurrently; others queue.
        #[arg(long, default_value_t = 1)]
        sweep_slots: usize,
    },
}

/// Parses `argv` and runs it, returning the process exit status.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            Box::new(BufWriter::new(File::create(p)?))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load(data: &DataArgs) -> Result<(Timetable, Topology), CliError> {
    Ok(load_dataset(&data.timetable, &data.topology)?)
}

/// Manifest plus the record ids and objective points that pass the filter.
type Points = (SweepManifest, Vec<usize>, Vec<[f64; 5]>);

fn load_points(args: &ManifestArgs) -> Result<Points, CliError> {
    let m = load_manifest(&args.manifest)?;
    let filter = RecordFilter::parse(&args.filter)?;
    let (ids, points) = filter
        .apply(&m)
        .into_iter()
        .filter_map(|(i, r)| r.objectives.map(|o| (i, o.to_array())))
        .unzip();
    Ok((m, ids, points))
}

pub fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Gen {
            seed,
            services,
            stations,
            corridor_km,
            six_service,
            out,
        } => {
            let (tt, topo) = if six_service {
                let (tt, topo, _) = six_service_instance();
                (tt, topo)
            } else {
                let cfg = GeneratorConfig {
                    station_count: stations,
                    corridor_length_km: corridor_km,
                    services_target: services,
                    seed,
                    ..Default::default()
                };
                generate(&cfg).map_err(|e| CliError::Validation(e.to_string()))?
            };
            fs::create_dir_all(&out)?;
            write_timetable(&tt, BufWriter::new(File::create(out.join("timetable.csv"))?))?;
            write_topology(&topo, BufWriter::new(File::create(out.join("topology.csv"))?))?;
            log::info!("wrote {} services to {}", tt.len(), out.display());
            Ok(())
        }
        Command::Graph {
            data,
            bounds,
            out,
            format,
        } => {
            let b = bounds.bounds()?;
            let (tt, topo) = load(&data)?;
            let g = build_graph(&tt, &topo, &b).map_err(|e| CliError::Validation(e.to_string()))?;
            let mut w = output(out.as_deref())?;
            match format {
                Format::Csv => g.write_csv(&tt, &mut w)?,
                Format::Json => {
                    serde_json::to_writer_pretty(&mut w, &g.to_json(&tt))?;
                    writeln!(w)?;
                }
            }
            w.flush()?;
            Ok(())
        }
        Command::Solve {
            data,
            bounds,
            out,
            format,
        } => {
            let b = bounds.bounds()?;
            let (tt, topo) = load(&data)?;
            let cover = min_fleet(&tt, &topo, &b).map_err(|e| CliError::Validation(e.to_string()))?;
            let objectives = evaluate(&cover, &tt, &topo).map_err(|e| CliError::Runtime(e.to_string()))?;
            let peak = density_profile(&tt).peak();
            let mut stdout = io::stdout().lock();
            writeln!(stdout, "fleet={}", cover.fleet_size())?;
            writeln!(stdout, "peak_density={peak}")?;
            writeln!(stdout, "objectives={}", serde_json::to_string(&objectives)?)?;
            if let Some(path) = out {
                let mut w = output(Some(&path))?;
                match format {
                    Format::Json => {
                        serde_json::to_writer_pretty(&mut w, &cover.to_document(&tt, true))?;
                        writeln!(w)?;
                    }
                    Format::Csv => cover.write_csv(&tt, &mut w)?,
                }
                w.flush()?;
            }
            Ok(())
        }
        Command::Sweep {
            data,
            grid,
            jobs,
            out,
        } => {
            let grid = BoundsGrid::resolve(&grid)?;
            let (tt, topo) = load(&data)?;
            let (dir, manifest) = run_sweep_to_dir(&tt, &topo, &grid, jobs, &out, &|done, total| {
                if done == total || done % (total / 20).max(1) == 0 {
                    log::info!("sweep progress {done}/{total}");
                }
            })?;
            let failed = manifest.records.iter().filter(|r| !r.is_ok()).count();
            if failed > 0 {
                log::warn!("{failed} grid point(s) failed; see `error` in the manifest");
            }
            println!("{}", dir.display());
            Ok(())
        }
        Command::Pareto { manifest, out } => {
            let (_, ids, points) = load_points(&manifest)?;
            let fa = sort_fronts(&points);
            fs::create_dir_all(&out)?;
            fa.write_csv(&ids, BufWriter::new(File::create(out.join("fronts.csv"))?))?;
            write_front_minima_csv(
                &front_minima(&fa, &points),
                BufWriter::new(File::create(out.join("front_minima.csv"))?),
            )?;
            println!("records={} fronts={}", points.len(), fa.front_count());
            Ok(())
        }
        Command::Clusters {
            manifest,
            eps,
            out,
        } => {
            let eps = parse_epsilon(Some(&eps)).map_err(CliError::Validation)?;
            let (m, ids, points) = load_points(&manifest)?;
            let fa = sort_fronts(&points);
            let clusters = find_clusters(&fa, &points, &eps);
            fs::create_dir_all(&out)?;
            let mut w = csv::Writer::from_writer(BufWriter::new(File::create(out.join("clusters.csv"))?));
            let mut header = vec!["front", "cluster_id", "record_id", "w_min", "w_max", "d_max", "v_avg_max"];
            header.extend(OBJECTIVE_NAMES);
            w.write_record(&header)?;
            let mut per_front = vec![0usize; fa.front_count() + 1];
            for c in &clusters {
                per_front[c.front] += 1;
                for &p in &c.members {
                    let rec = &m.records[ids[p]];
                    let b = rec.bounds;
                    let mut row = vec![
                        c.front.to_string(),
                        per_front[c.front].to_string(),
                        ids[p].to_string(),
                        b.w_min.to_string(),
                        b.w_max.to_string(),
                        b.d_max.to_string(),
                        b.v_avg_max.to_string(),
                    ];
                    row.extend(points[p].iter().map(f64::to_string));
                    w.write_record(&row)?;
                }
            }
            w.flush()?;
            println!("fronts={} clusters={}", fa.front_count(), clusters.len());
            Ok(())
        }
        Command::Density {
            timetable,
            out,
            rle,
        } => {
            let tt = crate::io::read_timetable(File::open(&timetable)?)?;
            let dp = density_profile(&tt);
            let mut w = output(out.as_deref())?;
            if rle {
                dp.write_rle_csv(&mut w)?;
            } else {
                dp.write_csv(&mut w)?;
            }
            w.flush()?;
            log::info!("peak density {}", dp.peak());
            Ok(())
        }
        Command::Report {
            manifest,
            baseline,
            format,
        } => {
            let baseline = ObjectiveVector::parse_csv(&baseline)
                .map_err(|e| CliError::Validation(e.to_string()))?;
            let m = load_manifest(&manifest.manifest)?;
            let filter = RecordFilter::parse(&manifest.filter)?;
            let kept = SweepManifest {
                records: filter.apply(&m).into_iter().map(|(_, r)| r.clone()).collect(),
                ..m
            };
            let report = improvement_report(&kept, &baseline);
            let mut stdout = io::stdout().lock();
            match format {
                Format::Csv => report.write_table(&mut stdout)?,
                Format::Json => {
                    serde_json::to_writer_pretty(&mut stdout, &report)?;
                    writeln!(stdout)?;
                }
            }
            Ok(())
        }
        Command::Serve {
            port,
            host,
            data_dir,
            sweep_slots,
        } => {
            let ip = host
                .parse()
                .map_err(|_| CliError::Validation(format!("`{host}` is not an IP address")))?;
            let addr = SocketAddr::new(ip, port);
            let mut cfg = ServerConfig::new(data_dir);
            cfg.concurrent_sweeps = sweep_slots;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(serve(addr, cfg))?;
            Ok(())
        }
    }
}
