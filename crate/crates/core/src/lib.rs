//! Rake-link planning for suburban rail.
//!
//! Builds the link feasibility graph of a timetable under headway, deadhead
//! distance and deadhead speed bounds, solves the minimum fleet as a
//! minimum path cover via bipartite matching, evaluates five operational
//! objectives, sweeps grids of bounds, and analyses the results with
//! non-dominated sorting and objective-space clustering.

pub mod cli;
pub mod demo_data;
pub mod feasgraph;
pub mod io;
pub mod matching;
pub mod model;
pub mod objectives;
pub mod pareto;
pub mod pathcover;
pub mod server;
pub mod sweep;

pub use feasgraph::{build_graph, edge_feasible, FeasibilityGraph, LinkEdge};
pub use matching::{max_bipartite_matching, Matching};
pub use model::{Bounds, Limit, Service, StationId, Timetable, Topology};
pub use objectives::{density_profile, evaluate, peak_density, DensityProfile, ObjectiveVector};
pub use pathcover::{brute_force_min_cover, extract_cover, min_fleet, CoverSolution, RakeLink};
pub use pareto::{dominates, find_clusters, front_minima, sort_fronts, Cluster, FrontAssignment};
pub use sweep::{generate_grid, improvement_report, run_sweep, BoundsGrid, SweepManifest, SweepRecord};
