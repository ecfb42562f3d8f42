//! Link feasibility graph: which service may follow which on the same rake.
//!
//! An edge `i -> j` exists when the headway `dep(j) - arr(i)` lies in
//! `[w_min, w_max]`, the deadhead distance from `i`'s destination to `j`'s
//! origin is at most `d_max`, and covering that distance within the headway
//! needs an average speed of at most `v_avg_max`. A same-station link is
//! simply a zero-distance deadhead.
//!
//! Every edge goes forward in time (`arr(i) <= dep(j)` and `dep < arr` for
//! every service), so the graph is a DAG whose topological order is the
//! timetable order.

use std::io::Write;

use serde::Serialize;

use crate::model::{Bounds, ModelError, Service, Timetable, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkEdge {
    pub from: usize,
    pub to: usize,
    /// `dep(to) - arr(from)`, seconds.
    pub headway: u32,
    pub deadhead_km: f64,
}

#[derive(Debug, Clone)]
pub struct FeasibilityGraph {
    n: usize,
    edges: Vec<LinkEdge>,
    /// CSR offsets into `edges` by `from`.
    offsets: Vec<usize>,
    bounds: Bounds,
}

/// Feasibility of a single ordered pair, given the deadhead distance
/// between `i`'s destination and `j`'s origin.
fn link(i: &Service, j: &Service, deadhead_km: f64, b: &Bounds) -> Option<(u32, f64)> {
    if j.dep_time < i.arr_time {
        return None;
    }
    let headway = j.dep_time - i.arr_time;
    let h = f64::from(headway);
    if h < b.w_min.value() || !b.w_max.admits(h) {
        return None;
    }
    // A missing topology entry is an impossible deadhead, even for d_max = inf.
    if !deadhead_km.is_finite() || !b.d_max.admits(deadhead_km) {
        return None;
    }
    if deadhead_km > 0.0 && !b.v_avg_max.is_infinite() {
        // km / (h / 3600) <= v, evaluated without dividing by a zero headway.
        if headway == 0 || deadhead_km * 3600.0 > b.v_avg_max.value() * h {
            return None;
        }
    }
    Some((headway, deadhead_km))
}

/// Decides whether service `j` can follow `i` on one rake under `b`.
pub fn edge_feasible(
    i: &Service,
    j: &Service,
    topo: &Topology,
    b: &Bounds,
) -> Option<(u32, f64)> {
    link(i, j, topo.deadhead_km(&i.destination, &j.origin), b)
}

pub fn build_graph(
    tt: &Timetable,
    topo: &Topology,
    b: &Bounds,
) -> Result<FeasibilityGraph, ModelError> {
    b.validate()?;
    let services = tt.services();
    let n = services.len();
    let station = |s: &crate::model::StationId| topo.station_index(s);
    let origins: Vec<Option<usize>> = services.iter().map(|s| station(&s.origin)).collect();
    let dests: Vec<Option<usize>> = services.iter().map(|s| station(&s.destination)).collect();
    // Services are sorted by departure, so the candidate successors of `i`
    // form a contiguous run starting at the first `dep >= arr(i) + w_min`.
    let deps: Vec<u32> = services.iter().map(|s| s.dep_time).collect();

    let mut edges = Vec::new();
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0);
    for (i, si) in services.iter().enumerate() {
        let earliest = f64::from(si.arr_time) + b.w_min.value();
        let start = deps.partition_point(|&d| f64::from(d) < earliest);
        for (j, sj) in services.iter().enumerate().skip(start) {
            let h = f64::from(sj.dep_time) - f64::from(si.arr_time);
            if !b.w_max.admits(h) {
                break;
            }
            let km = match (dests[i], origins[j]) {
                (Some(a), Some(o)) => topo.km_by_index(a, o),
                _ if si.destination == sj.origin => 0.0,
                _ => f64::INFINITY,
            };
            if let Some((headway, deadhead_km)) = link(si, sj, km, b) {
                edges.push(LinkEdge {
                    from: i,
                    to: j,
                    headway,
                    deadhead_km,
                });
            }
        }
        offsets.push(edges.len());
    }
    Ok(FeasibilityGraph {
        n,
        edges,
        offsets,
        bounds: *b,
    })
}

impl FeasibilityGraph {
    /// Builds a graph directly from an edge list; edges are sorted and
    /// deduplicated. Used for synthetic DAGs that are not derived from a
    /// timetable.
    ///
    /// Panics if an edge does not satisfy `from < to < n`.
    pub fn from_edges(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut pairs: Vec<(usize, usize)> = pairs.into_iter().collect();
        pairs.sort_unstable();
        pairs.dedup();
        for &(a, b) in &pairs {
            assert!(a < b && b < n, "edge {a}->{b} is not forward in a graph of {n} nodes");
        }
        let edges: Vec<LinkEdge> = pairs
            .into_iter()
            .map(|(from, to)| LinkEdge {
                from,
                to,
                headway: 0,
                deadhead_km: 0.0,
            })
            .collect();
        let mut offsets = vec![0; n + 1];
        for e in &edges {
            offsets[e.from + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        FeasibilityGraph {
            n,
            edges,
            offsets,
            bounds: Bounds::unbounded(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[LinkEdge] {
        &self.edges
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    /// Outgoing edges of `i`, ordered by target.
    pub fn out_edges(&self, i: usize) -> &[LinkEdge] {
        &self.edges[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.out_edges(i).iter().map(|e| e.to)
    }

    pub fn edge(&self, from: usize, to: usize) -> Option<&LinkEdge> {
        let out = self.out_edges(from);
        out.binary_search_by_key(&to, |e| e.to).ok().map(|k| &out[k])
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        from < self.n && self.edge(from, to).is_some()
    }

    /// Kahn's algorithm; `None` if the graph has a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let mut indegree = vec![0usize; self.n];
        for e in &self.edges {
            indegree[e.to] += 1;
        }
        let mut ready: Vec<usize> = (0..self.n).filter(|&v| indegree[v] == 0).collect();
        let mut order = Vec::with_capacity(self.n);
        while let Some(v) = ready.pop() {
            order.push(v);
            for w in self.successors(v) {
                indegree[w] -= 1;
                if indegree[w] == 0 {
                    ready.push(w);
                }
            }
        }
        (order.len() == self.n).then_some(order)
    }

    /// Edge list CSV: `from_service,to_service,headway_s,deadhead_km`.
    pub fn write_csv(&self, tt: &Timetable, writer: impl Write) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["from_service", "to_service", "headway_s", "deadhead_km"])?;
        for e in &self.edges {
            w.write_record([
                tt.service(e.from).service_id.as_str(),
                tt.service(e.to).service_id.as_str(),
                &e.headway.to_string(),
                &e.deadhead_km.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// JSON document with the generating bounds and service ids.
    pub fn to_json(&self, tt: &Timetable) -> serde_json::Value {
        let edges: Vec<serde_json::Value> = self
            .edges
            .iter()
            .map(|e| {
                serde_json::json!({
                    "from_service": tt.service(e.from).service_id,
                    "to_service": tt.service(e.to).service_id,
                    "headway_s": e.headway,
                    "deadhead_km": e.deadhead_km,
                })
            })
            .collect();
        serde_json::json!({
            "bounds": self.bounds,
            "services": self.n,
            "edges": edges,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_timetable, validate_topology, DistanceRecord, RawService};

    fn pair(
        arr_i: i64,
        dest_i: &str,
        dep_j: i64,
        orig_j: &str,
        km: f64,
    ) -> (Timetable, Topology) {
        let tt = validate_timetable(vec![
            RawService::new("i", "O", dest_i, arr_i - 100, arr_i, 1.0),
            RawService::new("j", orig_j, "D", dep_j, dep_j + 100, 1.0),
        ])
        .unwrap();
        let topo = validate_topology(
            vec![
                DistanceRecord::new("X", "Y", km),
                DistanceRecord::new("O", "X", 1.0),
                DistanceRecord::new("D", "Y", 1.0),
            ],
            &tt,
        )
        .unwrap();
        (tt, topo)
    }

    fn check(tt: &Timetable, topo: &Topology, b: Bounds) -> Option<(u32, f64)> {
        let i = tt.services().iter().find(|s| s.service_id == "i").unwrap();
        let j = tt.services().iter().find(|s| s.service_id == "j").unwrap();
        edge_feasible(i, j, topo, &b)
    }

    #[test]
    fn same_station_comfortable_headway() {
        let (tt, topo) = pair(1000, "X", 1600, "X", 5.0);
        let b = Bounds::new(60.0, 3600.0, 0.0, f64::INFINITY);
        assert_eq!(check(&tt, &topo, b), Some((600, 0.0)));
    }

    #[test]
    fn deadhead_too_fast() {
        // 5 km in 300 s is 60 km/h.
        let (tt, topo) = pair(1000, "X", 1300, "Y", 5.0);
        assert_eq!(check(&tt, &topo, Bounds::new(0.0, 3600.0, 10.0, 50.0)), None);
        assert_eq!(
            check(&tt, &topo, Bounds::new(0.0, 3600.0, 10.0, 60.0)),
            Some((300, 5.0))
        );
    }

    #[test]
    fn negative_headway_never_feasible() {
        let (tt, topo) = pair(1000, "X", 900, "X", 5.0);
        let b = Bounds::new(0.0, f64::INFINITY, f64::INFINITY, f64::INFINITY);
        assert_eq!(check(&tt, &topo, b), None);
    }

    #[test]
    fn closed_interval_ties() {
        let (tt, topo) = pair(1000, "X", 1600, "Y", 5.0);
        // h = 600 = w_min = w_max boundary cases, d = d_max, speed = 30 = v.
        assert!(check(&tt, &topo, Bounds::new(600.0, 601.0, 5.0, 30.0)).is_some());
        assert!(check(&tt, &topo, Bounds::new(0.0, 600.0, 5.0, 30.0)).is_some());
        assert!(check(&tt, &topo, Bounds::new(601.0, 700.0, 5.0, 30.0)).is_none());
        assert!(check(&tt, &topo, Bounds::new(0.0, 599.0, 5.0, 30.0)).is_none());
        assert!(check(&tt, &topo, Bounds::new(0.0, 600.0, 4.9, 30.0)).is_none());
        assert!(check(&tt, &topo, Bounds::new(0.0, 600.0, 5.0, 29.9)).is_none());
    }

    #[test]
    fn zero_headway_deadhead_needs_infinite_speed() {
        let (tt, topo) = pair(1000, "X", 1000, "Y", 5.0);
        assert!(check(&tt, &topo, Bounds::new(0.0, 60.0, 10.0, 1.0e9)).is_none());
        assert_eq!(
            check(&tt, &topo, Bounds::new(0.0, 60.0, 10.0, f64::INFINITY)),
            Some((0, 5.0))
        );
        // Same station at zero headway is fine at any speed bound.
        let (tt, topo) = pair(1000, "X", 1000, "X", 5.0);
        assert!(check(&tt, &topo, Bounds::new(0.0, 60.0, 0.0, 10.0)).is_some());
    }

    #[test]
    fn unreachable_pair_is_infeasible_even_unbounded() {
        let tt = validate_timetable(vec![
            RawService::new("i", "A", "B", 0, 100, 1.0),
            RawService::new("j", "C", "D", 200, 300, 1.0),
        ])
        .unwrap();
        let topo = validate_topology(
            vec![DistanceRecord::new("A", "B", 1.0), DistanceRecord::new("C", "D", 1.0)],
            &tt,
        )
        .unwrap();
        let g = build_graph(&tt, &topo, &Bounds::unbounded()).unwrap();
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn overlapping_services_have_no_edges() {
        let raw: Vec<RawService> = (0..6)
            .map(|k| RawService::new(&format!("s{k}"), "X", "X", 100 + k, 1000 + k, 1.0))
            .collect();
        let tt = validate_timetable(raw).unwrap();
        let topo = validate_topology(vec![DistanceRecord::new("X", "X", 0.0)], &tt).unwrap();
        let g = build_graph(&tt, &topo, &Bounds::unbounded()).unwrap();
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn inadmissible_bounds_rejected() {
        let (tt, topo) = pair(1000, "X", 1600, "X", 5.0);
        assert!(matches!(
            build_graph(&tt, &topo, &Bounds::new(300.0, 300.0, 0.0, 10.0)),
            Err(ModelError::InadmissibleBounds { .. })
        ));
    }

    #[test]
    fn from_edges_canonicalizes() {
        let g = FeasibilityGraph::from_edges(4, [(2, 3), (0, 1), (0, 1), (0, 3)]);
        let pairs: Vec<_> = g.edges().iter().map(|e| (e.from, e.to)).collect();
        assert_eq!(pairs, [(0, 1), (0, 3), (2, 3)]);
        assert!(g.has_edge(0, 3));
        assert!(!g.has_edge(1, 3));
        assert_eq!(g.topological_order().unwrap().len(), 4);
    }
}
