//! Minimum path cover of a feasibility DAG, i.e. the minimum fleet.
//!
//! A matching `M` of the split graph (left copy `u_i`, right copy `v_j`, one
//! edge per DAG edge `i -> j`) defines successor pointers `i -> j`; the
//! resulting chains are vertex-disjoint paths and there are `N - |M|` of
//! them. A maximum matching therefore yields a minimum path cover.

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::feasgraph::{build_graph, FeasibilityGraph};
use crate::matching::{max_bipartite_matching, Matching};
use crate::model::{Bounds, ModelError, Timetable, Topology};

/// Largest graph [`brute_force_min_cover`] accepts.
pub const BRUTE_FORCE_MAX_NODES: usize = 12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoverError {
    #[error("matched pair ({from}, {to}) is not an edge of the feasibility graph or reuses a vertex")]
    InconsistentMatching { from: usize, to: usize },
    #[error("graph has {0} nodes; exhaustive search is limited to {BRUTE_FORCE_MAX_NODES}")]
    TooLarge(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// The chain of services (timetable indices) operated by one rake.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct RakeLink(Vec<usize>);

impl RakeLink {
    pub fn new(services: Vec<usize>) -> Self {
        RakeLink(services)
    }

    pub fn services(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Consecutive `(i, j)` pairs.
    pub fn transitions(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0.windows(2).map(|w| (w[0], w[1]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverSolution {
    links: Vec<RakeLink>,
    bounds: Bounds,
}

/// Wire form: links listed by service id.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct CoverDocument {
    pub fleet_size: usize,
    pub links: Vec<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bounds: Option<Bounds>,
}

impl CoverSolution {
    pub fn new(links: Vec<RakeLink>, bounds: Bounds) -> Self {
        CoverSolution { links, bounds }
    }

    pub fn links(&self) -> &[RakeLink] {
        &self.links
    }

    pub fn fleet_size(&self) -> usize {
        self.links.len()
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    /// Links as service-id lists, ordered as stored.
    pub fn link_ids(&self, tt: &Timetable) -> Vec<Vec<String>> {
        self.links
            .iter()
            .map(|l| {
                l.services()
                    .iter()
                    .map(|&i| tt.service(i).service_id.clone())
                    .collect()
            })
            .collect()
    }

    pub fn to_document(&self, tt: &Timetable, with_bounds: bool) -> CoverDocument {
        CoverDocument {
            fleet_size: self.fleet_size(),
            links: self.link_ids(tt),
            bounds: with_bounds.then_some(self.bounds),
        }
    }

    /// One row per `(rake_index, seq, service_id)`.
    pub fn write_csv(&self, tt: &Timetable, writer: impl Write) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["rake_index", "seq", "service_id"])?;
        for (r, link) in self.links.iter().enumerate() {
            for (seq, &i) in link.services().iter().enumerate() {
                w.write_record([
                    r.to_string().as_str(),
                    &seq.to_string(),
                    &tt.service(i).service_id,
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Links partition `0..n` and each consecutive pair is an edge of `g`.
    pub fn is_valid_cover_of(&self, g: &FeasibilityGraph) -> bool {
        let mut seen = vec![false; g.node_count()];
        for link in &self.links {
            if link.is_empty() {
                return false;
            }
            for &i in link.services() {
                if i >= seen.len() || std::mem::replace(&mut seen[i], true) {
                    return false;
                }
            }
            if !link.transitions().all(|(i, j)| g.has_edge(i, j)) {
                return false;
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Follows matched successor pointers into rake-links. Links are ordered
/// by their first service.
pub fn extract_cover(g: &FeasibilityGraph, m: &Matching) -> Result<CoverSolution, CoverError> {
    let n = g.node_count();
    let mut succ = vec![usize::MAX; n];
    let mut has_pred = vec![false; n];
    for &(i, j) in m.pairs() {
        let bad = CoverError::InconsistentMatching { from: i, to: j };
        if i >= n || j >= n || !g.has_edge(i, j) || succ[i] != usize::MAX || has_pred[j] {
            return Err(bad);
        }
        succ[i] = j;
        has_pred[j] = true;
    }
    let mut links = Vec::with_capacity(n - m.size());
    for start in (0..n).filter(|&i| !has_pred[i]) {
        let mut chain = vec![start];
        let mut cur = start;
        while succ[cur] != usize::MAX {
            cur = succ[cur];
            chain.push(cur);
        }
        links.push(RakeLink(chain));
    }
    debug_assert_eq!(links.iter().map(RakeLink::len).sum::<usize>(), n);
    Ok(CoverSolution {
        links,
        bounds: *g.bounds(),
    })
}

/// Minimum-cardinality path cover of the graph.
pub fn min_cover(g: &FeasibilityGraph) -> CoverSolution {
    let m = max_bipartite_matching(g);
    extract_cover(g, &m).expect("a matching of the split graph is always consistent")
}

/// Builds the feasibility graph for `b` and returns a minimum-fleet cover.
pub fn min_fleet(tt: &Timetable, topo: &Topology, b: &Bounds) -> Result<CoverSolution, CoverError> {
    let g = build_graph(tt, topo, b)?;
    Ok(min_cover(&g))
}

/// Minimum number of paths over every successor assignment, by exhaustive
/// search. Independent of the matching code; used as a test oracle.
pub fn brute_force_min_cover(g: &FeasibilityGraph) -> Result<usize, CoverError> {
    let n = g.node_count();
    if n > BRUTE_FORCE_MAX_NODES {
        return Err(CoverError::TooLarge(n));
    }

    struct Search<'a> {
        g: &'a FeasibilityGraph,
        taken: Vec<bool>,
        best: usize,
    }

    impl Search<'_> {
        // Node `i` picks either no successor or one not yet claimed.
        fn visit(&mut self, i: usize, links_used: usize) {
            let n = self.g.node_count();
            if i == n {
                self.best = self.best.max(links_used);
                return;
            }
            if links_used + (n - i) <= self.best {
                return;
            }
            let succs: Vec<usize> = self.g.successors(i).collect();
            for j in succs {
                if !self.taken[j] {
                    self.taken[j] = true;
                    self.visit(i + 1, links_used + 1);
                    self.taken[j] = false;
                }
            }
            self.visit(i + 1, links_used);
        }
    }

    let mut s = Search {
        g,
        taken: vec![false; n],
        best: 0,
    };
    s.visit(0, 0);
    Ok(n - s.best)
}
