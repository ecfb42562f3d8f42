//! Maximum-cardinality bipartite matching.
//!
//! [`hopcroft_karp`] is the production matcher. [`augmenting_path_matching`]
//! is the plain one-path-at-a-time algorithm, kept as an independent check.

use std::collections::VecDeque;

use serde::Serialize;

use crate::feasgraph::FeasibilityGraph;

const NIL: usize = usize::MAX;

/// Bipartite graph with adjacency from left to right vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteGraph {
    n_right: usize,
    adj: Vec<Vec<usize>>,
}

impl BipartiteGraph {
    pub fn new(n_left: usize, n_right: usize) -> Self {
        BipartiteGraph {
            n_right,
            adj: vec![Vec::new(); n_left],
        }
    }

    /// Sorted, deduplicated adjacency.
    pub fn from_edges(
        n_left: usize,
        n_right: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Self {
        let mut g = BipartiteGraph::new(n_left, n_right);
        for (u, v) in edges {
            g.add_edge(u, v);
        }
        for list in &mut g.adj {
            list.sort_unstable();
            list.dedup();
        }
        g
    }

    /// The split graph of a DAG: `(u_i, v_j)` for every edge `i -> j`.
    pub fn from_dag(g: &FeasibilityGraph) -> Self {
        let n = g.node_count();
        BipartiteGraph {
            n_right: n,
            adj: (0..n).map(|i| g.successors(i).collect()).collect(),
        }
    }

    pub fn add_edge(&mut self, u: usize, v: usize) {
        assert!(v < self.n_right, "right vertex {v} out of range");
        self.adj[u].push(v);
    }

    pub fn n_left(&self) -> usize {
        self.adj.len()
    }

    pub fn n_right(&self) -> usize {
        self.n_right
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adj[u]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj.get(u).is_some_and(|l| l.contains(&v))
    }
}

/// A matching as `(left, right)` pairs sorted by left vertex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Matching {
    pairs: Vec<(usize, usize)>,
}

impl Matching {
    pub fn from_pairs(mut pairs: Vec<(usize, usize)>) -> Self {
        pairs.sort_unstable();
        Matching { pairs }
    }

    fn from_mates(mate_left: &[usize]) -> Self {
        Matching {
            pairs: mate_left
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != NIL)
                .map(|(u, &v)| (u, v))
                .collect(),
        }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn size(&self) -> usize {
        self.pairs.len()
    }

    /// Every pair is an edge of `g` and no vertex is used twice.
    pub fn is_valid_for(&self, g: &BipartiteGraph) -> bool {
        let mut left = vec![false; g.n_left()];
        let mut right = vec![false; g.n_right()];
        self.pairs.iter().all(|&(u, v)| {
            u < g.n_left()
                && v < g.n_right()
                && g.has_edge(u, v)
                && !std::mem::replace(&mut left[u], true)
                && !std::mem::replace(&mut right[v], true)
        })
    }
}

/// Hopcroft-Karp, `O(E sqrt(V))`.
///
/// Phases alternate a BFS that layers the graph from all free left vertices
/// with a DFS that augments along a maximal set of vertex-disjoint shortest
/// augmenting paths. Left vertices and adjacency lists are scanned in
/// ascending order, so the result is deterministic.
pub fn hopcroft_karp(g: &BipartiteGraph) -> Matching {
    let n_left = g.n_left();
    let mut mate_left = vec![NIL; n_left];
    let mut mate_right = vec![NIL; g.n_right()];
    let mut dist = vec![usize::MAX; n_left];
    let mut queue = VecDeque::with_capacity(n_left);
    let mut cursor = vec![0usize; n_left];
    let mut stack: Vec<usize> = Vec::new();

    loop {
        // BFS from free left vertices; `found` is the layer at which a free
        // right vertex was first reached.
        queue.clear();
        for u in 0..n_left {
            if mate_left[u] == NIL {
                dist[u] = 0;
                queue.push_back(u);
            } else {
                dist[u] = usize::MAX;
            }
        }
        let mut found = usize::MAX;
        while let Some(u) = queue.pop_front() {
            if dist[u] >= found {
                continue;
            }
            for &v in g.neighbors(u) {
                let w = mate_right[v];
                if w == NIL {
                    found = found.min(dist[u] + 1);
                } else if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        if found == usize::MAX {
            break;
        }

        // Iterative DFS along the layering.
        cursor.iter_mut().for_each(|c| *c = 0);
        for root in 0..n_left {
            if mate_left[root] != NIL {
                continue;
            }
            stack.clear();
            stack.push(root);
            while let Some(&u) = stack.last() {
                let adj = g.neighbors(u);
                let mut advanced = false;
                while cursor[u] < adj.len() {
                    let v = adj[cursor[u]];
                    cursor[u] += 1;
                    let w = mate_right[v];
                    if w == NIL {
                        if dist[u] + 1 == found {
                            // Augment along the stack: each stacked vertex takes
                            // the right vertex its cursor last pointed at.
                            let mut right = v;
                            while let Some(x) = stack.pop() {
                                let prev = mate_left[x];
                                mate_left[x] = right;
                                mate_right[right] = x;
                                right = prev;
                            }
                            advanced = true;
                            break;
                        }
                    } else if dist[w] == dist[u] + 1 {
                        stack.push(w);
                        advanced = true;
                        break;
                    }
                }
                if !advanced {
                    // Dead end: exclude `u` from the rest of this phase.
                    dist[u] = usize::MAX;
                    stack.pop();
                }
            }
        }
    }
    Matching::from_mates(&mate_left)
}

/// Repeated single augmenting-path search (Kuhn's algorithm), `O(V E)`.
pub fn augmenting_path_matching(g: &BipartiteGraph) -> Matching {
    fn try_augment(
        g: &BipartiteGraph,
        u: usize,
        seen: &mut [bool],
        mate_left: &mut [usize],
        mate_right: &mut [usize],
    ) -> bool {
        for &v in g.neighbors(u) {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            if mate_right[v] == NIL || try_augment(g, mate_right[v], seen, mate_left, mate_right)
            {
                mate_left[u] = v;
                mate_right[v] = u;
                return true;
            }
        }
        false
    }

    let mut mate_left = vec![NIL; g.n_left()];
    let mut mate_right = vec![NIL; g.n_right()];
    let mut seen = vec![false; g.n_right()];
    for u in 0..g.n_left() {
        seen.iter_mut().for_each(|s| *s = false);
        try_augment(g, u, &mut seen, &mut mate_left, &mut mate_right);
    }
    Matching::from_mates(&mate_left)
}

/// Maximum matching of the split graph of a feasibility DAG.
pub fn max_bipartite_matching(g: &FeasibilityGraph) -> Matching {
    hopcroft_karp(&BipartiteGraph::from_dag(g))
}
