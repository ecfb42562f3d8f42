//! Non-dominated sorting and objective-space clustering of sweep results.
//!
//! All objectives are minimized. Points are plain `f64` slices of equal
//! length, so the same routines serve the five sweep objectives and small
//! synthetic cases.

use std::collections::HashMap;
use std::io::Write;

use serde::Serialize;

/// `a` is no worse than `b` everywhere and strictly better somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    debug_assert_eq!(a.len(), b.len());
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FrontAssignment {
    /// 1-based front of each point.
    pub front_of: Vec<usize>,
    /// Point indices per front, ascending within each front.
    pub fronts: Vec<Vec<usize>>,
}

impl FrontAssignment {
    pub fn front_count(&self) -> usize {
        self.fronts.len()
    }

    /// Members of front `k` (1-based).
    pub fn front(&self, k: usize) -> Option<&[usize]> {
        self.fronts.get(k.checked_sub(1)?).map(Vec::as_slice)
    }

    pub fn write_csv(&self, record_ids: &[usize], writer: impl Write) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["record_id", "front"])?;
        for (p, &front) in self.front_of.iter().enumerate() {
            w.write_record([record_ids[p].to_string(), front.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Bit pattern used for exact equality; `-0.0` and `0.0` coincide.
fn key(p: &[f64]) -> Vec<u64> {
    p.iter().map(|&x| if x == 0.0 { 0 } else { x.to_bits() }).collect()
}

/// Assigns every point to its Pareto front.
///
/// The front of a point under repeated peeling equals the length of the
/// longest dominance chain ending at it. Distinct vectors are visited in
/// lexicographic order, where every dominator precedes the points it
/// dominates, so one pass computes all chain lengths. Duplicates share the
/// rank of their vector.
pub fn sort_fronts<P: AsRef<[f64]>>(points: &[P]) -> FrontAssignment {
    let mut unique: Vec<&[f64]> = Vec::new();
    let mut slot_of: HashMap<Vec<u64>, usize> = HashMap::new();
    let group: Vec<usize> = points
        .iter()
        .map(|p| {
            let p = p.as_ref();
            *slot_of.entry(key(p)).or_insert_with(|| {
                unique.push(p);
                unique.len() - 1
            })
        })
        .collect();

    let mut order: Vec<usize> = (0..unique.len()).collect();
    order.sort_by(|&a, &b| {
        unique[a]
            .iter()
            .zip(unique[b])
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut rank = vec![0usize; unique.len()];
    for (pos, &u) in order.iter().enumerate() {
        let mut r = 1;
        for &earlier in &order[..pos] {
            if rank[earlier] >= r && dominates(unique[earlier], unique[u]) {
                r = rank[earlier] + 1;
            }
        }
        rank[u] = r;
    }

    let front_of: Vec<usize> = group.iter().map(|&g| rank[g]).collect();
    let count = front_of.iter().copied().max().unwrap_or(0);
    let mut fronts = vec![Vec::new(); count];
    for (p, &f) in front_of.iter().enumerate() {
        fronts[f - 1].push(p);
    }
    FrontAssignment { front_of, fronts }
}

/// Componentwise minimum of each front. A row is generally not a point of
/// the front.
pub fn front_minima<P: AsRef<[f64]>>(fa: &FrontAssignment, points: &[P]) -> Vec<Vec<f64>> {
    fa.fronts
        .iter()
        .map(|members| {
            let dim = points[members[0]].as_ref().len();
            let mut row = vec![f64::INFINITY; dim];
            for &m in members {
                for (slot, &x) in row.iter_mut().zip(points[m].as_ref()) {
                    *slot = slot.min(x);
                }
            }
            row
        })
        .collect()
}

pub fn write_front_minima_csv(minima: &[Vec<f64>], writer: impl Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let dim = minima.first().map_or(5, Vec::len);
    let mut header = vec!["front".to_string()];
    header.extend((1..=dim).map(|k| format!("min_f{k}")));
    w.write_record(&header)?;
    for (f, row) in minima.iter().enumerate() {
        let mut rec = vec![(f + 1).to_string()];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cluster {
    pub front: usize,
    /// Point indices, ascending.
    pub members: Vec<usize>,
    /// Objective vector of the lowest-index member.
    pub representative: Vec<f64>,
    pub epsilon: Vec<f64>,
}

fn within(a: &[f64], b: &[f64], eps: &[f64]) -> bool {
    a.iter().zip(b).zip(eps).all(|((x, y), e)| (x - y).abs() <= *e)
}

/// Groups the points of each front in objective space.
///
/// With a zero tolerance vector members share an identical objective vector.
/// Otherwise clusters are the connected components of the graph linking
/// points whose every objective differs by at most the matching `epsilon`
/// entry (single linkage). Clusters are ordered by front and then by their
/// lowest member.
pub fn find_clusters<P: AsRef<[f64]>>(
    fa: &FrontAssignment,
    points: &[P],
    epsilon: &[f64],
) -> Vec<Cluster> {
    assert!(
        epsilon.iter().all(|e| *e >= 0.0),
        "epsilon must be non-negative"
    );
    let exact = epsilon.iter().all(|e| *e == 0.0);
    let mut out = Vec::new();
    for (f, members) in fa.fronts.iter().enumerate() {
        let groups: Vec<Vec<usize>> = if exact {
            let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
            let mut groups: Vec<Vec<usize>> = Vec::new();
            for &m in members {
                let slot = *index.entry(key(points[m].as_ref())).or_insert_with(|| {
                    groups.push(Vec::new());
                    groups.len() - 1
                });
                groups[slot].push(m);
            }
            groups
        } else {
            single_linkage(members, points, epsilon)
        };
        for g in groups {
            out.push(Cluster {
                front: f + 1,
                representative: points[g[0]].as_ref().to_vec(),
                members: g,
                epsilon: epsilon.to_vec(),
            });
        }
    }
    out
}

fn single_linkage<P: AsRef<[f64]>>(members: &[usize], points: &[P], eps: &[f64]) -> Vec<Vec<usize>> {
    let n = members.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for a in 0..n {
        for b in a + 1..n {
            if within(points[members[a]].as_ref(), points[members[b]].as_ref(), eps) {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    // Keep the lower position as root so roots follow seed order.
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut slot: HashMap<usize, usize> = HashMap::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (pos, &m) in members.iter().enumerate() {
        let root = find(&mut parent, pos);
        let s = *slot.entry(root).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[s].push(m);
    }
    groups
}
