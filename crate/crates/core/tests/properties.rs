use std::collections::BTreeSet;

use proptest::prelude::*;

use rakelink::model::{validate_timetable, validate_topology, DistanceRecord, RawService};
use rakelink::{
    brute_force_min_cover, build_graph, density_profile, evaluate, min_fleet, Bounds, Limit,
    Timetable, Topology,
};

const STATIONS: [&str; 4] = ["A", "B", "C", "D"];

#[derive(Debug, Clone)]
struct Instance {
    tt: Timetable,
    topo: Topology,
    /// Symmetric distances; `None` where the topology has no record.
    km: [[Option<f64>; 4]; 4],
}

fn station(name: &str) -> usize {
    STATIONS.iter().position(|s| *s == name).unwrap()
}

fn instance(max_services: usize) -> impl Strategy<Value = Instance> {
    let services = prop::collection::vec(
        (0..4usize, 0..4usize, 0u32..20_000, 60u32..3_000, 1u32..80),
        1..=max_services,
    );
    let optional = prop::collection::vec(prop::option::of(0u32..60), 3);
    let chain = prop::collection::vec(1u32..60, 3);
    (services, chain, optional).prop_map(|(services, chain, optional)| {
        let raw = services
            .iter()
            .enumerate()
            .map(|(k, &(o, d, dep, dur, km))| {
                RawService::new(
                    &format!("T{k}"),
                    STATIONS[o],
                    STATIONS[d],
                    i64::from(dep),
                    i64::from(dep + dur),
                    f64::from(km),
                )
            })
            .collect();
        let tt = validate_timetable(raw).unwrap();
        let mut km = [[None; 4]; 4];
        for (s, row) in km.iter_mut().enumerate() {
            row[s] = Some(0.0);
        }
        let mut records = Vec::new();
        let mut put = |a: usize, b: usize, d: f64| {
            km[a][b] = Some(d);
            km[b][a] = Some(d);
            records.push(DistanceRecord::new(STATIONS[a], STATIONS[b], d));
        };
        for (k, &d) in chain.iter().enumerate() {
            put(k, k + 1, f64::from(d));
        }
        for (&(a, b), d) in [(0, 2), (0, 3), (1, 3)].iter().zip(optional) {
            if let Some(d) = d {
                put(a, b, f64::from(d));
            }
        }
        let topo = validate_topology(records, &tt).unwrap();
        Instance { tt, topo, km }
    })
}

fn limit(values: &'static [f64]) -> impl Strategy<Value = f64> {
    prop::sample::select(values)
}

fn bounds() -> impl Strategy<Value = Bounds> {
    (
        limit(&[0.0, 120.0, 600.0]),
        limit(&[600.0, 1800.0, 3600.0, 7200.0, f64::INFINITY]),
        limit(&[0.0, 10.0, 30.0, f64::INFINITY]),
        limit(&[15.0, 40.0, 80.0, f64::INFINITY]),
    )
        .prop_filter("w_max must exceed w_min", |(a, b, _, _)| b > a)
        .prop_map(|(a, b, c, d)| Bounds::new(a, b, c, d))
}

/// Pairwise feasibility straight from the definition.
fn oracle_edge(inst: &Instance, b: &Bounds, i: usize, j: usize) -> bool {
    let (si, sj) = (inst.tt.service(i), inst.tt.service(j));
    let h = f64::from(sj.dep_time) - f64::from(si.arr_time);
    if i == j || h < b.w_min.value() || h > b.w_max.value() {
        return false;
    }
    let Some(d) = inst.km[station(si.destination.as_str())][station(sj.origin.as_str())] else {
        return false;
    };
    if d > b.d_max.value() {
        return false;
    }
    d == 0.0 || b.v_avg_max.is_infinite() || d * 3600.0 <= b.v_avg_max.value() * h
}

fn edge_set(inst: &Instance, b: &Bounds) -> BTreeSet<(usize, usize)> {
    build_graph(&inst.tt, &inst.topo, b)
        .unwrap()
        .edges()
        .iter()
        .map(|e| (e.from, e.to))
        .collect()
}

fn relaxations(b: &Bounds) -> Vec<Bounds> {
    let mut out = Vec::new();
    if b.w_min.value() > 0.0 {
        out.push(Bounds { w_min: Limit::new(0.0), ..*b });
    }
    out.push(Bounds { w_max: Limit::INFINITE, ..*b });
    out.push(Bounds { d_max: Limit::new(b.d_max.value() + 15.0), ..*b });
    out.push(Bounds { v_avg_max: Limit::new(b.v_avg_max.value() * 2.0), ..*b });
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn graph_matches_pairwise_definition(inst in instance(25), b in bounds()) {
        let n = inst.tt.len();
        let expected: BTreeSet<(usize, usize)> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| oracle_edge(&inst, &b, i, j))
            .collect();
        let g = build_graph(&inst.tt, &inst.topo, &b).unwrap();
        prop_assert_eq!(edge_set(&inst, &b), expected);
        for e in g.edges() {
            let (si, sj) = (inst.tt.service(e.from), inst.tt.service(e.to));
            prop_assert_eq!(e.headway, sj.dep_time - si.arr_time);
            prop_assert!(e.from < e.to);
        }
    }

    #[test]
    fn relaxing_a_bound_only_adds_edges(inst in instance(25), b in bounds()) {
        let base = edge_set(&inst, &b);
        for r in relaxations(&b) {
            prop_assert!(edge_set(&inst, &r).is_superset(&base), "{r:?}");
            let tight = min_fleet(&inst.tt, &inst.topo, &b).unwrap().fleet_size();
            let loose = min_fleet(&inst.tt, &inst.topo, &r).unwrap().fleet_size();
            prop_assert!(loose <= tight);
        }
    }

    #[test]
    fn fleet_matches_exhaustive_search(inst in instance(9), b in bounds()) {
        let g = build_graph(&inst.tt, &inst.topo, &b).unwrap();
        let cover = min_fleet(&inst.tt, &inst.topo, &b).unwrap();
        prop_assert_eq!(cover.fleet_size(), brute_force_min_cover(&g).unwrap());
    }

    #[test]
    fn cover_is_valid_and_respects_peak(inst in instance(40), b in bounds()) {
        let g = build_graph(&inst.tt, &inst.topo, &b).unwrap();
        let cover = min_fleet(&inst.tt, &inst.topo, &b).unwrap();
        prop_assert!(cover.is_valid_cover_of(&g));
        let mut seen: Vec<usize> = cover.links().iter().flat_map(|l| l.services().to_vec()).collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..inst.tt.len()).collect::<Vec<_>>());
        for link in cover.links() {
            for (i, j) in link.transitions() {
                prop_assert!(oracle_edge(&inst, &b, i, j));
            }
        }
        let o = evaluate(&cover, &inst.tt, &inst.topo).unwrap();
        prop_assert!(o.f1 >= density_profile(&inst.tt).peak());
    }

    #[test]
    fn objectives_match_direct_computation(inst in instance(30), b in bounds()) {
        let cover = min_fleet(&inst.tt, &inst.topo, &b).unwrap();
        let o = evaluate(&cover, &inst.tt, &inst.topo).unwrap();
        let mut f2 = 0u32;
        let mut f3 = 0.0f64;
        let mut lengths = Vec::new();
        let mut courses = Vec::new();
        for link in cover.links() {
            let s = link.services();
            for w in s.windows(2) {
                let (a, c) = (inst.tt.service(w[0]), inst.tt.service(w[1]));
                f2 = f2.max(c.dep_time - a.arr_time);
                f3 = f3.max(inst.km[station(a.destination.as_str())][station(c.origin.as_str())].unwrap());
            }
            lengths.push(s.len() as f64);
            courses.push(s.iter().map(|&i| inst.tt.service(i).run_distance_km).sum::<f64>());
        }
        let sd = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
        };
        prop_assert_eq!(o.f1 as usize, cover.fleet_size());
        prop_assert_eq!(o.f2, f2);
        prop_assert_eq!(o.f3, f3);
        prop_assert!((o.f4 - sd(&lengths)).abs() < 1e-9);
        prop_assert!((o.f5 - sd(&courses)).abs() < 1e-6);
    }

    #[test]
    fn density_counts_running_services(inst in instance(30), t in 0u32..86_400) {
        let dp = density_profile(&inst.tt);
        let live = inst
            .tt
            .services()
            .iter()
            .filter(|s| s.dep_time <= t && t < s.arr_time)
            .count() as u32;
        prop_assert_eq!(dp.counts()[t as usize], live);
        prop_assert!(dp.peak() >= live);
    }
}

#[test]
fn unknown_deadhead_blocks_links() {
    let tt = validate_timetable(vec![
        RawService::new("a", "A", "B", 0, 100, 5.0),
        RawService::new("b", "D", "A", 200, 300, 5.0),
    ])
    .unwrap();
    let topo = validate_topology(
        vec![DistanceRecord::new("A", "B", 5.0), DistanceRecord::new("A", "D", 4.0)],
        &tt,
    )
    .unwrap();
    // B -> D has no record, so even unlimited bounds cannot link a to b.
    let g = build_graph(&tt, &topo, &Bounds::unbounded()).unwrap();
    assert_eq!(g.edge_count(), 0);
    assert_eq!(min_fleet(&tt, &topo, &Bounds::unbounded()).unwrap().fleet_size(), 2);
}

#[test]
fn zero_headway_needs_no_deadhead_or_unlimited_speed() {
    let tt = validate_timetable(vec![
        RawService::new("a", "A", "B", 0, 100, 5.0),
        RawService::new("b", "B", "A", 100, 200, 5.0),
        RawService::new("c", "C", "A", 200, 300, 5.0),
    ])
    .unwrap();
    let topo = validate_topology(
        vec![DistanceRecord::new("A", "B", 5.0), DistanceRecord::new("A", "C", 3.0)],
        &tt,
    )
    .unwrap();
    let slow = Bounds::new(0.0, 600.0, 10.0, 60.0);
    let g = build_graph(&tt, &topo, &slow).unwrap();
    assert!(g.has_edge(0, 1));
    assert!(!g.has_edge(1, 2));
    let fast = Bounds::new(0.0, 600.0, 10.0, f64::INFINITY);
    assert!(build_graph(&tt, &topo, &fast).unwrap().has_edge(1, 2));
}
