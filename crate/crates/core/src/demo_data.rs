//! Deterministic synthetic suburban networks.
//!
//! The generator lays out a linear trunk corridor with two short branches
//! and runs shuttles between a handful of termini. Departures follow a
//! mixture of an all-day base load and morning/evening rush-hour bumps, so
//! the live-service density profile is bimodal.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    validate_timetable, validate_topology, Bounds, DistanceRecord, RawService, Timetable, Topology,
    DAY_LENGTH,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeneratorError {
    #[error("infeasible generator config: {0}")]
    InfeasibleConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    /// Stations on the trunk line (branch termini come on top).
    pub station_count: usize,
    pub corridor_length_km: f64,
    pub services_target: usize,
    /// Weight of the morning rush bump relative to the all-day base load.
    pub morning_peak: f64,
    pub evening_peak: f64,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            station_count: 24,
            corridor_length_km: 60.0,
            services_target: 887,
            morning_peak: 1.2,
            evening_peak: 1.1,
            seed: 1,
        }
    }
}

impl GeneratorConfig {
    pub fn with_seed(seed: u64) -> Self {
        GeneratorConfig {
            seed,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<(), GeneratorError> {
        let fail = |m: &str| Err(GeneratorError::InfeasibleConfig(m.to_owned()));
        if self.station_count < 3 {
            return fail("station_count must be at least 3");
        }
        if !(self.corridor_length_km.is_finite() && self.corridor_length_km > 0.0) {
            return fail("corridor_length_km must be positive");
        }
        if self.corridor_length_km > 200.0 {
            // Longest run must fit between the first and last departure.
            return fail("corridor_length_km must be at most 200");
        }
        if self.services_target == 0 {
            return fail("services_target must be positive");
        }
        for (name, w) in [("morning_peak", self.morning_peak), ("evening_peak", self.evening_peak)] {
            if !(w.is_finite() && w >= 0.0) {
                return fail(&format!("{name} must be finite and non-negative"));
            }
        }
        Ok(())
    }
}

const AVG_SPEED_KMH: f64 = 42.0;
const FIRST_DEPARTURE: f64 = 4.0 * 3600.0;
const LAST_ARRIVAL: f64 = 23.75 * 3600.0;

struct Station {
    name: String,
    /// Position along the trunk where the station (or its branch) attaches.
    attach_km: f64,
    /// Extra distance along a branch, 0 on the trunk.
    branch_km: f64,
}

fn distance(a: &Station, b: &Station) -> f64 {
    if a.name == b.name {
        0.0
    } else {
        (a.attach_km - b.attach_km).abs() + a.branch_km + b.branch_km
    }
}

fn round_km(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

pub fn generate(cfg: &GeneratorConfig) -> Result<(Timetable, Topology), GeneratorError> {
    cfg.validate()?;
    let k = cfg.station_count;
    let step = cfg.corridor_length_km / (k - 1) as f64;
    let mut stations: Vec<Station> = (0..k)
        .map(|i| Station {
            name: format!("ST{i:02}"),
            attach_km: round_km(step * i as f64),
            branch_km: 0.0,
        })
        .collect();
    let (j1, j2) = (k / 3, (2 * k) / 3);
    stations.push(Station {
        name: "BR1".into(),
        attach_km: stations[j1].attach_km,
        branch_km: round_km(0.15 * cfg.corridor_length_km),
    });
    stations.push(Station {
        name: "BR2".into(),
        attach_km: stations[j2].attach_km,
        branch_km: round_km(0.2 * cfg.corridor_length_km),
    });

    let (main, mid, outer, br1, br2) = (0, k / 2, k - 1, k, k + 1);
    let routes: [(usize, usize, f64); 5] = [
        (main, outer, 0.35),
        (main, mid, 0.2),
        (main, br1, 0.15),
        (main, br2, 0.15),
        (mid, outer, 0.15),
    ];
    let route_total: f64 = routes.iter().map(|r| r.2).sum();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let morning = Normal::new(8.75 * 3600.0, 3600.0).expect("valid normal");
    let evening = Normal::new(18.5 * 3600.0, 1.1 * 3600.0).expect("valid normal");
    let mix_total = 1.0 + cfg.morning_peak + cfg.evening_peak;

    let mut raw = Vec::with_capacity(cfg.services_target);
    for n in 0..cfg.services_target {
        let mut pick = rng.random::<f64>() * route_total;
        let (a, b, _) = *routes
            .iter()
            .find(|r| {
                pick -= r.2;
                pick < 0.0
            })
            .unwrap_or(&routes[routes.len() - 1]);
        let (origin, dest) = if rng.random::<bool>() { (a, b) } else { (b, a) };
        let km = round_km(distance(&stations[origin], &stations[dest]));
        let run_s = ((km / AVG_SPEED_KMH * 3600.0 + 120.0) / 30.0).ceil() * 30.0;

        let u = rng.random::<f64>() * mix_total;
        let t = if u < 1.0 {
            rng.random_range(FIRST_DEPARTURE..LAST_ARRIVAL)
        } else if u < 1.0 + cfg.morning_peak {
            morning.sample(&mut rng)
        } else {
            evening.sample(&mut rng)
        };
        let dep = ((t.clamp(FIRST_DEPARTURE, LAST_ARRIVAL - run_s)) / 30.0).round() * 30.0;
        let dep = dep as i64;
        let arr = dep + run_s as i64;
        debug_assert!(arr <= i64::from(DAY_LENGTH));
        raw.push(RawService {
            service_id: format!("S{:04}", n + 1),
            origin: stations[origin].name.clone(),
            destination: stations[dest].name.clone(),
            dep_time: dep,
            arr_time: arr,
            run_distance_km: km,
        });
    }

    let tt = validate_timetable(raw).map_err(|e| GeneratorError::InfeasibleConfig(e.to_string()))?;
    let mut records = Vec::new();
    for (i, a) in stations.iter().enumerate() {
        for b in &stations[i + 1..] {
            records.push(DistanceRecord::new(&a.name, &b.name, round_km(distance(a, b))));
        }
    }
    let topo = validate_topology(records, &tt)
        .map_err(|e| GeneratorError::InfeasibleConfig(e.to_string()))?;
    Ok((tt, topo))
}

/// A six-service timetable whose feasibility graph under [`six_service_bounds`]
/// has exactly the edges 1->2, 1->4, 3->4, 3->6, 5->6 (service ids "1".."6",
/// which are also their timetable order).
pub fn six_service_instance() -> (Timetable, Topology, Bounds) {
    let raw = vec![
        RawService::new("1", "C", "A", 500, 1000, 15.0),
        RawService::new("2", "A", "B", 1500, 1900, 20.0),
        RawService::new("3", "C", "A", 1550, 1600, 15.0),
        RawService::new("4", "A", "B", 2000, 2400, 20.0),
        RawService::new("5", "C", "A", 2050, 2100, 15.0),
        RawService::new("6", "A", "B", 4700, 5100, 20.0),
    ];
    let tt = validate_timetable(raw).expect("fixture timetable is valid");
    let topo = validate_topology(
        vec![
            DistanceRecord::new("A", "B", 20.0),
            DistanceRecord::new("A", "C", 15.0),
            DistanceRecord::new("B", "C", 35.0),
        ],
        &tt,
    )
    .expect("fixture topology is valid");
    (tt, topo, six_service_bounds())
}

pub fn six_service_bounds() -> Bounds {
    Bounds::new(0.0, 3600.0, 0.0, f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{write_timetable, write_topology};
    use crate::objectives::density_profile;

    fn bytes(tt: &Timetable, topo: &Topology) -> (Vec<u8>, Vec<u8>) {
        let (mut a, mut b) = (Vec::new(), Vec::new());
        write_timetable(tt, &mut a).unwrap();
        write_topology(topo, &mut b).unwrap();
        (a, b)
    }

    #[test]
    fn deterministic_per_seed() {
        let (t1, g1) = generate(&GeneratorConfig::with_seed(1)).unwrap();
        let (t2, g2) = generate(&GeneratorConfig::with_seed(1)).unwrap();
        assert_eq!(bytes(&t1, &g1), bytes(&t2, &g2));
        let (t3, g3) = generate(&GeneratorConfig::with_seed(2)).unwrap();
        assert_ne!(bytes(&t1, &g1).0, bytes(&t3, &g3).0);
    }

    #[test]
    fn exact_service_count() {
        for n in [1, 10, 887] {
            let cfg = GeneratorConfig {
                services_target: n,
                ..Default::default()
            };
            assert_eq!(generate(&cfg).unwrap().0.len(), n);
        }
    }

    /// Half-hour bin averages; a rush-hour maximum must stand clear of the
    /// midday trough on each side.
    #[test]
    fn density_is_bimodal() {
        for seed in 1..=5 {
            let (tt, _) = generate(&GeneratorConfig::with_seed(seed)).unwrap();
            let dp = density_profile(&tt);
            let bins: Vec<f64> = dp
                .counts()
                .chunks(1800)
                .map(|c| c.iter().map(|&x| f64::from(x)).sum::<f64>() / c.len() as f64)
                .collect();
            let window_max = |lo: usize, hi: usize| bins[lo..hi].iter().cloned().fold(0.0, f64::max);
            let window_min =
                |lo: usize, hi: usize| bins[lo..hi].iter().cloned().fold(f64::INFINITY, f64::min);
            let am = window_max(12, 24); // 06:00-12:00
            let pm = window_max(32, 44); // 16:00-22:00
            let trough = window_min(24, 32); // 12:00-16:00
            assert!(am > 1.3 * trough && pm > 1.3 * trough, "seed {seed}: {am} {trough} {pm}");
        }
    }

    #[test]
    fn rejects_bad_configs() {
        for cfg in [
            GeneratorConfig { station_count: 0, ..Default::default() },
            GeneratorConfig { services_target: 0, ..Default::default() },
            GeneratorConfig { corridor_length_km: -1.0, ..Default::default() },
            GeneratorConfig { morning_peak: f64::NAN, ..Default::default() },
        ] {
            assert!(matches!(generate(&cfg), Err(GeneratorError::InfeasibleConfig(_))));
        }
    }

    #[test]
    fn distances_follow_positions() {
        let (_, topo) = generate(&GeneratorConfig::default()).unwrap();
        let id = |s: &str| crate::model::StationId::new(s).unwrap();
        assert_eq!(topo.deadhead_km(&id("ST00"), &id("ST23")), 60.0);
        // Branch 1 attaches at ST08 (8 / 23 of 60 km), 9 km long.
        let expected = round_km(round_km(60.0 / 23.0 * 8.0) + 9.0);
        assert_eq!(topo.deadhead_km(&id("ST00"), &id("BR1")), expected);
    }
}
