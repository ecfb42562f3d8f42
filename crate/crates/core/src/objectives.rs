//! Operational objectives of a rake-link plan and the live-service density
//! profile that lower-bounds any fleet.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Timetable, Topology, DAY_LENGTH};
use crate::pathcover::CoverSolution;

pub const OBJECTIVE_NAMES: [&str; 5] = ["f1", "f2", "f3", "f4", "f5"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObjectiveError {
    #[error("invalid cover: {0}")]
    InvalidCover(String),
    #[error("expected 5 comma-separated objective values, got `{0}`")]
    Parse(String),
}

/// Five minimized objectives, in this field order on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    /// Fleet size.
    pub f1: u32,
    /// Largest headway between consecutive services of one rake, seconds.
    pub f2: u32,
    /// Largest deadhead distance, km.
    pub f3: f64,
    /// Population standard deviation of link lengths (services per rake).
    pub f4: f64,
    /// Population standard deviation of revenue km per rake.
    pub f5: f64,
}

impl ObjectiveVector {
    pub fn to_array(&self) -> [f64; 5] {
        [
            f64::from(self.f1),
            f64::from(self.f2),
            self.f3,
            self.f4,
            self.f5,
        ]
    }

    /// Parses `f1,f2,f3,f4,f5`. `f1` and `f2` must be whole numbers.
    pub fn parse_csv(s: &str) -> Result<ObjectiveVector, ObjectiveError> {
        let err = || ObjectiveError::Parse(s.to_owned());
        let vals: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| err())?;
        let [f1, f2, f3, f4, f5]: [f64; 5] = vals.try_into().map_err(|_| err())?;
        let whole = |x: f64| x >= 0.0 && x.fract() == 0.0 && x <= f64::from(u32::MAX);
        if !whole(f1) || !whole(f2) || [f3, f4, f5].iter().any(|x| !x.is_finite()) {
            return Err(err());
        }
        Ok(ObjectiveVector {
            f1: f1 as u32,
            f2: f2 as u32,
            f3,
            f4,
            f5,
        })
    }
}

/// Population standard deviation. Values are summed in sorted order so the
/// result does not depend on the order of the input.
pub fn population_std_dev(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let mut sq: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
    sq.sort_by(f64::total_cmp);
    (sq.iter().sum::<f64>() / n).sqrt()
}

pub fn evaluate(
    sol: &CoverSolution,
    tt: &Timetable,
    topo: &Topology,
) -> Result<ObjectiveVector, ObjectiveError> {
    let n = tt.len();
    let mut seen = vec![false; n];
    let mut max_headway = 0u32;
    let mut max_deadhead = 0.0f64;
    let mut lengths = Vec::with_capacity(sol.fleet_size());
    let mut courses = Vec::with_capacity(sol.fleet_size());

    for (r, link) in sol.links().iter().enumerate() {
        if link.is_empty() {
            return Err(ObjectiveError::InvalidCover(format!("link {r} is empty")));
        }
        for &i in link.services() {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return Err(ObjectiveError::InvalidCover(format!(
                    "service index {i} is out of range or covered twice"
                )));
            }
        }
        for (i, j) in link.transitions() {
            let (si, sj) = (tt.service(i), tt.service(j));
            if sj.dep_time < si.arr_time {
                return Err(ObjectiveError::InvalidCover(format!(
                    "`{}` departs before `{}` arrives",
                    sj.service_id, si.service_id
                )));
            }
            let d = topo.deadhead_km(&si.destination, &sj.origin);
            if !d.is_finite() {
                return Err(ObjectiveError::InvalidCover(format!(
                    "no deadhead route from `{}` to `{}`",
                    si.destination, sj.origin
                )));
            }
            max_headway = max_headway.max(sj.dep_time - si.arr_time);
            max_deadhead = max_deadhead.max(d);
        }
        lengths.push(link.len() as f64);
        // Revenue distance only; deadheads are excluded.
        courses.push(
            link.services()
                .iter()
                .map(|&i| tt.service(i).run_distance_km)
                .sum::<f64>(),
        );
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(ObjectiveError::InvalidCover(format!(
            "service `{}` is not covered",
            tt.service(missing).service_id
        )));
    }
    Ok(ObjectiveVector {
        f1: sol.fleet_size() as u32,
        f2: max_headway,
        f3: max_deadhead,
        f4: population_std_dev(&lengths),
        f5: population_std_dev(&courses),
    })
}

/// Number of services in motion during each second of the day.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensityProfile {
    counts: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DensityRun {
    pub start: u32,
    /// Exclusive.
    pub end: u32,
    pub count: u32,
}

impl DensityProfile {
    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn peak(&self) -> u32 {
        peak_density(self)
    }

    /// Maximal runs of equal count covering the whole day.
    pub fn runs(&self) -> Vec<DensityRun> {
        let mut runs: Vec<DensityRun> = Vec::new();
        for (t, &c) in self.counts.iter().enumerate() {
            match runs.last_mut() {
                Some(r) if r.count == c => r.end = t as u32 + 1,
                _ => runs.push(DensityRun {
                    start: t as u32,
                    end: t as u32 + 1,
                    count: c,
                }),
            }
        }
        runs
    }

    /// `second,count`, one row per second.
    pub fn write_csv(&self, writer: impl Write) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["second", "count"])?;
        for (t, c) in self.counts.iter().enumerate() {
            w.write_record([t.to_string(), c.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Run-length encoded form: `start_second,end_second,count`.
    pub fn write_rle_csv(&self, writer: impl Write) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["start_second", "end_second", "count"])?;
        for r in self.runs() {
            w.write_record([r.start.to_string(), r.end.to_string(), r.count.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Live count per second over half-open service intervals `[dep, arr)`.
pub fn density_profile(tt: &Timetable) -> DensityProfile {
    let day = DAY_LENGTH as usize;
    let mut delta = vec![0i64; day + 1];
    for s in tt.services() {
        delta[s.dep_time as usize] += 1;
        delta[s.arr_time as usize] -= 1;
    }
    let mut live = 0i64;
    let counts = delta[..day]
        .iter()
        .map(|d| {
            live += d;
            live as u32
        })
        .collect();
    DensityProfile { counts }
}

pub fn peak_density(dp: &DensityProfile) -> u32 {
    dp.counts.iter().copied().max().unwrap_or(0)
}
