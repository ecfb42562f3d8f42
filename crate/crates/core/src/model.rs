//! Timetable and topology domain types, plus the validation that turns raw
//! records into them.
//!
//! Everything here is immutable once constructed. Times are integer seconds
//! since midnight on a single-day axis; distances are kilometers.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

/// Seconds in the planning day. Services never cross midnight.
pub const DAY_LENGTH: u32 = 86_400;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("timetable is empty")]
    EmptyTimetable,
    #[error("duplicate service id `{0}`")]
    DuplicateServiceId(String),
    #[error("service `{service_id}`: departure {dep_time} is not before arrival {arr_time}")]
    TimeOrderViolation {
        service_id: String,
        dep_time: i64,
        arr_time: i64,
    },
    #[error("service `{service_id}`: {field} = {value} is outside the day")]
    OutOfRangeTime {
        service_id: String,
        field: &'static str,
        value: i64,
    },
    #[error("service `{service_id}`: run distance {value} km must be finite and non-negative")]
    InvalidRunDistance { service_id: String, value: f64 },
    #[error("empty {0}")]
    EmptyToken(&'static str),
    #[error("station `{0}` is used by the timetable but absent from the topology")]
    MissingStation(String),
    #[error("distance {a}->{b} is {ab} km but {b}->{a} is {ba} km")]
    AsymmetricDistance { a: String, b: String, ab: f64, ba: f64 },
    #[error("distance {a}->{b} = {km} km must be finite and non-negative")]
    NegativeDistance { a: String, b: String, km: f64 },
    #[error("distance {a}->{a} must be 0, got {km} km")]
    NonZeroDiagonal { a: String, km: f64 },
    #[error("bound {name} = {value} is invalid")]
    InvalidBound { name: &'static str, value: f64 },
    #[error("inadmissible bounds: w_max ({w_max}) must exceed w_min ({w_min})")]
    InadmissibleBounds { w_min: Limit, w_max: Limit },
}

/// A non-negative bound that may be unbounded.
///
/// Serialized as a plain number, or as the string `"inf"` when unbounded.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Limit(f64);

impl Limit {
    pub const INFINITE: Limit = Limit(f64::INFINITY);

    pub fn new(value: f64) -> Limit {
        Limit(value)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0 == f64::INFINITY
    }

    /// `x <= self`, with an unbounded limit admitting everything.
    pub fn admits(self, x: f64) -> bool {
        self.is_infinite() || x <= self.0
    }
}

impl From<f64> for Limit {
    fn from(v: f64) -> Self {
        Limit(v)
    }
}

impl fmt::Display for Limit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl std::str::FromStr for Limit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        match t {
            "inf" | "Inf" | "INF" | "infinity" | "∞" => Ok(Limit::INFINITE),
            _ => {
                let v: f64 = t.parse().map_err(|_| format!("`{s}` is not a number or `inf`"))?;
                if v.is_nan() {
                    return Err(format!("`{s}` is not a number"));
                }
                Ok(Limit(v))
            }
        }
    }
}

impl Serialize for Limit {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.is_infinite() {
            serializer.serialize_str("inf")
        } else if self.0.fract() == 0.0 && self.0.abs() < 9.0e15 {
            serializer.serialize_i64(self.0 as i64)
        } else {
            serializer.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Limit {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct LimitVisitor;

        impl Visitor<'_> for LimitVisitor {
            type Value = Limit;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or the string \"inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Limit, E> {
                Ok(Limit(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Limit, E> {
                Ok(Limit(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Limit, E> {
                Ok(Limit(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Limit, E> {
                v.parse().map_err(E::custom)
            }
        }

        deserializer.deserialize_any(LimitVisitor)
    }
}

/// The four decision bounds that shape a feasibility graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    /// Minimum headway between consecutive services of a rake, seconds.
    pub w_min: Limit,
    /// Maximum headway, seconds.
    pub w_max: Limit,
    /// Maximum deadhead distance, km.
    pub d_max: Limit,
    /// Maximum average deadhead speed, km/h.
    pub v_avg_max: Limit,
}

impl Bounds {
    pub fn new(w_min: f64, w_max: f64, d_max: f64, v_avg_max: f64) -> Bounds {
        Bounds {
            w_min: Limit(w_min),
            w_max: Limit(w_max),
            d_max: Limit(d_max),
            v_avg_max: Limit(v_avg_max),
        }
    }

    /// All four bounds unbounded except `w_min = 0`.
    pub fn unbounded() -> Bounds {
        Bounds::new(0.0, f64::INFINITY, f64::INFINITY, f64::INFINITY)
    }

    pub fn is_admissible(&self) -> bool {
        self.w_max > self.w_min
    }

    /// Checks value ranges and admissibility.
    pub fn validate(&self) -> Result<(), ModelError> {
        let non_negative = [
            ("w_min", self.w_min),
            ("w_max", self.w_max),
            ("d_max", self.d_max),
        ];
        for (name, l) in non_negative {
            if l.0.is_nan() || l.0 < 0.0 {
                return Err(ModelError::InvalidBound { name, value: l.0 });
            }
        }
        if self.v_avg_max.0.is_nan() || self.v_avg_max.0 <= 0.0 {
            return Err(ModelError::InvalidBound {
                name: "v_avg_max",
                value: self.v_avg_max.0,
            });
        }
        if !self.is_admissible() {
            return Err(ModelError::InadmissibleBounds {
                w_min: self.w_min,
                w_max: self.w_max,
            });
        }
        Ok(())
    }
}

impl fmt::Display for Bounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "w_min={} w_max={} d_max={} v_avg_max={}",
            self.w_min, self.w_max, self.d_max, self.v_avg_max
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StationId(String);

impl StationId {
    pub fn new(id: impl Into<String>) -> Result<StationId, ModelError> {
        let id = id.into();
        if id.trim().is_empty() {
            return Err(ModelError::EmptyToken("station id"));
        }
        Ok(StationId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A service record before validation. Times are signed so that negative
/// input can be reported rather than wrapped.
#[derive(Debug, Clone, PartialEq)]
pub struct RawService {
    pub service_id: String,
    pub origin: String,
    pub destination: String,
    pub dep_time: i64,
    pub arr_time: i64,
    pub run_distance_km: f64,
}

impl RawService {
    pub fn new(
        service_id: &str,
        origin: &str,
        destination: &str,
        dep_time: i64,
        arr_time: i64,
        run_distance_km: f64,
    ) -> RawService {
        RawService {
            service_id: service_id.to_owned(),
            origin: origin.to_owned(),
            destination: destination.to_owned(),
            dep_time,
            arr_time,
            run_distance_km,
        }
    }
}

/// One scheduled train run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Service {
    pub service_id: String,
    pub origin: StationId,
    pub destination: StationId,
    pub dep_time: u32,
    pub arr_time: u32,
    pub run_distance_km: f64,
}

impl Service {
    pub fn duration(&self) -> u32 {
        self.arr_time - self.dep_time
    }
}

/// A validated timetable, ordered by `(dep_time, service_id)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TimetableRepr", into = "TimetableRepr")]
pub struct Timetable {
    services: Vec<Service>,
}

#[derive(Serialize, Deserialize)]
struct TimetableRepr {
    day_length: u32,
    services: Vec<Service>,
}

impl TryFrom<TimetableRepr> for Timetable {
    type Error = ModelError;

    fn try_from(repr: TimetableRepr) -> Result<Self, Self::Error> {
        let raw = repr
            .services
            .into_iter()
            .map(|s| RawService {
                service_id: s.service_id,
                origin: s.origin.0,
                destination: s.destination.0,
                dep_time: s.dep_time as i64,
                arr_time: s.arr_time as i64,
                run_distance_km: s.run_distance_km,
            })
            .collect();
        validate_timetable(raw)
    }
}

impl From<Timetable> for TimetableRepr {
    fn from(tt: Timetable) -> Self {
        TimetableRepr {
            day_length: DAY_LENGTH,
            services: tt.services,
        }
    }
}

impl Timetable {
    pub fn services(&self) -> &[Service] {
        &self.services
    }

    pub fn len(&self) -> usize {
        self.services.len()
    }

    pub fn is_empty(&self) -> bool {
        self.services.is_empty()
    }

    pub fn service(&self, index: usize) -> &Service {
        &self.services[index]
    }

    pub fn index_of(&self, service_id: &str) -> Option<usize> {
        self.services.iter().position(|s| s.service_id == service_id)
    }

    /// Stations referenced as origin or destination, sorted.
    pub fn stations(&self) -> BTreeSet<&StationId> {
        self.services
            .iter()
            .flat_map(|s| [&s.origin, &s.destination])
            .collect()
    }
}

pub fn validate_timetable(raw_services: Vec<RawService>) -> Result<Timetable, ModelError> {
    if raw_services.is_empty() {
        return Err(ModelError::EmptyTimetable);
    }
    let mut seen = HashSet::with_capacity(raw_services.len());
    let mut services = Vec::with_capacity(raw_services.len());
    for raw in raw_services {
        if raw.service_id.trim().is_empty() {
            return Err(ModelError::EmptyToken("service id"));
        }
        if !seen.insert(raw.service_id.clone()) {
            return Err(ModelError::DuplicateServiceId(raw.service_id));
        }
        if !(0..DAY_LENGTH as i64).contains(&raw.dep_time) {
            return Err(ModelError::OutOfRangeTime {
                service_id: raw.service_id,
                field: "dep_time",
                value: raw.dep_time,
            });
        }
        if raw.arr_time <= 0 || raw.arr_time > DAY_LENGTH as i64 {
            return Err(ModelError::OutOfRangeTime {
                service_id: raw.service_id,
                field: "arr_time",
                value: raw.arr_time,
            });
        }
        if raw.dep_time >= raw.arr_time {
            return Err(ModelError::TimeOrderViolation {
                service_id: raw.service_id,
                dep_time: raw.dep_time,
                arr_time: raw.arr_time,
            });
        }
        if !raw.run_distance_km.is_finite() || raw.run_distance_km < 0.0 {
            return Err(ModelError::InvalidRunDistance {
                service_id: raw.service_id,
                value: raw.run_distance_km,
            });
        }
        services.push(Service {
            origin: StationId::new(raw.origin)?,
            destination: StationId::new(raw.destination)?,
            dep_time: raw.dep_time as u32,
            arr_time: raw.arr_time as u32,
            run_distance_km: raw.run_distance_km,
            service_id: raw.service_id,
        });
    }
    services.sort_by(|a, b| {
        a.dep_time
            .cmp(&b.dep_time)
            .then_with(|| a.service_id.cmp(&b.service_id))
    });
    Ok(Timetable { services })
}

/// One row of a station-pair distance table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceRecord {
    pub station_a: String,
    pub station_b: String,
    pub distance_km: f64,
}

impl DistanceRecord {
    pub fn new(a: &str, b: &str, km: f64) -> DistanceRecord {
        DistanceRecord {
            station_a: a.to_owned(),
            station_b: b.to_owned(),
            distance_km: km,
        }
    }
}

/// Symmetric deadhead distances between stations. Pairs without a record
/// are unreachable (infinite distance).
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    stations: Vec<StationId>,
    index: HashMap<StationId, usize>,
    /// Row-major `stations.len()^2` matrix, `f64::INFINITY` when unknown.
    km: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct TopologyRepr {
    stations: Vec<StationId>,
    distances: Vec<DistanceRecord>,
}

impl Serialize for Topology {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        TopologyRepr {
            stations: self.stations.clone(),
            distances: self.records(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Topology {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = TopologyRepr::deserialize(deserializer)?;
        Topology::from_parts(repr.stations, repr.distances).map_err(de::Error::custom)
    }
}

impl Topology {
    /// Builds a topology from explicit stations and distance records,
    /// without reference to a timetable.
    pub fn from_parts(
        stations: impl IntoIterator<Item = StationId>,
        records: Vec<DistanceRecord>,
    ) -> Result<Topology, ModelError> {
        let mut set: BTreeSet<StationId> = stations.into_iter().collect();
        let mut pairs: BTreeMap<(StationId, StationId), f64> = BTreeMap::new();
        for r in records {
            let a = StationId::new(r.station_a)?;
            let b = StationId::new(r.station_b)?;
            if !r.distance_km.is_finite() || r.distance_km < 0.0 {
                return Err(ModelError::NegativeDistance {
                    a: a.0,
                    b: b.0,
                    km: r.distance_km,
                });
            }
            set.insert(a.clone());
            set.insert(b.clone());
            if a == b {
                if r.distance_km != 0.0 {
                    return Err(ModelError::NonZeroDiagonal {
                        a: a.0,
                        km: r.distance_km,
                    });
                }
                continue;
            }
            // Stored under the ordered key; the reverse direction must agree.
            let key = if a < b { (a, b) } else { (b, a) };
            match pairs.get(&key) {
                Some(&existing) if existing != r.distance_km => {
                    return Err(ModelError::AsymmetricDistance {
                        a: key.0 .0.clone(),
                        b: key.1 .0.clone(),
                        ab: existing,
                        ba: r.distance_km,
                    })
                }
                _ => {
                    pairs.insert(key, r.distance_km);
                }
            }
        }

        let stations: Vec<StationId> = set.into_iter().collect();
        let index: HashMap<StationId, usize> = stations
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        let n = stations.len();
        let mut km = vec![f64::INFINITY; n * n];
        for i in 0..n {
            km[i * n + i] = 0.0;
        }
        for ((a, b), d) in pairs {
            let (i, j) = (index[&a], index[&b]);
            km[i * n + j] = d;
            km[j * n + i] = d;
        }
        Ok(Topology {
            stations,
            index,
            km,
        })
    }

    pub fn stations(&self) -> &[StationId] {
        &self.stations
    }

    pub fn station_index(&self, id: &StationId) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Distance by station index; `f64::INFINITY` when no record exists.
    pub fn km_by_index(&self, a: usize, b: usize) -> f64 {
        self.km[a * self.stations.len() + b]
    }

    pub fn deadhead_km(&self, a: &StationId, b: &StationId) -> f64 {
        if a == b {
            return 0.0;
        }
        match (self.station_index(a), self.station_index(b)) {
            (Some(i), Some(j)) => self.km_by_index(i, j),
            _ => f64::INFINITY,
        }
    }

    /// Finite off-diagonal distances as canonical `a < b` records.
    pub fn records(&self) -> Vec<DistanceRecord> {
        let n = self.stations.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let d = self.km[i * n + j];
                if d.is_finite() {
                    out.push(DistanceRecord {
                        station_a: self.stations[i].0.clone(),
                        station_b: self.stations[j].0.clone(),
                        distance_km: d,
                    });
                }
            }
        }
        out
    }
}

/// Builds the topology and checks that it covers every timetable station.
pub fn validate_topology(
    raw: Vec<DistanceRecord>,
    timetable: &Timetable,
) -> Result<Topology, ModelError> {
    let topo = Topology::from_parts(std::iter::empty(), raw)?;
    for station in timetable.stations() {
        if topo.station_index(station).is_none() {
            return Err(ModelError::MissingStation(station.0.clone()));
        }
    }
    Ok(topo)
}
