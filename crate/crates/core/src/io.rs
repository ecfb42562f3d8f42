//! CSV readers and writers for timetables and topologies.

use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::model::{
    validate_timetable, validate_topology, DistanceRecord, ModelError, RawService, Timetable,
    Topology,
};

pub const TIMETABLE_HEADER: [&str; 6] = [
    "service_id",
    "origin",
    "destination",
    "dep_time",
    "arr_time",
    "run_distance_km",
];
pub const TOPOLOGY_HEADER: [&str; 3] = ["station_a", "station_b", "distance_km"];

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{what}: expected header `{expected}`, found `{found}`")]
    Header {
        what: &'static str,
        expected: String,
        found: String,
    },
    #[error("{what} line {line}: {message}")]
    Row {
        what: &'static str,
        line: u64,
        message: String,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl IoError {
    /// True when the input itself is wrong (as opposed to an I/O failure).
    pub fn is_validation(&self) -> bool {
        !matches!(self, IoError::Io(_))
    }
}

/// Parses `HH:MM:SS` or a plain integer number of seconds. Fractional
/// seconds are rejected.
pub fn parse_time(s: &str) -> Result<i64, String> {
    let t = s.trim();
    if t.contains(':') {
        let parts: Vec<&str> = t.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("`{s}` is not HH:MM:SS"));
        }
        let mut fields = [0i64; 3];
        for (slot, p) in fields.iter_mut().zip(&parts) {
            if p.is_empty() || !p.bytes().all(|b| b.is_ascii_digit()) {
                return Err(format!("`{s}` is not HH:MM:SS"));
            }
            *slot = p.parse().map_err(|_| format!("`{s}` is not HH:MM:SS"))?;
        }
        let [h, m, sec] = fields;
        if m >= 60 || sec >= 60 {
            return Err(format!("`{s}` has minutes or seconds out of range"));
        }
        Ok(h * 3600 + m * 60 + sec)
    } else {
        t.parse::<i64>()
            .map_err(|_| format!("`{s}` is not an integer number of seconds or HH:MM:SS"))
    }
}

pub fn format_hms(seconds: u32) -> String {
    format!(
        "{:02}:{:02}:{:02}",
        seconds / 3600,
        (seconds / 60) % 60,
        seconds % 60
    )
}

fn check_header(
    what: &'static str,
    expected: &[&str],
    found: &csv::StringRecord,
) -> Result<(), IoError> {
    let found: Vec<&str> = found.iter().map(str::trim).collect();
    if found != expected {
        return Err(IoError::Header {
            what,
            expected: expected.join(","),
            found: found.join(","),
        });
    }
    Ok(())
}

fn parse_km(what: &'static str, line: u64, field: &str, s: &str) -> Result<f64, IoError> {
    s.trim().parse::<f64>().map_err(|_| IoError::Row {
        what,
        line,
        message: format!("{field} `{s}` is not a number"),
    })
}

pub fn read_raw_services(reader: impl Read) -> Result<Vec<RawService>, IoError> {
    const WHAT: &str = "timetable";
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    check_header(WHAT, &TIMETABLE_HEADER, rdr.headers()?)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let time = |idx: usize, field: &str| {
            parse_time(&rec[idx]).map_err(|message| IoError::Row {
                what: WHAT,
                line,
                message: format!("{field}: {message}"),
            })
        };
        out.push(RawService {
            service_id: rec[0].to_owned(),
            origin: rec[1].to_owned(),
            destination: rec[2].to_owned(),
            dep_time: time(3, "dep_time")?,
            arr_time: time(4, "arr_time")?,
            run_distance_km: parse_km(WHAT, line, "run_distance_km", &rec[5])?,
        });
    }
    Ok(out)
}

pub fn read_timetable(reader: impl Read) -> Result<Timetable, IoError> {
    Ok(validate_timetable(read_raw_services(reader)?)?)
}

pub fn read_distance_records(reader: impl Read) -> Result<Vec<DistanceRecord>, IoError> {
    const WHAT: &str = "topology";
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    check_header(WHAT, &TOPOLOGY_HEADER, rdr.headers()?)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        out.push(DistanceRecord {
            station_a: rec[0].to_owned(),
            station_b: rec[1].to_owned(),
            distance_km: parse_km(WHAT, line, "distance_km", &rec[2])?,
        });
    }
    Ok(out)
}

pub fn read_topology(reader: impl Read, timetable: &Timetable) -> Result<Topology, IoError> {
    Ok(validate_topology(read_distance_records(reader)?, timetable)?)
}

/// Loads and validates a timetable/topology pair from CSV files.
pub fn load_dataset(
    timetable: impl AsRef<Path>,
    topology: impl AsRef<Path>,
) -> Result<(Timetable, Topology), IoError> {
    let tt = read_timetable(std::fs::File::open(timetable)?)?;
    let topo = read_topology(std::fs::File::open(topology)?, &tt)?;
    Ok((tt, topo))
}

/// Writes the canonical timetable CSV (times as integer seconds).
pub fn write_timetable(tt: &Timetable, writer: impl Write) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TIMETABLE_HEADER)?;
    for s in tt.services() {
        w.write_record([
            s.service_id.as_str(),
            s.origin.as_str(),
            s.destination.as_str(),
            &s.dep_time.to_string(),
            &s.arr_time.to_string(),
            &s.run_distance_km.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_topology(topo: &Topology, writer: impl Write) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TOPOLOGY_HEADER)?;
    for r in topo.records() {
        w.write_record([
            r.station_a.as_str(),
            r.station_b.as_str(),
            &r.distance_km.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
