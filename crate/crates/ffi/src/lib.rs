//! C ABI for the rakelink solver.
//!
//! Datasets and cover solutions are opaque handles created and released by
//! this library. Fallible calls return an [`RlStatus`]; the message for the
//! most recent failure on the calling thread is available from
//! [`rl_last_error_message`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::fs::File;
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use rakelink::io::{read_timetable, read_topology, IoError};
use rakelink::model::ModelError;
use rakelink::pathcover::CoverError;
use rakelink::{density_profile, evaluate, min_fleet, Bounds, CoverSolution, Timetable, Topology};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Timetable or topology failed validation.
    InvalidInput = 3,
    /// A bound is NaN or negative.
    InvalidBounds = 4,
    /// `w_max <= w_min` or `w_min` is infinite.
    InadmissibleBounds = 5,
    Io = 6,
    OutOfRange = 7,
    Internal = 8,
}

/// Link bounds. Use `INFINITY` for an absent limit.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RlBounds {
    pub w_min: f64,
    pub w_max: f64,
    pub d_max: f64,
    pub v_avg_max: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RlObjectives {
    pub f1: u32,
    pub f2: u32,
    pub f3: f64,
    pub f4: f64,
    pub f5: f64,
}

/// A validated timetable and topology.
pub struct RlDataset {
    timetable: Timetable,
    topology: Topology,
    service_ids: Vec<CString>,
}

/// A minimum rake-link cover and its objectives.
pub struct RlCover {
    solution: CoverSolution,
    objectives: RlObjectives,
    json: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn fail(status: RlStatus, msg: impl Into<String>) -> RlStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> RlStatus) -> RlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == RlStatus::Ok {
                set_error("");
            }
            s
        }
        Err(_) => fail(RlStatus::Internal, "internal panic"),
    }
}

fn status_of_io(e: &IoError) -> RlStatus {
    if e.is_validation() {
        RlStatus::InvalidInput
    } else {
        RlStatus::Io
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, RlStatus> {
    if p.is_null() {
        return Err(fail(RlStatus::NullPointer, format!("{what} is NULL")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(RlStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

fn make_dataset(timetable: Timetable, topology: Topology) -> Box<RlDataset> {
    let service_ids = timetable
        .services()
        .iter()
        .map(|s| CString::new(s.service_id.replace('\0', " ")).unwrap_or_default())
        .collect();
    Box::new(RlDataset {
        timetable,
        topology,
        service_ids,
    })
}

fn load(
    tt: impl std::io::Read,
    topo: impl std::io::Read,
    out: *mut *mut RlDataset,
) -> RlStatus {
    let timetable = match read_timetable(tt) {
        Ok(t) => t,
        Err(e) => return fail(status_of_io(&e), format!("timetable: {e}")),
    };
    let topology = match read_topology(topo, &timetable) {
        Ok(t) => t,
        Err(e) => return fail(status_of_io(&e), format!("topology: {e}")),
    };
    unsafe { *out = Box::into_raw(make_dataset(timetable, topology)) };
    RlStatus::Ok
}

/// Parses a dataset from CSV text. On success `*out` receives a handle to be
/// released with [`rl_dataset_free`].
#[no_mangle]
pub unsafe extern "C" fn rl_dataset_from_csv(
    timetable_csv: *const c_char,
    topology_csv: *const c_char,
    out: *mut *mut RlDataset,
) -> RlStatus {
    guard(|| {
        if out.is_null() {
            return fail(RlStatus::NullPointer, "out is NULL");
        }
        *out = ptr::null_mut();
        let tt = match str_arg(timetable_csv, "timetable_csv") {
            Ok(s) => s,
            Err(s) => return s,
        };
        let topo = match str_arg(topology_csv, "topology_csv") {
            Ok(s) => s,
            Err(s) => return s,
        };
        load(tt.as_bytes(), topo.as_bytes(), out)
    })
}

/// Reads a dataset from two CSV files.
#[no_mangle]
pub unsafe extern "C" fn rl_dataset_open(
    timetable_path: *const c_char,
    topology_path: *const c_char,
    out: *mut *mut RlDataset,
) -> RlStatus {
    guard(|| {
        if out.is_null() {
            return fail(RlStatus::NullPointer, "out is NULL");
        }
        *out = ptr::null_mut();
        let mut files = Vec::with_capacity(2);
        for (p, what) in [(timetable_path, "timetable_path"), (topology_path, "topology_path")] {
            let path = match str_arg(p, what) {
                Ok(s) => s,
                Err(s) => return s,
            };
            match File::open(path) {
                Ok(f) => files.push(f),
                Err(e) => return fail(RlStatus::Io, format!("{path}: {e}")),
            }
        }
        let topo = files.pop().unwrap();
        let tt = files.pop().unwrap();
        load(tt, topo, out)
    })
}

#[no_mangle]
pub unsafe extern "C" fn rl_dataset_free(dataset: *mut RlDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Number of services, or 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn rl_dataset_service_count(dataset: *const RlDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.timetable.len())
}

/// Id of the service at timetable position `index`, or NULL when out of
/// range. The string lives as long as the dataset.
#[no_mangle]
pub unsafe extern "C" fn rl_dataset_service_id(
    dataset: *const RlDataset,
    index: usize,
) -> *const c_char {
    dataset
        .as_ref()
        .and_then(|d| d.service_ids.get(index))
        .map_or(ptr::null(), |s| s.as_ptr())
}

/// Maximum number of simultaneously running services, or 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn rl_dataset_peak_density(dataset: *const RlDataset) -> u32 {
    dataset
        .as_ref()
        .map_or(0, |d| density_profile(&d.timetable).peak())
}

/// Bounds that admit every time-ordered pair: zero minimum headway and no
/// other limit.
#[no_mangle]
pub extern "C" fn rl_bounds_unbounded() -> RlBounds {
    RlBounds {
        w_min: 0.0,
        w_max: f64::INFINITY,
        d_max: f64::INFINITY,
        v_avg_max: f64::INFINITY,
    }
}

fn bounds_status(e: &ModelError) -> RlStatus {
    match e {
        ModelError::InadmissibleBounds { .. } => RlStatus::InadmissibleBounds,
        ModelError::InvalidBound { .. } => RlStatus::InvalidBounds,
        _ => RlStatus::InvalidInput,
    }
}

/// Solves the minimum fleet. On success `*out` receives a cover to be
/// released with [`rl_cover_free`].
#[no_mangle]
pub unsafe extern "C" fn rl_solve(
    dataset: *const RlDataset,
    bounds: *const RlBounds,
    out: *mut *mut RlCover,
) -> RlStatus {
    guard(|| {
        if out.is_null() {
            return fail(RlStatus::NullPointer, "out is NULL");
        }
        *out = ptr::null_mut();
        let (Some(d), Some(b)) = (dataset.as_ref(), bounds.as_ref()) else {
            return fail(RlStatus::NullPointer, "dataset or bounds is NULL");
        };
        let b = Bounds::new(b.w_min, b.w_max, b.d_max, b.v_avg_max);
        if let Err(e) = b.validate() {
            return fail(bounds_status(&e), e.to_string());
        }
        let solution = match min_fleet(&d.timetable, &d.topology, &b) {
            Ok(s) => s,
            Err(CoverError::Model(e)) => return fail(bounds_status(&e), e.to_string()),
            Err(e) => return fail(RlStatus::Internal, e.to_string()),
        };
        let o = match evaluate(&solution, &d.timetable, &d.topology) {
            Ok(o) => o,
            Err(e) => return fail(RlStatus::Internal, e.to_string()),
        };
        let json = match serde_json::to_string(&solution.to_document(&d.timetable, true)) {
            Ok(j) => CString::new(j).unwrap_or_default(),
            Err(e) => return fail(RlStatus::Internal, e.to_string()),
        };
        *out = Box::into_raw(Box::new(RlCover {
            solution,
            objectives: RlObjectives {
                f1: o.f1,
                f2: o.f2,
                f3: o.f3,
                f4: o.f4,
                f5: o.f5,
            },
            json,
        }));
        RlStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn rl_cover_free(cover: *mut RlCover) {
    if !cover.is_null() {
        drop(Box::from_raw(cover));
    }
}

/// Number of rake-links, or 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn rl_cover_fleet_size(cover: *const RlCover) -> usize {
    cover.as_ref().map_or(0, |c| c.solution.fleet_size())
}

/// Number of services on link `link`, or 0 when out of range.
#[no_mangle]
pub unsafe extern "C" fn rl_cover_link_len(cover: *const RlCover, link: usize) -> usize {
    cover
        .as_ref()
        .and_then(|c| c.solution.links().get(link))
        .map_or(0, |l| l.len())
}

/// Copies the timetable positions of link `link`'s services into `buf`.
/// `*written` receives the full link length; at most `cap` entries are
/// copied.
#[no_mangle]
pub unsafe extern "C" fn rl_cover_link_services(
    cover: *const RlCover,
    link: usize,
    buf: *mut usize,
    cap: usize,
    written: *mut usize,
) -> RlStatus {
    guard(|| {
        let Some(c) = cover.as_ref() else {
            return fail(RlStatus::NullPointer, "cover is NULL");
        };
        if written.is_null() || (buf.is_null() && cap > 0) {
            return fail(RlStatus::NullPointer, "buf or written is NULL");
        }
        let Some(l) = c.solution.links().get(link) else {
            return fail(
                RlStatus::OutOfRange,
                format!("link {link} out of range ({} links)", c.solution.fleet_size()),
            );
        };
        let services = l.services();
        let n = services.len().min(cap);
        if n > 0 {
            ptr::copy_nonoverlapping(services.as_ptr(), buf, n);
        }
        *written = services.len();
        RlStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn rl_cover_objectives(
    cover: *const RlCover,
    out: *mut RlObjectives,
) -> RlStatus {
    guard(|| match (cover.as_ref(), out.as_mut()) {
        (Some(c), Some(o)) => {
            *o = c.objectives;
            RlStatus::Ok
        }
        _ => fail(RlStatus::NullPointer, "cover or out is NULL"),
    })
}

/// The cover as JSON (`fleet_size`, `links` of service ids, `bounds`).
/// Release with [`rl_string_free`]. NULL for a NULL cover.
#[no_mangle]
pub unsafe extern "C" fn rl_cover_to_json(cover: *const RlCover) -> *mut c_char {
    cover
        .as_ref()
        .map_or(ptr::null_mut(), |c| c.json.clone().into_raw())
}

#[no_mangle]
pub unsafe extern "C" fn rl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn rl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn rl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_handles_are_harmless() {
        unsafe {
            rl_dataset_free(ptr::null_mut());
            rl_cover_free(ptr::null_mut());
            rl_string_free(ptr::null_mut());
            assert_eq!(rl_dataset_service_count(ptr::null()), 0);
            assert_eq!(rl_cover_fleet_size(ptr::null()), 0);
            assert!(rl_cover_to_json(ptr::null()).is_null());
            let mut out = ptr::null_mut();
            assert_eq!(rl_solve(ptr::null(), ptr::null(), &mut out), RlStatus::NullPointer);
            assert!(out.is_null());
        }
    }

    #[test]
    fn version_matches_package() {
        let v = unsafe { CStr::from_ptr(rl_version()) };
        assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}
