//! C ABI over the replay and graph-metric pipeline.
//!
//! Handles are opaque and owned by the caller, who releases each with its
//! `_free` function. Calls return an [`AstopoStatus`]; on failure the message
//! is available from [`astopo_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::BufReader;
use std::panic::{catch_unwind, AssertUnwindSafe};

use astopo::graph::{degree_ccdf, edge_betweenness, fit_powerlaw, read_edge_list, AsGraph, BetweennessMap};
use astopo::ingest::text::parse_update_line;
use astopo::path::Link;
use astopo::rib::{ReplayConfig, Replayer};
use astopo::temporal::{compute_all, NlMode, TemporalStats};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AstopoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Io = 4,
    InvalidArgument = 5,
    NoFit = 6,
    NotFound = 7,
    Panic = 8,
}

/// Selects the NL end point for [`astopo_replay_finish`].
pub const ASTOPO_NL_VISIBLE_END: u32 = 0;
pub const ASTOPO_NL_LAST_ANNOUNCE: u32 = 1;

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AstopoLinkStats {
    pub lo: u32,
    pub hi: u32,
    pub first_seen: u64,
    pub np: f64,
    pub nl: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AstopoFit {
    pub slope: f64,
    pub intercept: f64,
    pub pearson_r: f64,
    pub points_used: usize,
}

/// Streaming replay of canonical text update lines.
pub struct AstopoReplay {
    inner: Replayer,
    lines: u64,
}

/// Per-link NP/NL results, sorted by link.
pub struct AstopoStats {
    rows: Vec<AstopoLinkStats>,
}

pub struct AstopoGraph {
    graph: AsGraph,
    betweenness: Option<BetweennessMap>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("NULs removed"));
}

fn fail(status: AstopoStatus, msg: impl Into<String>) -> AstopoStatus {
    set_error(msg);
    status
}

/// Clears the error slot, runs `f`, and maps a panic to `Panic`.
fn guard(f: impl FnOnce() -> AstopoStatus) -> AstopoStatus {
    set_error("");
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(AstopoStatus::Panic, "internal panic"))
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, AstopoStatus> {
    if p.is_null() {
        return Err(fail(AstopoStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(AstopoStatus::InvalidUtf8, "string is not UTF-8"))
}

macro_rules! deref {
    ($p:expr) => {
        match unsafe { $p.as_mut() } {
            Some(r) => r,
            None => return fail(AstopoStatus::NullPointer, concat!("null ", stringify!($p))),
        }
    };
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn astopo_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn astopo_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Canonical `(lo, hi)` order for an AS adjacency.
///
/// # Safety
/// `lo` and `hi` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn astopo_link_normalize(a: u32, b: u32, lo: *mut u32, hi: *mut u32) -> AstopoStatus {
    guard(|| {
        let (lo, hi) = (deref!(lo), deref!(hi));
        match Link::new(a, b) {
            Some(l) => {
                *lo = l.lo();
                *hi = l.hi();
                AstopoStatus::Ok
            }
            None => fail(AstopoStatus::InvalidArgument, format!("({a},{b}) is not a public AS link")),
        }
    })
}

#[no_mangle]
pub extern "C" fn astopo_replay_new() -> *mut AstopoReplay {
    Box::into_raw(Box::new(AstopoReplay { inner: Replayer::new(ReplayConfig::default()), lines: 0 }))
}

/// # Safety
/// `r` must come from [`astopo_replay_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn astopo_replay_free(r: *mut AstopoReplay) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Applies one `ts|peer_as|peer_ip|A|prefix|path` or `...|W|prefix` line.
/// Blank lines are accepted and ignored.
///
/// # Safety
/// `r` must be a live replay handle and `line` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn astopo_replay_push_line(r: *mut AstopoReplay, line: *const c_char) -> AstopoStatus {
    guard(|| {
        let r = deref!(r);
        let line = match str_arg(line) {
            Ok(s) => s.trim_end_matches(['\n', '\r']),
            Err(s) => return s,
        };
        r.lines += 1;
        if line.trim().is_empty() {
            return AstopoStatus::Ok;
        }
        match parse_update_line(line) {
            Ok(rec) => {
                r.inner.apply(&rec);
                AstopoStatus::Ok
            }
            Err(e) => fail(AstopoStatus::Parse, format!("line {}: {e}", r.lines)),
        }
    })
}

/// Closes all intervals at `t_end` and returns per-link statistics. The
/// replay handle is reset to an empty state.
///
/// # Safety
/// `r` must be a live replay handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn astopo_replay_finish(
    r: *mut AstopoReplay,
    t_end: u64,
    nl_mode: u32,
    out: *mut *mut AstopoStats,
) -> AstopoStatus {
    guard(|| {
        let (r, out) = (deref!(r), deref!(out));
        let mode = match nl_mode {
            ASTOPO_NL_VISIBLE_END => NlMode::VisibleEnd,
            ASTOPO_NL_LAST_ANNOUNCE => NlMode::LastAnnounce,
            m => return fail(AstopoStatus::InvalidArgument, format!("unknown NL mode {m}")),
        };
        let replayer = std::mem::replace(&mut r.inner, Replayer::new(ReplayConfig::default()));
        r.lines = 0;
        let result = replayer.finish(t_end);
        let rows = compute_all(result.timelines.values(), result.t_end, mode)
            .into_iter()
            .map(|s: TemporalStats| AstopoLinkStats {
                lo: s.link.lo(),
                hi: s.link.hi(),
                first_seen: s.first_seen,
                np: s.np,
                nl: s.nl,
            })
            .collect();
        *out = Box::into_raw(Box::new(AstopoStats { rows }));
        AstopoStatus::Ok
    })
}

/// # Safety
/// `s` must be null or a live stats handle.
#[no_mangle]
pub unsafe extern "C" fn astopo_stats_len(s: *const AstopoStats) -> usize {
    s.as_ref().map_or(0, |s| s.rows.len())
}

/// # Safety
/// `s` must be a live stats handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn astopo_stats_get(s: *const AstopoStats, i: usize, out: *mut AstopoLinkStats) -> AstopoStatus {
    guard(|| {
        let s = match s.as_ref() {
            Some(s) => s,
            None => return fail(AstopoStatus::NullPointer, "null stats"),
        };
        let out = deref!(out);
        match s.rows.get(i) {
            Some(row) => {
                *out = *row;
                AstopoStatus::Ok
            }
            None => fail(AstopoStatus::InvalidArgument, format!("index {i} out of range {}", s.rows.len())),
        }
    })
}

/// # Safety
/// `s` must come from [`astopo_replay_finish`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn astopo_stats_free(s: *mut AstopoStats) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

#[no_mangle]
pub extern "C" fn astopo_graph_new() -> *mut AstopoGraph {
    Box::into_raw(Box::new(AstopoGraph { graph: AsGraph::new(), betweenness: None }))
}

/// # Safety
/// `g` must come from [`astopo_graph_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn astopo_graph_free(g: *mut AstopoGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Adds an edge; duplicates keep the earlier `first_seen`.
///
/// # Safety
/// `g` must be a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn astopo_graph_add_link(g: *mut AstopoGraph, a: u32, b: u32, first_seen: u64) -> AstopoStatus {
    guard(|| {
        let g = deref!(g);
        match Link::new(a, b) {
            Some(l) => {
                g.graph.insert(l, first_seen);
                g.betweenness = None;
                AstopoStatus::Ok
            }
            None => fail(AstopoStatus::InvalidArgument, format!("({a},{b}) is not a public AS link")),
        }
    })
}

/// Adds every edge of a `lo hi [first_seen]` edge-list file.
///
/// # Safety
/// `g` must be a live graph handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn astopo_graph_read_edge_list(g: *mut AstopoGraph, path: *const c_char) -> AstopoStatus {
    guard(|| {
        let g = deref!(g);
        let path = match str_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        let file = match File::open(path) {
            Ok(f) => f,
            Err(e) => return fail(AstopoStatus::Io, format!("{path}: {e}")),
        };
        match read_edge_list(BufReader::new(file)) {
            Ok(read) => {
                g.graph = g.graph.union(&read);
                g.betweenness = None;
                AstopoStatus::Ok
            }
            Err(e) => fail(AstopoStatus::Parse, format!("{path}: {e}")),
        }
    })
}

/// # Safety
/// `g` must be null or a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn astopo_graph_node_count(g: *const AstopoGraph) -> usize {
    g.as_ref().map_or(0, |g| g.graph.node_count())
}

/// # Safety
/// `g` must be null or a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn astopo_graph_edge_count(g: *const AstopoGraph) -> usize {
    g.as_ref().map_or(0, |g| g.graph.edge_count())
}

/// Power-law fit of the degree CCDF.
///
/// # Safety
/// `g` must be a live graph handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn astopo_graph_fit(g: *const AstopoGraph, out: *mut AstopoFit) -> AstopoStatus {
    guard(|| {
        let g = match g.as_ref() {
            Some(g) => g,
            None => return fail(AstopoStatus::NullPointer, "null graph"),
        };
        let out = deref!(out);
        let ccdf = match degree_ccdf(&g.graph) {
            Ok(c) => c,
            Err(e) => return fail(AstopoStatus::NoFit, e.to_string()),
        };
        match fit_powerlaw(&ccdf) {
            Ok(f) => {
                *out = AstopoFit {
                    slope: f.slope,
                    intercept: f.intercept,
                    pearson_r: f.pearson_r,
                    points_used: f.points_used,
                };
                AstopoStatus::Ok
            }
            Err(e) => fail(AstopoStatus::NoFit, e.to_string()),
        }
    })
}

/// Edge betweenness of `(a, b)`. Computed for the whole graph on first use
/// and cached until the graph changes.
///
/// # Safety
/// `g` must be a live graph handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn astopo_graph_betweenness(g: *mut AstopoGraph, a: u32, b: u32, out: *mut f64) -> AstopoStatus {
    guard(|| {
        let (g, out) = (deref!(g), deref!(out));
        let Some(link) = Link::new(a, b) else {
            return fail(AstopoStatus::InvalidArgument, format!("({a},{b}) is not a public AS link"));
        };
        let AstopoGraph { graph, betweenness } = g;
        let map = betweenness.get_or_insert_with(|| edge_betweenness(graph));
        match map.get(&link) {
            Some(v) => {
                *out = *v;
                AstopoStatus::Ok
            }
            None => fail(AstopoStatus::NotFound, format!("{link} is not in the graph")),
        }
    })
}
