use std::ffi::{CStr, CString};
use std::ptr;

use astopo_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(astopo_last_error()) }.to_string_lossy().into_owned()
}

fn push(r: *mut AstopoReplay, line: &str) -> AstopoStatus {
    let c = CString::new(line).unwrap();
    unsafe { astopo_replay_push_line(r, c.as_ptr()) }
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(astopo_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn replay_through_handles() {
    let r = astopo_replay_new();
    assert_eq!(push(r, "1064060005|10876|128.223.51.102|W|205.162.1.0/24"), AstopoStatus::Ok);
    assert_eq!(
        push(r, "1064060035|10876|128.223.51.102|A|205.162.1.0/24|1239 2828 14815 14815 14815 14815 14815"),
        AstopoStatus::Ok
    );
    assert_eq!(push(r, "1064060510|10876|128.223.51.102|A|205.162.1.0/24|1239 14815"), AstopoStatus::Ok);
    assert_eq!(push(r, ""), AstopoStatus::Ok);

    let mut stats: *mut AstopoStats = ptr::null_mut();
    let t_end = 1064060035 + 1000;
    assert_eq!(unsafe { astopo_replay_finish(r, t_end, ASTOPO_NL_VISIBLE_END, &mut stats) }, AstopoStatus::Ok);
    let n = unsafe { astopo_stats_len(stats) };
    assert_eq!(n, 4);
    let rows: Vec<AstopoLinkStats> = (0..n)
        .map(|i| {
            let mut row = AstopoLinkStats::default();
            assert_eq!(unsafe { astopo_stats_get(stats, i, &mut row) }, AstopoStatus::Ok);
            row
        })
        .collect();
    let find = |lo, hi| rows.iter().find(|s| s.lo == lo && s.hi == hi).copied().unwrap();
    assert_eq!(find(1239, 10876).np, 1.0);
    assert_eq!(find(1239, 2828).np, 475.0 / 1000.0);
    assert_eq!(find(1239, 14815).first_seen, 1064060510);

    let mut row = AstopoLinkStats::default();
    assert_eq!(unsafe { astopo_stats_get(stats, 99, &mut row) }, AstopoStatus::InvalidArgument);
    assert!(last_error().contains("out of range"));
    unsafe {
        astopo_stats_free(stats);
        astopo_replay_free(r);
    }
}

#[test]
fn replay_errors() {
    let r = astopo_replay_new();
    assert_eq!(push(r, "not a record"), AstopoStatus::Parse);
    assert!(last_error().starts_with("line 1"));
    assert_eq!(unsafe { astopo_replay_push_line(r, ptr::null()) }, AstopoStatus::NullPointer);
    let bad = [0xffu8, 0];
    assert_eq!(unsafe { astopo_replay_push_line(r, bad.as_ptr().cast()) }, AstopoStatus::InvalidUtf8);
    let mut stats: *mut AstopoStats = ptr::null_mut();
    assert_eq!(unsafe { astopo_replay_finish(r, 0, 7, &mut stats) }, AstopoStatus::InvalidArgument);
    assert!(stats.is_null());
    assert_eq!(unsafe { astopo_replay_finish(ptr::null_mut(), 0, 0, &mut stats) }, AstopoStatus::NullPointer);
    unsafe { astopo_replay_free(r) };
}

#[test]
fn graph_metrics_through_handles() {
    let g = astopo_graph_new();
    for (a, b) in [(1, 2), (2, 3), (3, 4), (1, 4)] {
        assert_eq!(unsafe { astopo_graph_add_link(g, a, b, 0) }, AstopoStatus::Ok);
    }
    assert_eq!(unsafe { astopo_graph_add_link(g, 5, 5, 0) }, AstopoStatus::InvalidArgument);
    assert_eq!(unsafe { astopo_graph_node_count(g) }, 4);
    assert_eq!(unsafe { astopo_graph_edge_count(g) }, 4);
    let mut b = 0.0;
    assert_eq!(unsafe { astopo_graph_betweenness(g, 2, 1, &mut b) }, AstopoStatus::Ok);
    assert_eq!(b, 2.0);
    assert_eq!(unsafe { astopo_graph_betweenness(g, 1, 3, &mut b) }, AstopoStatus::NotFound);

    // a 4-cycle has a single degree; nothing to fit
    let mut fit = AstopoFit::default();
    assert_eq!(unsafe { astopo_graph_fit(g, &mut fit) }, AstopoStatus::NoFit);
    assert_eq!(unsafe { astopo_graph_add_link(g, 2, 4, 0) }, AstopoStatus::Ok);
    assert_eq!(unsafe { astopo_graph_betweenness(g, 1, 2, &mut b) }, AstopoStatus::Ok);
    assert_eq!(b, 1.5);
    unsafe { astopo_graph_free(g) };
}

#[test]
fn graph_from_edge_list_file() {
    let dir = std::env::temp_dir().join(format!("astopo-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("edges.txt");
    std::fs::write(&path, "1 2 5\n1 3 5\n1 4 5\n2 3 9\n").unwrap();
    let g = astopo_graph_new();
    let c = CString::new(path.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { astopo_graph_read_edge_list(g, c.as_ptr()) }, AstopoStatus::Ok);
    assert_eq!(unsafe { astopo_graph_edge_count(g) }, 4);
    let mut fit = AstopoFit::default();
    assert_eq!(unsafe { astopo_graph_fit(g, &mut fit) }, AstopoStatus::Ok);
    assert_eq!(fit.points_used, 3);
    assert!(fit.slope < 0.0 && fit.pearson_r < 0.0);
    let missing = CString::new(dir.join("none.txt").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { astopo_graph_read_edge_list(g, missing.as_ptr()) }, AstopoStatus::Io);
    assert!(last_error().contains("none.txt"));
    unsafe { astopo_graph_free(g) };
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn link_normalization() {
    let (mut lo, mut hi) = (0, 0);
    assert_eq!(unsafe { astopo_link_normalize(14815, 1239, &mut lo, &mut hi) }, AstopoStatus::Ok);
    assert_eq!((lo, hi), (1239, 14815));
    assert_eq!(unsafe { astopo_link_normalize(1, 23456, &mut lo, &mut hi) }, AstopoStatus::InvalidArgument);
    assert_eq!(unsafe { astopo_link_normalize(1, 2, ptr::null_mut(), &mut hi) }, AstopoStatus::NullPointer);
    assert_eq!(last_error(), "null lo");
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/astopo.h")).unwrap();
    for name in [
        "astopo_version",
        "astopo_last_error",
        "astopo_link_normalize",
        "astopo_replay_new",
        "astopo_replay_push_line",
        "astopo_replay_finish",
        "astopo_replay_free",
        "astopo_stats_len",
        "astopo_stats_get",
        "astopo_stats_free",
        "astopo_graph_new",
        "astopo_graph_add_link",
        "astopo_graph_read_edge_list",
        "astopo_graph_node_count",
        "astopo_graph_edge_count",
        "astopo_graph_fit",
        "astopo_graph_betweenness",
        "astopo_graph_free",
        "ASTOPO_STATUS_OK",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
