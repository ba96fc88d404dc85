mod common;

use std::fs;
use std::io::Write;
use std::path::Path;

use common::*;

fn stderr(out: &std::process::Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn table1_fixture_event_log() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("table1.txt");
    fs::write(&input, TABLE1).unwrap();
    let out = dir.path().join("out");
    run_ok(&["ingest", "--updates", p(&input), "--t-end", "1064061035", "--out", p(&out)]);
    let log = fs::read_to_string(out.join("events.log")).unwrap();
    assert_eq!(log.lines().count(), 6);
    assert_eq!(log.lines().last(), Some("1064060510|1239|14815|U"));
    let edges = fs::read_to_string(out.join("edges.txt")).unwrap();
    assert_eq!(
        edges,
        "1239 2828 1064060035\n1239 10876 1064060035\n1239 14815 1064060510\n2828 14815 1064060035\n"
    );
    let meta = read_kv(&out.join("ingest.meta"));
    assert_eq!(meta["absent_withdrawals"], "1");
    assert_eq!(meta["records"], "3");

    let met = dir.path().join("met");
    run_ok(&["metrics", "--input", p(&out), "--out", p(&met)]);
    let np = fs::read_to_string(met.join("np_nl.csv")).unwrap();
    assert!(np.contains("1239,2828,1064060035,0.475000000,0.475000000"), "{np}");
}

#[test]
fn empty_input_succeeds_with_empty_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("empty.txt");
    fs::write(&input, "").unwrap();
    let out = dir.path().join("out");
    let res = run_ok(&["report", "--updates", p(&input), "--btd", p(&input), "--out", p(&out)]);
    assert!(res.stderr.is_empty());
    assert_eq!(fs::read_to_string(out.join("events.log")).unwrap(), "");
    assert_eq!(fs::read_to_string(out.join("edges.txt")).unwrap(), "");
    let summary = read_kv(&out.join("summary.txt"));
    assert_eq!(summary["links"], "0");
    assert_eq!(summary["percent_more_links"], "n/a");
}

#[test]
fn nonexistent_input_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("no-such-updates.txt");
    let res = run(&["ingest", "--updates", p(&missing), "--out", p(&dir.path().join("out"))]);
    assert!(!res.status.success());
    assert!(res.stdout.is_empty());
    assert!(stderr(&res).contains("no-such-updates.txt"), "{}", stderr(&res));
}

#[test]
fn missing_intermediate_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let res = run(&["metrics", "--input", p(dir.path()), "--out", p(&dir.path().join("m"))]);
    assert!(!res.status.success());
    assert!(stderr(&res).contains("ingest.meta"), "{}", stderr(&res));
}

#[test]
fn window_must_be_ordered() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("u.txt");
    fs::write(&input, TABLE1).unwrap();
    let res = run(&["ingest", "--updates", p(&input), "--t-start", "10", "--t-end", "10", "--out", p(dir.path())]);
    assert!(!res.status.success());
    assert!(stderr(&res).contains("--t-start"));
}

#[test]
fn malformed_lines_abort_or_skip() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("u.txt");
    fs::write(&input, format!("{TABLE1}1064060600|10876|128.223.51.102|A|205.162.1.0/24|\n")).unwrap();
    let res = run(&["ingest", "--updates", p(&input), "--out", p(&dir.path().join("a"))]);
    assert!(!res.status.success());
    assert!(stderr(&res).contains("line 4"), "{}", stderr(&res));
    let out = dir.path().join("b");
    run_ok(&["ingest", "--updates", p(&input), "--on-error", "skip", "--out", p(&out)]);
    assert_eq!(read_kv(&out.join("ingest.meta"))["skipped_bad_records"], "1");
}

#[test]
fn compressed_and_mrt_inputs_match_text() {
    let dir = tempfile::tempdir().unwrap();
    let d = |s: &str| dir.path().join(s);
    run_ok(&["synth", "--nodes", "40", "--episodes", "20", "--out", p(&d("text"))]);
    run_ok(&["synth", "--nodes", "40", "--episodes", "20", "--format", "mrt", "--out", p(&d("mrt"))]);
    let text = fs::read(d("text/updates.txt")).unwrap();
    let mut gz = flate2::write::GzEncoder::new(Vec::new(), flate2::Compression::default());
    gz.write_all(&text).unwrap();
    fs::write(d("updates.txt.gz"), gz.finish().unwrap()).unwrap();
    let mut bz = bzip2::write::BzEncoder::new(Vec::new(), bzip2::Compression::default());
    bz.write_all(&text).unwrap();
    fs::write(d("updates.txt.bz2"), bz.finish().unwrap()).unwrap();

    let ingest = |updates: &Path, btd: &Path, out: &str| {
        run_ok(&["ingest", "--updates", p(updates), "--btd", p(btd), "--out", p(&d(out))]);
        (fs::read(d(out).join("events.log")).unwrap(), fs::read(d(out).join("btd_edges.txt")).unwrap())
    };
    let plain = ingest(&d("text/updates.txt"), &d("text/btd.txt"), "i_text");
    assert!(!plain.0.is_empty());
    assert_eq!(ingest(&d("updates.txt.gz"), &d("text/btd.txt"), "i_gz"), plain);
    assert_eq!(ingest(&d("updates.txt.bz2"), &d("text/btd.txt"), "i_bz"), plain);
    assert_eq!(ingest(&d("mrt/updates.mrt"), &d("mrt/btd.mrt"), "i_mrt"), plain);
}

#[test]
fn config_file_sets_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "# synth defaults\nnodes = 30\nepisodes = 12\nseed=5\n").unwrap();
    let a = dir.path().join("a");
    run_ok(&["--config", p(&cfg), "synth", "--out", p(&a)]);
    assert_eq!(read_kv(&a.join("scenario.meta"))["converged_links"], "29");
    let b = dir.path().join("b");
    run_ok(&["--config", p(&cfg), "synth", "--nodes", "50", "--episodes", "30", "--out", p(&b)]);
    assert_eq!(read_kv(&b.join("scenario.meta"))["converged_links"], "49");
}

#[test]
fn synth_output_feeds_the_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let syn = dir.path().join("syn");
    run_ok(&["synth", "--out", p(&syn)]);
    let meta = read_kv(&syn.join("scenario.meta"));
    let rep = dir.path().join("rep");
    run_ok(&[
        "report",
        "--updates",
        p(&syn.join("updates.txt")),
        "--btd",
        p(&syn.join("btd.txt")),
        "--t-end",
        &meta["t_end"],
        "--out",
        p(&rep),
    ]);
    let summary = read_kv(&rep.join("summary.txt"));
    assert_eq!(summary["links"], "143");
    assert_eq!(summary["btd_links"], "100");
    assert_eq!(summary["links_only_updates"], "43");
    let buckets = fs::read_to_string(rep.join("np_buckets.csv")).unwrap();
    assert!(buckets.lines().count() > 1);
    let truth = fs::read_to_string(syn.join("truth_edges.txt")).unwrap();
    let found = fs::read_to_string(rep.join("edges.txt")).unwrap();
    assert_eq!(found, truth);
}

#[test]
fn identical_graphs_diff_to_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    fs::write(&g, "1 2 0\n2 3 5\n").unwrap();
    let out = run_ok(&["diff", "--a", p(&g), "--b", p(&g), "--out", p(&dir.path().join("d"))]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "only_a=0 only_b=0 both=2\n");
    assert_eq!(fs::read_to_string(dir.path().join("d/only_a.txt")).unwrap(), "");
}

#[test]
fn identical_inputs_give_unit_ratios() {
    let dir = tempfile::tempdir().unwrap();
    let syn = dir.path().join("syn");
    run_ok(&["synth", "--nodes", "40", "--episodes", "20", "--backup-fraction", "0", "--out", p(&syn)]);
    let rep = dir.path().join("rep");
    let btd = syn.join("btd.txt");
    run_ok(&["report", "--updates", p(&syn.join("updates.txt")), "--btd", p(&btd), "--out", p(&rep)]);
    let ratio = fs::read_to_string(rep.join("ratio.csv")).unwrap();
    for row in ratio.lines().skip(1) {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols[2].parse::<f64>().unwrap(), 1.0, "{row}");
    }
    assert_eq!(read_kv(&rep.join("summary.txt"))["links_only_updates"], "0");
}

#[test]
fn help_and_errors_use_exit_codes() {
    assert!(run_ok(&["--help"]).stdout.starts_with(b"AS-level"));
    let bad = run(&["ingest"]);
    assert!(!bad.status.success());
    assert!(bad.stdout.is_empty());
}
