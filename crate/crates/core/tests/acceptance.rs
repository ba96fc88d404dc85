//! Acceptance gate. Each test prints one `PASS`/`FAIL` line with its
//! measured runtime and budget, then asserts.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use astopo::graph::{degree_ccdf, edge_betweenness, fit_powerlaw, CcdfPoint};
use astopo::ingest::text::{format_update, parse_update_line, update_reader, write_updates};
use astopo::ingest::{AsPath, ErrorPolicy, PeerId, Prefix, Segment, UpdateRecord};
use astopo::path::{AsSetPolicy, Link};
use astopo::reset::{detect, replay_with_detection, ResetCause, ResetParams};
use astopo::rib::{replay, write_event_log, Interval, ReplayConfig, VisibilityTimeline};
use astopo::synth::{generate, powerlaw_graph, SynthConfig};
use astopo::temporal::{compute_all, compute_stats, NlMode};
use common::*;
use rand::Rng;
use rayon::prelude::*;

type Check = Result<String, String>;

fn gate(n: u32, name: &str, budget: Duration, f: impl FnOnce() -> Check) {
    let start = Instant::now();
    let result = f();
    let took = start.elapsed();
    let timed = took <= budget;
    let (status, detail) = match &result {
        Ok(d) if timed => ("PASS", d.clone()),
        Ok(d) => ("FAIL", format!("{d}; over budget")),
        Err(e) => ("FAIL", e.clone()),
    };
    println!(
        "criterion {n} {status}: {name}: {detail} ({:.2}s of {}s)",
        took.as_secs_f64(),
        budget.as_secs()
    );
    assert!(result.is_ok() && timed, "criterion {n} failed: {detail}");
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn link(a: u32, b: u32) -> Link {
    Link::new(a, b).unwrap()
}

#[test]
fn criterion_1_golden_event_log() {
    gate(1, "three-update fixture", Duration::from_secs(1), || {
        let records: Vec<UpdateRecord> = update_reader(TABLE1.as_bytes(), ErrorPolicy::Abort)
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let cfg = ReplayConfig { keep_events: true, ..Default::default() };
        let out = replay(&records, 1_064_061_035, cfg);
        let mut log = Vec::new();
        write_event_log(&mut log, &out.events).unwrap();
        let expected = "\
1064060035|1239|10876|U
1064060035|1239|2828|U
1064060035|2828|14815|U
1064060510|1239|2828|D
1064060510|2828|14815|D
1064060510|1239|14815|U
";
        let log = String::from_utf8(log).unwrap();
        ensure(log == expected, || format!("event log differs:\n{log}"))?;
        let links: BTreeSet<Link> = out.timelines.keys().copied().collect();
        let want = BTreeSet::from([link(1239, 10876), link(1239, 2828), link(2828, 14815), link(1239, 14815)]);
        ensure(links == want, || format!("links {links:?}"))?;
        ensure(out.counters.absent_withdrawals == 1, || "leading withdrawal not counted".into())?;
        Ok(format!("{} events, {} links", out.events.len(), links.len()))
    });
}

#[test]
fn criterion_2_np_nl_values() {
    fn tl(intervals: &[(u64, u64)]) -> VisibilityTimeline {
        VisibilityTimeline {
            link: link(1, 2),
            intervals: intervals.iter().map(|&(start, end)| Interval { start, end }).collect(),
            open: None,
            last_announced: None,
        }
    }
    gate(2, "NP/NL unit values", Duration::from_secs(1), || {
        let cases = [
            ("two intervals", tl(&[(0, 10), (20, 30)]), 0.5, 0.75),
            ("always visible", tl(&[(0, 40)]), 1.0, 1.0),
            ("boundary only", tl(&[(40, 40)]), 1.0, 1.0),
        ];
        for (name, t, np, nl) in &cases {
            let s = compute_stats(t, 40, NlMode::VisibleEnd);
            ensure(s.np == *np && s.nl == *nl, || format!("{name}: np={} nl={}", s.np, s.nl))?;
        }
        Ok("0.5/0.75, 1/1, 1/1".into())
    });
}

fn oracle_view(out: &BTreeMap<Link, VisibilityTimeline>) -> BTreeMap<(u32, u32), OracleTimeline> {
    out.iter()
        .map(|(l, tl)| {
            let o = OracleTimeline {
                intervals: tl.intervals.iter().map(|i| (i.start, i.end)).collect(),
                last_announced: tl.last_announced,
            };
            ((l.lo(), l.hi()), o)
        })
        .collect()
}

#[test]
fn criterion_3_replay_oracle() {
    gate(3, "replay vs full-rescan oracle, 100 seeds x 10k events", Duration::from_secs(60), || {
        let per_seed: Vec<Result<usize, String>> = (0..100u64)
            .into_par_iter()
            .map(|seed| {
                let records = random_stream(seed, 10_000);
                let t_end = records.iter().map(|r| r.timestamp).max().unwrap() + 100;
                let out = replay(&records, t_end, ReplayConfig::default());
                let (want, want_end) = rescan_oracle(&records, t_end, AsSetPolicy::Run);
                ensure(out.t_end == want_end, || format!("seed {seed}: t_end"))?;
                let got = oracle_view(&out.timelines);
                if got != want {
                    let bad = want.iter().find(|(l, o)| got.get(l) != Some(o)).map(|(l, _)| *l);
                    return Err(format!("seed {seed}: timelines differ, first at {bad:?}"));
                }
                Ok(got.len())
            })
            .collect();
        let links: usize = per_seed.into_iter().sum::<Result<usize, String>>()?;
        Ok(format!("exact match, {links} link timelines"))
    });
}

#[test]
fn criterion_4_betweenness_oracle() {
    gate(4, "betweenness vs shortest-path enumeration", Duration::from_secs(60), || {
        let mut worst: f64 = 0.0;
        for seed in 0..50 {
            let n = rng(seed).gen_range(5..=50);
            let extra = rng(seed + 1000).gen_range(0..=n as usize);
            let edges = random_connected(seed, n, extra);
            let b = edge_betweenness(&graph_of(&edges));
            let (want, dist_sum) = brute_betweenness(&edges);
            ensure(b.len() == want.len(), || format!("seed {seed}: edge count"))?;
            for ((lo, hi), w) in &want {
                let got = b[&link(*lo, *hi)];
                worst = worst.max((got - w).abs());
                ensure((got - w).abs() <= 1e-9, || format!("seed {seed}: ({lo},{hi}) {got} vs {w}"))?;
            }
            let total: f64 = b.values().sum();
            ensure((total - dist_sum).abs() <= 1e-6 * dist_sum, || {
                format!("seed {seed}: sum {total} vs distances {dist_sum}")
            })?;
        }
        Ok(format!("50 graphs, worst |d| = {worst:.2e}, sum rule holds"))
    });
}

#[test]
fn criterion_5_hand_betweenness() {
    gate(5, "P3, triangle and C4", Duration::from_secs(1), || {
        type Case<'a> = (&'a str, &'a [(u32, u32)], f64);
        let cases: [Case; 3] = [
            ("P3", &[(1, 2), (2, 3)], 2.0),
            ("triangle", &[(1, 2), (2, 3), (1, 3)], 1.0),
            ("C4", &[(1, 2), (2, 3), (3, 4), (1, 4)], 2.0),
        ];
        for (name, edges, want) in cases {
            let b = edge_betweenness(&graph_of(edges));
            ensure(b.len() == edges.len() && b.values().all(|&v| v == want), || format!("{name}: {b:?}"))?;
        }
        Ok("2, 1, 2 exactly".into())
    });
}

#[test]
fn criterion_6_powerlaw_fit() {
    gate(6, "power-law CCDF fit", Duration::from_secs(120), || {
        let slope = -1.37;
        let points: Vec<CcdfPoint> = (1..=30u32)
            .map(|k| CcdfPoint { degree: k, fraction: 0.8 * f64::from(k).powf(slope) })
            .collect();
        let fit = fit_powerlaw(&points).map_err(|e| e.to_string())?;
        ensure((fit.slope - slope).abs() <= 1e-9, || format!("exact line slope {}", fit.slope))?;
        ensure((fit.pearson_r.abs() - 1.0).abs() <= 1e-12, || format!("exact line r {}", fit.pearson_r))?;
        let mut detail = Vec::new();
        for alpha in [2.1, 2.5] {
            let (mut worst_d, mut worst_r): (f64, f64) = (0.0, 1.0);
            for seed in 0..20 {
                let g = powerlaw_graph(5000, alpha, seed).map_err(|e| e.to_string())?;
                let fit = fit_powerlaw(&degree_ccdf(&g).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
                let d = (fit.slope + (alpha - 1.0)).abs();
                worst_d = worst_d.max(d);
                worst_r = worst_r.min(fit.pearson_r.abs());
                ensure(d <= 0.15 && fit.pearson_r.abs() >= 0.98, || {
                    format!("alpha {alpha} seed {seed}: slope {} r {}", fit.slope, fit.pearson_r)
                })?;
            }
            detail.push(format!("alpha {alpha}: worst |dslope| {worst_d:.3}, min |r| {worst_r:.4}"));
        }
        Ok(format!("exact line recovered; {}", detail.join("; ")))
    });
}

#[test]
fn criterion_7_synthetic_discovery() {
    gate(7, "synthetic end-to-end discovery", Duration::from_secs(30), || {
        let s = generate(&SynthConfig::default()).map_err(|e| e.to_string())?;
        ensure(s.converged_links.len() == 100 && s.backup_links.len() == 43, || {
            format!("scenario has {} + {}", s.converged_links.len(), s.backup_links.len())
        })?;
        let out = replay(&s.stream, s.t_end, ReplayConfig::default());
        let found: BTreeSet<Link> = out.timelines.keys().copied().collect();
        let truth: BTreeSet<Link> = s.converged_links.union(&s.backup_links).copied().collect();
        let missed = truth.difference(&found).count();
        ensure(missed == 0, || format!("recall misses {missed} links"))?;
        let snap: BTreeSet<Link> = s
            .snapshot(s.t_end)
            .iter()
            .flat_map(|e| oracle_links(&e.path, e.peer.asn, AsSetPolicy::Run))
            .map(|(a, b)| link(a, b))
            .collect();
        ensure(snap == s.converged_links, || "end snapshot differs from converged set".into())?;

        let stats = compute_all(out.timelines.values(), out.t_end, NlMode::VisibleEnd);
        for st in &stats {
            if s.backup_links.contains(&st.link) {
                ensure(st.np <= 0.2, || format!("backup {} np {}", st.link, st.np))?;
            } else if st.first_seen == s.t_start {
                ensure(st.np >= 0.8, || format!("converged {} np {}", st.link, st.np))?;
            }
        }

        // the same scenario through the binary
        let dir = tempfile::tempdir().unwrap();
        let (syn, rep) = (dir.path().join("syn"), dir.path().join("rep"));
        run_ok(&["synth", "--out", p(&syn)]);
        let meta = read_kv(&syn.join("scenario.meta"));
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
        ensure(summary["percent_more_links"] == "43.00", || {
            format!("summary reports {}", summary["percent_more_links"])
        })?;
        Ok(format!(
            "recall {}/{}, snapshot = {} converged, {}% more links",
            found.intersection(&truth).count(),
            truth.len(),
            snap.len(),
            summary["percent_more_links"]
        ))
    });
}

fn peer(n: u8) -> PeerId {
    PeerId::new(100 + u32::from(n), peer_addr(&format!("10.0.0.{n}")))
}

fn ann(ts: u64, p: PeerId, i: u32, path: &[u32]) -> UpdateRecord {
    let prefix = Prefix::v4(10, (i >> 8) as u8, i as u8, 0, 24).unwrap();
    UpdateRecord::announce(ts, p, prefix, AsPath::sequence(path.to_vec()).unwrap())
}

/// A random stream re-timed to one record per 1-2 s, so no peer can
/// announce a table share in one window and the stream ends soon after the
/// last record.
fn reset_free_stream(seed: u64) -> Vec<UpdateRecord> {
    let mut r = rng(seed ^ 0x5eed);
    let mut t = 2_000_000;
    let mut recs = random_stream(seed, 2000);
    for rec in &mut recs {
        t += r.gen_range(1..=2);
        rec.timestamp = t;
    }
    recs
}

#[test]
fn criterion_8_reset_detection() {
    gate(8, "session reset detection", Duration::from_secs(30), || {
        let params = ResetParams::default();
        let a = peer(1);
        let mut recs: Vec<_> = (0..1000).map(|i| ann(0, a, i, &[7, 8])).collect();
        for t in (60..3600).step_by(60) {
            recs.push(ann(t, a, 0, &[7, 8]));
        }
        recs.extend((0..1000).map(|i| ann(3600 + u64::from(i >= 500), a, i, &[7, 9])));
        let ev = detect(&recs, params, None).map_err(|e| e.to_string())?;
        ensure(ev.len() == 1 && ev[0].cause == ResetCause::Surge, || format!("table transfer: {ev:?}"))?;

        let b = peer(2);
        let mut recs = vec![ann(0, a, 1, &[7])];
        for t in (10..=300).step_by(10) {
            recs.push(ann(t, b, 2, &[8]));
        }
        recs.push(ann(300, a, 1, &[7]));
        let ev = detect(&recs, params, None).map_err(|e| e.to_string())?;
        ensure(ev.len() == 1 && ev[0].cause == ResetCause::Inactivity && ev[0].peer == a, || {
            format!("silence: {ev:?}")
        })?;

        let mut links = 0;
        for seed in 0..20 {
            let recs = reset_free_stream(seed);
            let t_end = recs.last().unwrap().timestamp + 60;
            let cfg = ReplayConfig::default();
            let (on, events) = replay_with_detection(&recs, Some(params), t_end, cfg).map_err(|e| e.to_string())?;
            ensure(events.is_empty(), || format!("seed {seed}: stream not reset-free: {events:?}"))?;
            let (off, _) = replay_with_detection(&recs, None, t_end, cfg).map_err(|e| e.to_string())?;
            for mode in [NlMode::VisibleEnd, NlMode::LastAnnounce] {
                let s_on = compute_all(on.timelines.values(), t_end, mode);
                let s_off = compute_all(off.timelines.values(), t_end, mode);
                ensure(s_on == s_off, || format!("seed {seed}: NP/NL differ"))?;
                links += s_on.len();
            }
        }
        Ok(format!("one surge, one inactivity, {links} identical NP/NL rows"))
    });
}

fn random_record<R: Rng>(r: &mut R) -> UpdateRecord {
    let ts = r.gen_range(0..2_000_000_000u64);
    let peer = if r.gen_bool(0.8) {
        PeerId::new(r.gen(), std::net::IpAddr::V4(r.gen::<u32>().into()))
    } else {
        PeerId::new(r.gen(), std::net::IpAddr::V6(r.gen::<u128>().into()))
    };
    let prefix = if r.gen_bool(0.8) {
        let len = r.gen_range(0..=32u8);
        let bits = if len == 0 { 0 } else { r.gen::<u32>() & (u32::MAX << (32 - len)) };
        Prefix::new(std::net::IpAddr::V4(bits.into()), len).unwrap()
    } else {
        let len = r.gen_range(0..=128u8);
        let bits = if len == 0 { 0 } else { r.gen::<u128>() & (u128::MAX << (128 - len)) };
        Prefix::new(std::net::IpAddr::V6(bits.into()), len).unwrap()
    };
    if r.gen_bool(0.25) {
        return UpdateRecord::withdraw(ts, peer, prefix);
    }
    let mut segs = vec![Segment::Sequence((0..r.gen_range(1..8)).map(|_| r.gen()).collect())];
    if r.gen_bool(0.2) {
        segs.push(Segment::Set((0..r.gen_range(1..4)).map(|_| r.gen()).collect()));
        if r.gen_bool(0.5) {
            segs.push(Segment::Sequence(vec![r.gen()]));
        }
    }
    UpdateRecord::announce(ts, peer, prefix, AsPath::new(segs).unwrap())
}

#[test]
fn criterion_9_round_trip_and_determinism() {
    gate(9, "text round-trip and CLI determinism", Duration::from_secs(30), || {
        let mut r = rng(9);
        let records: Vec<UpdateRecord> = (0..1000).map(|_| random_record(&mut r)).collect();
        for rec in &records {
            let line = format_update(rec);
            let back = parse_update_line(&line).map_err(|e| format!("{line}: {e}"))?;
            ensure(&back == rec && format_update(&back) == line, || format!("line {line}"))?;
        }
        let mut first = Vec::new();
        write_updates(&mut first, &records).unwrap();
        let reread: Vec<UpdateRecord> = update_reader(first.as_slice(), ErrorPolicy::Abort)
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let mut second = Vec::new();
        write_updates(&mut second, &reread).unwrap();
        ensure(first == second, || "file round-trip differs".into())?;

        let dir = tempfile::tempdir().unwrap();
        let d = |s: &str| dir.path().join(s);
        let mut outputs = Vec::new();
        for run in ["a", "b"] {
            let syn = d(&format!("syn_{run}"));
            let ing = d(&format!("ing_{run}"));
            let met = d(&format!("met_{run}"));
            let dif = d(&format!("dif_{run}"));
            let rep = d(&format!("rep_{run}"));
            let updates = syn.join("updates.txt");
            let btd = syn.join("btd.txt");
            let synth = run_ok(&["synth", "--nodes", "60", "--episodes", "30", "--out", p(&syn)]);
            let ingest = run_ok(&["ingest", "--updates", p(&updates), "--btd", p(&btd), "--reset-detect", "on", "--out", p(&ing)]);
            let metrics = run_ok(&["metrics", "--input", p(&ing), "--out", p(&met)]);
            let diff = run_ok(&["diff", "--a", p(&ing.join("edges.txt")), "--b", p(&ing.join("btd_edges.txt")), "--out", p(&dif)]);
            let report = run_ok(&["report", "--updates", p(&updates), "--btd", p(&btd), "--out", p(&rep)]);
            let stdout: Vec<Vec<u8>> = [synth, ingest, metrics, diff, report].into_iter().map(|o| o.stdout).collect();
            outputs.push((stdout, [&syn, &ing, &met, &dif, &rep].map(|p| dir_bytes(p))));
        }
        let names = ["synth", "ingest", "metrics", "diff", "report"];
        for (i, name) in names.iter().enumerate() {
            ensure(outputs[0].0[i] == outputs[1].0[i], || format!("{name} stdout differs"))?;
            ensure(!outputs[0].1[i].is_empty(), || format!("{name} wrote nothing"))?;
            ensure(outputs[0].1[i] == outputs[1].1[i], || format!("{name} output differs"))?;
        }
        Ok(format!("1000 records byte-identical; {} subcommands deterministic", names.len()))
    });
}
