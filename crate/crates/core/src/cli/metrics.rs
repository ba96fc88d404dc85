use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};

use super::files::{ensure_dir, open_input, open_intermediate, read_meta, write_atomic, write_meta};
use super::{DiffArgs, MetricOptions};
use crate::graph::{
    cumulative_links, degree_ccdf, degree_degree, degree_ratio_matrix, diff, edge_betweenness, fit_powerlaw,
    read_edge_list, write_betweenness_csv, write_ccdf_csv, write_cumulative_csv, write_degdeg_csv, write_fit_csv,
    write_links, write_ratio_csv, AsGraph, PowerLawFit,
};
use crate::ingest::Timestamp;
use crate::rib::{read_event_log, timelines_from_events};
use crate::temporal::{bucket_np, compute_all, write_buckets_csv, write_stats_csv};

fn meta_ts(meta: &BTreeMap<String, String>, key: &str) -> Result<Timestamp> {
    meta.get(key)
        .with_context(|| format!("ingest.meta has no {key}"))?
        .parse()
        .with_context(|| format!("ingest.meta: bad {key}"))
}

fn percent_more(a: usize, b: usize) -> String {
    if b == 0 {
        "n/a".to_string()
    } else {
        format!("{:.2}", 100.0 * (a as f64 - b as f64) / b as f64)
    }
}

fn fit_of(g: &AsGraph) -> Option<PowerLawFit> {
    degree_ccdf(g).ok().and_then(|c| fit_powerlaw(&c).ok())
}

/// Sample times from `t_start` in steps of `step`, always ending at `t_end`.
fn sample_times(t_start: Timestamp, t_end: Timestamp, step: u64) -> Vec<Timestamp> {
    let mut out: Vec<Timestamp> = (t_start..t_end).step_by(step.max(1) as usize).collect();
    out.push(t_end);
    out
}

/// Reads the ingest intermediates in `input` and writes the metric CSVs and
/// `summary.txt` to `out`.
pub fn cmd_metrics(input: &Path, out: &Path, opts: &MetricOptions) -> Result<()> {
    let binning = opts.binning()?;
    let meta = read_meta(input, "ingest.meta")?;
    let t_start = meta_ts(&meta, "t_start")?;
    let t_end = meta_ts(&meta, "t_end")?;
    let events = read_event_log(open_intermediate(input, "events.log")?).context("events.log")?;
    let g = read_edge_list(open_intermediate(input, "edges.txt")?).context("edges.txt")?;
    let btd = read_edge_list(open_intermediate(input, "btd_edges.txt")?).context("btd_edges.txt")?;
    let last = read_edge_list(open_intermediate(input, "last_announce.txt")?).context("last_announce.txt")?;
    ensure_dir(out)?;

    let mut timelines = timelines_from_events(&events, t_end);
    for (l, t) in last.edges() {
        if let Some(tl) = timelines.get_mut(l) {
            tl.last_announced = Some(*t);
        }
    }
    let stats = compute_all(timelines.values(), t_end, opts.nl_mode());
    write_atomic(&out.join("np_nl.csv"), |w| write_stats_csv(w, &stats))?;
    let btd_set = btd.edge_set();
    let table = bucket_np(&stats, &btd_set);
    write_atomic(&out.join("np_buckets.csv"), |w| write_buckets_csv(w, &table))?;

    let ccdf = degree_ccdf(&g).unwrap_or_default();
    write_atomic(&out.join("ccdf.csv"), |w| write_ccdf_csv(w, &ccdf))?;
    let ccdf_btd = degree_ccdf(&btd).unwrap_or_default();
    write_atomic(&out.join("ccdf_btd.csv"), |w| write_ccdf_csv(w, &ccdf_btd))?;
    let fits = [("updates", fit_of(&g)), ("btd", fit_of(&btd))];
    write_atomic(&out.join("fit.csv"), |w| write_fit_csv(w, &fits))?;

    let d = diff(&g, &btd);
    let all = degree_degree(&g, g.edge_set().iter(), binning)?;
    write_atomic(&out.join("degdeg.csv"), |w| write_degdeg_csv(w, &all))?;
    let only = degree_degree(&g, d.only_a.iter(), binning)?;
    write_atomic(&out.join("degdeg_diff.csv"), |w| write_degdeg_csv(w, &only))?;
    let own = degree_degree(&btd, btd_set.iter(), binning)?;
    write_atomic(&out.join("degdeg_btd.csv"), |w| write_degdeg_csv(w, &own))?;
    let ratio = degree_ratio_matrix(&btd, &g, binning, opts.degree_source());
    write_atomic(&out.join("ratio.csv"), |w| write_ratio_csv(w, &ratio))?;

    let b = edge_betweenness(&g);
    write_atomic(&out.join("betweenness.csv"), |w| write_betweenness_csv(w, &b))?;

    let times = sample_times(t_start, t_end, opts.sample_step);
    let cum = cumulative_links(&g, &times);
    let cum_btd = cumulative_links(&btd, &times);
    write_atomic(&out.join("cumulative.csv"), |w| write_cumulative_csv(w, &cum, Some(&cum_btd)))?;

    let (nodes, btd_nodes) = (g.node_count(), btd.node_count());
    let summary: BTreeMap<&str, String> = [
        ("t_start", t_start.to_string()),
        ("t_end", t_end.to_string()),
        ("links", g.edge_count().to_string()),
        ("nodes", nodes.to_string()),
        ("btd_links", btd.edge_count().to_string()),
        ("btd_nodes", btd_nodes.to_string()),
        ("links_only_updates", d.only_a.len().to_string()),
        ("links_only_btd", d.only_b.len().to_string()),
        ("links_both", d.both.len().to_string()),
        ("percent_more_links", percent_more(g.edge_count(), btd.edge_count())),
        ("percent_more_nodes", percent_more(nodes, btd_nodes)),
    ]
    .into_iter()
    .collect();
    write_meta(&out.join("summary.txt"), &summary)
}

/// Writes `only_a.txt`, `only_b.txt` and `both.txt` and prints the counts.
pub fn cmd_diff(args: &DiffArgs) -> Result<()> {
    let read = |p: &Path| -> Result<AsGraph> {
        read_edge_list(open_input(p)?).with_context(|| p.display().to_string())
    };
    let (a, b) = (read(&args.a)?, read(&args.b)?);
    ensure_dir(&args.out)?;
    let d = diff(&a, &b);
    write_atomic(&args.out.join("only_a.txt"), |w| write_links(w, &d.only_a))?;
    write_atomic(&args.out.join("only_b.txt"), |w| write_links(w, &d.only_b))?;
    write_atomic(&args.out.join("both.txt"), |w| write_links(w, &d.both))?;
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "only_a={} only_b={} both={}", d.only_a.len(), d.only_b.len(), d.both.len())?;
    Ok(())
}
