use std::collections::{BTreeMap, VecDeque};
use std::io::BufRead;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};

use super::files::{ensure_dir, open_input, sniff, write_atomic, write_meta};
use super::{IngestArgs, InputFormat};
use crate::graph::{write_edge_list, AsGraph};
use crate::ingest::mrt::MrtReader;
use crate::ingest::text::{snapshot_reader, update_reader, UpdateReader};
use crate::ingest::{ErrorPolicy, MrtItem, SnapshotEntry, Timestamp, UpdateRecord};
use crate::path::{route_links, AsSetPolicy};
use crate::reset::{replay_with_events, write_events_csv, ResetDetector};
use crate::rib::{write_event_log, ReplayConfig, ReplayOutput};

#[derive(Debug, Clone, Default)]
pub struct SourceStats {
    pub records: u64,
    pub outside_window: u64,
    pub skipped: u64,
    pub ignored_items: u64,
    pub first_ts: Option<Timestamp>,
}

enum Reader {
    Text(UpdateReader<Box<dyn BufRead>>),
    Mrt(MrtReader<Box<dyn BufRead>>),
}

/// Update records from a list of files, in file order, restricted to the
/// time window.
struct UpdateSource {
    paths: VecDeque<PathBuf>,
    current: Option<(PathBuf, Reader)>,
    format: InputFormat,
    policy: ErrorPolicy,
    window: (Option<Timestamp>, Option<Timestamp>),
    stats: SourceStats,
    failed: bool,
}

impl UpdateSource {
    fn new(args: &IngestArgs) -> Self {
        UpdateSource {
            paths: args.updates.iter().cloned().collect(),
            current: None,
            format: args.format,
            policy: args.error_policy(),
            window: (args.t_start, args.t_end),
            stats: SourceStats::default(),
            failed: false,
        }
    }

    fn open_next(&mut self) -> Result<bool> {
        let Some(path) = self.paths.pop_front() else {
            return Ok(false);
        };
        let mut input = open_input(&path)?;
        let reader = match sniff(&mut input, self.format).with_context(|| format!("reading {}", path.display()))? {
            InputFormat::Mrt => Reader::Mrt(MrtReader::new(input, self.policy)),
            _ => Reader::Text(update_reader(input, self.policy)),
        };
        self.current = Some((path, reader));
        Ok(true)
    }

    fn close_current(&mut self) {
        if let Some((_, reader)) = self.current.take() {
            match reader {
                Reader::Text(r) => self.stats.skipped += r.skipped() as u64,
                Reader::Mrt(r) => self.stats.skipped += r.stats().skipped_errors,
            }
        }
    }

    fn in_window(&self, ts: Timestamp) -> bool {
        self.window.0.is_none_or(|s| ts >= s) && self.window.1.is_none_or(|e| ts <= e)
    }
}

enum Step {
    Record(UpdateRecord),
    Ignored,
    Failed(anyhow::Error),
    Exhausted,
}

impl UpdateSource {
    fn step(reader: &mut Reader) -> Step {
        match reader {
            Reader::Text(r) => match r.next() {
                Some(Ok(rec)) => Step::Record(rec),
                Some(Err(e)) => Step::Failed(e.into()),
                None => Step::Exhausted,
            },
            Reader::Mrt(r) => match r.next() {
                Some(Ok(MrtItem::Update(rec))) => Step::Record(rec),
                Some(Ok(MrtItem::Snapshot(_))) => Step::Ignored,
                Some(Err(e)) => Step::Failed(e.into()),
                None => Step::Exhausted,
            },
        }
    }
}

impl Iterator for UpdateSource {
    type Item = Result<UpdateRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.failed {
            if self.current.is_none() {
                match self.open_next() {
                    Ok(true) => {}
                    Ok(false) => return None,
                    Err(e) => {
                        self.failed = true;
                        return Some(Err(e));
                    }
                }
            }
            let (path, reader) = self.current.as_mut().expect("opened above");
            match Self::step(reader) {
                Step::Exhausted => self.close_current(),
                Step::Ignored => self.stats.ignored_items += 1,
                Step::Record(rec) => {
                    if self.in_window(rec.timestamp) {
                        self.stats.records += 1;
                        self.stats.first_ts.get_or_insert(rec.timestamp);
                        return Some(Ok(rec));
                    }
                    self.stats.outside_window += 1;
                }
                Step::Failed(e) => {
                    self.failed = true;
                    let ctx = path.display().to_string();
                    return Some(Err(e.context(ctx)));
                }
            }
        }
        None
    }
}

/// Table dump entries from every BTD file, folded into one graph.
fn read_btd(args: &IngestArgs, policy: AsSetPolicy) -> Result<(AsGraph, u64)> {
    let mut g = AsGraph::new();
    let mut entries = 0u64;
    let mut add = |e: &SnapshotEntry, g: &mut AsGraph| {
        entries += 1;
        for l in route_links(&e.path, e.peer.asn, policy) {
            g.insert(l, e.timestamp);
        }
    };
    for path in &args.btd {
        let ctx = || path.display().to_string();
        let mut input = open_input(path)?;
        match sniff(&mut input, args.format).with_context(ctx)? {
            InputFormat::Mrt => {
                for item in MrtReader::new(input, args.error_policy()) {
                    if let MrtItem::Snapshot(e) = item.with_context(ctx)? {
                        add(&e, &mut g);
                    }
                }
            }
            _ => {
                for e in snapshot_reader(input, args.error_policy()) {
                    add(&e.with_context(ctx)?, &mut g);
                }
            }
        }
    }
    Ok((g, entries))
}

pub struct IngestSummary {
    pub output: ReplayOutput,
    pub btd: AsGraph,
}

/// Writes `events.log`, `edges.txt`, `btd_edges.txt`, `last_announce.txt`,
/// `resets.csv` and `ingest.meta` under `--out`.
pub fn cmd_ingest(args: &IngestArgs) -> Result<IngestSummary> {
    if let (Some(s), Some(e)) = (args.t_start, args.t_end) {
        if s >= e {
            bail!("--t-start {s} must be before --t-end {e}");
        }
    }
    for p in args.updates.iter().chain(&args.btd) {
        if !p.exists() {
            bail!("input {} does not exist", p.display());
        }
    }
    let params = args.reset_params();
    if let Some(p) = &params {
        p.validate()?;
    }
    ensure_dir(&args.out)?;
    let policy = args.asset_policy();
    let config = ReplayConfig { asset_policy: policy, keep_events: true };

    // two passes when detecting: events first, then the replay that uses them
    let events = match params {
        Some(p) => {
            let mut d = ResetDetector::new(p)?;
            for rec in UpdateSource::new(args) {
                d.observe(&rec?);
            }
            d.finish(args.t_end)
        }
        None => Vec::new(),
    };
    let mut source = UpdateSource::new(args);
    let t_end = args.t_end.unwrap_or(0);
    let output = replay_with_events(&mut source, &events, t_end, config)?;
    let stats = source.stats.clone();
    let (btd, btd_entries) = read_btd(args, policy)?;

    let out = &args.out;
    write_atomic(&out.join("events.log"), |w| write_event_log(w, &output.events))?;
    let graph: AsGraph = output.first_seen().into_iter().collect();
    write_atomic(&out.join("edges.txt"), |w| write_edge_list(w, &graph))?;
    write_atomic(&out.join("btd_edges.txt"), |w| write_edge_list(w, &btd))?;
    write_atomic(&out.join("last_announce.txt"), |w| {
        for (l, tl) in &output.timelines {
            if let Some(t) = tl.last_announced {
                writeln!(w, "{} {} {t}", l.lo(), l.hi())?;
            }
        }
        Ok(())
    })?;
    write_atomic(&out.join("resets.csv"), |w| write_events_csv(w, &events))?;

    let t_start = args.t_start.or(stats.first_ts).unwrap_or(0);
    let c = &output.counters;
    let meta: BTreeMap<&str, String> = [
        ("t_start", t_start.to_string()),
        ("t_end", output.t_end.to_string()),
        ("records", stats.records.to_string()),
        ("outside_window", stats.outside_window.to_string()),
        ("skipped_bad_records", stats.skipped.to_string()),
        ("ignored_items", stats.ignored_items.to_string()),
        ("applied", c.applied.to_string()),
        ("clamped", c.clamped.to_string()),
        ("absent_withdrawals", c.absent_withdrawals.to_string()),
        ("flushed_routes", c.flushed_routes.to_string()),
        ("resets", events.len().to_string()),
        ("btd_entries", btd_entries.to_string()),
        ("links", graph.edge_count().to_string()),
        ("btd_links", btd.edge_count().to_string()),
    ]
    .into_iter()
    .collect();
    write_meta(&out.join("ingest.meta"), &meta)?;
    Ok(IngestSummary { output, btd })
}
