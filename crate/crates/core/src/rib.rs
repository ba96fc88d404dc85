//! Routing-table replay.
//!
//! [`RibState`] keeps the current route of every (peer, prefix) pair the
//! collector has heard, and a reference count per AS link over those routes.
//! A link is visible while its count is non-zero; count transitions turn
//! into [`LinkEvent`]s, and [`TimelineSet`] folds events into per-link
//! visibility intervals.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{self, BufRead, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::ingest::{Action, PeerId, Prefix, Timestamp, UpdateRecord};
use crate::path::{route_links, AsSetPolicy, Link};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Transition {
    Up,
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkEvent {
    pub timestamp: Timestamp,
    pub link: Link,
    pub transition: Transition,
}

impl fmt::Display for LinkEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = match self.transition {
            Transition::Up => 'U',
            Transition::Down => 'D',
        };
        write!(f, "{}|{}|{}|{t}", self.timestamp, self.link.lo(), self.link.hi())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RibCounters {
    pub applied: u64,
    /// Records whose timestamp was behind the clock.
    pub clamped: u64,
    pub absent_withdrawals: u64,
    pub flushed_routes: u64,
}

#[derive(Debug, Clone, Default)]
pub struct RibState {
    routes: BTreeMap<(PeerId, Prefix), Vec<Link>>,
    refcount: HashMap<Link, u32>,
    clock: Timestamp,
    counters: RibCounters,
}

impl RibState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clock(&self) -> Timestamp {
        self.clock
    }

    pub fn counters(&self) -> &RibCounters {
        &self.counters
    }

    pub fn route_count(&self) -> usize {
        self.routes.len()
    }

    pub fn route(&self, peer: PeerId, prefix: Prefix) -> Option<&[Link]> {
        self.routes.get(&(peer, prefix)).map(Vec::as_slice)
    }

    pub fn refcount(&self, link: &Link) -> u32 {
        self.refcount.get(link).copied().unwrap_or(0)
    }

    pub fn is_visible(&self, link: &Link) -> bool {
        self.refcount(link) > 0
    }

    pub fn visible_links(&self) -> BTreeSet<Link> {
        self.refcount.keys().copied().collect()
    }

    /// Number of routes currently held from `peer`.
    pub fn peer_route_count(&self, peer: PeerId) -> usize {
        self.peer_range(peer).count()
    }

    fn peer_range(&self, peer: PeerId) -> impl Iterator<Item = (&(PeerId, Prefix), &Vec<Link>)> {
        self.routes.range((peer, Prefix::MIN)..).take_while(move |((p, _), _)| *p == peer)
    }

    fn advance(&mut self, ts: Timestamp) -> Timestamp {
        if ts < self.clock {
            self.counters.clamped += 1;
        } else {
            self.clock = ts;
        }
        self.clock
    }

    fn decrement(&mut self, link: Link, ts: Timestamp, out: &mut Vec<LinkEvent>) {
        let count = self.refcount.get_mut(&link).expect("refcount tracks every routed link");
        *count -= 1;
        if *count == 0 {
            self.refcount.remove(&link);
            out.push(LinkEvent { timestamp: ts, link, transition: Transition::Down });
        }
    }

    fn increment(&mut self, link: Link, ts: Timestamp, out: &mut Vec<LinkEvent>) {
        let count = self.refcount.entry(link).or_insert(0);
        *count += 1;
        if *count == 1 {
            out.push(LinkEvent { timestamp: ts, link, transition: Transition::Up });
        }
    }

    /// Installs (`Some`) or removes (`None`) the route for (peer, prefix).
    /// `links` must be deduplicated. Downs are emitted before Ups, each group
    /// in its route's path order.
    pub fn apply_route(
        &mut self,
        ts: Timestamp,
        peer: PeerId,
        prefix: Prefix,
        links: Option<Vec<Link>>,
    ) -> Vec<LinkEvent> {
        let ts = self.advance(ts);
        self.counters.applied += 1;
        let mut events = Vec::new();
        let old = match links {
            Some(new) => self.routes.insert((peer, prefix), new.clone()).map(|old| (old, new)),
            None => match self.routes.remove(&(peer, prefix)) {
                Some(old) => Some((old, Vec::new())),
                None => {
                    self.counters.absent_withdrawals += 1;
                    return events;
                }
            },
        };
        let (old, new) = match old {
            Some(pair) => pair,
            None => {
                let new = self.routes[&(peer, prefix)].clone();
                for link in new {
                    self.increment(link, ts, &mut events);
                }
                return events;
            }
        };
        // Downs in old-path order, then Ups in new-path order
        for link in old.iter().filter(|l| !new.contains(l)) {
            self.decrement(*link, ts, &mut events);
        }
        for link in new.iter().filter(|l| !old.contains(l)) {
            self.increment(*link, ts, &mut events);
        }
        events
    }

    pub fn apply(&mut self, rec: &UpdateRecord, policy: AsSetPolicy) -> Vec<LinkEvent> {
        let links = match &rec.action {
            Action::Announce(path) => Some(route_links(path, rec.peer.asn, policy)),
            Action::Withdraw => None,
        };
        self.apply_route(rec.timestamp, rec.peer, rec.prefix, links)
    }

    /// Drops every route learned from `peer`.
    pub fn flush_peer(&mut self, peer: PeerId, t: Timestamp) -> Vec<LinkEvent> {
        let t = self.advance(t);
        let keys: Vec<_> = self.peer_range(peer).map(|(k, _)| *k).collect();
        let mut gone = Vec::new();
        for key in keys {
            let links = self.routes.remove(&key).expect("key from range");
            self.counters.flushed_routes += 1;
            for link in links {
                let count = self.refcount.get_mut(&link).expect("refcount tracks every routed link");
                *count -= 1;
                if *count == 0 {
                    self.refcount.remove(&link);
                    gone.push(link);
                }
            }
        }
        gone.sort_unstable();
        gone.into_iter()
            .map(|link| LinkEvent { timestamp: t, link, transition: Transition::Down })
            .collect()
    }

    /// Recomputes reference counts from the route table and compares.
    pub fn is_consistent(&self) -> bool {
        let mut counts: HashMap<Link, u32> = HashMap::new();
        for links in self.routes.values() {
            for link in links {
                *counts.entry(*link).or_insert(0) += 1;
            }
        }
        counts == self.refcount
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Interval {
    pub start: Timestamp,
    pub end: Timestamp,
}

impl Interval {
    pub fn duration(&self) -> u64 {
        self.end - self.start
    }
}

/// Visibility history of one link.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisibilityTimeline {
    pub link: Link,
    pub intervals: Vec<Interval>,
    /// Start of the interval currently open, if the link is visible.
    pub open: Option<Timestamp>,
    /// Latest announcement whose route carried the link.
    pub last_announced: Option<Timestamp>,
}

impl VisibilityTimeline {
    fn new(link: Link) -> Self {
        VisibilityTimeline { link, intervals: Vec::new(), open: None, last_announced: None }
    }

    pub fn first_seen(&self) -> Option<Timestamp> {
        self.intervals.first().map(|i| i.start).or(self.open)
    }

    /// End of the last closed interval.
    pub fn last_visible(&self) -> Option<Timestamp> {
        self.intervals.last().map(|i| i.end)
    }

    pub fn visible_time(&self) -> u64 {
        self.intervals.iter().map(Interval::duration).sum()
    }

    pub fn is_closed(&self) -> bool {
        self.open.is_none()
    }

    pub fn is_visible_at(&self, t: Timestamp) -> bool {
        self.intervals.iter().any(|i| i.start <= t && t < i.end)
            || self.open.is_some_and(|s| s <= t)
    }

    fn close(&mut self, t: Timestamp) {
        if let Some(start) = self.open.take() {
            self.intervals.push(Interval { start, end: t.max(start) });
        }
    }

    /// Merges touching or overlapping intervals. Total visible time and the
    /// first/last boundaries are unchanged.
    pub fn coalesce(&mut self) {
        self.intervals.sort_unstable();
        let mut out: Vec<Interval> = Vec::with_capacity(self.intervals.len());
        for iv in self.intervals.drain(..) {
            match out.last_mut() {
                Some(last) if iv.start <= last.end => last.end = last.end.max(iv.end),
                _ => out.push(iv),
            }
        }
        self.intervals = out;
    }
}

/// Folds link events into timelines.
#[derive(Debug, Clone, Default)]
pub struct TimelineSet {
    timelines: HashMap<Link, VisibilityTimeline>,
}

impl TimelineSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, ev: &LinkEvent) {
        let tl = self.timelines.entry(ev.link).or_insert_with(|| VisibilityTimeline::new(ev.link));
        match ev.transition {
            Transition::Up => {
                debug_assert!(tl.open.is_none(), "Up on an already visible link");
                tl.open = Some(ev.timestamp);
            }
            Transition::Down => {
                debug_assert!(tl.open.is_some(), "Down on an invisible link");
                tl.close(ev.timestamp);
            }
        }
    }

    pub fn note_announced(&mut self, links: &[Link], ts: Timestamp) {
        for link in links {
            if let Some(tl) = self.timelines.get_mut(link) {
                tl.last_announced = Some(tl.last_announced.map_or(ts, |t| t.max(ts)));
            }
        }
    }

    /// Closes every open interval at `t_end`.
    pub fn close(self, t_end: Timestamp) -> BTreeMap<Link, VisibilityTimeline> {
        self.timelines
            .into_iter()
            .map(|(link, mut tl)| {
                tl.close(t_end);
                (link, tl)
            })
            .collect()
    }
}

/// Rebuilds timelines from a persisted event log.
pub fn timelines_from_events<'a>(
    events: impl IntoIterator<Item = &'a LinkEvent>,
    t_end: Timestamp,
) -> BTreeMap<Link, VisibilityTimeline> {
    let mut set = TimelineSet::new();
    for ev in events {
        set.record(ev);
    }
    set.close(t_end)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ReplayConfig {
    pub asset_policy: AsSetPolicy,
    /// Keep the full event log in the output.
    pub keep_events: bool,
}

#[derive(Debug, Clone)]
pub struct ReplayOutput {
    pub timelines: BTreeMap<Link, VisibilityTimeline>,
    pub events: Vec<LinkEvent>,
    pub counters: RibCounters,
    pub t_end: Timestamp,
}

impl ReplayOutput {
    pub fn first_seen(&self) -> BTreeMap<Link, Timestamp> {
        self.timelines
            .iter()
            .filter_map(|(l, tl)| tl.first_seen().map(|t| (*l, t)))
            .collect()
    }
}

/// Incremental replay driver.
#[derive(Debug, Default)]
pub struct Replayer {
    state: RibState,
    timelines: TimelineSet,
    events: Vec<LinkEvent>,
    config: ReplayConfig,
}

impl Replayer {
    pub fn new(config: ReplayConfig) -> Self {
        Replayer { config, ..Default::default() }
    }

    pub fn state(&self) -> &RibState {
        &self.state
    }

    fn absorb(&mut self, events: Vec<LinkEvent>) {
        for ev in &events {
            self.timelines.record(ev);
        }
        if self.config.keep_events {
            self.events.extend(events);
        }
    }

    pub fn apply(&mut self, rec: &UpdateRecord) {
        let links = match &rec.action {
            Action::Announce(path) => Some(route_links(path, rec.peer.asn, self.config.asset_policy)),
            Action::Withdraw => None,
        };
        let announced = links.clone();
        let events = self.state.apply_route(rec.timestamp, rec.peer, rec.prefix, links);
        self.absorb(events);
        if let Some(links) = announced {
            self.timelines.note_announced(&links, self.state.clock());
        }
    }

    pub fn flush_peer(&mut self, peer: PeerId, t: Timestamp) {
        let events = self.state.flush_peer(peer, t);
        self.absorb(events);
    }

    /// Closes all intervals at `t_end` (or the clock, if later).
    pub fn finish(self, t_end: Timestamp) -> ReplayOutput {
        let t_end = t_end.max(self.state.clock);
        ReplayOutput {
            timelines: self.timelines.close(t_end),
            events: self.events,
            counters: self.state.counters,
            t_end,
        }
    }
}

pub fn replay<'a>(
    records: impl IntoIterator<Item = &'a UpdateRecord>,
    t_end: Timestamp,
    config: ReplayConfig,
) -> ReplayOutput {
    let mut r = Replayer::new(config);
    for rec in records {
        r.apply(rec);
    }
    r.finish(t_end)
}

/// Replay over a fallible record source; stops at the first error.
pub fn try_replay<E>(
    records: impl IntoIterator<Item = Result<UpdateRecord, E>>,
    t_end: Timestamp,
    config: ReplayConfig,
) -> Result<ReplayOutput, E> {
    let mut r = Replayer::new(config);
    for rec in records {
        r.apply(&rec?);
    }
    Ok(r.finish(t_end))
}

/// Replays each peer's records independently and unions the intervals.
///
/// Route state of different peers never interacts except through the
/// reference count, and a link is visible exactly when some peer carries it,
/// so the union equals sequential replay up to [`VisibilityTimeline::coalesce`].
/// Records must already be in non-decreasing timestamp order.
pub fn replay_by_peer(
    records: &[UpdateRecord],
    t_end: Timestamp,
    policy: AsSetPolicy,
) -> BTreeMap<Link, VisibilityTimeline> {
    let mut parts: BTreeMap<PeerId, Vec<&UpdateRecord>> = BTreeMap::new();
    for rec in records {
        parts.entry(rec.peer).or_default().push(rec);
    }
    let config = ReplayConfig { asset_policy: policy, keep_events: false };
    let per_peer: Vec<BTreeMap<Link, VisibilityTimeline>> = parts
        .into_par_iter()
        .map(|(_, recs)| replay(recs, t_end, config).timelines)
        .collect();
    per_peer.into_iter().fold(BTreeMap::new(), merge_timelines)
}

fn merge_timelines(
    mut acc: BTreeMap<Link, VisibilityTimeline>,
    part: BTreeMap<Link, VisibilityTimeline>,
) -> BTreeMap<Link, VisibilityTimeline> {
    for (link, tl) in part {
        match acc.get_mut(&link) {
            Some(cur) => {
                cur.intervals.extend(tl.intervals);
                cur.last_announced = cur.last_announced.max(tl.last_announced);
                cur.coalesce();
            }
            None => {
                let mut tl = tl;
                tl.coalesce();
                acc.insert(link, tl);
            }
        }
    }
    acc
}

#[derive(Debug, Error)]
pub enum EventLogError {
    #[error("line {line}: malformed event {text:?}")]
    Malformed { line: usize, text: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn write_event_log<'a, W: Write>(
    mut w: W,
    events: impl IntoIterator<Item = &'a LinkEvent>,
) -> io::Result<()> {
    for ev in events {
        writeln!(w, "{ev}")?;
    }
    Ok(())
}

pub fn parse_event_line(line: &str) -> Option<LinkEvent> {
    let mut it = line.split('|');
    let ts = it.next()?.parse().ok()?;
    let lo = it.next()?.parse().ok()?;
    let hi = it.next()?.parse().ok()?;
    let transition = match it.next()? {
        "U" => Transition::Up,
        "D" => Transition::Down,
        _ => return None,
    };
    if it.next().is_some() {
        return None;
    }
    let link = Link::new(lo, hi).filter(|l| l.lo() == lo)?;
    Some(LinkEvent { timestamp: ts, link, transition })
}

pub fn read_event_log<R: BufRead>(r: R) -> Result<Vec<LinkEvent>, EventLogError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            parse_event_line(&line)
                .ok_or_else(|| EventLogError::Malformed { line: i + 1, text: line.clone() })?,
        );
    }
    Ok(out)
}
