//! Session-reset inference for the collector's direct peers.
//!
//! Two triggers, combined:
//!
//! * **Surge**: within a sliding window of `window_s` seconds a peer updates
//!   more unique prefixes than `surge_fraction` of the prefixes it held when
//!   the window opened. A re-established session re-sends its whole table,
//!   which looks exactly like this.
//! * **Inactivity**: a peer that has sent updates goes silent for longer than
//!   `inactivity_t`.
//!
//! Detection runs as its own pass over the stream and only looks at the
//! updates, never at replay state, so the event list is a pure function of
//! the stream and the parameters. Each event carries the stream position it
//! applies before; [`replay_with_events`] flushes the peer there.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::io::{self, Write};

use thiserror::Error;

use crate::ingest::{Action, PeerId, Prefix, Timestamp, UpdateRecord};
use crate::rib::{ReplayConfig, ReplayOutput, Replayer};

/// What counts as a peer's "known prefixes" for the surge baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Baseline {
    /// Prefixes the peer currently has announced.
    #[default]
    CurrentlyHeld,
    /// Every prefix the peer has ever announced.
    EverSeen,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResetParams {
    pub window_s: u64,
    pub surge_fraction: f64,
    pub inactivity_t: u64,
    /// Surges are only considered once the baseline holds this many prefixes.
    pub min_baseline: usize,
    pub baseline: Baseline,
}

impl Default for ResetParams {
    fn default() -> Self {
        ResetParams {
            window_s: 4,
            surge_fraction: 0.8,
            inactivity_t: 240,
            min_baseline: 10,
            baseline: Baseline::CurrentlyHeld,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResetParamsError {
    #[error("surge window must be positive")]
    Window,
    #[error("surge fraction {0} outside (0, 1]")]
    Fraction(f64),
    #[error("inactivity threshold {t}s must exceed the surge window {s}s")]
    Inactivity { t: u64, s: u64 },
}

impl ResetParams {
    pub fn validate(&self) -> Result<(), ResetParamsError> {
        if self.window_s == 0 {
            return Err(ResetParamsError::Window);
        }
        if !(self.surge_fraction > 0.0 && self.surge_fraction <= 1.0) {
            return Err(ResetParamsError::Fraction(self.surge_fraction));
        }
        if self.inactivity_t <= self.window_s {
            return Err(ResetParamsError::Inactivity { t: self.inactivity_t, s: self.window_s });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ResetCause {
    Surge,
    Inactivity,
}

impl fmt::Display for ResetCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ResetCause::Surge => "surge",
            ResetCause::Inactivity => "inactivity",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ResetEvent {
    /// Index of the first record the flush precedes.
    pub position: usize,
    pub timestamp: Timestamp,
    pub cause: ResetCause,
    pub peer: PeerId,
}

struct WindowEntry {
    ts: Timestamp,
    prefix: Prefix,
    baseline: usize,
    index: usize,
}

#[derive(Default)]
struct PeerState {
    held: HashSet<Prefix>,
    ever: HashSet<Prefix>,
    window: VecDeque<WindowEntry>,
    in_window: HashMap<Prefix, u32>,
    last_surge: Option<Timestamp>,
    deadline: Option<Timestamp>,
}

/// Streaming detector; feed records in replay order.
pub struct ResetDetector {
    params: ResetParams,
    peers: HashMap<PeerId, PeerState>,
    deadlines: BTreeSet<(Timestamp, PeerId)>,
    events: Vec<ResetEvent>,
    clock: Timestamp,
    index: usize,
}

impl ResetDetector {
    pub fn new(params: ResetParams) -> Result<Self, ResetParamsError> {
        params.validate()?;
        Ok(ResetDetector {
            params,
            peers: HashMap::new(),
            deadlines: BTreeSet::new(),
            events: Vec::new(),
            clock: 0,
            index: 0,
        })
    }

    fn expire_silent(&mut self, now: Timestamp) {
        while let Some(&(deadline, peer)) = self.deadlines.first() {
            if deadline >= now {
                break;
            }
            self.deadlines.pop_first();
            if let Some(st) = self.peers.get_mut(&peer) {
                st.deadline = None;
            }
            self.events.push(ResetEvent {
                position: self.index,
                timestamp: deadline,
                cause: ResetCause::Inactivity,
                peer,
            });
        }
    }

    pub fn observe(&mut self, rec: &UpdateRecord) {
        let now = rec.timestamp.max(self.clock);
        self.clock = now;
        self.expire_silent(now);

        let params = self.params;
        let st = self.peers.entry(rec.peer).or_default();
        let baseline = match params.baseline {
            Baseline::CurrentlyHeld => st.held.len(),
            Baseline::EverSeen => st.ever.len(),
        };
        match rec.action {
            Action::Announce(_) => {
                st.held.insert(rec.prefix);
                if params.baseline == Baseline::EverSeen {
                    st.ever.insert(rec.prefix);
                }
            }
            Action::Withdraw => {
                st.held.remove(&rec.prefix);
            }
        }

        if let Some(d) = st.deadline.take() {
            self.deadlines.remove(&(d, rec.peer));
        }
        let deadline = now + params.inactivity_t;
        st.deadline = Some(deadline);
        self.deadlines.insert((deadline, rec.peer));

        st.window.push_back(WindowEntry { ts: now, prefix: rec.prefix, baseline, index: self.index });
        *st.in_window.entry(rec.prefix).or_insert(0) += 1;
        while let Some(front) = st.window.front() {
            if front.ts + params.window_s > now {
                break;
            }
            let front = st.window.pop_front().unwrap();
            let n = st.in_window.get_mut(&front.prefix).unwrap();
            *n -= 1;
            if *n == 0 {
                st.in_window.remove(&front.prefix);
            }
        }

        let front = st.window.front().expect("current record is in the window");
        let cooled = st.last_surge.is_none_or(|t| front.ts >= t + params.window_s);
        if cooled
            && front.baseline >= params.min_baseline
            && st.in_window.len() as f64 > params.surge_fraction * front.baseline as f64
        {
            st.last_surge = Some(front.ts);
            self.events.push(ResetEvent {
                position: front.index,
                timestamp: front.ts,
                cause: ResetCause::Surge,
                peer: rec.peer,
            });
        }
        self.index += 1;
    }

    /// Emits inactivity events still pending at `t_end` and returns all
    /// events ordered by stream position.
    pub fn finish(mut self, t_end: Option<Timestamp>) -> Vec<ResetEvent> {
        if let Some(t) = t_end {
            self.expire_silent(t.max(self.clock));
        }
        self.events.sort();
        self.events
    }
}

pub fn detect<'a>(
    records: impl IntoIterator<Item = &'a UpdateRecord>,
    params: ResetParams,
    t_end: Option<Timestamp>,
) -> Result<Vec<ResetEvent>, ResetParamsError> {
    let mut d = ResetDetector::new(params)?;
    for rec in records {
        d.observe(rec);
    }
    Ok(d.finish(t_end))
}

/// Replays `records`, flushing each event's peer right before the record at
/// the event's position. `events` must be sorted by position.
pub fn replay_with_events<R: std::borrow::Borrow<UpdateRecord>, E>(
    records: impl IntoIterator<Item = Result<R, E>>,
    events: &[ResetEvent],
    t_end: Timestamp,
    config: ReplayConfig,
) -> Result<ReplayOutput, E> {
    let mut replayer = Replayer::new(config);
    let mut pending = events.iter().peekable();
    for (i, rec) in records.into_iter().enumerate() {
        let rec = rec?;
        while let Some(ev) = pending.next_if(|ev| ev.position <= i) {
            replayer.flush_peer(ev.peer, ev.timestamp);
        }
        replayer.apply(rec.borrow());
    }
    for ev in pending {
        replayer.flush_peer(ev.peer, ev.timestamp.min(t_end));
    }
    Ok(replayer.finish(t_end))
}

/// Replay with optional detection. With `params = None` this is plain
/// replay.
pub fn replay_with_detection(
    records: &[UpdateRecord],
    params: Option<ResetParams>,
    t_end: Timestamp,
    config: ReplayConfig,
) -> Result<(ReplayOutput, Vec<ResetEvent>), ResetParamsError> {
    let events = match params {
        Some(p) => detect(records, p, Some(t_end))?,
        None => Vec::new(),
    };
    let out = replay_with_events(records.iter().map(Ok::<_, std::convert::Infallible>), &events, t_end, config)
        .unwrap_or_else(|e| match e {});
    Ok((out, events))
}

/// `ts,peer_as,peer_ip,cause`
pub fn write_events_csv<W: Write>(mut w: W, events: &[ResetEvent]) -> io::Result<()> {
    writeln!(w, "ts,peer_as,peer_ip,cause")?;
    for ev in events {
        writeln!(w, "{},{},{},{}", ev.timestamp, ev.peer.asn, ev.peer.addr, ev.cause)?;
    }
    Ok(())
}
