//! Normalized Persistence and Normalized Lifetime.
//!
//! Both are ratios over the window from a link's first sighting to the end
//! of the measurement. NP is the visible time in that window; NL is the
//! span up to the last time the link was visible.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::{self, Write};

use crate::ingest::Timestamp;
use crate::path::Link;
use crate::rib::VisibilityTimeline;

/// Which instant counts as "last seen" for NL.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NlMode {
    /// End of the last visibility interval.
    #[default]
    VisibleEnd,
    /// Time of the last announcement carrying the link.
    LastAnnounce,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemporalStats {
    pub link: Link,
    pub first_seen: Timestamp,
    pub np: f64,
    pub nl: f64,
}

/// `tl` must already be closed at `t_end`. A link first seen at `t_end`
/// gets `np = nl = 1`.
pub fn compute_stats(tl: &VisibilityTimeline, t_end: Timestamp, mode: NlMode) -> TemporalStats {
    debug_assert!(tl.is_closed());
    let first_seen = tl.first_seen().unwrap_or(t_end);
    let window = t_end.saturating_sub(first_seen);
    if window == 0 {
        return TemporalStats { link: tl.link, first_seen, np: 1.0, nl: 1.0 };
    }
    let last = match mode {
        NlMode::VisibleEnd => tl.last_visible(),
        NlMode::LastAnnounce => tl.last_announced,
    }
    .unwrap_or(first_seen)
    .clamp(first_seen, t_end);
    TemporalStats {
        link: tl.link,
        first_seen,
        np: tl.visible_time() as f64 / window as f64,
        nl: (last - first_seen) as f64 / window as f64,
    }
}

pub fn compute_all<'a>(
    timelines: impl IntoIterator<Item = &'a VisibilityTimeline>,
    t_end: Timestamp,
    mode: NlMode,
) -> Vec<TemporalStats> {
    timelines.into_iter().map(|tl| compute_stats(tl, t_end, mode)).collect()
}

/// NP ranges used for the persistence table: `≤ 0.2`, `(0.2, 0.8)`, `≥ 0.8`.
pub const NP_BUCKETS: [&str; 3] = ["NP<=0.2", "0.2<NP<0.8", "NP>=0.8"];

pub fn np_bucket(np: f64) -> usize {
    if np <= 0.2 {
        0
    } else if np < 0.8 {
        1
    } else {
        2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NpColumn {
    pub counts: [usize; 3],
}

impl NpColumn {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Percentages of the column total; all zero for an empty column.
    pub fn percents(&self) -> [f64; 3] {
        let total = self.total();
        if total == 0 {
            return [0.0; 3];
        }
        self.counts.map(|c| 100.0 * c as f64 / total as f64)
    }
}

/// NP counts for links inside and outside a reference (table-dump) link set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NpTable {
    pub in_reference: NpColumn,
    pub outside: NpColumn,
}

pub fn bucket_np(stats: &[TemporalStats], reference: &BTreeSet<Link>) -> NpTable {
    let mut table = NpTable::default();
    for s in stats {
        let col = if reference.contains(&s.link) {
            &mut table.in_reference
        } else {
            &mut table.outside
        };
        col.counts[np_bucket(s.np)] += 1;
    }
    table
}

/// Formats a ratio with enough digits to round-trip in CSV output.
fn ratio(x: f64) -> String {
    let mut s = String::new();
    write!(s, "{x:.9}").unwrap();
    s
}

/// `lo,hi,first_seen,np,nl`, in the given order.
pub fn write_stats_csv<W: Write>(mut w: W, stats: &[TemporalStats]) -> io::Result<()> {
    writeln!(w, "lo,hi,first_seen,np,nl")?;
    for s in stats {
        writeln!(
            w,
            "{},{},{},{},{}",
            s.link.lo(),
            s.link.hi(),
            s.first_seen,
            ratio(s.np),
            ratio(s.nl)
        )?;
    }
    Ok(())
}

pub fn write_buckets_csv<W: Write>(mut w: W, table: &NpTable) -> io::Result<()> {
    writeln!(w, "range,btd_count,btd_percent,other_count,other_percent")?;
    let (bp, op) = (table.in_reference.percents(), table.outside.percents());
    for i in 0..3 {
        writeln!(
            w,
            "{},{},{:.1},{},{:.1}",
            NP_BUCKETS[i], table.in_reference.counts[i], bp[i], table.outside.counts[i], op[i]
        )?;
    }
    Ok(())
}
