//! AS-path normalization and AS-link extraction.
//!
//! A path is turned into a list of *runs*: maximal stretches of public ASNs
//! that were adjacent in an AS_SEQUENCE. Prepending is collapsed inside a
//! run. AS sets and private/reserved ASNs end a run, so no link is ever
//! inferred across them.

use std::fmt;

use crate::ingest::{AsPath, Asn, Segment};

/// True for ASNs that never denote a real public network: private-use
/// ranges, AS_TRANS and the reserved values 0, 65535, 4294967295.
pub fn is_reserved(asn: Asn) -> bool {
    matches!(asn, 0 | 23456 | 64512..=65535 | 4_200_000_000..=u32::MAX)
}

/// An undirected AS adjacency with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Link {
    lo: Asn,
    hi: Asn,
}

impl Link {
    /// Canonicalizes the endpoint order. `None` for self-links or reserved
    /// endpoints.
    pub fn new(a: Asn, b: Asn) -> Option<Link> {
        if a == b || is_reserved(a) || is_reserved(b) {
            return None;
        }
        Some(Link { lo: a.min(b), hi: a.max(b) })
    }

    pub fn lo(&self) -> Asn {
        self.lo
    }

    pub fn hi(&self) -> Asn {
        self.hi
    }

    pub fn other(&self, asn: Asn) -> Option<Asn> {
        if asn == self.lo {
            Some(self.hi)
        } else if asn == self.hi {
            Some(self.lo)
        } else {
            None
        }
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.lo, self.hi)
    }
}

/// How AS sets are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AsSetPolicy {
    /// A set breaks the path into separate runs.
    #[default]
    Run,
    /// A path containing any set contributes no links at all.
    DropPath,
}

/// A path after prepending collapse and filtering, as disjoint runs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NormalizedPath {
    runs: Vec<Vec<Asn>>,
}

impl NormalizedPath {
    pub fn runs(&self) -> &[Vec<Asn>] {
        &self.runs
    }

    /// All hops, runs concatenated.
    pub fn hops(&self) -> impl Iterator<Item = Asn> + '_ {
        self.runs.iter().flatten().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }
}

struct RunBuilder {
    runs: Vec<Vec<Asn>>,
    current: Vec<Asn>,
}

impl RunBuilder {
    fn push(&mut self, asn: Asn) {
        if is_reserved(asn) {
            self.cut();
        } else if self.current.last() != Some(&asn) {
            self.current.push(asn);
        }
    }

    fn cut(&mut self) {
        if !self.current.is_empty() {
            self.runs.push(std::mem::take(&mut self.current));
        }
    }

    fn finish(mut self) -> NormalizedPath {
        self.cut();
        NormalizedPath { runs: self.runs }
    }
}

/// Normalizes `path` as received from `peer_as`, with the default set policy.
pub fn normalize(path: &AsPath, peer_as: Asn) -> NormalizedPath {
    normalize_with(path, peer_as, AsSetPolicy::Run)
}

pub fn normalize_with(path: &AsPath, peer_as: Asn, policy: AsSetPolicy) -> NormalizedPath {
    if policy == AsSetPolicy::DropPath && path.contains_set() {
        return NormalizedPath::default();
    }
    let mut b = RunBuilder { runs: Vec::new(), current: Vec::new() };
    b.push(peer_as);
    for seg in path.segments() {
        match seg {
            Segment::Sequence(asns) => asns.iter().for_each(|&a| b.push(a)),
            Segment::Set(_) => b.cut(),
        }
    }
    b.finish()
}

/// One link per adjacent hop pair in each run, in path order. Repeats are
/// kept.
pub fn extract_links(path: &NormalizedPath) -> Vec<Link> {
    path.runs
        .iter()
        .flat_map(|run| run.windows(2))
        .map(|w| Link::new(w[0], w[1]).expect("runs hold distinct adjacent public ASNs"))
        .collect()
}

/// The links a route carries, each once, in order of first appearance.
pub fn route_links(path: &AsPath, peer_as: Asn, policy: AsSetPolicy) -> Vec<Link> {
    let mut links = extract_links(&normalize_with(path, peer_as, policy));
    let mut seen = std::collections::HashSet::with_capacity(links.len());
    links.retain(|l| seen.insert(*l));
    links
}
