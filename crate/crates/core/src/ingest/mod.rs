//! Update and table-dump ingestion.
//!
//! Two decoders feed the rest of the pipeline: the canonical `|`-separated
//! text format ([`text`]) and binary MRT archives ([`mrt`]). Both produce the
//! same [`UpdateRecord`] / [`SnapshotEntry`] values, so nothing downstream
//! cares where a record came from.

use std::fmt;
use std::net::{IpAddr, Ipv4Addr, Ipv6Addr};
use std::str::FromStr;

use thiserror::Error;

pub mod mrt;
pub mod text;

/// AS number. 32-bit throughout; 16-bit archives are widened on decode.
pub type Asn = u32;

/// Whole seconds since the Unix epoch.
pub type Timestamp = u64;

/// What a decoder does when it hits a bad record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorPolicy {
    /// Yield the error and stop.
    #[default]
    Abort,
    /// Count the bad record and keep going.
    Skip,
}

/// A BGP session to the collector. One AS may hold several sessions, so the
/// address is part of the identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PeerId {
    pub asn: Asn,
    pub addr: IpAddr,
}

impl PeerId {
    pub fn new(asn: Asn, addr: IpAddr) -> Self {
        PeerId { asn, addr }
    }
}

impl fmt::Display for PeerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AS{}@{}", self.asn, self.addr)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PrefixError {
    #[error("missing '/' in prefix {0:?}")]
    MissingLength(String),
    #[error("bad prefix address {0:?}")]
    Address(String),
    #[error("bad prefix length {0:?}")]
    Length(String),
}

/// An IP prefix. IPv4 is the primary target; IPv6 is carried through where
/// the decoders see it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Prefix {
    addr: IpAddr,
    len: u8,
}

impl Prefix {
    /// The smallest prefix in sort order.
    pub const MIN: Prefix = Prefix { addr: IpAddr::V4(Ipv4Addr::UNSPECIFIED), len: 0 };

    /// Returns `None` when `len` exceeds the address width.
    pub fn new(addr: IpAddr, len: u8) -> Option<Self> {
        let max = match addr {
            IpAddr::V4(_) => 32,
            IpAddr::V6(_) => 128,
        };
        (len <= max).then_some(Prefix { addr, len })
    }

    pub fn v4(a: u8, b: u8, c: u8, d: u8, len: u8) -> Option<Self> {
        Self::new(IpAddr::V4(Ipv4Addr::new(a, b, c, d)), len)
    }

    pub fn addr(&self) -> IpAddr {
        self.addr
    }

    pub fn len(&self) -> u8 {
        self.len
    }

    pub fn is_ipv4(&self) -> bool {
        self.addr.is_ipv4()
    }
}

impl fmt::Display for Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.addr, self.len)
    }
}

impl FromStr for Prefix {
    type Err = PrefixError;

    /// Accepts full dotted quads as well as the abbreviated `205.162.1/24`
    /// form common in older dumps (missing octets are zero).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (addr, len) = s
            .split_once('/')
            .ok_or_else(|| PrefixError::MissingLength(s.to_string()))?;
        let len: u8 = len
            .parse()
            .map_err(|_| PrefixError::Length(s.to_string()))?;
        let addr = if addr.contains(':') {
            IpAddr::V6(
                Ipv6Addr::from_str(addr).map_err(|_| PrefixError::Address(s.to_string()))?,
            )
        } else {
            IpAddr::V4(parse_v4_abbrev(addr).ok_or_else(|| PrefixError::Address(s.to_string()))?)
        };
        Prefix::new(addr, len).ok_or_else(|| PrefixError::Length(s.to_string()))
    }
}

fn parse_v4_abbrev(s: &str) -> Option<Ipv4Addr> {
    let mut octets = [0u8; 4];
    for (n, part) in s.split('.').enumerate() {
        if n == 4 || part.is_empty() || !part.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        octets[n] = part.parse().ok()?;
    }
    Some(Ipv4Addr::from(octets))
}

/// One AS_PATH segment.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Segment {
    Sequence(Vec<Asn>),
    Set(Vec<Asn>),
}

impl Segment {
    pub fn asns(&self) -> &[Asn] {
        match self {
            Segment::Sequence(v) | Segment::Set(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("AS path has no segments")]
    Empty,
    #[error("AS path contains an empty segment")]
    EmptySegment,
}

/// A non-empty AS_PATH. Adjacent sequence segments are merged on
/// construction, so two paths that carry the same hops compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AsPath {
    segments: Vec<Segment>,
}

impl AsPath {
    pub fn new(segments: Vec<Segment>) -> Result<Self, PathError> {
        let mut merged: Vec<Segment> = Vec::with_capacity(segments.len());
        for seg in segments {
            if seg.asns().is_empty() {
                return Err(PathError::EmptySegment);
            }
            match (merged.last_mut(), seg) {
                (Some(Segment::Sequence(prev)), Segment::Sequence(next)) => prev.extend(next),
                (_, seg) => merged.push(seg),
            }
        }
        if merged.is_empty() {
            return Err(PathError::Empty);
        }
        Ok(AsPath { segments: merged })
    }

    /// A path made of a single sequence segment.
    pub fn sequence(asns: impl Into<Vec<Asn>>) -> Result<Self, PathError> {
        Self::new(vec![Segment::Sequence(asns.into())])
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Hop count as BGP counts it: each set counts as one hop.
    pub fn hop_count(&self) -> usize {
        self.segments
            .iter()
            .map(|s| match s {
                Segment::Sequence(v) => v.len(),
                Segment::Set(_) => 1,
            })
            .sum()
    }

    pub fn contains_set(&self) -> bool {
        self.segments.iter().any(|s| matches!(s, Segment::Set(_)))
    }
}

impl fmt::Display for AsPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for seg in &self.segments {
            match seg {
                Segment::Sequence(v) => {
                    for asn in v {
                        if !first {
                            f.write_str(" ")?;
                        }
                        write!(f, "{asn}")?;
                        first = false;
                    }
                }
                Segment::Set(v) => {
                    if !first {
                        f.write_str(" ")?;
                    }
                    f.write_str("{")?;
                    for (i, asn) in v.iter().enumerate() {
                        if i > 0 {
                            f.write_str(",")?;
                        }
                        write!(f, "{asn}")?;
                    }
                    f.write_str("}")?;
                    first = false;
                }
            }
        }
        Ok(())
    }
}

impl FromStr for AsPath {
    type Err = text::PathParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        text::parse_path(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Action {
    Announce(AsPath),
    Withdraw,
}

/// One announcement or withdrawal for one prefix, as received by the
/// collector from one peer.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UpdateRecord {
    pub timestamp: Timestamp,
    pub peer: PeerId,
    pub prefix: Prefix,
    pub action: Action,
}

impl UpdateRecord {
    pub fn announce(timestamp: Timestamp, peer: PeerId, prefix: Prefix, path: AsPath) -> Self {
        UpdateRecord { timestamp, peer, prefix, action: Action::Announce(path) }
    }

    pub fn withdraw(timestamp: Timestamp, peer: PeerId, prefix: Prefix) -> Self {
        UpdateRecord { timestamp, peer, prefix, action: Action::Withdraw }
    }

    pub fn path(&self) -> Option<&AsPath> {
        match &self.action {
            Action::Announce(p) => Some(p),
            Action::Withdraw => None,
        }
    }

    pub fn is_withdraw(&self) -> bool {
        matches!(self.action, Action::Withdraw)
    }
}

/// One route from a table dump.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SnapshotEntry {
    pub timestamp: Timestamp,
    pub peer: PeerId,
    pub prefix: Prefix,
    pub path: AsPath,
}

/// Either kind of MRT payload item.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MrtItem {
    Update(UpdateRecord),
    Snapshot(SnapshotEntry),
}
