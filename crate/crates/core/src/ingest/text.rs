//! Canonical text format.
//!
//! Updates:
//!
//! ```text
//! <unix_ts>|<peer_as>|<peer_ip>|A|<prefix>/<len>|<AS path>
//! <unix_ts>|<peer_as>|<peer_ip>|W|<prefix>/<len>
//! ```
//!
//! Table-dump entries drop the `A`/`W` column:
//!
//! ```text
//! <unix_ts>|<peer_as>|<peer_ip>|<prefix>/<len>|<AS path>
//! ```
//!
//! AS paths are space-separated; sets are written `{a,b,c}`.

use std::io::{self, BufRead, Write};
use std::marker::PhantomData;
use std::net::IpAddr;

use thiserror::Error;

use super::{
    Action, AsPath, Asn, ErrorPolicy, PathError, PeerId, Prefix, PrefixError, Segment,
    SnapshotEntry, UpdateRecord,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathParseError {
    #[error("bad AS number {0:?}")]
    Asn(String),
    #[error("unterminated AS set")]
    UnterminatedSet,
    #[error(transparent)]
    Path(#[from] PathError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LineError {
    #[error("expected {expected} fields, found {found}")]
    FieldCount { expected: &'static str, found: usize },
    #[error("bad timestamp {0:?}")]
    Timestamp(String),
    #[error("bad peer AS {0:?}")]
    PeerAs(String),
    #[error("bad peer address {0:?}")]
    PeerAddr(String),
    #[error("unknown record kind {0:?}")]
    Kind(String),
    #[error(transparent)]
    Prefix(#[from] PrefixError),
    #[error("announcement without AS path")]
    EmptyPath,
    #[error("withdrawal carries an AS path")]
    WithdrawPath,
    #[error(transparent)]
    Path(#[from] PathParseError),
}

#[derive(Debug, Error)]
pub enum TextError {
    #[error("line {line}: {source}")]
    Malformed { line: usize, source: LineError },
    #[error("line {line}: {source}")]
    Io { line: usize, source: io::Error },
}

impl TextError {
    pub fn line(&self) -> usize {
        match self {
            TextError::Malformed { line, .. } | TextError::Io { line, .. } => *line,
        }
    }
}

pub fn parse_path(s: &str) -> Result<AsPath, PathParseError> {
    let mut segments = Vec::new();
    let mut seq: Vec<Asn> = Vec::new();
    let mut rest = s.trim();
    while !rest.is_empty() {
        if let Some(after) = rest.strip_prefix('{') {
            let end = after.find('}').ok_or(PathParseError::UnterminatedSet)?;
            if !seq.is_empty() {
                segments.push(Segment::Sequence(std::mem::take(&mut seq)));
            }
            let members = after[..end]
                .split(',')
                .map(|t| parse_asn(t.trim()))
                .collect::<Result<Vec<_>, _>>()?;
            segments.push(Segment::Set(members));
            rest = after[end + 1..].trim_start();
        } else {
            let end = rest.find([' ', '{']).unwrap_or(rest.len());
            seq.push(parse_asn(&rest[..end])?);
            rest = rest[end..].trim_start();
        }
    }
    if !seq.is_empty() {
        segments.push(Segment::Sequence(seq));
    }
    Ok(AsPath::new(segments)?)
}

fn parse_asn(s: &str) -> Result<Asn, PathParseError> {
    // asdot ("1.10") shows up in some older text dumps
    if let Some((hi, lo)) = s.split_once('.') {
        let hi: u16 = hi.parse().map_err(|_| PathParseError::Asn(s.to_string()))?;
        let lo: u16 = lo.parse().map_err(|_| PathParseError::Asn(s.to_string()))?;
        return Ok(((hi as u32) << 16) | lo as u32);
    }
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return Err(PathParseError::Asn(s.to_string()));
    }
    s.parse().map_err(|_| PathParseError::Asn(s.to_string()))
}

fn parse_peer(ts: &str, asn: &str, addr: &str) -> Result<(u64, PeerId), LineError> {
    let ts = ts.parse().map_err(|_| LineError::Timestamp(ts.to_string()))?;
    let asn = asn.parse().map_err(|_| LineError::PeerAs(asn.to_string()))?;
    let addr: IpAddr = addr.parse().map_err(|_| LineError::PeerAddr(addr.to_string()))?;
    Ok((ts, PeerId::new(asn, addr)))
}

pub fn parse_update_line(line: &str) -> Result<UpdateRecord, LineError> {
    let fields: Vec<&str> = line.split('|').collect();
    if fields.len() != 5 && fields.len() != 6 {
        return Err(LineError::FieldCount { expected: "5 or 6", found: fields.len() });
    }
    let (timestamp, peer) = parse_peer(fields[0], fields[1], fields[2])?;
    let prefix: Prefix = fields[4].parse()?;
    let action = match fields[3] {
        "A" => {
            let path = fields.get(5).map(|s| s.trim()).unwrap_or("");
            if path.is_empty() {
                return Err(LineError::EmptyPath);
            }
            Action::Announce(parse_path(path)?)
        }
        "W" => {
            if fields.len() == 6 && !fields[5].trim().is_empty() {
                return Err(LineError::WithdrawPath);
            }
            Action::Withdraw
        }
        other => return Err(LineError::Kind(other.to_string())),
    };
    Ok(UpdateRecord { timestamp, peer, prefix, action })
}

pub fn parse_snapshot_line(line: &str) -> Result<SnapshotEntry, LineError> {
    let fields: Vec<&str> = line.split('|').collect();
    if fields.len() != 5 {
        return Err(LineError::FieldCount { expected: "5", found: fields.len() });
    }
    let (timestamp, peer) = parse_peer(fields[0], fields[1], fields[2])?;
    let prefix: Prefix = fields[3].parse()?;
    let path = fields[4].trim();
    if path.is_empty() {
        return Err(LineError::EmptyPath);
    }
    Ok(SnapshotEntry { timestamp, peer, prefix, path: parse_path(path)? })
}

pub fn format_update(rec: &UpdateRecord) -> String {
    let head = format!("{}|{}|{}", rec.timestamp, rec.peer.asn, rec.peer.addr);
    match &rec.action {
        Action::Announce(path) => format!("{head}|A|{}|{path}", rec.prefix),
        Action::Withdraw => format!("{head}|W|{}", rec.prefix),
    }
}

pub fn format_snapshot(entry: &SnapshotEntry) -> String {
    format!(
        "{}|{}|{}|{}|{}",
        entry.timestamp, entry.peer.asn, entry.peer.addr, entry.prefix, entry.path
    )
}

/// Writes one line per record.
pub fn write_updates<'a, W: Write>(
    mut w: W,
    records: impl IntoIterator<Item = &'a UpdateRecord>,
) -> io::Result<()> {
    for rec in records {
        writeln!(w, "{}", format_update(rec))?;
    }
    Ok(())
}

pub fn write_snapshots<'a, W: Write>(
    mut w: W,
    entries: impl IntoIterator<Item = &'a SnapshotEntry>,
) -> io::Result<()> {
    for e in entries {
        writeln!(w, "{}", format_snapshot(e))?;
    }
    Ok(())
}

/// Line-oriented decoder shared by the update and snapshot formats. Blank
/// lines are ignored.
pub struct LineReader<R, T> {
    input: R,
    parse: fn(&str) -> Result<T, LineError>,
    policy: ErrorPolicy,
    line_no: usize,
    skipped: usize,
    done: bool,
    buf: String,
    _item: PhantomData<T>,
}

pub type UpdateReader<R> = LineReader<R, UpdateRecord>;
pub type SnapshotReader<R> = LineReader<R, SnapshotEntry>;

pub fn update_reader<R: BufRead>(input: R, policy: ErrorPolicy) -> UpdateReader<R> {
    LineReader::new(input, parse_update_line, policy)
}

pub fn snapshot_reader<R: BufRead>(input: R, policy: ErrorPolicy) -> SnapshotReader<R> {
    LineReader::new(input, parse_snapshot_line, policy)
}

impl<R: BufRead, T> LineReader<R, T> {
    pub fn new(input: R, parse: fn(&str) -> Result<T, LineError>, policy: ErrorPolicy) -> Self {
        LineReader {
            input,
            parse,
            policy,
            line_no: 0,
            skipped: 0,
            done: false,
            buf: String::new(),
            _item: PhantomData,
        }
    }

    /// Malformed lines dropped under [`ErrorPolicy::Skip`].
    pub fn skipped(&self) -> usize {
        self.skipped
    }
}

impl<R: BufRead, T> Iterator for LineReader<R, T> {
    type Item = Result<T, TextError>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            self.buf.clear();
            self.line_no += 1;
            match self.input.read_line(&mut self.buf) {
                Ok(0) => {
                    self.done = true;
                    return None;
                }
                Ok(_) => {}
                Err(source) => {
                    self.done = true;
                    return Some(Err(TextError::Io { line: self.line_no, source }));
                }
            }
            let line = self.buf.trim_end_matches(['\n', '\r']);
            if line.trim().is_empty() {
                continue;
            }
            match (self.parse)(line) {
                Ok(item) => return Some(Ok(item)),
                Err(source) => match self.policy {
                    ErrorPolicy::Skip => self.skipped += 1,
                    ErrorPolicy::Abort => {
                        self.done = true;
                        return Some(Err(TextError::Malformed { line: self.line_no, source }));
                    }
                },
            }
        }
        None
    }
}
