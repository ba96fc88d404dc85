//! MRT archive decoding (RFC 6396) and a small encoder used to build
//! fixtures.
//!
//! Supported record types:
//!
//! * `BGP4MP` / `BGP4MP_ET` update messages, 16- and 32-bit AS variants
//!   (including the `_LOCAL` subtypes).
//! * `TABLE_DUMP` (the legacy format used by 2003-era RouteViews dumps).
//! * `TABLE_DUMP_V2` peer index tables and unicast RIB entries.
//!
//! Everything else is skipped and counted in [`MrtStats`].

use std::collections::VecDeque;
use std::io::{self, Read, Write};
use std::net::{IpAddr, Ipv4Addr, Ipv6Addr};

use thiserror::Error;

use super::{
    Action, AsPath, Asn, ErrorPolicy, MrtItem, PeerId, Prefix, Segment, SnapshotEntry, Timestamp,
    UpdateRecord,
};

const TABLE_DUMP: u16 = 12;
const TABLE_DUMP_V2: u16 = 13;
const BGP4MP: u16 = 16;
const BGP4MP_ET: u16 = 17;

const BGP4MP_STATE_CHANGE: u16 = 0;
const BGP4MP_MESSAGE: u16 = 1;
const BGP4MP_MESSAGE_AS4: u16 = 4;
const BGP4MP_STATE_CHANGE_AS4: u16 = 5;
const BGP4MP_MESSAGE_LOCAL: u16 = 6;
const BGP4MP_MESSAGE_AS4_LOCAL: u16 = 7;

const PEER_INDEX_TABLE: u16 = 1;
const RIB_IPV4_UNICAST: u16 = 2;
const RIB_IPV6_UNICAST: u16 = 4;

const ATTR_AS_PATH: u8 = 2;
const ATTR_MP_REACH_NLRI: u8 = 14;
const ATTR_MP_UNREACH_NLRI: u8 = 15;
const ATTR_AS4_PATH: u8 = 17;

const AS_SET: u8 = 1;
const AS_SEQUENCE: u8 = 2;
const AS_CONFED_SEQUENCE: u8 = 3;
const AS_CONFED_SET: u8 = 4;

const BGP_UPDATE: u8 = 2;
const AS_TRANS: Asn = 23456;

#[derive(Debug, Error)]
pub enum MrtError {
    #[error("offset {offset}: record truncated (needed {needed} bytes, {available} available)")]
    Truncated { offset: u64, needed: u64, available: u64 },
    #[error("offset {offset}: malformed record: {reason}")]
    Malformed { offset: u64, reason: String },
    #[error("offset {offset}: {source}")]
    Io { offset: u64, source: io::Error },
}

impl MrtError {
    pub fn offset(&self) -> u64 {
        match self {
            MrtError::Truncated { offset, .. }
            | MrtError::Malformed { offset, .. }
            | MrtError::Io { offset, .. } => *offset,
        }
    }
}

/// Counters for everything the reader saw but did not turn into items.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MrtStats {
    pub records: u64,
    pub unknown_records: u64,
    pub state_changes: u64,
    pub non_update_messages: u64,
    /// NLRI announced without an AS_PATH, or with an empty one (iBGP).
    pub pathless_announcements: u64,
    /// Records dropped under [`ErrorPolicy::Skip`].
    pub skipped_errors: u64,
}

struct Buf<'a> {
    data: &'a [u8],
    pos: usize,
}

type BufResult<T> = Result<T, String>;

impl<'a> Buf<'a> {
    fn new(data: &'a [u8]) -> Self {
        Buf { data, pos: 0 }
    }

    fn remaining(&self) -> usize {
        self.data.len() - self.pos
    }

    fn take(&mut self, n: usize) -> BufResult<&'a [u8]> {
        if self.remaining() < n {
            return Err(format!(
                "need {n} bytes at body offset {}, {} left",
                self.pos,
                self.remaining()
            ));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> BufResult<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> BufResult<u16> {
        let b = self.take(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> BufResult<u32> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn asn(&mut self, four: bool) -> BufResult<Asn> {
        if four {
            self.u32()
        } else {
            Ok(self.u16()? as Asn)
        }
    }

    fn addr(&mut self, v6: bool) -> BufResult<IpAddr> {
        if v6 {
            let b: [u8; 16] = self.take(16)?.try_into().unwrap();
            Ok(IpAddr::V6(Ipv6Addr::from(b)))
        } else {
            let b: [u8; 4] = self.take(4)?.try_into().unwrap();
            Ok(IpAddr::V4(Ipv4Addr::from(b)))
        }
    }

    fn sub(&mut self, n: usize) -> BufResult<Buf<'a>> {
        Ok(Buf::new(self.take(n)?))
    }

    /// Length-prefixed NLRI prefix.
    fn prefix(&mut self, v6: bool) -> BufResult<Prefix> {
        let len = self.u8()?;
        let max = if v6 { 128 } else { 32 };
        if len > max {
            return Err(format!("prefix length {len} exceeds {max}"));
        }
        let bytes = self.take((len as usize).div_ceil(8))?;
        let addr = if v6 {
            let mut b = [0u8; 16];
            b[..bytes.len()].copy_from_slice(bytes);
            IpAddr::V6(Ipv6Addr::from(b))
        } else {
            let mut b = [0u8; 4];
            b[..bytes.len()].copy_from_slice(bytes);
            IpAddr::V4(Ipv4Addr::from(b))
        };
        Ok(Prefix::new(addr, len).expect("length checked"))
    }
}

#[derive(Debug, Default)]
struct Attributes {
    as_path: Option<Vec<Segment>>,
    as4_path: Option<Vec<Segment>>,
    mp_reach: Vec<Prefix>,
    mp_unreach: Vec<Prefix>,
}

fn parse_segments(buf: &mut Buf<'_>, four: bool) -> BufResult<Vec<Segment>> {
    let mut segments = Vec::new();
    while buf.remaining() > 0 {
        let kind = buf.u8()?;
        let count = buf.u8()? as usize;
        let asns = (0..count).map(|_| buf.asn(four)).collect::<BufResult<Vec<_>>>()?;
        if asns.is_empty() {
            continue;
        }
        segments.push(match kind {
            AS_SEQUENCE => Segment::Sequence(asns),
            // confederation segments never carry inter-AS adjacency
            AS_SET | AS_CONFED_SET | AS_CONFED_SEQUENCE => Segment::Set(asns),
            other => return Err(format!("unknown AS path segment type {other}")),
        });
    }
    Ok(segments)
}

fn parse_mp_nlri(buf: &mut Buf<'_>, reach: bool) -> BufResult<Vec<Prefix>> {
    let afi = buf.u16()?;
    let safi = buf.u8()?;
    if reach {
        let nh_len = buf.u8()? as usize;
        buf.take(nh_len)?;
        buf.u8()?;
    }
    if safi != 1 || (afi != 1 && afi != 2) {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    while buf.remaining() > 0 {
        out.push(buf.prefix(afi == 2)?);
    }
    Ok(out)
}

fn parse_attributes(mut buf: Buf<'_>, four: bool, with_mp: bool) -> BufResult<Attributes> {
    let mut attrs = Attributes::default();
    while buf.remaining() > 0 {
        let flags = buf.u8()?;
        let kind = buf.u8()?;
        let len = if flags & 0x10 != 0 { buf.u16()? as usize } else { buf.u8()? as usize };
        let mut body = buf.sub(len)?;
        match kind {
            ATTR_AS_PATH => attrs.as_path = Some(parse_segments(&mut body, four)?),
            ATTR_AS4_PATH => attrs.as4_path = Some(parse_segments(&mut body, true)?),
            ATTR_MP_REACH_NLRI if with_mp => attrs.mp_reach = parse_mp_nlri(&mut body, true)?,
            ATTR_MP_UNREACH_NLRI if with_mp => {
                attrs.mp_unreach = parse_mp_nlri(&mut body, false)?
            }
            _ => {}
        }
    }
    Ok(attrs)
}

/// Reconstructs the 32-bit path of a 16-bit session (RFC 6793, section 4.2.3).
fn merge_as4(as_path: Vec<Segment>, as4_path: Option<Vec<Segment>>) -> Vec<Segment> {
    let Some(as4) = as4_path else { return as_path };
    let hops = |segs: &[Segment]| -> usize {
        segs.iter()
            .map(|s| match s {
                Segment::Sequence(v) => v.len(),
                Segment::Set(_) => 1,
            })
            .sum()
    };
    let n = hops(&as_path);
    let m = hops(&as4);
    if m > n {
        return as_path;
    }
    let mut keep = n - m;
    let mut out = Vec::new();
    for seg in as_path {
        if keep == 0 {
            break;
        }
        match seg {
            Segment::Sequence(mut v) => {
                v.truncate(keep);
                keep -= v.len();
                out.push(Segment::Sequence(v));
            }
            set @ Segment::Set(_) => {
                keep -= 1;
                out.push(set);
            }
        }
    }
    out.extend(as4);
    out
}

fn to_path(segments: Vec<Segment>) -> Option<AsPath> {
    AsPath::new(segments).ok()
}

/// Streaming MRT decoder. Yields items in file order.
pub struct MrtReader<R> {
    input: R,
    policy: ErrorPolicy,
    offset: u64,
    pending: VecDeque<MrtItem>,
    peer_table: Vec<PeerId>,
    stats: MrtStats,
    done: bool,
}

impl<R: Read> MrtReader<R> {
    pub fn new(input: R, policy: ErrorPolicy) -> Self {
        MrtReader {
            input,
            policy,
            offset: 0,
            pending: VecDeque::new(),
            peer_table: Vec::new(),
            stats: MrtStats::default(),
            done: false,
        }
    }

    pub fn stats(&self) -> &MrtStats {
        &self.stats
    }

    /// Fills `buf` as far as the input allows; returns the byte count read.
    fn fill(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let mut got = 0;
        while got < buf.len() {
            match self.input.read(&mut buf[got..]) {
                Ok(0) => break,
                Ok(n) => got += n,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                Err(e) => return Err(e),
            }
        }
        Ok(got)
    }

    fn read_record(&mut self) -> Result<bool, MrtError> {
        let start = self.offset;
        let mut header = [0u8; 12];
        let got = self.fill(&mut header).map_err(|source| MrtError::Io { offset: start, source })?;
        if got == 0 {
            return Ok(false);
        }
        self.offset += got as u64;
        if got < 12 {
            return Err(MrtError::Truncated { offset: start, needed: 12, available: got as u64 });
        }
        let ts = u32::from_be_bytes(header[0..4].try_into().unwrap()) as Timestamp;
        let kind = u16::from_be_bytes([header[4], header[5]]);
        let subtype = u16::from_be_bytes([header[6], header[7]]);
        let len = u32::from_be_bytes(header[8..12].try_into().unwrap()) as usize;
        let mut body = vec![0u8; len];
        let got = self.fill(&mut body).map_err(|source| MrtError::Io { offset: start, source })?;
        self.offset += got as u64;
        if got < len {
            return Err(MrtError::Truncated {
                offset: start,
                needed: 12 + len as u64,
                available: 12 + got as u64,
            });
        }
        self.stats.records += 1;
        self.decode(ts, kind, subtype, &body)
            .map_err(|reason| MrtError::Malformed { offset: start, reason })?;
        Ok(true)
    }

    fn decode(&mut self, ts: Timestamp, kind: u16, subtype: u16, body: &[u8]) -> BufResult<()> {
        let mut buf = Buf::new(body);
        match kind {
            BGP4MP | BGP4MP_ET => {
                if kind == BGP4MP_ET {
                    buf.u32()?;
                }
                match subtype {
                    BGP4MP_MESSAGE | BGP4MP_MESSAGE_LOCAL => self.bgp4mp_message(ts, buf, false),
                    BGP4MP_MESSAGE_AS4 | BGP4MP_MESSAGE_AS4_LOCAL => {
                        self.bgp4mp_message(ts, buf, true)
                    }
                    BGP4MP_STATE_CHANGE | BGP4MP_STATE_CHANGE_AS4 => {
                        self.stats.state_changes += 1;
                        Ok(())
                    }
                    _ => {
                        self.stats.unknown_records += 1;
                        Ok(())
                    }
                }
            }
            TABLE_DUMP => match subtype {
                1 | 2 => self.table_dump_v1(buf, subtype == 2),
                _ => {
                    self.stats.unknown_records += 1;
                    Ok(())
                }
            },
            TABLE_DUMP_V2 => match subtype {
                PEER_INDEX_TABLE => self.peer_index(buf),
                RIB_IPV4_UNICAST | RIB_IPV6_UNICAST => {
                    self.rib_entries(ts, buf, subtype == RIB_IPV6_UNICAST)
                }
                _ => {
                    self.stats.unknown_records += 1;
                    Ok(())
                }
            },
            _ => {
                self.stats.unknown_records += 1;
                Ok(())
            }
        }
    }

    fn bgp4mp_message(&mut self, ts: Timestamp, mut buf: Buf<'_>, four: bool) -> BufResult<()> {
        let peer_as = buf.asn(four)?;
        let _local_as = buf.asn(four)?;
        let _ifindex = buf.u16()?;
        let afi = buf.u16()?;
        let v6 = match afi {
            1 => false,
            2 => true,
            other => return Err(format!("unknown address family {other}")),
        };
        let peer_addr = buf.addr(v6)?;
        let _local_addr = buf.addr(v6)?;
        let peer = PeerId::new(peer_as, peer_addr);

        buf.take(16)?;
        let msg_len = buf.u16()? as usize;
        let msg_type = buf.u8()?;
        if msg_type != BGP_UPDATE {
            self.stats.non_update_messages += 1;
            return Ok(());
        }
        if msg_len < 19 {
            return Err(format!("BGP message length {msg_len} below header size"));
        }
        let mut msg = buf.sub(msg_len - 19)?;

        let wlen = msg.u16()? as usize;
        let mut wbuf = msg.sub(wlen)?;
        let mut withdrawn = Vec::new();
        while wbuf.remaining() > 0 {
            withdrawn.push(wbuf.prefix(false)?);
        }
        let alen = msg.u16()? as usize;
        let attrs = parse_attributes(msg.sub(alen)?, four, true)?;
        let mut nlri = Vec::new();
        while msg.remaining() > 0 {
            nlri.push(msg.prefix(false)?);
        }
        withdrawn.extend(attrs.mp_unreach);
        nlri.extend(attrs.mp_reach);

        for prefix in withdrawn {
            self.pending.push_back(MrtItem::Update(UpdateRecord {
                timestamp: ts,
                peer,
                prefix,
                action: Action::Withdraw,
            }));
        }
        if nlri.is_empty() {
            return Ok(());
        }
        let path = attrs.as_path.map(|p| if four { p } else { merge_as4(p, attrs.as4_path) });
        match path.and_then(to_path) {
            Some(path) => {
                for prefix in nlri {
                    self.pending.push_back(MrtItem::Update(UpdateRecord {
                        timestamp: ts,
                        peer,
                        prefix,
                        action: Action::Announce(path.clone()),
                    }));
                }
            }
            None => self.stats.pathless_announcements += nlri.len() as u64,
        }
        Ok(())
    }

    fn table_dump_v1(&mut self, mut buf: Buf<'_>, v6: bool) -> BufResult<()> {
        let _view = buf.u16()?;
        let _seq = buf.u16()?;
        let addr = buf.addr(v6)?;
        let len = buf.u8()?;
        let prefix = Prefix::new(addr, len).ok_or_else(|| format!("bad prefix length {len}"))?;
        let _status = buf.u8()?;
        let orig = buf.u32()? as Timestamp;
        let peer_addr = buf.addr(v6)?;
        let peer_as = buf.u16()? as Asn;
        let alen = buf.u16()? as usize;
        let attrs = parse_attributes(buf.sub(alen)?, false, false)?;
        let path = attrs.as_path.map(|p| merge_as4(p, attrs.as4_path));
        match path.and_then(to_path) {
            Some(path) => self.pending.push_back(MrtItem::Snapshot(SnapshotEntry {
                timestamp: orig,
                peer: PeerId::new(peer_as, peer_addr),
                prefix,
                path,
            })),
            None => self.stats.pathless_announcements += 1,
        }
        Ok(())
    }

    fn peer_index(&mut self, mut buf: Buf<'_>) -> BufResult<()> {
        let _collector = buf.u32()?;
        let name_len = buf.u16()? as usize;
        buf.take(name_len)?;
        let count = buf.u16()?;
        self.peer_table.clear();
        for _ in 0..count {
            let kind = buf.u8()?;
            let _bgp_id = buf.u32()?;
            let addr = buf.addr(kind & 0x01 != 0)?;
            let asn = buf.asn(kind & 0x02 != 0)?;
            self.peer_table.push(PeerId::new(asn, addr));
        }
        Ok(())
    }

    fn rib_entries(&mut self, ts: Timestamp, mut buf: Buf<'_>, v6: bool) -> BufResult<()> {
        let _seq = buf.u32()?;
        let prefix = buf.prefix(v6)?;
        let count = buf.u16()?;
        for _ in 0..count {
            let idx = buf.u16()? as usize;
            let _orig = buf.u32()?;
            let alen = buf.u16()? as usize;
            let attrs = parse_attributes(buf.sub(alen)?, true, false)?;
            let peer = *self
                .peer_table
                .get(idx)
                .ok_or_else(|| format!("peer index {idx} outside peer table"))?;
            match attrs.as_path.and_then(to_path) {
                Some(path) => self.pending.push_back(MrtItem::Snapshot(SnapshotEntry {
                    timestamp: ts,
                    peer,
                    prefix,
                    path,
                })),
                None => self.stats.pathless_announcements += 1,
            }
        }
        Ok(())
    }
}

impl<R: Read> Iterator for MrtReader<R> {
    type Item = Result<MrtItem, MrtError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if let Some(item) = self.pending.pop_front() {
                return Some(Ok(item));
            }
            if self.done {
                return None;
            }
            match self.read_record() {
                Ok(true) => {}
                Ok(false) => self.done = true,
                Err(e) => {
                    let fatal = !matches!(e, MrtError::Malformed { .. });
                    if fatal || self.policy == ErrorPolicy::Abort {
                        self.done = true;
                    }
                    match self.policy {
                        ErrorPolicy::Abort => return Some(Err(e)),
                        ErrorPolicy::Skip => self.stats.skipped_errors += 1,
                    }
                }
            }
        }
    }
}

/// Encoder for the subset of MRT the reader understands.
pub struct MrtWriter<W> {
    out: W,
    local_as: Asn,
}

fn encode_prefix(out: &mut Vec<u8>, p: &Prefix) {
    out.push(p.len());
    let n = (p.len() as usize).div_ceil(8);
    match p.addr() {
        IpAddr::V4(a) => out.extend_from_slice(&a.octets()[..n]),
        IpAddr::V6(a) => out.extend_from_slice(&a.octets()[..n]),
    }
}

fn encode_addr(out: &mut Vec<u8>, a: &IpAddr) {
    match a {
        IpAddr::V4(a) => out.extend_from_slice(&a.octets()),
        IpAddr::V6(a) => out.extend_from_slice(&a.octets()),
    }
}

fn encode_attr(out: &mut Vec<u8>, flags: u8, kind: u8, body: &[u8]) {
    if body.len() > 255 {
        out.extend_from_slice(&[flags | 0x10, kind]);
        out.extend_from_slice(&(body.len() as u16).to_be_bytes());
    } else {
        out.extend_from_slice(&[flags, kind, body.len() as u8]);
    }
    out.extend_from_slice(body);
}

fn encode_segments(path: &AsPath, four: bool) -> Vec<u8> {
    let mut out = Vec::new();
    for seg in path.segments() {
        let (kind, asns) = match seg {
            Segment::Sequence(v) => (AS_SEQUENCE, v),
            Segment::Set(v) => (AS_SET, v),
        };
        for chunk in asns.chunks(255) {
            out.push(kind);
            out.push(chunk.len() as u8);
            for &asn in chunk {
                if four {
                    out.extend_from_slice(&asn.to_be_bytes());
                } else {
                    let a = if asn > u16::MAX as Asn { AS_TRANS } else { asn };
                    out.extend_from_slice(&(a as u16).to_be_bytes());
                }
            }
        }
    }
    out
}

impl<W: Write> MrtWriter<W> {
    pub fn new(out: W) -> Self {
        MrtWriter { out, local_as: 6447 }
    }

    pub fn into_inner(self) -> W {
        self.out
    }

    fn record(&mut self, ts: Timestamp, kind: u16, subtype: u16, body: &[u8]) -> io::Result<()> {
        let ts = u32::try_from(ts)
            .map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "timestamp exceeds 32 bits"))?;
        let mut head = Vec::with_capacity(12);
        head.extend_from_slice(&ts.to_be_bytes());
        head.extend_from_slice(&kind.to_be_bytes());
        head.extend_from_slice(&subtype.to_be_bytes());
        head.extend_from_slice(&(body.len() as u32).to_be_bytes());
        self.out.write_all(&head)?;
        self.out.write_all(body)
    }

    /// One `BGP4MP_MESSAGE_AS4` update carrying `rec`.
    pub fn write_update(&mut self, rec: &UpdateRecord) -> io::Result<()> {
        self.write_update_inner(rec, true)
    }

    /// One `BGP4MP_MESSAGE` update (16-bit AS session). 32-bit ASNs become
    /// AS_TRANS in AS_PATH with the real path in AS4_PATH.
    pub fn write_update_as2(&mut self, rec: &UpdateRecord) -> io::Result<()> {
        self.write_update_inner(rec, false)
    }

    fn write_update_inner(&mut self, rec: &UpdateRecord, four: bool) -> io::Result<()> {
        let v6 = rec.peer.addr.is_ipv6();
        if !v6 && !rec.prefix.is_ipv4() {
            return Err(io::Error::new(
                io::ErrorKind::InvalidInput,
                "IPv6 prefix on an IPv4 session is not supported by the encoder",
            ));
        }
        let mut update = Vec::new();
        let mut withdrawn = Vec::new();
        let mut attrs = Vec::new();
        let mut nlri = Vec::new();
        let mp = !rec.prefix.is_ipv4();
        match &rec.action {
            Action::Withdraw => {
                if mp {
                    let mut body = vec![0, 2, 1];
                    encode_prefix(&mut body, &rec.prefix);
                    encode_attr(&mut attrs, 0x80, ATTR_MP_UNREACH_NLRI, &body);
                } else {
                    encode_prefix(&mut withdrawn, &rec.prefix);
                }
            }
            Action::Announce(path) => {
                encode_attr(&mut attrs, 0x40, 1, &[0]);
                encode_attr(&mut attrs, 0x40, ATTR_AS_PATH, &encode_segments(path, four));
                let needs_as4 = !four
                    && path.segments().iter().any(|s| s.asns().iter().any(|&a| a > 0xffff));
                if needs_as4 {
                    encode_attr(&mut attrs, 0xc0, ATTR_AS4_PATH, &encode_segments(path, true));
                }
                if mp {
                    let mut body = vec![0, 2, 1, 16];
                    body.extend_from_slice(&[0u8; 16]);
                    body.push(0);
                    encode_prefix(&mut body, &rec.prefix);
                    encode_attr(&mut attrs, 0x80, ATTR_MP_REACH_NLRI, &body);
                } else {
                    encode_attr(&mut attrs, 0x40, 3, &[0, 0, 0, 0]);
                    encode_prefix(&mut nlri, &rec.prefix);
                }
            }
        }
        update.extend_from_slice(&(withdrawn.len() as u16).to_be_bytes());
        update.extend_from_slice(&withdrawn);
        update.extend_from_slice(&(attrs.len() as u16).to_be_bytes());
        update.extend_from_slice(&attrs);
        update.extend_from_slice(&nlri);

        let mut body = Vec::new();
        if four {
            body.extend_from_slice(&rec.peer.asn.to_be_bytes());
            body.extend_from_slice(&self.local_as.to_be_bytes());
        } else {
            let a = if rec.peer.asn > 0xffff { AS_TRANS } else { rec.peer.asn };
            body.extend_from_slice(&(a as u16).to_be_bytes());
            body.extend_from_slice(&(self.local_as as u16).to_be_bytes());
        }
        body.extend_from_slice(&0u16.to_be_bytes());
        body.extend_from_slice(&(if v6 { 2u16 } else { 1u16 }).to_be_bytes());
        encode_addr(&mut body, &rec.peer.addr);
        if v6 {
            body.extend_from_slice(&[0u8; 16]);
        } else {
            body.extend_from_slice(&[0u8; 4]);
        }
        body.extend_from_slice(&[0xff; 16]);
        body.extend_from_slice(&((19 + update.len()) as u16).to_be_bytes());
        body.push(BGP_UPDATE);
        body.extend_from_slice(&update);
        let subtype = if four { BGP4MP_MESSAGE_AS4 } else { BGP4MP_MESSAGE };
        self.record(rec.timestamp, BGP4MP, subtype, &body)
    }

    /// A `TABLE_DUMP_V2` peer index table followed by one RIB record per
    /// distinct prefix, in first-appearance order.
    pub fn write_table_dump_v2(&mut self, ts: Timestamp, entries: &[SnapshotEntry]) -> io::Result<()> {
        let mut peers: Vec<PeerId> = Vec::new();
        for e in entries {
            if !peers.contains(&e.peer) {
                peers.push(e.peer);
            }
        }
        let mut body = Vec::new();
        body.extend_from_slice(&0u32.to_be_bytes());
        body.extend_from_slice(&0u16.to_be_bytes());
        body.extend_from_slice(&(peers.len() as u16).to_be_bytes());
        for p in &peers {
            body.push(0x02 | u8::from(p.addr.is_ipv6()));
            body.extend_from_slice(&0u32.to_be_bytes());
            encode_addr(&mut body, &p.addr);
            body.extend_from_slice(&p.asn.to_be_bytes());
        }
        self.record(ts, TABLE_DUMP_V2, PEER_INDEX_TABLE, &body)?;

        let mut prefixes: Vec<Prefix> = Vec::new();
        for e in entries {
            if !prefixes.contains(&e.prefix) {
                prefixes.push(e.prefix);
            }
        }
        for (seq, prefix) in prefixes.iter().enumerate() {
            let rows: Vec<&SnapshotEntry> = entries.iter().filter(|e| e.prefix == *prefix).collect();
            let mut body = Vec::new();
            body.extend_from_slice(&(seq as u32).to_be_bytes());
            encode_prefix(&mut body, prefix);
            body.extend_from_slice(&(rows.len() as u16).to_be_bytes());
            for e in rows {
                let idx = peers.iter().position(|p| *p == e.peer).unwrap() as u16;
                body.extend_from_slice(&idx.to_be_bytes());
                body.extend_from_slice(&(e.timestamp as u32).to_be_bytes());
                let mut attrs = Vec::new();
                encode_attr(&mut attrs, 0x40, 1, &[0]);
                encode_attr(&mut attrs, 0x40, ATTR_AS_PATH, &encode_segments(&e.path, true));
                body.extend_from_slice(&(attrs.len() as u16).to_be_bytes());
                body.extend_from_slice(&attrs);
            }
            let subtype = if prefix.is_ipv4() { RIB_IPV4_UNICAST } else { RIB_IPV6_UNICAST };
            self.record(ts, TABLE_DUMP_V2, subtype, &body)?;
        }
        Ok(())
    }

    /// A raw record, for exercising the skip paths.
    pub fn write_raw(&mut self, ts: Timestamp, kind: u16, subtype: u16, body: &[u8]) -> io::Result<()> {
        self.record(ts, kind, subtype, body)
    }
}
