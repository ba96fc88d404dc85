//! Oracles and fixtures shared by the integration tests. Nothing here calls
//! into the code paths it is used to check.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::net::IpAddr;
use std::path::Path;
use std::process::{Command, Output};

use astopo::graph::AsGraph;
use astopo::ingest::{AsPath, Action, Asn, PeerId, Prefix, Segment, Timestamp, UpdateRecord};
use astopo::path::{AsSetPolicy, Link};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TABLE1: &str = "\
1064060005|10876|128.223.51.102|W|205.162.1.0/24
1064060035|10876|128.223.51.102|A|205.162.1.0/24|1239 2828 14815 14815 14815 14815 14815
1064060510|10876|128.223.51.102|A|205.162.1.0/24|1239 14815
";

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn reserved(asn: Asn) -> bool {
    asn == 0 || asn == 23456 || (64512..=65535).contains(&asn) || asn >= 4_200_000_000
}

/// Adjacent distinct public hops, one entry per distinct pair.
pub fn oracle_links(path: &AsPath, peer_as: Asn, policy: AsSetPolicy) -> BTreeSet<(Asn, Asn)> {
    let mut out = BTreeSet::new();
    if policy == AsSetPolicy::DropPath && path.segments().iter().any(|s| matches!(s, Segment::Set(_))) {
        return out;
    }
    let mut prev: Option<Asn> = None;
    let mut step = |asn: Option<Asn>, prev: &mut Option<Asn>| match asn {
        Some(a) if !reserved(a) => {
            if let Some(p) = *prev {
                if p != a {
                    out.insert((p.min(a), p.max(a)));
                }
            }
            *prev = Some(a);
        }
        _ => *prev = None,
    };
    step(Some(peer_as), &mut prev);
    for seg in path.segments() {
        match seg {
            Segment::Sequence(v) => v.iter().for_each(|&a| step(Some(a), &mut prev)),
            Segment::Set(_) => step(None, &mut prev),
        }
    }
    out
}

#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct OracleTimeline {
    pub intervals: Vec<(Timestamp, Timestamp)>,
    pub last_announced: Option<Timestamp>,
}

/// Rebuilds the visible set from every held route after each record and
/// diffs it against the previous one.
pub fn rescan_oracle(
    records: &[UpdateRecord],
    t_end: Timestamp,
    policy: AsSetPolicy,
) -> (BTreeMap<(Asn, Asn), OracleTimeline>, Timestamp) {
    let mut routes: BTreeMap<(PeerId, Prefix), AsPath> = BTreeMap::new();
    let mut open: BTreeMap<(Asn, Asn), Timestamp> = BTreeMap::new();
    let mut out: BTreeMap<(Asn, Asn), OracleTimeline> = BTreeMap::new();
    let mut clock = 0;
    for rec in records {
        clock = clock.max(rec.timestamp);
        match &rec.action {
            Action::Announce(p) => {
                routes.insert((rec.peer, rec.prefix), p.clone());
            }
            Action::Withdraw => {
                routes.remove(&(rec.peer, rec.prefix));
            }
        }
        let visible: BTreeSet<(Asn, Asn)> = routes
            .iter()
            .flat_map(|((peer, _), p)| oracle_links(p, peer.asn, policy))
            .collect();
        let gone: Vec<_> = open.keys().filter(|l| !visible.contains(l)).copied().collect();
        for l in gone {
            let start = open.remove(&l).unwrap();
            out.entry(l).or_default().intervals.push((start, clock));
        }
        for l in &visible {
            open.entry(*l).or_insert(clock);
            out.entry(*l).or_default();
        }
        if let Action::Announce(p) = &rec.action {
            for l in oracle_links(p, rec.peer.asn, policy) {
                out.get_mut(&l).unwrap().last_announced = Some(clock);
            }
        }
    }
    let t_end = t_end.max(clock);
    for (l, start) in open {
        out.get_mut(&l).unwrap().intervals.push((start, t_end));
    }
    (out, t_end)
}

fn random_path<R: Rng>(rng: &mut R) -> AsPath {
    let mut segs = Vec::new();
    for _ in 0..rng.gen_range(1..=3) {
        if rng.gen_bool(0.08) {
            let n = rng.gen_range(1..=3);
            segs.push(Segment::Set((0..n).map(|_| rng.gen_range(1..40)).collect()));
            continue;
        }
        let mut seq = Vec::new();
        for _ in 0..rng.gen_range(1..=5) {
            let asn = match rng.gen_range(0..100) {
                0 => 0,
                1 => 23456,
                2 => 64_600,
                3 => 4_200_000_001,
                _ => rng.gen_range(1..40),
            };
            seq.push(asn);
            // prepending
            if rng.gen_bool(0.15) {
                seq.push(asn);
            }
        }
        segs.push(Segment::Sequence(seq));
    }
    AsPath::new(segs).unwrap()
}

/// A random update stream over a small universe of peers, prefixes and
/// ASNs, with occasional out-of-order timestamps.
pub fn random_stream(seed: u64, n: usize) -> Vec<UpdateRecord> {
    let mut rng = rng(seed);
    let peers: Vec<PeerId> = (0..rng.gen_range(1..=4))
        .map(|i| PeerId::new([7, 7, 11, 13][i], format!("192.0.2.{}", i + 1).parse().unwrap()))
        .collect();
    let prefixes: Vec<Prefix> = (0..rng.gen_range(1..=12u8)).map(|i| Prefix::v4(10, i, 0, 0, 16).unwrap()).collect();
    let mut t: Timestamp = 1_000_000;
    (0..n)
        .map(|_| {
            t += rng.gen_range(0..4);
            let ts = if rng.gen_bool(0.02) { t.saturating_sub(rng.gen_range(1..10)) } else { t };
            let peer = *peers.choose(&mut rng).unwrap();
            let prefix = *prefixes.choose(&mut rng).unwrap();
            if rng.gen_bool(0.3) {
                UpdateRecord::withdraw(ts, peer, prefix)
            } else {
                UpdateRecord::announce(ts, peer, prefix, random_path(&mut rng))
            }
        })
        .collect()
}

/// A random connected simple graph on ASNs `1..=n`: a random tree plus
/// extra edges.
pub fn random_connected(seed: u64, n: u32, extra: usize) -> Vec<(Asn, Asn)> {
    let mut rng = rng(seed);
    let mut edges = BTreeSet::new();
    for v in 2..=n {
        let u = rng.gen_range(1..v);
        edges.insert((u, v));
    }
    let mut tries = 0;
    while edges.len() < (n as usize - 1) + extra && tries < 10_000 {
        tries += 1;
        let (a, b) = (rng.gen_range(1..=n), rng.gen_range(1..=n));
        if a != b {
            edges.insert((a.min(b), a.max(b)));
        }
    }
    edges.into_iter().collect()
}

pub fn graph_of(edges: &[(Asn, Asn)]) -> AsGraph {
    let mut g = AsGraph::new();
    for &(a, b) in edges {
        g.insert(Link::new(a, b).unwrap(), 0);
    }
    g
}

/// Edge betweenness by listing every shortest path of every unordered pair.
/// Also returns the sum of all pairwise distances.
pub fn brute_betweenness(edges: &[(Asn, Asn)]) -> (BTreeMap<(Asn, Asn), f64>, f64) {
    let mut adj: BTreeMap<Asn, Vec<Asn>> = BTreeMap::new();
    for &(a, b) in edges {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    }
    let nodes: Vec<Asn> = adj.keys().copied().collect();
    let bfs = |s: Asn| {
        let mut dist: BTreeMap<Asn, usize> = BTreeMap::from([(s, 0)]);
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[&u] {
                if !dist.contains_key(&v) {
                    dist.insert(v, dist[&u] + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    };
    let all: BTreeMap<Asn, BTreeMap<Asn, usize>> = nodes.iter().map(|&s| (s, bfs(s))).collect();
    let mut score: BTreeMap<(Asn, Asn), f64> = edges.iter().map(|&(a, b)| ((a.min(b), a.max(b)), 0.0)).collect();
    let mut dist_sum = 0.0;
    for (i, &s) in nodes.iter().enumerate() {
        for &t in &nodes[i + 1..] {
            let Some(&d) = all[&s].get(&t) else { continue };
            dist_sum += d as f64;
            let mut paths: Vec<Vec<Asn>> = Vec::new();
            let mut stack = vec![vec![s]];
            while let Some(p) = stack.pop() {
                let u = *p.last().unwrap();
                if u == t {
                    paths.push(p);
                    continue;
                }
                for &v in &adj[&u] {
                    if all[&s].get(&v) == Some(&p.len()) && all[&v].get(&t) == Some(&(d - p.len())) {
                        let mut q = p.clone();
                        q.push(v);
                        stack.push(q);
                    }
                }
            }
            let w = 1.0 / paths.len() as f64;
            for p in &paths {
                for e in p.windows(2) {
                    *score.get_mut(&(e[0].min(e[1]), e[0].max(e[1]))).unwrap() += w;
                }
            }
        }
    }
    (score, dist_sum)
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_astopo")
}

pub fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("spawn astopo")
}

pub fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "astopo {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Every file under `dir`, by relative name.
pub fn dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let e = e.unwrap();
        if e.file_type().unwrap().is_file() {
            out.insert(e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap());
        }
    }
    out
}

pub fn read_kv(path: &Path) -> BTreeMap<String, String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter_map(|l| l.split_once('=').map(|(k, v)| (k.to_string(), v.to_string())))
        .collect()
}

pub fn peer_addr(s: &str) -> IpAddr {
    s.parse().unwrap()
}
