//! Synthetic scenarios with known ground truth.
//!
//! A scenario is a random tree of converged routes plus a set of backup
//! links that only ever appear during short path-exploration episodes. Every
//! peer announces a converged route to every other node at the start of the
//! run. An episode withdraws one such route, announces one or more backup
//! paths through a backup link with growing prepending, then restores the
//! converged path.
//!
//! [`powerlaw_graph`] is a separate configuration-model generator used to
//! check degree-distribution fitting.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::io::{self, Write};
use std::net::{IpAddr, Ipv4Addr};

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::AsGraph;
use crate::ingest::{AsPath, Asn, PeerId, Prefix, SnapshotEntry, Timestamp, UpdateRecord};
use crate::path::{is_reserved, Link};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("infeasible config: {0}")]
    Infeasible(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    /// Node count; the converged tree has `nodes - 1` links.
    pub nodes: usize,
    /// Exponent of the tree's degree distribution.
    pub alpha: f64,
    /// Backup links as a fraction of converged links, rounded.
    pub backup_fraction: f64,
    /// Exploration episodes; each backup link gets at least one.
    pub episodes: usize,
    /// Collector peers, taken from the highest-degree tree nodes.
    pub peers: usize,
    pub seed: u64,
    pub t_start: Timestamp,
    pub duration: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            nodes: 101,
            alpha: 2.2,
            backup_fraction: 0.43,
            episodes: 86,
            peers: 1,
            seed: 1,
            t_start: 1_064_016_000,
            duration: 14 * 86_400,
        }
    }
}

/// One exploration episode on the route from `peer` to `prefix`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Episode {
    pub peer: PeerId,
    pub prefix: Prefix,
    pub backup_link: Link,
    /// Time of the opening withdrawal.
    pub start: Timestamp,
    /// Backup announcements in order; paths grow by one prepend each.
    pub backups: Vec<(Timestamp, AsPath)>,
    /// Time of the converged re-announcement.
    pub end: Timestamp,
}

impl Episode {
    /// Route state for this episode's (peer, prefix) at `t`, if `t` falls
    /// inside it: `Some(None)` while withdrawn, `Some(Some(path))` while a
    /// backup is installed.
    fn route_at(&self, t: Timestamp) -> Option<Option<&AsPath>> {
        if t < self.start || t >= self.end {
            return None;
        }
        Some(self.backups.iter().rev().find(|(ts, _)| *ts <= t).map(|(_, p)| p))
    }

    /// Seconds during which the backup link is installed.
    pub fn backup_duration(&self) -> u64 {
        self.backups.first().map_or(0, |(t, _)| self.end - t)
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub truth_graph: AsGraph,
    pub converged_links: BTreeSet<Link>,
    pub backup_links: BTreeSet<Link>,
    pub peers: Vec<PeerId>,
    /// Steady-state route per (peer, prefix).
    pub converged_routes: BTreeMap<(PeerId, Prefix), AsPath>,
    pub schedule: Vec<Episode>,
    pub stream: Vec<UpdateRecord>,
    pub t_start: Timestamp,
    pub t_end: Timestamp,
}

impl Scenario {
    /// The table a collector would dump at `t`, from the schedule alone.
    pub fn snapshot(&self, t: Timestamp) -> Vec<SnapshotEntry> {
        if t < self.t_start {
            return Vec::new();
        }
        let mut active: BTreeMap<(PeerId, Prefix), &Episode> = BTreeMap::new();
        for ep in &self.schedule {
            if ep.route_at(t).is_some() {
                active.insert((ep.peer, ep.prefix), ep);
            }
        }
        let mut out = Vec::with_capacity(self.converged_routes.len());
        for (&(peer, prefix), converged) in &self.converged_routes {
            let path = match active.get(&(peer, prefix)) {
                Some(ep) => match ep.route_at(t).flatten() {
                    Some(p) => p,
                    None => continue,
                },
                None => converged,
            };
            out.push(SnapshotEntry { timestamp: t, peer, prefix, path: path.clone() });
        }
        out
    }
}

/// ASN for dense node index `i`, skipping reserved numbers.
pub fn node_asn(i: usize) -> Asn {
    let mut asn = 1000 + i as Asn;
    if asn >= 23456 {
        asn += 1;
    }
    asn
}

const MAX_NODES: usize = 60_000;

fn origin_prefix(i: usize) -> Prefix {
    Prefix::v4(10, (i >> 8) as u8, (i & 0xff) as u8, 0, 24).expect("valid length")
}

fn peer_addr(k: usize) -> IpAddr {
    IpAddr::V4(Ipv4Addr::new(192, 0, 2 + (k / 250) as u8, 1 + (k % 250) as u8))
}

fn validate(cfg: &SynthConfig) -> Result<(), SynthError> {
    let bad = |m: &str| Err(SynthError::InvalidConfig(m.to_string()));
    if cfg.nodes < 3 || cfg.nodes > MAX_NODES {
        return bad("nodes must be in 3..=60000");
    }
    if !(cfg.alpha > 1.0) {
        return bad("alpha must exceed 1");
    }
    if !(0.0..=1e6).contains(&cfg.backup_fraction) {
        return bad("backup_fraction must be non-negative");
    }
    if cfg.peers == 0 || cfg.peers >= cfg.nodes {
        return bad("peers must be in 1..nodes");
    }
    if cfg.duration < 1000 {
        return bad("duration must be at least 1000 s");
    }
    Ok(())
}

/// Tree edges from a Prüfer sequence over `0..n`.
fn prufer_tree(seq: &[usize], n: usize) -> Vec<(usize, usize)> {
    let mut degree = vec![1usize; n];
    for &x in seq {
        degree[x] += 1;
    }
    let mut leaves: BTreeSet<usize> = (0..n).filter(|&i| degree[i] == 1).collect();
    let mut edges = Vec::with_capacity(n - 1);
    for &x in seq {
        let leaf = leaves.pop_first().expect("a Prüfer sequence always leaves a leaf");
        edges.push((leaf, x));
        degree[x] -= 1;
        if degree[x] == 1 {
            leaves.insert(x);
        }
    }
    let last: Vec<usize> = leaves.into_iter().collect();
    edges.push((last[0], last[1]));
    edges
}

/// Parent pointers of the tree rooted at `root`.
fn parents(adj: &[Vec<usize>], root: usize) -> Vec<usize> {
    let mut parent = vec![usize::MAX; adj.len()];
    parent[root] = root;
    let mut q = VecDeque::from([root]);
    while let Some(u) = q.pop_front() {
        for &v in &adj[u] {
            if parent[v] == usize::MAX {
                parent[v] = u;
                q.push_back(v);
            }
        }
    }
    parent
}

/// Node indices from `root` to `x` inclusive.
fn tree_path(parent: &[usize], root: usize, x: usize) -> Vec<usize> {
    let mut path = vec![x];
    let mut cur = x;
    while cur != root {
        cur = parent[cur];
        path.push(cur);
    }
    path.reverse();
    path
}

fn as_path(nodes: &[usize]) -> AsPath {
    AsPath::sequence(nodes.iter().map(|&i| node_asn(i)).collect::<Vec<_>>()).expect("non-empty")
}

struct Tree {
    adj: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
}

fn random_tree(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Tree {
    let n = cfg.nodes;
    // rank-size weights give a heavy-tailed Prüfer multiplicity
    let weights: Vec<f64> = (0..n).map(|i| ((i + 1) as f64).powf(-1.0 / (cfg.alpha - 1.0))).collect();
    let dist = WeightedIndex::new(&weights).expect("positive weights");
    let mut labels: Vec<usize> = (0..n).collect();
    labels.shuffle(rng);
    let seq: Vec<usize> = (0..n - 2).map(|_| labels[dist.sample(rng)]).collect();
    let edges = prufer_tree(&seq, n);
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in &edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    for a in &mut adj {
        a.sort_unstable();
    }
    Tree { adj, edges }
}

/// Non-tree pairs, lowest combined degree first.
fn pick_backup_pairs(
    tree: &Tree,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(usize, usize)>, SynthError> {
    let n = tree.adj.len();
    let tree_edges: BTreeSet<(usize, usize)> =
        tree.edges.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    // bound the candidate pool so large trees stay cheap
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (tree.adj[i].len(), i));
    let pool = &by_degree[..n.min(count * 4 + 16)];
    let mut candidates: Vec<(usize, usize, usize, u64)> = Vec::new();
    for (i, &a) in pool.iter().enumerate() {
        for &b in &pool[i + 1..] {
            let key = (a.min(b), a.max(b));
            if !tree_edges.contains(&key) {
                let w = tree.adj[a].len() + tree.adj[b].len();
                candidates.push((w, key.0, key.1, rng.gen()));
            }
        }
    }
    if candidates.len() < count {
        return Err(SynthError::Infeasible(format!(
            "{count} backup links requested but only {} non-tree pairs are available",
            candidates.len()
        )));
    }
    candidates.sort_unstable_by_key(|&(w, _, _, tie)| (w, tie));
    Ok(candidates.into_iter().take(count).map(|(_, a, b, _)| (a, b)).collect())
}

pub fn generate(cfg: &SynthConfig) -> Result<Scenario, SynthError> {
    validate(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.nodes;
    let t_start = cfg.t_start;
    let t_end = t_start + cfg.duration;
    let tree = random_tree(cfg, &mut rng);

    let backup_count = (cfg.backup_fraction * (n - 1) as f64).round() as usize;
    if backup_count > 0 && cfg.episodes < backup_count {
        return Err(SynthError::Infeasible(format!(
            "{} episodes cannot exercise {backup_count} backup links",
            cfg.episodes
        )));
    }
    let pairs = pick_backup_pairs(&tree, backup_count, &mut rng)?;

    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (std::cmp::Reverse(tree.adj[i].len()), i));
    let peer_nodes: Vec<usize> = by_degree[..cfg.peers].to_vec();
    let peers: Vec<PeerId> =
        peer_nodes.iter().enumerate().map(|(k, &i)| PeerId::new(node_asn(i), peer_addr(k))).collect();
    let peer_parents: Vec<Vec<usize>> = peer_nodes.iter().map(|&p| parents(&tree.adj, p)).collect();

    let mut converged_routes = BTreeMap::new();
    let mut stream = Vec::new();
    for (k, &p) in peer_nodes.iter().enumerate() {
        for v in (0..n).filter(|&v| v != p) {
            let path = as_path(&tree_path(&peer_parents[k], p, v));
            stream.push(UpdateRecord::announce(t_start, peers[k], origin_prefix(v), path.clone()));
            converged_routes.insert((peers[k], origin_prefix(v)), path);
        }
    }

    // every backup link once, then the remainder at random
    let mut owners: Vec<usize> = (0..pairs.len()).collect();
    if !pairs.is_empty() {
        owners.extend((pairs.len()..cfg.episodes).map(|_| rng.gen_range(0..pairs.len())));
    }
    owners.shuffle(&mut rng);

    // starts spread over the first 80% of the run, kept disjoint
    let horizon = t_start + cfg.duration * 8 / 10;
    let mut starts: Vec<Timestamp> =
        owners.iter().map(|_| rng.gen_range(t_start + 60..horizon)).collect();
    starts.sort_unstable();

    let mut schedule = Vec::with_capacity(owners.len());
    let mut prev_end = t_start;
    for (&owner, start) in owners.iter().zip(starts) {
        let (a, b) = pairs[owner];
        let k = rng.gen_range(0..peers.len());
        let (root, parent) = (peer_nodes[k], &peer_parents[k]);
        // route to `origin` detours through `via`, which must not sit on the
        // converged path to `origin`
        let (via, origin) = if tree_path(parent, root, a).contains(&b) { (b, a) } else { (a, b) };
        let mut hops = tree_path(parent, root, via);
        hops.push(origin);
        let start = start.max(prev_end + 1);
        let mut t = start;
        let mut backups = Vec::new();
        for extra in 1..=rng.gen_range(1..=4usize) {
            t += rng.gen_range(1..=30);
            let mut h = hops.clone();
            h.extend(std::iter::repeat_n(origin, extra));
            backups.push((t, as_path(&h)));
        }
        let end = t + rng.gen_range(1..=30);
        prev_end = end;
        schedule.push(Episode {
            peer: peers[k],
            prefix: origin_prefix(origin),
            backup_link: Link::new(node_asn(a), node_asn(b)).expect("distinct public ASNs"),
            start,
            backups,
            end,
        });
    }
    if prev_end >= t_end {
        return Err(SynthError::Infeasible("episodes do not fit in the run".into()));
    }

    for ep in &schedule {
        stream.push(UpdateRecord::withdraw(ep.start, ep.peer, ep.prefix));
        for (t, path) in &ep.backups {
            stream.push(UpdateRecord::announce(*t, ep.peer, ep.prefix, path.clone()));
        }
        let converged = converged_routes[&(ep.peer, ep.prefix)].clone();
        stream.push(UpdateRecord::announce(ep.end, ep.peer, ep.prefix, converged));
    }

    let converged_links: BTreeSet<Link> = tree
        .edges
        .iter()
        .map(|&(a, b)| Link::new(node_asn(a), node_asn(b)).expect("distinct public ASNs"))
        .collect();
    let mut truth_graph: AsGraph = converged_links.iter().map(|l| (*l, t_start)).collect();
    let mut backup_visible: BTreeMap<Link, u64> = BTreeMap::new();
    for ep in &schedule {
        truth_graph.insert(ep.backup_link, ep.backups[0].0);
        *backup_visible.entry(ep.backup_link).or_insert(0) += ep.backup_duration();
    }
    for (l, visible) in &backup_visible {
        let window = t_end - truth_graph.first_seen(l).expect("inserted above");
        if *visible * 5 >= window {
            return Err(SynthError::Infeasible(format!(
                "backup link {l} would be visible for {visible} s of a {window} s window"
            )));
        }
    }
    let backup_links = backup_visible.into_keys().collect();

    Ok(Scenario {
        truth_graph,
        converged_links,
        backup_links,
        peers,
        converged_routes,
        schedule,
        stream,
        t_start,
        t_end,
    })
}

/// `lo,hi,class,first_seen` for every truth link.
pub fn write_manifest_csv<W: Write>(mut w: W, s: &Scenario) -> io::Result<()> {
    writeln!(w, "lo,hi,class,first_seen")?;
    for (l, t) in s.truth_graph.edges() {
        let class = if s.backup_links.contains(l) { "backup" } else { "converged" };
        writeln!(w, "{},{},{class},{t}", l.lo(), l.hi())?;
    }
    Ok(())
}

/// Degrees `floor(X)` with `X` Pareto on `[1, inf)`, so
/// `P(D >= k) = k^-(alpha-1)` for integer `k` up to `max_degree`.
pub fn powerlaw_degrees<R: Rng>(n: usize, alpha: f64, max_degree: u32, rng: &mut R) -> Vec<u32> {
    (0..n)
        .map(|_| {
            let u: f64 = 1.0 - rng.gen::<f64>();
            let x = u.powf(-1.0 / (alpha - 1.0));
            x.floor().min(max_degree as f64) as u32
        })
        .collect()
}

/// Degrees at evenly spaced quantiles of the same law: node `i` gets
/// `floor(((i + 0.5) / n)^(-1/(alpha-1)))`.
pub fn powerlaw_quantile_degrees(n: usize, alpha: f64, max_degree: u32) -> Vec<u32> {
    (0..n)
        .map(|i| {
            let q = (i as f64 + 0.5) / n as f64;
            q.powf(-1.0 / (alpha - 1.0)).floor().min(max_degree as f64) as u32
        })
        .collect()
}

/// Configuration-model graph over `n` nodes with power-law degrees, drawn
/// with cap `n - 1`. Self-loops and duplicate stub pairs are dropped.
pub fn powerlaw_graph(n: usize, alpha: f64, seed: u64) -> Result<AsGraph, SynthError> {
    if !(2..=MAX_NODES).contains(&n) {
        return Err(SynthError::InvalidConfig("n must be in 2..=60000".into()));
    }
    if !(alpha > 1.0) {
        return Err(SynthError::InvalidConfig("alpha must exceed 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let degrees = powerlaw_quantile_degrees(n, alpha, (n - 1) as u32);
    let mut stubs: Vec<usize> =
        degrees.iter().enumerate().flat_map(|(i, &d)| std::iter::repeat_n(i, d as usize)).collect();
    stubs.shuffle(&mut rng);
    let mut g = AsGraph::new();
    for pair in stubs.chunks_exact(2) {
        let (a, b) = (node_asn(pair[0]), node_asn(pair[1]));
        if let Some(l) = Link::new(a, b) {
            if !g.contains(&l) {
                g.insert(l, 0);
            }
        }
    }
    debug_assert!(g.nodes().iter().all(|a| !is_reserved(*a)));
    Ok(g)
}
