//! Accumulated AS graphs and the topology metric suite.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::ingest::{Asn, Timestamp};
use crate::path::Link;

mod betweenness;
mod degree;

pub use betweenness::{edge_betweenness, write_betweenness_csv, BetweennessMap};
pub use degree::{
    degree_ccdf, degree_degree, degree_degree_with, degree_ratio_matrix, fit_powerlaw,
    write_ccdf_csv, write_degdeg_csv, write_fit_csv, write_ratio_csv, Binning, CcdfPoint,
    DegreeDegreeMatrix, DegreeSource, FitError, PowerLawFit, RatioMatrix,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("graph has no nodes")]
    Empty,
    #[error("link {0} is not an edge of the graph")]
    MissingEdge(Link),
}

/// An undirected simple AS graph plus the time each edge was first observed.
/// Nodes are exactly the edge endpoints.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AsGraph {
    first_seen: BTreeMap<Link, Timestamp>,
}

impl AsGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an edge, keeping the earliest timestamp on duplicates.
    pub fn insert(&mut self, link: Link, ts: Timestamp) {
        self.first_seen.entry(link).and_modify(|t| *t = (*t).min(ts)).or_insert(ts);
    }

    pub fn contains(&self, link: &Link) -> bool {
        self.first_seen.contains_key(link)
    }

    pub fn first_seen(&self, link: &Link) -> Option<Timestamp> {
        self.first_seen.get(link).copied()
    }

    /// Edges in `(lo, hi)` order.
    pub fn edges(&self) -> impl Iterator<Item = (&Link, &Timestamp)> {
        self.first_seen.iter()
    }

    pub fn edge_set(&self) -> BTreeSet<Link> {
        self.first_seen.keys().copied().collect()
    }

    pub fn edge_count(&self) -> usize {
        self.first_seen.len()
    }

    pub fn nodes(&self) -> BTreeSet<Asn> {
        self.first_seen.keys().flat_map(|l| [l.lo(), l.hi()]).collect()
    }

    pub fn node_count(&self) -> usize {
        self.nodes().len()
    }

    pub fn is_empty(&self) -> bool {
        self.first_seen.is_empty()
    }

    pub fn degrees(&self) -> BTreeMap<Asn, u32> {
        let mut deg = BTreeMap::new();
        for l in self.first_seen.keys() {
            *deg.entry(l.lo()).or_insert(0) += 1;
            *deg.entry(l.hi()).or_insert(0) += 1;
        }
        deg
    }

    /// Edge union; shared edges keep the earlier timestamp.
    pub fn union(&self, other: &AsGraph) -> AsGraph {
        let mut g = self.clone();
        for (l, t) in other.edges() {
            g.insert(*l, *t);
        }
        g
    }

    /// The subgraph on the edges for which `keep` holds.
    pub fn filter(&self, mut keep: impl FnMut(&Link) -> bool) -> AsGraph {
        AsGraph {
            first_seen: self.first_seen.iter().filter(|(l, _)| keep(l)).map(|(l, t)| (*l, *t)).collect(),
        }
    }
}

impl FromIterator<(Link, Timestamp)> for AsGraph {
    fn from_iter<I: IntoIterator<Item = (Link, Timestamp)>>(iter: I) -> Self {
        let mut g = AsGraph::new();
        for (l, t) in iter {
            g.insert(l, t);
        }
        g
    }
}

pub fn build_graph(first_seen: &BTreeMap<Link, Timestamp>) -> AsGraph {
    first_seen.iter().map(|(l, t)| (*l, *t)).collect()
}

/// Number of edges first seen at or before each sample time.
pub fn cumulative_links(g: &AsGraph, sample_times: &[Timestamp]) -> Vec<(Timestamp, usize)> {
    let mut times: Vec<Timestamp> = g.first_seen.values().copied().collect();
    times.sort_unstable();
    sample_times
        .iter()
        .map(|&t| (t, times.partition_point(|&x| x <= t)))
        .collect()
}

/// `reference` must be sampled at the same times as `series`.
pub fn write_cumulative_csv<W: Write>(
    mut w: W,
    series: &[(Timestamp, usize)],
    reference: Option<&[(Timestamp, usize)]>,
) -> io::Result<()> {
    match reference {
        Some(r) => {
            assert_eq!(r.len(), series.len(), "series sampled at different times");
            writeln!(w, "time,links,btd_links")?;
            for ((t, n), (_, m)) in series.iter().zip(r) {
                writeln!(w, "{t},{n},{m}")?;
            }
        }
        None => {
            writeln!(w, "time,links")?;
            for (t, n) in series {
                writeln!(w, "{t},{n}")?;
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GraphDiff {
    pub only_a: BTreeSet<Link>,
    pub only_b: BTreeSet<Link>,
    pub both: BTreeSet<Link>,
}

pub fn diff(a: &AsGraph, b: &AsGraph) -> GraphDiff {
    let mut d = GraphDiff::default();
    for l in a.first_seen.keys() {
        if b.contains(l) {
            d.both.insert(*l);
        } else {
            d.only_a.insert(*l);
        }
    }
    d.only_b = b.first_seen.keys().filter(|l| !a.contains(l)).copied().collect();
    d
}

#[derive(Debug, Error)]
pub enum EdgeListError {
    #[error("line {line}: malformed edge {text:?}")]
    Malformed { line: usize, text: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// `lo hi first_seen` per line, sorted by `(lo, hi)`.
pub fn write_edge_list<W: Write>(mut w: W, g: &AsGraph) -> io::Result<()> {
    for (l, t) in g.edges() {
        writeln!(w, "{} {} {t}", l.lo(), l.hi())?;
    }
    Ok(())
}

pub fn write_links<'a, W: Write>(mut w: W, links: impl IntoIterator<Item = &'a Link>) -> io::Result<()> {
    for l in links {
        writeln!(w, "{} {}", l.lo(), l.hi())?;
    }
    Ok(())
}

/// Reads an edge list. The timestamp column is optional (defaults to 0);
/// endpoints may be in either order.
pub fn read_edge_list<R: BufRead>(r: R) -> Result<AsGraph, EdgeListError> {
    let mut g = AsGraph::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let bad = || EdgeListError::Malformed { line: i + 1, text: line.clone() };
        let cols: Vec<&str> = text.split_whitespace().collect();
        if cols.len() < 2 || cols.len() > 3 {
            return Err(bad());
        }
        let a: Asn = cols[0].parse().map_err(|_| bad())?;
        let b: Asn = cols[1].parse().map_err(|_| bad())?;
        let t: Timestamp = match cols.get(2) {
            Some(c) => c.parse().map_err(|_| bad())?,
            None => 0,
        };
        g.insert(Link::new(a, b).ok_or_else(bad)?, t);
    }
    Ok(g)
}

/// Compressed adjacency with dense node ids and per-entry edge ids, for the
/// traversal-heavy metrics.
pub(crate) struct Csr {
    pub nodes: Vec<Asn>,
    pub offsets: Vec<usize>,
    pub targets: Vec<usize>,
    pub edge_ids: Vec<usize>,
    pub edges: Vec<Link>,
}

impl Csr {
    pub fn new(g: &AsGraph) -> Csr {
        let nodes: Vec<Asn> = g.nodes().into_iter().collect();
        let id = |a: Asn| nodes.binary_search(&a).expect("endpoint is a node");
        let edges: Vec<Link> = g.first_seen.keys().copied().collect();
        let mut deg = vec![0usize; nodes.len()];
        for l in &edges {
            deg[id(l.lo())] += 1;
            deg[id(l.hi())] += 1;
        }
        let mut offsets = vec![0usize; nodes.len() + 1];
        for i in 0..nodes.len() {
            offsets[i + 1] = offsets[i] + deg[i];
        }
        let mut fill = offsets.clone();
        let mut targets = vec![0usize; offsets[nodes.len()]];
        let mut edge_ids = vec![0usize; targets.len()];
        for (e, l) in edges.iter().enumerate() {
            let (u, v) = (id(l.lo()), id(l.hi()));
            targets[fill[u]] = v;
            edge_ids[fill[u]] = e;
            fill[u] += 1;
            targets[fill[v]] = u;
            edge_ids[fill[v]] = e;
            fill[v] += 1;
        }
        Csr { nodes, offsets, targets, edge_ids, edges }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let r = self.offsets[u]..self.offsets[u + 1];
        self.targets[r.clone()].iter().copied().zip(self.edge_ids[r].iter().copied())
    }
}
