//! Edge betweenness by single-source dependency accumulation.

use std::collections::{BTreeMap, VecDeque};
use std::io::{self, Write};

use rayon::prelude::*;

use super::{AsGraph, Csr};
use crate::path::Link;

pub type BetweennessMap = BTreeMap<Link, f64>;

/// Sources per parallel task. Fixed so the summation order, and therefore
/// every bit of the result, is independent of the thread count.
const CHUNK: usize = 32;

/// `B(e)` summed over unordered node pairs in the same component.
pub fn edge_betweenness(g: &AsGraph) -> BetweennessMap {
    let csr = Csr::new(g);
    let n = csr.len();
    let sources: Vec<usize> = (0..n).collect();
    let partials: Vec<Vec<f64>> = sources
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = vec![0.0; csr.edges.len()];
            let mut scratch = Scratch::new(n);
            for &s in chunk {
                scratch.accumulate(&csr, s, &mut acc);
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; csr.edges.len()];
    for p in partials {
        for (t, x) in total.iter_mut().zip(p) {
            *t += x;
        }
    }
    csr.edges.iter().zip(total).map(|(l, b)| (*l, b / 2.0)).collect()
}

struct Scratch {
    dist: Vec<u32>,
    sigma: Vec<f64>,
    delta: Vec<f64>,
    order: Vec<usize>,
    queue: VecDeque<usize>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch {
            dist: vec![u32::MAX; n],
            sigma: vec![0.0; n],
            delta: vec![0.0; n],
            order: Vec::with_capacity(n),
            queue: VecDeque::with_capacity(n),
        }
    }

    fn accumulate(&mut self, csr: &Csr, s: usize, acc: &mut [f64]) {
        for &v in &self.order {
            self.dist[v] = u32::MAX;
            self.sigma[v] = 0.0;
            self.delta[v] = 0.0;
        }
        self.order.clear();
        self.dist[s] = 0;
        self.sigma[s] = 1.0;
        self.queue.push_back(s);
        while let Some(v) = self.queue.pop_front() {
            self.order.push(v);
            for (w, _) in csr.neighbors(v) {
                if self.dist[w] == u32::MAX {
                    self.dist[w] = self.dist[v] + 1;
                    self.queue.push_back(w);
                }
                if self.dist[w] == self.dist[v] + 1 {
                    self.sigma[w] += self.sigma[v];
                }
            }
        }
        for &w in self.order.iter().rev() {
            let coeff = (1.0 + self.delta[w]) / self.sigma[w];
            for (v, e) in csr.neighbors(w) {
                if self.dist[v] != u32::MAX && self.dist[v] + 1 == self.dist[w] {
                    let c = self.sigma[v] * coeff;
                    acc[e] += c;
                    self.delta[v] += c;
                }
            }
        }
    }
}

/// `lo,hi,betweenness`, in link order.
pub fn write_betweenness_csv<W: Write>(mut w: W, b: &BetweennessMap) -> io::Result<()> {
    writeln!(w, "lo,hi,betweenness")?;
    for (l, v) in b {
        writeln!(w, "{},{},{:.6}", l.lo(), l.hi(), v)?;
    }
    Ok(())
}
