//! Degree distribution, power-law regression and degree-degree matrices.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Write};

use thiserror::Error;

use super::{AsGraph, GraphError};
use crate::ingest::Asn;
use crate::path::Link;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CcdfPoint {
    pub degree: u32,
    /// Fraction of nodes with degree `>= degree`.
    pub fraction: f64,
}

/// `P(D >= k)` at every distinct observed degree, ascending in `k`.
pub fn degree_ccdf(g: &AsGraph) -> Result<Vec<CcdfPoint>, GraphError> {
    if g.is_empty() {
        return Err(GraphError::Empty);
    }
    let mut hist: BTreeMap<u32, usize> = BTreeMap::new();
    for d in g.degrees().into_values() {
        *hist.entry(d).or_insert(0) += 1;
    }
    let n: usize = hist.values().sum();
    let mut above = n;
    let mut out = Vec::with_capacity(hist.len());
    for (k, count) in hist {
        out.push(CcdfPoint { degree: k, fraction: above as f64 / n as f64 });
        above -= count;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub slope: f64,
    pub intercept: f64,
    pub pearson_r: f64,
    pub points_used: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("need at least 3 points with positive degree and fraction, got {0}")]
    TooFewPoints(usize),
    #[error("points have no spread in one coordinate")]
    Degenerate,
}

/// Least squares on `(log10 k, log10 P)` over every point with `k > 0` and
/// `P > 0`; `pearson_r` is the correlation of the same points.
pub fn fit_powerlaw(points: &[CcdfPoint]) -> Result<PowerLawFit, FitError> {
    let xy: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.degree > 0 && p.fraction > 0.0)
        .map(|p| ((p.degree as f64).log10(), p.fraction.log10()))
        .collect();
    fit_log_points(&xy)
}

pub(crate) fn fit_log_points(xy: &[(f64, f64)]) -> Result<PowerLawFit, FitError> {
    let n = xy.len();
    if n < 3 {
        return Err(FitError::TooFewPoints(n));
    }
    let nf = n as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / nf;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for &(x, y) in xy {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(FitError::Degenerate);
    }
    let slope = sxy / sxx;
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    Ok(PowerLawFit { slope, intercept: my - slope * mx, pearson_r: r, points_used: n })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Binning {
    /// One cell per exact degree.
    Raw,
    /// Cells of `width` in log10(degree).
    Log10 { width: f64 },
}

impl Default for Binning {
    fn default() -> Self {
        Binning::Log10 { width: 0.1 }
    }
}

impl Binning {
    pub fn bin(&self, k: u32) -> i64 {
        match *self {
            Binning::Raw => k as i64,
            // nudge so exact powers of ten land in their own bin
            Binning::Log10 { width } => ((k as f64).log10() / width + 1e-9).floor() as i64,
        }
    }

    /// Coordinate reported for a bin: the degree, or the bin's lower edge
    /// in log10 units.
    pub fn coordinate(&self, bin: i64) -> f64 {
        match *self {
            Binning::Raw => bin as f64,
            Binning::Log10 { width } => bin as f64 * width,
        }
    }

    fn format(&self, bin: i64) -> String {
        match self {
            Binning::Raw => bin.to_string(),
            Binning::Log10 { .. } => format!("{:.4}", self.coordinate(bin)),
        }
    }
}

/// Link counts over unordered degree pairs, keyed `(bin_lo, bin_hi)` with
/// `bin_lo <= bin_hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDegreeMatrix {
    pub binning: Binning,
    pub counts: BTreeMap<(i64, i64), usize>,
}

impl DegreeDegreeMatrix {
    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn get(&self, k1: u32, k2: u32) -> usize {
        let (a, b) = (self.binning.bin(k1), self.binning.bin(k2));
        self.counts.get(&(a.min(b), a.max(b))).copied().unwrap_or(0)
    }
}

fn cell(binning: Binning, degrees: &BTreeMap<Asn, u32>, l: &Link) -> (i64, i64) {
    let a = binning.bin(degrees[&l.lo()]);
    let b = binning.bin(degrees[&l.hi()]);
    (a.min(b), a.max(b))
}

/// Degree-degree distribution of `subset`, with degrees taken from `g`.
pub fn degree_degree<'a>(
    g: &AsGraph,
    subset: impl IntoIterator<Item = &'a Link>,
    binning: Binning,
) -> Result<DegreeDegreeMatrix, GraphError> {
    let degrees = g.degrees();
    let mut counts = BTreeMap::new();
    for l in subset {
        if !g.contains(l) {
            return Err(GraphError::MissingEdge(*l));
        }
        *counts.entry(cell(binning, &degrees, l)).or_insert(0) += 1;
    }
    Ok(DegreeDegreeMatrix { binning, counts })
}

/// Like [`degree_degree`] with an explicit degree table.
pub fn degree_degree_with<'a>(
    degrees: &BTreeMap<Asn, u32>,
    edges: impl IntoIterator<Item = &'a Link>,
    binning: Binning,
) -> DegreeDegreeMatrix {
    let mut counts = BTreeMap::new();
    for l in edges {
        *counts.entry(cell(binning, degrees, l)).or_insert(0) += 1;
    }
    DegreeDegreeMatrix { binning, counts }
}

/// Which graph supplies node degrees for the ratio matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DegreeSource {
    /// Degrees in the union of both graphs, for both counts.
    #[default]
    Union,
    /// Each graph's own degrees. Ratios may exceed 1.
    Own,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioMatrix {
    pub binning: Binning,
    /// `(btd_count, total_count)` per cell; cells without total links are
    /// absent.
    pub cells: BTreeMap<(i64, i64), (usize, usize)>,
}

impl RatioMatrix {
    pub fn ratio(&self, cell: (i64, i64)) -> Option<f64> {
        self.cells.get(&cell).map(|&(n, d)| n as f64 / d as f64)
    }

    pub fn ratios(&self) -> impl Iterator<Item = ((i64, i64), f64)> + '_ {
        self.cells.iter().map(|(c, &(n, d))| (*c, n as f64 / d as f64))
    }
}

/// Per-cell share of `g`'s links that also appear in `g_btd`. `g_btd` is
/// intersected with `g` first.
pub fn degree_ratio_matrix(
    g_btd: &AsGraph,
    g: &AsGraph,
    binning: Binning,
    source: DegreeSource,
) -> RatioMatrix {
    let shared: BTreeSet<Link> = g_btd.edges().map(|(l, _)| *l).filter(|l| g.contains(l)).collect();
    let (num_deg, den_deg) = match source {
        DegreeSource::Union => {
            let d = g.union(g_btd).degrees();
            (d.clone(), d)
        }
        DegreeSource::Own => (g.filter(|l| shared.contains(l)).degrees(), g.degrees()),
    };
    let num = degree_degree_with(&num_deg, &shared, binning);
    let den = degree_degree_with(&den_deg, g.edges().map(|(l, _)| l), binning);
    let cells = den
        .counts
        .iter()
        .map(|(c, &d)| (*c, (num.counts.get(c).copied().unwrap_or(0), d)))
        .collect();
    RatioMatrix { binning, cells }
}

pub fn write_ccdf_csv<W: Write>(mut w: W, points: &[CcdfPoint]) -> io::Result<()> {
    writeln!(w, "degree,ccdf")?;
    for p in points {
        writeln!(w, "{},{:.9}", p.degree, p.fraction)?;
    }
    Ok(())
}

/// One row per labelled fit; a failed fit is written as `nan` values with
/// zero points.
pub fn write_fit_csv<W: Write>(mut w: W, fits: &[(&str, Option<PowerLawFit>)]) -> io::Result<()> {
    writeln!(w, "graph,slope,intercept,pearson_r,points_used")?;
    for (name, fit) in fits {
        match fit {
            Some(f) => writeln!(
                w,
                "{name},{:.6},{:.6},{:.6},{}",
                f.slope, f.intercept, f.pearson_r, f.points_used
            )?,
            None => writeln!(w, "{name},nan,nan,nan,0")?,
        }
    }
    Ok(())
}

pub fn write_degdeg_csv<W: Write>(mut w: W, m: &DegreeDegreeMatrix) -> io::Result<()> {
    writeln!(w, "bin_x,bin_y,log10_count")?;
    for (&(a, b), &n) in &m.counts {
        writeln!(w, "{},{},{:.6}", m.binning.format(a), m.binning.format(b), (n as f64).log10())?;
    }
    Ok(())
}

pub fn write_ratio_csv<W: Write>(mut w: W, m: &RatioMatrix) -> io::Result<()> {
    writeln!(w, "bin_x,bin_y,ratio,btd_links,links")?;
    for (&(a, b), &(n, d)) in &m.cells {
        writeln!(
            w,
            "{},{},{:.6},{n},{d}",
            m.binning.format(a),
            m.binning.format(b),
            n as f64 / d as f64
        )?;
    }
    Ok(())
}
