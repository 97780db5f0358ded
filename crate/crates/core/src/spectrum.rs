//! Band edges, bands and gaps at rational frequencies, and Farey enumeration.

use std::collections::HashMap;
use std::io::{self, Write};
use std::sync::RwLock;

use crate::eigensolver::{build_extreme_matrix, check_coupling, EigenSolver, Extreme};
use crate::error::{Error, Result};
use crate::rational::Rational;

/// Two edges closer than this are treated as touching.
pub const TOUCHING_TOLERANCE: f64 = 1e-8;

/// Default coupling constant.
pub const DEFAULT_LAMBDA: f64 = 2.0;

/// The `2q` sorted band edges at one frequency, indexed from 1 as `x(1)..x(2q)`.
///
/// Band `i` is `[x(2i-1), x(2i)]`; gap `r` lies between `x(2r)` and `x(2r+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumEdges {
    pub theta: Rational,
    pub lambda: f64,
    edges: Vec<f64>,
}

/// The `r`-th gap: right end of band `r` to left end of band `r + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gap {
    pub r: i64,
    pub left: f64,
    pub right: f64,
}

impl Gap {
    pub fn width(&self) -> f64 {
        self.right - self.left
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.left + self.right)
    }

    pub fn is_touching(&self) -> bool {
        self.width() <= TOUCHING_TOLERANCE
    }
}

impl SpectrumEdges {
    /// Wraps a sorted edge list. Used by the cache and by tests.
    pub fn from_sorted(theta: Rational, lambda: f64, edges: Vec<f64>) -> Result<Self> {
        if edges.len() != 2 * theta.denom() as usize {
            return Err(Error::InvalidArgument(format!(
                "expected {} edges for {theta}, got {}",
                2 * theta.denom(),
                edges.len()
            )));
        }
        if edges.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidArgument("edges must be sorted ascending".into()));
        }
        Ok(SpectrumEdges { theta, lambda, edges })
    }

    pub fn q(&self) -> i64 {
        self.theta.denom()
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    /// One-based edge access, `x(1)` is the lowest edge.
    pub fn x(&self, i: usize) -> f64 {
        self.edges[i - 1]
    }

    pub fn bands(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.edges.chunks_exact(2).map(|c| (c[0], c[1]))
    }

    pub fn gap(&self, r: i64) -> Result<Gap> {
        let q = self.q();
        if r < 1 || r > q - 1 {
            return Err(Error::GapOutOfRange { r, max: q - 1, theta: self.theta.to_string() });
        }
        let r_idx = r as usize;
        Ok(Gap { r, left: self.x(2 * r_idx), right: self.x(2 * r_idx + 1) })
    }

    pub fn gaps(&self) -> impl Iterator<Item = Gap> + '_ {
        (1..self.q()).map(|r| self.gap(r).expect("index in range"))
    }

    pub fn min_edge(&self) -> f64 {
        self.edges[0]
    }

    pub fn max_edge(&self) -> f64 {
        self.edges[self.edges.len() - 1]
    }
}

/// Computes the band edges by merging the eigenvalues of the two extreme
/// matrices.
pub fn band_edges(theta: Rational, lambda: f64) -> Result<SpectrumEdges> {
    band_edges_with(&EigenSolver::default(), theta, lambda)
}

pub fn band_edges_with(solver: &EigenSolver, theta: Rational, lambda: f64) -> Result<SpectrumEdges> {
    check_coupling(lambda)?;
    let max = solver.solve(&build_extreme_matrix(theta, lambda, Extreme::Max)?)?;
    let min = solver.solve(&build_extreme_matrix(theta, lambda, Extreme::Min)?)?;
    let mut edges = max.values;
    edges.extend(min.values);
    edges.sort_by(f64::total_cmp);
    Ok(SpectrumEdges { theta, lambda, edges })
}

/// Thread-safe memo of band edges keyed by `(p mod q, q, lambda)`.
///
/// `0/1` and `1/1` share an entry since the matrices coincide.
#[derive(Debug, Default)]
pub struct SpectrumCache {
    solver: EigenSolver,
    entries: RwLock<HashMap<(i64, i64, u64), Vec<f64>>>,
}

impl SpectrumCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_solver(solver: EigenSolver) -> Self {
        SpectrumCache { solver, entries: RwLock::default() }
    }

    pub fn edges(&self, theta: Rational, lambda: f64) -> Result<SpectrumEdges> {
        check_coupling(lambda)?;
        let key = (theta.numer() % theta.denom(), theta.denom(), lambda.to_bits());
        if let Some(e) = self.entries.read().expect("cache lock poisoned").get(&key) {
            return Ok(SpectrumEdges { theta, lambda, edges: e.clone() });
        }
        let computed = band_edges_with(&self.solver, theta, lambda)?;
        self.entries.write().expect("cache lock poisoned").entry(key).or_insert_with(|| computed.edges.clone());
        Ok(computed)
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// All reduced `p/q` with `q <= q_max` and `lo <= p/q <= hi`, ascending.
///
/// Walks the Farey sequence of order `q_max` term by term through the
/// neighbour identity, starting from the first term not below `lo`.
pub fn farey_enumerate(q_max: i64, lo: Rational, hi: Rational) -> Vec<Rational> {
    if q_max < 1 || lo > hi {
        return Vec::new();
    }
    let (mut a, mut b) = farey_floor(q_max, lo);
    if (a as i128) * (lo.denom() as i128) < (lo.numer() as i128) * (b as i128) {
        if a == b {
            return Vec::new();
        }
        (a, b) = farey_successor(q_max, a, b);
    }
    let mut out = Vec::new();
    loop {
        let cur = Rational::new(a, b).expect("Farey terms are reduced and in range");
        if cur > hi {
            break;
        }
        out.push(cur);
        if a == b {
            break;
        }
        (a, b) = farey_successor(q_max, a, b);
    }
    out
}

/// Largest term of `F_n` not exceeding `x`.
fn farey_floor(n: i64, x: Rational) -> (i64, i64) {
    // For each denominator take floor(x * den); keep the largest value.
    let (xp, xq) = (x.numer() as i128, x.denom() as i128);
    let mut best = (0i64, 1i64);
    for den in 1..=n {
        let num = ((xp * den as i128) / xq) as i64;
        if (num as i128) * (best.1 as i128) > (best.0 as i128) * (den as i128) {
            best = (num, den);
        }
    }
    let g = crate::rational::gcd(best.0, best.1).max(1);
    (best.0 / g, best.1 / g)
}

/// Successor of `a/b` in `F_n`, via the Farey neighbour identity `b c - a d = 1`.
fn farey_successor(n: i64, a: i64, b: i64) -> (i64, i64) {
    // Solve b*c - a*d = 1 for the particular solution, then push d as high as possible.
    let (_, x, y) = ext_gcd(b, a);
    // b*x + a*y = 1  =>  c = x, d = -y is a solution.
    let (c0, d0) = (x, -y);
    let t = (n - d0).div_euclid(b);
    (c0 + t * a, d0 + t * b)
}

fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        (a, 1, 0)
    } else {
        let (g, x, y) = ext_gcd(b, a % b);
        (g, y, x - (a / b) * y)
    }
}

/// Writes one CSV row per spectrum: `p,q,lambda,x1,...,x2q`.
pub fn write_edges_csv<W: Write>(mut out: W, spectra: &[SpectrumEdges]) -> io::Result<()> {
    for s in spectra {
        write!(out, "{},{},{}", s.theta.numer(), s.theta.denom(), s.lambda)?;
        for x in &s.edges {
            write!(out, ",{x}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}
