//! Time-varying directed communication graphs.
//!
//! Vertices are `0..n`. An arc `(j, i)` means `j` is an in-neighbor of `i`:
//! information flows from `j` to `i`. Every vertex carries a self-loop, which
//! is added at construction time and on load, never assumed.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::str::FromStr;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::rng::{keyed_rng, Stream};

/// A directed graph on `n` vertices with mandatory self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl DirectedGraph {
    /// Builds a graph from `(from, to)` arcs and adds every self-loop.
    pub fn new(n: usize, arcs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return arg("graph must have at least one vertex");
        }
        let mut edges: BTreeSet<(usize, usize)> = (0..n).map(|i| (i, i)).collect();
        for (j, i) in arcs {
            if j >= n || i >= n {
                return arg(format!("arc ({j}, {i}) out of range for n = {n}"));
            }
            edges.insert((j, i));
        }
        Ok(Self { n, edges })
    }

    pub fn self_loops(n: usize) -> Result<Self> {
        Self::new(n, [])
    }

    pub fn complete(n: usize) -> Result<Self> {
        Self::new(n, (0..n).flat_map(|j| (0..n).map(move |i| (j, i))))
    }

    /// Directed ring `i -> i+1 (mod n)`.
    pub fn ring(n: usize) -> Result<Self> {
        Self::new(n, (0..n).map(|i| (i, (i + 1) % n)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.edges.contains(&(from, to))
    }

    /// Arcs other than self-loops.
    pub fn proper_arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied().filter(|(j, i)| j != i)
    }

    fn check_vertex(&self, v: usize) -> Result<()> {
        if v >= self.n {
            return arg(format!("vertex {v} out of range for n = {}", self.n));
        }
        Ok(())
    }

    /// `{ j : (j, i) in edges }`; always contains `i`.
    pub fn in_neighbors(&self, i: usize) -> Result<BTreeSet<usize>> {
        self.check_vertex(i)?;
        Ok(self.edges.iter().filter(|e| e.1 == i).map(|e| e.0).collect())
    }

    /// `{ k : (i, k) in edges }`; always contains `i`.
    pub fn out_neighbors(&self, i: usize) -> Result<BTreeSet<usize>> {
        self.check_vertex(i)?;
        Ok(self.edges.range((i, 0)..=(i, usize::MAX)).map(|e| e.1).collect())
    }

    pub fn out_degree(&self, i: usize) -> usize {
        self.edges.range((i, 0)..=(i, usize::MAX)).count()
    }

    pub fn is_strongly_connected(&self) -> bool {
        let mut g = DiGraph::<(), ()>::with_capacity(self.n, self.edges.len());
        for _ in 0..self.n {
            g.add_node(());
        }
        for &(j, i) in &self.edges {
            g.add_edge(NodeIndex::new(j), NodeIndex::new(i), ());
        }
        tarjan_scc(&g).len() == 1
    }
}

/// Union of graphs over a common vertex set.
pub fn union_graph(graphs: &[DirectedGraph]) -> Result<DirectedGraph> {
    let first = graphs.first().ok_or_else(|| Error::Argument("union of an empty list".into()))?;
    let mut edges = first.edges.clone();
    for g in &graphs[1..] {
        if g.n != first.n {
            return arg(format!("vertex count mismatch: {} vs {}", g.n, first.n));
        }
        edges.extend(g.edges.iter().copied());
    }
    Ok(DirectedGraph { n: first.n, edges })
}

/// A finite, time-indexed sequence of graphs on the same vertex set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphSequence {
    n: usize,
    graphs: Vec<DirectedGraph>,
    claimed_window: Option<usize>,
}

impl GraphSequence {
    pub fn new(graphs: Vec<DirectedGraph>, claimed_window: Option<usize>) -> Result<Self> {
        let n = match graphs.first() {
            Some(g) => g.n,
            None => return arg("graph sequence must be nonempty"),
        };
        if let Some(bad) = graphs.iter().position(|g| g.n != n) {
            return arg(format!("graph at t={bad} has {} vertices, expected {n}", graphs[bad].n));
        }
        if claimed_window == Some(0) {
            return arg("claimed window must be positive");
        }
        Ok(Self { n, graphs, claimed_window })
    }

    pub fn constant(g: DirectedGraph, horizon: usize) -> Result<Self> {
        Self::new(vec![g; horizon], Some(1))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn graphs(&self) -> &[DirectedGraph] {
        &self.graphs
    }

    pub fn get(&self, t: usize) -> Option<&DirectedGraph> {
        self.graphs.get(t)
    }

    pub fn claimed_window(&self) -> Option<usize> {
        self.claimed_window
    }

    /// Checks every complete length-`window` window inside the finite horizon.
    ///
    /// This is the finite-prefix reading of uniform strong connectivity: a
    /// `true` answer is necessary for the infinite-horizon property, not sufficient.
    pub fn is_uniformly_strongly_connected(&self, window: usize) -> Result<bool> {
        if window == 0 {
            return arg("window must be positive");
        }
        if window > self.graphs.len() {
            return arg(format!("window {window} exceeds sequence length {}", self.graphs.len()));
        }
        for start in 0..=self.graphs.len() - window {
            if !union_graph(&self.graphs[start..start + window])?.is_strongly_connected() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Serializes to the line format: `n horizon`, then `t j i` per proper arc.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.graphs.len());
        for (t, g) in self.graphs.iter().enumerate() {
            for (j, i) in g.proper_arcs() {
                let _ = writeln!(out, "{t} {j} {i}");
            }
        }
        out
    }

    /// Parses the line format. Self-loops are re-added; listing them is allowed.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::Parse("missing `n horizon` header".into()))?;
        let hv = parse_usizes(header, 2)?;
        let (n, horizon) = (hv[0], hv[1]);
        if horizon == 0 {
            return Err(Error::Parse("horizon must be positive".into()));
        }
        let mut arcs: Vec<Vec<(usize, usize)>> = vec![Vec::new(); horizon];
        for line in lines {
            let v = parse_usizes(line, 3)?;
            if v[0] >= horizon {
                return Err(Error::Parse(format!("time {} beyond horizon {horizon}", v[0])));
            }
            arcs[v[0]].push((v[1], v[2]));
        }
        let graphs = arcs.into_iter().map(|a| DirectedGraph::new(n, a)).collect::<Result<Vec<_>>>()?;
        Self::new(graphs, None)
    }
}

fn parse_usizes(line: &str, expected: usize) -> Result<Vec<usize>> {
    let v = line
        .split_whitespace()
        .map(|s| s.parse::<usize>().map_err(|e| Error::Parse(format!("`{line}`: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    if v.len() != expected {
        return Err(Error::Parse(format!("`{line}`: expected {expected} fields")));
    }
    Ok(v)
}

/// Graph sequence generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GeneratorKind {
    StaticComplete,
    /// Directed ring `i -> i+1`.
    StaticRing,
    /// One ring arc per step: `(t mod n) -> (t+1 mod n)`. Any `n` consecutive
    /// steps cover the whole ring.
    RotatingSingleEdge,
    /// A seeded Hamiltonian cycle whose arcs each fire once per `window` steps at
    /// a random phase, plus independent extra arcs with probability `extra_arc_prob`.
    /// Every window of `window` consecutive steps unions to a strongly connected graph.
    RandomSpanning {
        #[serde(default = "default_window")]
        window: usize,
        #[serde(default = "default_extra_prob")]
        extra_arc_prob: f64,
    },
    /// Undirected circulant graphs `i <-> i±s` with a random shift `s` coprime
    /// to `n` per step. Regular and balanced, so default weights are doubly stochastic.
    DoublyStochastic,
}

fn default_window() -> usize {
    3
}

fn default_extra_prob() -> f64 {
    0.1
}

impl FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "static-complete" => Self::StaticComplete,
            "static-ring" => Self::StaticRing,
            "rotating-single-edge" => Self::RotatingSingleEdge,
            "random-spanning" => {
                Self::RandomSpanning { window: default_window(), extra_arc_prob: default_extra_prob() }
            }
            "doubly-stochastic" | "doubly-stochastic-compatible" => Self::DoublyStochastic,
            other => return arg(format!("unknown graph generator `{other}`")),
        })
    }
}

/// Deterministic in `(kind, n, horizon, seed)`.
pub fn generate_sequence(kind: &GeneratorKind, n: usize, horizon: usize, seed: u64) -> Result<GraphSequence> {
    if n == 0 || horizon == 0 {
        return arg("n and horizon must be at least 1");
    }
    match kind {
        GeneratorKind::StaticComplete => GraphSequence::constant(DirectedGraph::complete(n)?, horizon),
        GeneratorKind::StaticRing => GraphSequence::constant(DirectedGraph::ring(n)?, horizon),
        GeneratorKind::RotatingSingleEdge => {
            let graphs = (0..horizon)
                .map(|t| {
                    let j = t % n;
                    DirectedGraph::new(n, [(j, (j + 1) % n)])
                })
                .collect::<Result<Vec<_>>>()?;
            GraphSequence::new(graphs, Some(n.min(horizon)))
        }
        GeneratorKind::RandomSpanning { window, extra_arc_prob } => {
            random_spanning(n, horizon, seed, *window, *extra_arc_prob)
        }
        GeneratorKind::DoublyStochastic => {
            let shifts: Vec<usize> = (1..n).filter(|s| gcd(*s, n) == 1).collect();
            let graphs = (0..horizon)
                .map(|t| {
                    if shifts.is_empty() {
                        return DirectedGraph::self_loops(n);
                    }
                    let mut rng = keyed_rng(seed, Stream::Graph, 0, t as u64);
                    let s = shifts[rng.random_range(0..shifts.len())];
                    DirectedGraph::new(n, (0..n).flat_map(|i| [(i, (i + s) % n), (i, (i + n - s) % n)]))
                })
                .collect::<Result<Vec<_>>>()?;
            GraphSequence::new(graphs, Some(1))
        }
    }
}

fn random_spanning(n: usize, horizon: usize, seed: u64, window: usize, extra_arc_prob: f64) -> Result<GraphSequence> {
    if window == 0 {
        return arg("random-spanning window must be positive");
    }
    if !(0.0..=1.0).contains(&extra_arc_prob) {
        return arg(format!("extra_arc_prob {extra_arc_prob} not in [0, 1]"));
    }
    let mut setup = keyed_rng(seed, Stream::Graph, u64::MAX, 0);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut setup);
    let cycle: Vec<((usize, usize), usize)> = if n > 1 {
        (0..n).map(|k| ((order[k], order[(k + 1) % n]), setup.random_range(0..window))).collect()
    } else {
        Vec::new()
    };
    let graphs = (0..horizon)
        .map(|t| {
            let mut rng = keyed_rng(seed, Stream::Graph, 0, t as u64);
            let mut arcs: Vec<(usize, usize)> =
                cycle.iter().filter(|(_, phase)| t % window == *phase).map(|(arc, _)| *arc).collect();
            for j in 0..n {
                for i in 0..n {
                    if i != j && rng.random::<f64>() < extra_arc_prob {
                        arcs.push((j, i));
                    }
                }
            }
            DirectedGraph::new(n, arcs)
        })
        .collect::<Result<Vec<_>>>()?;
    GraphSequence::new(graphs, Some(window.min(horizon)))
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
