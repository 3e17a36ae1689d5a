//! Graphs on an integer segment, shortest-path distances and the `H_p` functional.
//!
//! A [`SegmentGraph`] on `n` vertices always contains the path edges
//! `{x, x + 1}`; only the long edges (length at least 2) are stored.

use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Above this many vertices `H_p` runs its breadth-first searches in parallel.
const PARALLEL_BFS_MIN_VERTICES: usize = 1024;

const UNSEEN: u32 = u32::MAX;

/// An unordered vertex pair `{x, y}` stored with `x < y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeKey {
    x: usize,
    y: usize,
}

impl EdgeKey {
    pub fn new(a: usize, b: usize) -> Result<Self> {
        if a == b {
            return domain(format!("edge endpoints must differ, got {{{a}, {b}}}"));
        }
        Ok(Self {
            x: a.min(b),
            y: a.max(b),
        })
    }

    pub fn x(self) -> usize {
        self.x
    }

    pub fn y(self) -> usize {
        self.y
    }

    /// `|e| = y - x`.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(self) -> usize {
        self.y - self.x
    }
}

impl fmt::Display for EdgeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}, {}}}", self.x, self.y)
    }
}

/// The exponent `p` of the distance functional, `p` in `[1, inf]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PNorm {
    Finite(f64),
    Infinity,
}

impl PNorm {
    pub fn finite(p: f64) -> Result<Self> {
        if !(p.is_finite() && p >= 1.0) {
            return domain(format!("p must be a finite real >= 1, got {p}"));
        }
        Ok(PNorm::Finite(p))
    }

    pub fn is_finite(self) -> bool {
        matches!(self, PNorm::Finite(_))
    }

    pub fn validate(self) -> Result<Self> {
        match self {
            PNorm::Finite(p) => PNorm::finite(p),
            PNorm::Infinity => Ok(self),
        }
    }
}

impl fmt::Display for PNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PNorm::Finite(p) => write!(f, "{p}"),
            PNorm::Infinity => f.write_str("inf"),
        }
    }
}

impl FromStr for PNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(PNorm::Infinity),
            other => {
                let p: f64 = other
                    .parse()
                    .map_err(|_| Error::Domain(format!("cannot parse p from {s:?}")))?;
                if p.is_infinite() && p > 0.0 {
                    Ok(PNorm::Infinity)
                } else {
                    PNorm::finite(p)
                }
            }
        }
    }
}

impl Serialize for PNorm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            PNorm::Finite(p) => s.serialize_f64(*p),
            PNorm::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for PNorm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        let parsed = match Repr::deserialize(d)? {
            Repr::Num(p) => PNorm::finite(p),
            Repr::Str(s) => s.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

/// A graph on `{1, ..., n}` containing every path edge `{x, x + 1}` plus a set
/// of long edges.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "GraphRepr", into = "GraphRepr")]
pub struct SegmentGraph {
    n: usize,
    edges: BTreeSet<EdgeKey>,
    // long-edge neighbours, indexed by vertex (slot 0 unused)
    adj: Vec<Vec<usize>>,
}

impl PartialEq for SegmentGraph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.edges == other.edges
    }
}

impl Eq for SegmentGraph {}

impl Hash for SegmentGraph {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.n.hash(state);
        self.edges.hash(state);
    }
}

impl SegmentGraph {
    /// The bare path on `n >= 1` vertices.
    pub fn path(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("a segment graph needs n >= 1".into()));
        }
        Ok(Self {
            n,
            edges: BTreeSet::new(),
            adj: vec![Vec::new(); n + 1],
        })
    }

    /// Builds a graph from long edges, rejecting anything that is not a valid long edge.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = EdgeKey>,
    {
        let mut g = Self::path(n)?;
        for e in edges {
            g.check_long(e)?;
            if !g.insert_edge(e)? {
                return Err(Error::InvalidGraph(format!("duplicate edge {e}")));
            }
        }
        Ok(g)
    }

    /// Like [`from_edges`](Self::from_edges) but silently drops path edges and duplicates.
    pub fn from_edges_lenient<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = EdgeKey>,
    {
        let mut g = Self::path(n)?;
        for e in edges {
            if e.len() >= 2 {
                g.check_long(e)?;
                g.insert_edge(e)?;
            } else if e.y > n {
                return Err(Error::InvalidGraph(format!("edge {e} leaves [1, {n}]")));
            }
        }
        Ok(g)
    }

    /// Every pair adjacent: the complete graph on `n` vertices.
    pub fn complete(n: usize) -> Result<Self> {
        let mut g = Self::path(n)?;
        for x in 1..=n {
            for y in x + 2..=n {
                g.insert_edge(EdgeKey { x, y })?;
            }
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Stored long edges in lexicographic order.
    pub fn long_edges(&self) -> impl ExactSizeIterator<Item = EdgeKey> + '_ {
        self.edges.iter().copied()
    }

    pub fn num_long_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn has_long_edge(&self, e: EdgeKey) -> bool {
        self.edges.contains(&e)
    }

    /// Adjacency including the implicit path edges.
    pub fn is_adjacent(&self, a: usize, b: usize) -> bool {
        match EdgeKey::new(a, b) {
            Ok(e) if e.y <= self.n => e.len() == 1 || self.edges.contains(&e),
            _ => false,
        }
    }

    fn check_long(&self, e: EdgeKey) -> Result<()> {
        if e.x < 1 || e.y > self.n {
            return Err(Error::InvalidGraph(format!(
                "edge {e} leaves [1, {}]",
                self.n
            )));
        }
        if e.len() < 2 {
            return Err(Error::InvalidGraph(format!(
                "edge {e} is a path edge; only long edges are stored"
            )));
        }
        Ok(())
    }

    /// Adds a long edge; returns whether it was absent before.
    pub fn insert_edge(&mut self, e: EdgeKey) -> Result<bool> {
        self.check_long(e)?;
        if !self.edges.insert(e) {
            return Ok(false);
        }
        self.adj[e.x].push(e.y);
        self.adj[e.y].push(e.x);
        Ok(true)
    }

    /// Removes a long edge; returns whether it was present.
    pub fn remove_edge(&mut self, e: EdgeKey) -> bool {
        if !self.edges.remove(&e) {
            return false;
        }
        self.adj[e.x].retain(|&v| v != e.y);
        self.adj[e.y].retain(|&v| v != e.x);
        true
    }

    /// Flips a long edge; returns whether it is present afterwards.
    pub fn toggle_edge(&mut self, e: EdgeKey) -> Result<bool> {
        if self.remove_edge(e) {
            Ok(false)
        } else {
            self.insert_edge(e)
        }
    }

    /// Calls `f` on every neighbour of `v`, path neighbours first.
    #[inline]
    pub fn for_each_neighbor(&self, v: usize, mut f: impl FnMut(usize)) {
        if v > 1 {
            f(v - 1);
        }
        if v < self.n {
            f(v + 1);
        }
        for &u in &self.adj[v] {
            f(u);
        }
    }

    fn check_vertex(&self, v: usize) -> Result<()> {
        if v < 1 || v > self.n {
            return domain(format!("vertex {v} is outside [1, {}]", self.n));
        }
        Ok(())
    }

    /// Hop distance between `x` and `y`.
    pub fn distance(&self, x: usize, y: usize) -> Result<usize> {
        self.check_vertex(x)?;
        self.check_vertex(y)?;
        let mut bfs = Bfs::new(self.n);
        bfs.run(self, x, Some(y));
        Ok(bfs.dist[y] as usize)
    }

    /// Distances from `source` to every vertex; entry `v - 1` holds `d(source, v)`.
    pub fn distances_from(&self, source: usize) -> Result<Vec<usize>> {
        self.check_vertex(source)?;
        let mut bfs = Bfs::new(self.n);
        bfs.run(self, source, None);
        Ok(bfs.dist[1..].iter().map(|&d| d as usize).collect())
    }

    /// One breadth-first search per source.
    pub fn all_pairs_distances(&self) -> DistanceMatrix {
        let n = self.n;
        let mut data = vec![0u32; n * n];
        let mut bfs = Bfs::new(n);
        for s in 1..=n {
            bfs.run(self, s, None);
            data[(s - 1) * n..s * n].copy_from_slice(&bfs.dist[1..]);
        }
        DistanceMatrix { n, data }
    }

    /// `hist[d]` is the number of pairs `x < y` at distance `d`.
    pub fn distance_histogram(&self) -> Vec<u64> {
        let n = self.n;
        let per_source = |bfs: &mut Bfs, hist: &mut Vec<u64>, s: usize| {
            bfs.run(self, s, None);
            for &d in &bfs.dist[s + 1..] {
                hist[d as usize] += 1;
            }
        };
        if n >= PARALLEL_BFS_MIN_VERTICES {
            (1..=n)
                .into_par_iter()
                .fold(
                    || (Bfs::new(n), vec![0u64; n]),
                    |(mut bfs, mut hist), s| {
                        per_source(&mut bfs, &mut hist, s);
                        (bfs, hist)
                    },
                )
                .map(|(_, hist)| hist)
                .reduce(
                    || vec![0u64; n],
                    |mut a, b| {
                        a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                        a
                    },
                )
        } else {
            let mut bfs = Bfs::new(n);
            let mut hist = vec![0u64; n.max(1)];
            for s in 1..=n {
                per_source(&mut bfs, &mut hist, s);
            }
            hist
        }
    }

    /// `H_p(g)`: the `l^p` mean of `d(x, y)` over pairs `x < y`, or the diameter for `p = inf`.
    /// Zero when `n = 1`.
    pub fn h_p(&self, p: PNorm) -> f64 {
        h_p_from_histogram(&self.distance_histogram(), p)
    }

    /// Whether every pair at distance `0 < |x - y| <= l` is an edge.
    pub fn contains_all_edges_up_to(&self, l: usize) -> bool {
        self.short_edges_present(l) == count_pairs_up_to(self.n, l)
    }

    /// Number of present long edges of length `<= l`.
    pub fn short_edges_present(&self, l: usize) -> usize {
        self.edges.iter().filter(|e| e.len() <= l).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("graph serialisation cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Number of long pairs (`2 <= |x - y| <= l`) on `[n]`.
pub fn count_pairs_up_to(n: usize, l: usize) -> usize {
    (2..=l.min(n.saturating_sub(1))).map(|k| n - k).sum()
}

/// `C(n, 2) - (n - 1)`, the number of pairs eligible to be long edges.
pub fn eligible_pair_count(n: usize) -> usize {
    if n < 3 {
        0
    } else {
        (n - 1) * (n - 2) / 2
    }
}

/// Every eligible long pair, in lexicographic order.
pub fn eligible_pairs(n: usize) -> Vec<EdgeKey> {
    let mut out = Vec::with_capacity(eligible_pair_count(n));
    for x in 1..=n {
        for y in x + 2..=n {
            out.push(EdgeKey { x, y });
        }
    }
    out
}

/// Power mean over a distance histogram, scaled by the largest distance so
/// that large `p` cannot overflow.
pub fn h_p_from_histogram(hist: &[u64], p: PNorm) -> f64 {
    let Some(max_d) = hist.iter().rposition(|&c| c > 0) else {
        return 0.0;
    };
    if max_d == 0 {
        return 0.0;
    }
    match p {
        PNorm::Infinity => max_d as f64,
        PNorm::Finite(p) => {
            let pairs: u64 = hist.iter().sum();
            let m = max_d as f64;
            let scaled: f64 = hist
                .iter()
                .enumerate()
                .filter(|&(_, &c)| c > 0)
                .map(|(d, &c)| c as f64 * (d as f64 / m).powf(p))
                .sum();
            m * (scaled / pairs as f64).powf(1.0 / p)
        }
    }
}

struct Bfs {
    dist: Vec<u32>,
    queue: Vec<usize>,
}

impl Bfs {
    fn new(n: usize) -> Self {
        Self {
            dist: vec![UNSEEN; n + 1],
            queue: Vec::with_capacity(n),
        }
    }

    fn run(&mut self, g: &SegmentGraph, source: usize, target: Option<usize>) {
        self.dist.fill(UNSEEN);
        self.queue.clear();
        self.dist[source] = 0;
        self.queue.push(source);
        let mut head = 0;
        while head < self.queue.len() {
            let v = self.queue[head];
            head += 1;
            if Some(v) == target {
                return;
            }
            let next = self.dist[v] + 1;
            let (dist, queue) = (&mut self.dist, &mut self.queue);
            g.for_each_neighbor(v, |u| {
                if dist[u] == UNSEEN {
                    dist[u] = next;
                    queue.push(u);
                }
            });
        }
    }
}

/// Dense symmetric matrix of hop distances, addressed with 1-based vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<u32>,
}

impl DistanceMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, x: usize, y: usize) -> usize {
        self.data[(x - 1) * self.n + (y - 1)] as usize
    }

    /// Row `x` as a slice; entry `y - 1` is `d(x, y)`.
    pub fn row(&self, x: usize) -> &[u32] {
        &self.data[(x - 1) * self.n..x * self.n]
    }
}

#[derive(Serialize, Deserialize)]
struct GraphRepr {
    n: usize,
    edges: Vec<[usize; 2]>,
}

impl TryFrom<GraphRepr> for SegmentGraph {
    type Error = Error;

    fn try_from(r: GraphRepr) -> Result<Self> {
        let mut keys = Vec::with_capacity(r.edges.len());
        for [x, y] in r.edges {
            if x >= y {
                return Err(Error::InvalidGraph(format!(
                    "edge [{x}, {y}] must be listed with x < y"
                )));
            }
            keys.push(EdgeKey { x, y });
        }
        SegmentGraph::from_edges(r.n, keys)
    }
}

impl From<SegmentGraph> for GraphRepr {
    fn from(g: SegmentGraph) -> Self {
        GraphRepr {
            n: g.n,
            edges: g.edges.iter().map(|e| [e.x, e.y]).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(x: usize, y: usize) -> EdgeKey {
        EdgeKey::new(x, y).unwrap()
    }

    #[test]
    fn path_distances() {
        let g = SegmentGraph::path(5).unwrap();
        assert_eq!(g.distance(1, 5).unwrap(), 4);
        let g = SegmentGraph::from_edges(5, [e(1, 5)]).unwrap();
        assert_eq!(g.distance(1, 5).unwrap(), 1);
        let g = SegmentGraph::from_edges(10, [e(1, 4), e(4, 7), e(7, 10)]).unwrap();
        assert_eq!(g.distance(1, 10).unwrap(), 3);
    }

    #[test]
    fn distance_rejects_out_of_range() {
        let g = SegmentGraph::path(5).unwrap();
        assert!(matches!(g.distance(0, 3), Err(Error::Domain(_))));
        assert!(matches!(g.distance(2, 6), Err(Error::Domain(_))));
    }

    #[test]
    fn all_pairs_small_cases() {
        let d = SegmentGraph::path(3).unwrap().all_pairs_distances();
        let rows: Vec<Vec<u32>> = (1..=3).map(|x| d.row(x).to_vec()).collect();
        assert_eq!(rows, vec![vec![0, 1, 2], vec![1, 0, 1], vec![2, 1, 0]]);

        let d = SegmentGraph::complete(4).unwrap().all_pairs_distances();
        for x in 1..=4 {
            for y in 1..=4 {
                assert_eq!(d.get(x, y), usize::from(x != y));
            }
        }

        let d = SegmentGraph::from_edges(4, [e(1, 4)])
            .unwrap()
            .all_pairs_distances();
        assert_eq!(d.get(1, 4), 1);
        assert_eq!(d.get(1, 3), 2);
    }

    #[test]
    fn h_p_examples() {
        let p3 = SegmentGraph::path(3).unwrap();
        assert!((p3.h_p(PNorm::Finite(1.0)) - 4.0 / 3.0).abs() < 1e-15);
        for n in 2..20 {
            let g = SegmentGraph::path(n).unwrap();
            assert_eq!(g.h_p(PNorm::Infinity), (n - 1) as f64);
        }
        let p4 = SegmentGraph::path(4).unwrap();
        assert!((p4.h_p(PNorm::Finite(2.0)) - (10.0f64 / 3.0).sqrt()).abs() < 1e-14);
        assert!((p4.h_p(PNorm::Finite(2.0)) - 1.825741).abs() < 1e-6);
    }

    #[test]
    fn h_p_degenerate_sizes() {
        let g = SegmentGraph::path(1).unwrap();
        assert_eq!(g.h_p(PNorm::Finite(2.0)), 0.0);
        assert_eq!(g.h_p(PNorm::Infinity), 0.0);
        assert!(SegmentGraph::path(0).is_err());
        assert_eq!(SegmentGraph::path(2).unwrap().h_p(PNorm::Finite(3.0)), 1.0);
    }

    #[test]
    fn complete_graph_has_unit_h_p() {
        for n in 2..10 {
            let g = SegmentGraph::complete(n).unwrap();
            for p in [PNorm::Finite(1.0), PNorm::Finite(2.5), PNorm::Infinity] {
                assert!((g.h_p(p) - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn large_p_does_not_overflow() {
        let g = SegmentGraph::path(300).unwrap();
        let h = g.h_p(PNorm::Finite(400.0));
        assert!(h.is_finite());
        assert!(h <= 299.0 && h > 250.0);
    }

    #[test]
    fn rejects_invalid_edges() {
        assert!(SegmentGraph::from_edges(5, [e(1, 2)]).is_err());
        assert!(SegmentGraph::from_edges(5, [e(1, 6)]).is_err());
        assert!(SegmentGraph::from_edges(5, [e(1, 3), e(3, 1)]).is_err());
        assert!(EdgeKey::new(3, 3).is_err());
    }

    #[test]
    fn toggle_round_trip() {
        let mut g = SegmentGraph::path(6).unwrap();
        assert!(g.toggle_edge(e(2, 5)).unwrap());
        assert_eq!(g.distance(2, 5).unwrap(), 1);
        assert!(!g.toggle_edge(e(2, 5)).unwrap());
        assert_eq!(g, SegmentGraph::path(6).unwrap());
        assert_eq!(g.distance(2, 5).unwrap(), 3);
    }

    #[test]
    fn json_format() {
        let g = SegmentGraph::from_edges(10, [e(4, 7), e(1, 4), e(7, 10)]).unwrap();
        assert_eq!(g.to_json(), r#"{"n":10,"edges":[[1,4],[4,7],[7,10]]}"#);
        assert_eq!(SegmentGraph::from_json(&g.to_json()).unwrap(), g);
        for bad in [
            r#"{"n":5,"edges":[[1,2]]}"#,
            r#"{"n":5,"edges":[[3,1]]}"#,
            r#"{"n":5,"edges":[[1,7]]}"#,
            r#"{"n":5,"edges":[[1,3],[1,3]]}"#,
            r#"{"n":0,"edges":[]}"#,
        ] {
            assert!(SegmentGraph::from_json(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn pnorm_parsing() {
        assert_eq!("inf".parse::<PNorm>().unwrap(), PNorm::Infinity);
        assert_eq!("2".parse::<PNorm>().unwrap(), PNorm::Finite(2.0));
        assert!("0.5".parse::<PNorm>().is_err());
        let json = serde_json::to_string(&PNorm::Infinity).unwrap();
        assert_eq!(json, "\"inf\"");
        assert_eq!(serde_json::from_str::<PNorm>("7").unwrap(), PNorm::Finite(7.0));
    }

    #[test]
    fn saturation_predicate() {
        let mut g = SegmentGraph::path(5).unwrap();
        assert!(g.contains_all_edges_up_to(1));
        assert!(!g.contains_all_edges_up_to(2));
        for x in 1..=3 {
            g.insert_edge(e(x, x + 2)).unwrap();
        }
        assert!(g.contains_all_edges_up_to(2));
        assert!(!g.contains_all_edges_up_to(3));
        assert_eq!(count_pairs_up_to(5, 10), eligible_pair_count(5));
    }
}
