//! Rooted neighbourhoods of graphs on the integers.
//!
//! Two rooted graphs are identified when an integer translation carries one
//! onto the other, root onto root. Vertex labels therefore keep their
//! relative positions, and comparing two patterns amounts to translating both
//! to root `0` and testing equality.

mod census;
mod mu;

pub use census::{pattern_census, Census, CensusEntry};
pub use mu::{mu_ladder, mu_truncated, mu_truncated_distribution, LadderRung, MuEstimate, MuMode, WindowGraph};

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{domain, Error, Result};
use crate::graph::SegmentGraph;

/// A graph whose vertices are integers.
pub trait IntegerGraph {
    fn contains_vertex(&self, v: i64) -> bool;

    fn for_each_neighbor(&self, v: i64, f: &mut dyn FnMut(i64));
}

impl IntegerGraph for SegmentGraph {
    fn contains_vertex(&self, v: i64) -> bool {
        v >= 1 && v <= self.n() as i64
    }

    fn for_each_neighbor(&self, v: i64, f: &mut dyn FnMut(i64)) {
        SegmentGraph::for_each_neighbor(self, v as usize, |u| f(u as i64));
    }
}

/// Ball radius `k` and optional length cut-off `l` (edges longer than `l` are ignored).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NeighborhoodQuery {
    pub k: u32,
    pub l: Option<usize>,
}

impl NeighborhoodQuery {
    pub fn new(k: u32, l: Option<usize>) -> Result<Self> {
        if l == Some(0) {
            return domain("the length cut-off l must be at least 1");
        }
        Ok(Self { k, l })
    }

    pub fn truncated(k: u32, l: usize) -> Result<Self> {
        Self::new(k, Some(l))
    }

    pub fn untruncated(k: u32) -> Self {
        Self { k, l: None }
    }

    #[inline]
    fn keeps(&self, a: i64, b: i64) -> bool {
        self.l.is_none_or(|l| a.abs_diff(b) <= l as u64)
    }
}

/// A finite rooted graph on the integers; vertex and edge lists are kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "PatternRepr")]
pub struct RootedPattern {
    root: i64,
    vertices: Vec<i64>,
    edges: Vec<(i64, i64)>,
}

#[derive(Deserialize)]
struct PatternRepr {
    root: i64,
    vertices: Vec<i64>,
    edges: Vec<(i64, i64)>,
}

impl TryFrom<PatternRepr> for RootedPattern {
    type Error = Error;

    fn try_from(r: PatternRepr) -> Result<Self> {
        RootedPattern::new(r.root, r.vertices, r.edges)
    }
}

impl RootedPattern {
    /// Validates and normalises: the root is a vertex, edges join distinct
    /// vertices, and everything is reachable from the root.
    pub fn new(root: i64, mut vertices: Vec<i64>, edges: Vec<(i64, i64)>) -> Result<Self> {
        vertices.sort_unstable();
        vertices.dedup();
        if vertices.binary_search(&root).is_err() {
            return Err(Error::InvalidGraph(format!("root {root} is not a vertex")));
        }
        let mut norm = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at {a}")));
            }
            for v in [a, b] {
                if vertices.binary_search(&v).is_err() {
                    return Err(Error::InvalidGraph(format!(
                        "edge endpoint {v} is not a vertex"
                    )));
                }
            }
            norm.push((a.min(b), a.max(b)));
        }
        norm.sort_unstable();
        norm.dedup();
        let p = Self {
            root,
            vertices,
            edges: norm,
        };
        if !p.connected_from_root() {
            return Err(Error::InvalidGraph(
                "pattern is not connected from its root".into(),
            ));
        }
        Ok(p)
    }

    fn connected_from_root(&self) -> bool {
        let mut adj: HashMap<i64, Vec<i64>> = HashMap::new();
        for &(a, b) in &self.edges {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
        let mut seen = vec![self.root];
        let mut stack = vec![self.root];
        while let Some(v) = stack.pop() {
            for &u in adj.get(&v).into_iter().flatten() {
                if !seen.contains(&u) {
                    seen.push(u);
                    stack.push(u);
                }
            }
        }
        seen.len() == self.vertices.len()
    }

    /// The path `root - r, ..., root + r` rooted at `root`: the ball of radius
    /// `r` around an interior vertex of a bare path.
    pub fn bare_path(root: i64, r: i64) -> Self {
        let vertices: Vec<i64> = (root - r..=root + r).collect();
        let edges = (root - r..root + r).map(|x| (x, x + 1)).collect();
        Self {
            root,
            vertices,
            edges,
        }
    }

    pub fn root(&self) -> i64 {
        self.root
    }

    pub fn vertices(&self) -> &[i64] {
        &self.vertices
    }

    pub fn edges(&self) -> &[(i64, i64)] {
        &self.edges
    }

    /// Shifts every label by `new_root - root`.
    pub fn translate(&self, new_root: i64) -> Self {
        let shift = new_root - self.root;
        Self {
            root: new_root,
            vertices: self.vertices.iter().map(|v| v + shift).collect(),
            edges: self.edges.iter().map(|&(a, b)| (a + shift, b + shift)).collect(),
        }
    }

    /// Translated to root `0`.
    pub fn canonical(&self) -> Self {
        self.translate(0)
    }

    pub fn is_isomorphic(&self, other: &Self) -> bool {
        self.vertices.len() == other.vertices.len()
            && self.edges.len() == other.edges.len()
            && self.translate(other.root) == *other
    }

    /// Canonical JSON: `{"root":0,"vertices":[...],"edges":[[a,b],...]}`.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.canonical()).expect("pattern serialisation cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON.
    pub fn key_hash(&self) -> String {
        let digest = Sha256::digest(self.to_json().as_bytes());
        hex::encode(&digest[..8])
    }
}

impl fmt::Display for RootedPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_json())
    }
}

/// `translate(pattern, new_root)`.
pub fn translate(pattern: &RootedPattern, new_root: i64) -> RootedPattern {
    pattern.translate(new_root)
}

pub fn is_isomorphic(a: &RootedPattern, b: &RootedPattern) -> bool {
    a.is_isomorphic(b)
}

/// The (truncated) ball of radius `query.k` around `center`, with absolute labels.
///
/// With `query.l` set, edges longer than `l` are removed before distances are
/// measured, and the ball keeps every remaining edge between its vertices.
pub fn ball<G: IntegerGraph + ?Sized>(
    g: &G,
    center: i64,
    query: &NeighborhoodQuery,
) -> Result<RootedPattern> {
    if !g.contains_vertex(center) {
        return domain(format!("center {center} is not a vertex of the graph"));
    }
    let mut dist: HashMap<i64, u32> = HashMap::new();
    dist.insert(center, 0);
    let mut queue = VecDeque::from([center]);
    while let Some(v) = queue.pop_front() {
        let d = dist[&v];
        if d == query.k {
            continue;
        }
        g.for_each_neighbor(v, &mut |u| {
            if query.keeps(v, u) && !dist.contains_key(&u) {
                dist.insert(u, d + 1);
                queue.push_back(u);
            }
        });
    }
    let mut vertices: Vec<i64> = dist.keys().copied().collect();
    vertices.sort_unstable();
    let mut edges = Vec::new();
    for &v in &vertices {
        g.for_each_neighbor(v, &mut |u| {
            if v < u && query.keeps(v, u) && dist.contains_key(&u) {
                edges.push((v, u));
            }
        });
    }
    edges.sort_unstable();
    Ok(RootedPattern {
        root: center,
        vertices,
        edges,
    })
}

/// Fraction of centres `i in [1, n]` whose ball matches `pattern` up to translation.
pub fn empirical_fraction(
    g: &SegmentGraph,
    query: &NeighborhoodQuery,
    pattern: &RootedPattern,
) -> f64 {
    let target = pattern.canonical();
    let hits = (1..=g.n() as i64)
        .filter(|&i| {
            ball(g, i, query)
                .map(|b| b.translate(0) == target)
                .unwrap_or(false)
        })
        .count();
    hits as f64 / g.n() as f64
}

/// Number of stored edges longer than `l`.
pub fn long_edge_count(g: &SegmentGraph, l: usize) -> usize {
    g.long_edges().filter(|e| e.len() > l).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EdgeKey;

    fn path123(root: i64) -> RootedPattern {
        RootedPattern::new(root, vec![1, 2, 3], vec![(1, 2), (2, 3)]).unwrap()
    }

    fn g10_with_2_9() -> SegmentGraph {
        SegmentGraph::from_edges(10, [EdgeKey::new(2, 9).unwrap()]).unwrap()
    }

    #[test]
    fn translate_examples() {
        let p = path123(2);
        assert_eq!(translate(&p, 2), p);
        let moved = translate(&p, 5);
        assert_eq!(moved, RootedPattern::new(5, vec![4, 5, 6], vec![(4, 5), (5, 6)]).unwrap());
        let single = RootedPattern::new(7, vec![7], vec![]).unwrap();
        assert_eq!(translate(&single, 0), RootedPattern::new(0, vec![0], vec![]).unwrap());
    }

    #[test]
    fn isomorphism_examples() {
        let p = path123(2);
        assert!(is_isomorphic(&p, &p));
        let q = RootedPattern::new(5, vec![4, 5, 6], vec![(4, 5), (5, 6)]).unwrap();
        assert!(is_isomorphic(&p, &q));
        assert!(!is_isomorphic(&path123(1), &path123(2)));
    }

    #[test]
    fn pattern_validation() {
        assert!(RootedPattern::new(9, vec![1, 2], vec![(1, 2)]).is_err());
        assert!(RootedPattern::new(1, vec![1, 2], vec![(1, 3)]).is_err());
        assert!(RootedPattern::new(1, vec![1, 2, 5], vec![(1, 2)]).is_err());
        assert!(RootedPattern::new(1, vec![1], vec![(1, 1)]).is_err());
        let p = RootedPattern::new(2, vec![3, 1, 2], vec![(3, 2), (2, 1)]).unwrap();
        assert_eq!(p.edges(), &[(1, 2), (2, 3)]);
    }

    #[test]
    fn pattern_json() {
        let p = path123(2);
        assert_eq!(p.to_json(), r#"{"root":0,"vertices":[-1,0,1],"edges":[[-1,0],[0,1]]}"#);
        assert_eq!(RootedPattern::from_json(&p.to_json()).unwrap(), p.canonical());
        assert!(RootedPattern::from_json(r#"{"root":3,"vertices":[0],"edges":[]}"#).is_err());
        assert_eq!(p.key_hash().len(), 16);
        assert_eq!(p.key_hash(), translate(&p, 40).key_hash());
    }

    #[test]
    fn ball_examples() {
        let path = SegmentGraph::path(10).unwrap();
        let b = ball(&path, 5, &NeighborhoodQuery::untruncated(1)).unwrap();
        assert_eq!(b, RootedPattern::new(5, vec![4, 5, 6], vec![(4, 5), (5, 6)]).unwrap());

        let g = g10_with_2_9();
        let b = ball(&g, 2, &NeighborhoodQuery::truncated(1, 5).unwrap()).unwrap();
        assert_eq!(b, RootedPattern::new(2, vec![1, 2, 3], vec![(1, 2), (2, 3)]).unwrap());

        let b = ball(&g, 2, &NeighborhoodQuery::untruncated(1)).unwrap();
        let expected =
            RootedPattern::new(2, vec![1, 2, 3, 9], vec![(1, 2), (2, 3), (2, 9)]).unwrap();
        assert_eq!(b, expected);

        assert!(ball(&g, 0, &NeighborhoodQuery::untruncated(1)).is_err());
        assert!(ball(&g, 11, &NeighborhoodQuery::untruncated(1)).is_err());
    }

    #[test]
    fn ball_keeps_edges_between_boundary_vertices() {
        // 1 and 3 are both at distance 1 from 2; the edge {1,3} joins them
        let g = SegmentGraph::from_edges(4, [EdgeKey::new(1, 3).unwrap()]).unwrap();
        let b = ball(&g, 2, &NeighborhoodQuery::untruncated(1)).unwrap();
        assert_eq!(b.edges(), &[(1, 2), (1, 3), (2, 3)]);
    }

    #[test]
    fn empirical_fraction_examples() {
        let q1 = NeighborhoodQuery::untruncated(1);
        let interior = RootedPattern::bare_path(0, 1);
        for n in [3, 10, 57] {
            let path = SegmentGraph::path(n).unwrap();
            let f = empirical_fraction(&path, &q1, &interior);
            assert!((f - (n - 2) as f64 / n as f64).abs() < 1e-15);
        }
        let k4 = SegmentGraph::complete(4).unwrap();
        assert_eq!(empirical_fraction(&k4, &q1, &interior), 0.0);

        let q = NeighborhoodQuery::truncated(1, 5).unwrap();
        assert!((empirical_fraction(&g10_with_2_9(), &q, &interior) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn long_edge_count_examples() {
        let path = SegmentGraph::path(12).unwrap();
        assert_eq!(long_edge_count(&path, 1), 0);
        let g = SegmentGraph::from_edges(
            10,
            [EdgeKey::new(1, 4).unwrap(), EdgeKey::new(2, 9).unwrap()],
        )
        .unwrap();
        assert_eq!(long_edge_count(&g, 5), 1);
        assert_eq!(long_edge_count(&g, 2), 2);
    }

    #[test]
    fn query_validation() {
        assert!(NeighborhoodQuery::truncated(1, 0).is_err());
        assert!(NeighborhoodQuery::new(0, Some(1)).is_ok());
        let g = SegmentGraph::path(4).unwrap();
        let b = ball(&g, 3, &NeighborhoodQuery::untruncated(0)).unwrap();
        assert_eq!(b, RootedPattern::new(3, vec![3], vec![]).unwrap());
    }
}
