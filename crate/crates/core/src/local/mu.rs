//! Probability that the truncated ball at `0` of the reference graph on the
//! integers has a given shape.
//!
//! Every hop of a truncated ball has length at most `l`, so the ball of radius
//! `k` at `0` only sees vertices in `[-kl, kl]` and only the random pairs of
//! length `2..=l` inside that window. Those finitely many independent edges are
//! either enumerated exhaustively or sampled.

use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;

use super::{ball, IntegerGraph, NeighborhoodQuery, RootedPattern};
use crate::error::{domain, Error, Result};
use crate::measures::log_edge_prob;
use crate::oracle::ENUMERATION_CAP;
use crate::rng::ChainRng;

use rand::SeedableRng;

/// The path on `[lo, hi]` plus a set of long edges.
#[derive(Debug, Clone)]
pub struct WindowGraph {
    lo: i64,
    hi: i64,
    adj: Vec<Vec<i64>>,
}

impl WindowGraph {
    pub fn new(lo: i64, hi: i64) -> Self {
        assert!(lo <= hi, "empty window");
        Self {
            lo,
            hi,
            adj: vec![Vec::new(); (hi - lo + 1) as usize],
        }
    }

    pub fn add_edge(&mut self, a: i64, b: i64) {
        assert!(self.contains_vertex(a) && self.contains_vertex(b) && a.abs_diff(b) >= 2);
        self.adj[(a - self.lo) as usize].push(b);
        self.adj[(b - self.lo) as usize].push(a);
    }
}

impl IntegerGraph for WindowGraph {
    fn contains_vertex(&self, v: i64) -> bool {
        v >= self.lo && v <= self.hi
    }

    fn for_each_neighbor(&self, v: i64, f: &mut dyn FnMut(i64)) {
        if v > self.lo {
            f(v - 1);
        }
        if v < self.hi {
            f(v + 1);
        }
        for &u in &self.adj[(v - self.lo) as usize] {
            f(u);
        }
    }
}

/// Random pairs of length `2..=l` inside `[-w, w]`, with their edge probabilities.
fn window_pairs(w: i64, l: usize, gamma: f64) -> Vec<((i64, i64), f64)> {
    let mut out = Vec::new();
    for x in -w..=w {
        for len in 2..=l as i64 {
            let y = x + len;
            if y > w {
                break;
            }
            out.push(((x, y), log_edge_prob(len as usize, gamma).exp()));
        }
    }
    out
}

fn truncation(query: &NeighborhoodQuery) -> Result<usize> {
    query
        .l
        .ok_or_else(|| Error::Domain("mu_truncated needs a length cut-off l".into()))
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return domain(format!("gamma must be a positive real, got {gamma}"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MuMode {
    Exact,
    MonteCarlo { samples: u64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MuEstimate {
    pub value: f64,
    /// Zero in exact mode.
    pub stderr: f64,
}

/// Exact law of the truncated ball at `0`, as a map from canonical pattern to probability.
pub fn mu_truncated_distribution(
    gamma: f64,
    query: &NeighborhoodQuery,
) -> Result<BTreeMap<RootedPattern, f64>> {
    check_gamma(gamma)?;
    let l = truncation(query)?;
    let w = query.k as i64 * l as i64;
    let pairs = window_pairs(w, l, gamma);
    if pairs.len() > ENUMERATION_CAP {
        return Err(Error::EnumerationCap {
            size: pairs.len(),
            cap: ENUMERATION_CAP,
        });
    }
    let mut law: BTreeMap<RootedPattern, f64> = BTreeMap::new();
    for mask in 0u64..1 << pairs.len() {
        let mut g = WindowGraph::new(-w, w);
        let mut prob = 1.0;
        for (bit, &((a, b), p)) in pairs.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                g.add_edge(a, b);
                prob *= p;
            } else {
                prob *= 1.0 - p;
            }
        }
        let shape = ball(&g, 0, query)?;
        *law.entry(shape).or_insert(0.0) += prob;
    }
    Ok(law)
}

/// `mu^l(k, pattern)`: probability that the truncated ball at `0` of the
/// reference graph on the integers is a translate of `pattern`.
pub fn mu_truncated(
    gamma: f64,
    query: &NeighborhoodQuery,
    pattern: &RootedPattern,
    mode: MuMode,
) -> Result<MuEstimate> {
    check_gamma(gamma)?;
    let l = truncation(query)?;
    let target = pattern.canonical();
    match mode {
        MuMode::Exact => {
            let law = mu_truncated_distribution(gamma, query)?;
            Ok(MuEstimate {
                value: law.get(&target).copied().unwrap_or(0.0),
                stderr: 0.0,
            })
        }
        MuMode::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return domain("Monte Carlo mode needs at least one sample");
            }
            let w = query.k as i64 * l as i64;
            let pairs = window_pairs(w, l, gamma);
            let mut rng = ChainRng::seed_from_u64(seed);
            let mut hits = 0u64;
            for _ in 0..samples {
                let mut g = WindowGraph::new(-w, w);
                for &((a, b), p) in &pairs {
                    if rng.random::<f64>() < p {
                        g.add_edge(a, b);
                    }
                }
                if ball(&g, 0, query)? == target {
                    hits += 1;
                }
            }
            let value = hits as f64 / samples as f64;
            Ok(MuEstimate {
                value,
                stderr: (value * (1.0 - value) / samples as f64).sqrt(),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LadderRung {
    pub l: usize,
    pub mu: f64,
    /// `mu` minus the previous rung's `mu` (zero on the first rung).
    pub increment: f64,
}

/// Exact `mu^l` over increasing cut-offs, approximating the untruncated `mu` as `l` grows.
pub fn mu_ladder(
    gamma: f64,
    k: u32,
    pattern: &RootedPattern,
    ls: &[usize],
) -> Result<Vec<LadderRung>> {
    let mut prev: Option<f64> = None;
    ls.iter()
        .map(|&l| {
            let q = NeighborhoodQuery::truncated(k, l)?;
            let mu = mu_truncated(gamma, &q, pattern, MuMode::Exact)?.value;
            let increment = prev.map_or(0.0, |p| mu - p);
            prev = Some(mu);
            Ok(LadderRung { l, mu, increment })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bare_ball_probability() {
        let q = NeighborhoodQuery::truncated(1, 2).unwrap();
        let pattern = RootedPattern::bare_path(0, 1);
        let mu = mu_truncated(3.0, &q, &pattern, MuMode::Exact).unwrap().value;
        let hand = (1.0 - (-8f64).exp()).powi(3);
        assert!((mu - hand).abs() < 1e-15);
        assert!((mu - 0.998994).abs() < 1e-6);
    }

    #[test]
    fn ball_with_length_two_edge() {
        let q = NeighborhoodQuery::truncated(1, 2).unwrap();
        let pattern =
            RootedPattern::new(0, vec![-1, 0, 1, 2], vec![(-1, 0), (0, 1), (0, 2), (1, 2)]).unwrap();
        let mu = mu_truncated(3.0, &q, &pattern, MuMode::Exact).unwrap().value;
        let p = (-8f64).exp();
        // {0,2} present, {-2,0} and {-1,1} absent; {1,3} lies outside the window
        assert!((mu - p * (1.0 - p).powi(2)).abs() < 1e-18);
        assert!(mu < 1e-3);
    }

    #[test]
    fn distribution_sums_to_one() {
        for (k, l) in [(1, 2), (1, 3), (2, 2), (2, 3)] {
            let q = NeighborhoodQuery::truncated(k, l).unwrap();
            let law = mu_truncated_distribution(0.7, &q).unwrap();
            let total: f64 = law.values().sum();
            assert!((total - 1.0).abs() < 1e-12, "k={k} l={l}");
        }
    }

    #[test]
    fn no_random_edges_below_length_two() {
        let q = NeighborhoodQuery::truncated(3, 1).unwrap();
        let mu = mu_truncated(1.0, &q, &RootedPattern::bare_path(0, 3), MuMode::Exact).unwrap();
        assert_eq!(mu.value, 1.0);
    }

    #[test]
    fn refusals() {
        let pattern = RootedPattern::bare_path(0, 1);
        let untruncated = NeighborhoodQuery::untruncated(1);
        assert!(mu_truncated(1.0, &untruncated, &pattern, MuMode::Exact).is_err());
        let big = NeighborhoodQuery::truncated(3, 4).unwrap();
        assert!(matches!(
            mu_truncated(1.0, &big, &pattern, MuMode::Exact),
            Err(Error::EnumerationCap { .. })
        ));
        let q = NeighborhoodQuery::truncated(1, 2).unwrap();
        let mc = MuMode::MonteCarlo { samples: 0, seed: 1 };
        assert!(mu_truncated(1.0, &q, &pattern, mc).is_err());
    }

    #[test]
    fn ladder_increments() {
        let pattern = RootedPattern::bare_path(0, 1);
        let rungs = mu_ladder(2.0, 1, &pattern, &[2, 3, 4]).unwrap();
        assert_eq!(rungs[0].increment, 0.0);
        for pair in rungs.windows(2) {
            assert!((pair[1].mu - pair[0].mu - pair[1].increment).abs() < 1e-15);
            // longer cut-offs only expose more edges that can spoil the bare ball
            assert!(pair[1].mu <= pair[0].mu);
        }
    }
}
