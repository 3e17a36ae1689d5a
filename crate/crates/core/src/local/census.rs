use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::Serialize;

use super::{ball, NeighborhoodQuery, RootedPattern};
use crate::error::{domain, Result};
use crate::graph::SegmentGraph;
use crate::stats::mean_stderr;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensusEntry {
    pub pattern: RootedPattern,
    /// Mean over samples of the fraction of centres showing the pattern.
    pub mean: f64,
    pub stderr: f64,
}

/// Neighbourhood shapes observed across a set of graphs, keyed by canonical pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct Census {
    pub samples: usize,
    pub entries: BTreeMap<RootedPattern, CensusEntry>,
}

impl Census {
    pub fn get(&self, pattern: &RootedPattern) -> Option<&CensusEntry> {
        self.entries.get(&pattern.canonical())
    }

    /// Mean fraction of `pattern`, zero if it never occurred.
    pub fn mean_of(&self, pattern: &RootedPattern) -> f64 {
        self.get(pattern).map_or(0.0, |e| e.mean)
    }

    /// Entries by decreasing mean, ties in pattern order.
    pub fn ranked(&self) -> Vec<&CensusEntry> {
        let mut v: Vec<&CensusEntry> = self.entries.values().collect();
        v.sort_by(|a, b| b.mean.total_cmp(&a.mean));
        v
    }
}

fn shape_counts(g: &SegmentGraph, query: &NeighborhoodQuery) -> HashMap<RootedPattern, u64> {
    let mut counts = HashMap::new();
    for i in 1..=g.n() as i64 {
        let b = ball(g, i, query).expect("every i in [1, n] is a vertex");
        *counts.entry(b.translate(0)).or_insert(0) += 1;
    }
    counts
}

/// Per-pattern mean and standard error of the empirical fraction across `samples`.
/// A pattern absent from a sample contributes a zero for that sample.
pub fn pattern_census(samples: &[SegmentGraph], query: &NeighborhoodQuery) -> Result<Census> {
    if samples.is_empty() {
        return domain("a census needs at least one sample");
    }
    let per_sample: Vec<(usize, HashMap<RootedPattern, u64>)> = samples
        .par_iter()
        .map(|g| (g.n(), shape_counts(g, query)))
        .collect();

    let mut fractions: BTreeMap<RootedPattern, Vec<f64>> = BTreeMap::new();
    for (s, (n, counts)) in per_sample.iter().enumerate() {
        for (pattern, &c) in counts {
            fractions
                .entry(pattern.clone())
                .or_insert_with(|| vec![0.0; samples.len()])[s] = c as f64 / *n as f64;
        }
    }
    let entries = fractions
        .into_iter()
        .map(|(pattern, values)| {
            let (mean, stderr) = mean_stderr(&values);
            let entry = CensusEntry {
                pattern: pattern.clone(),
                mean,
                stderr,
            };
            (pattern, entry)
        })
        .collect();
    Ok(Census {
        samples: samples.len(),
        entries,
    })
}
