//! Exhaustive enumeration of the Gibbs measure for small `n`.
//!
//! All `2^m` subsets of the `m = C(n, 2) - (n - 1)` long pairs are visited.
//! Bit `i` of a mask is the `i`-th pair of [`eligible_pairs`] (lexicographic).

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{eligible_pairs, EdgeKey, SegmentGraph};
use crate::measures::{log_gibbs_weight_unnormalized, ModelParams};
use crate::stats::log_sum_exp;

/// Enumeration refuses more than `2^24` graphs.
pub const ENUMERATION_CAP: usize = 24;

const CHUNK: u64 = 1 << 12;

/// Graph whose long edges are the pairs selected by `mask`.
pub fn graph_from_mask(n: usize, pairs: &[EdgeKey], mask: u64) -> SegmentGraph {
    let mut g = SegmentGraph::path(n).expect("n >= 1");
    for (bit, &e) in pairs.iter().enumerate() {
        if mask >> bit & 1 == 1 {
            g.insert_edge(e).expect("eligible pair");
        }
    }
    g
}

/// Inverse of [`graph_from_mask`]. Edges missing from `pairs` are ignored.
pub fn mask_of(g: &SegmentGraph, pairs: &[EdgeKey]) -> u64 {
    pairs
        .iter()
        .enumerate()
        .filter(|(_, &e)| g.has_long_edge(e))
        .fold(0, |m, (bit, _)| m | 1 << bit)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Entry {
    pub mask: u64,
    pub log_weight: f64,
    pub probability: f64,
}

/// Partition function and per-graph probabilities of one parameter set.
#[derive(Debug, Clone)]
pub struct EnumerationReport {
    params: ModelParams,
    pairs: Vec<EdgeKey>,
    log_z: f64,
    entries: Vec<Entry>,
}

impl EnumerationReport {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    pub fn pairs(&self) -> &[EdgeKey] {
        &self.pairs
    }

    /// Entries in mask order.
    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn graph(&self, entry: &Entry) -> SegmentGraph {
        graph_from_mask(self.params.n, &self.pairs, entry.mask)
    }

    pub fn index_of(&self, g: &SegmentGraph) -> usize {
        mask_of(g, &self.pairs) as usize
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.probability).collect()
    }

    /// Entry with the largest probability (first in mask order on ties).
    pub fn mode(&self) -> &Entry {
        self.entries
            .iter()
            .reduce(|best, e| if e.probability > best.probability { e } else { best })
            .expect("enumeration always has at least one graph")
    }

    pub fn event_probability<F>(&self, predicate: F) -> f64
    where
        F: Fn(&SegmentGraph) -> bool + Sync,
    {
        self.expectation(|g| if predicate(g) { 1.0 } else { 0.0 })
    }

    pub fn expectation<F>(&self, f: F) -> f64
    where
        F: Fn(&SegmentGraph) -> f64 + Sync,
    {
        self.entries
            .par_chunks(CHUNK as usize)
            .map(|chunk| {
                chunk
                    .iter()
                    .map(|e| e.probability * f(&self.graph(e)))
                    .sum::<f64>()
            })
            .collect::<Vec<_>>()
            .into_iter()
            .sum()
    }
}

/// Enumerates every graph on `[n]` under `params`.
pub fn enumerate(params: &ModelParams) -> Result<EnumerationReport> {
    let params = params.validate()?;
    let pairs = eligible_pairs(params.n);
    let m = pairs.len();
    if m > ENUMERATION_CAP {
        return Err(Error::EnumerationCap {
            size: m,
            cap: ENUMERATION_CAP,
        });
    }
    let total = 1u64 << m;
    let starts: Vec<u64> = (0..total).step_by(CHUNK as usize).collect();
    let log_weights: Vec<f64> = starts
        .into_par_iter()
        .map(|start| {
            (start..(start + CHUNK).min(total))
                .map(|mask| {
                    let g = graph_from_mask(params.n, &pairs, mask);
                    log_gibbs_weight_unnormalized(&g, &params)
                        .expect("graph built with the model's n")
                })
                .collect::<Vec<_>>()
        })
        .collect::<Vec<Vec<f64>>>()
        .concat();
    let log_z = log_sum_exp(&log_weights);
    let entries = log_weights
        .into_iter()
        .enumerate()
        .map(|(mask, log_weight)| Entry {
            mask: mask as u64,
            log_weight,
            probability: (log_weight - log_z).exp(),
        })
        .collect();
    Ok(EnumerationReport {
        params,
        pairs,
        log_z,
        entries,
    })
}

/// Sum of probabilities of graphs satisfying `predicate`.
pub fn exact_event_probability<F>(report: &EnumerationReport, predicate: F) -> f64
where
    F: Fn(&SegmentGraph) -> bool + Sync,
{
    report.event_probability(predicate)
}

/// `E[f(G)]` under the report's measure.
pub fn exact_expectation<F>(report: &EnumerationReport, f: F) -> f64
where
    F: Fn(&SegmentGraph) -> f64 + Sync,
{
    report.expectation(f)
}

/// Named results attached to an exported report.
#[derive(Debug, Clone, Serialize)]
pub struct NamedValue {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Serialize)]
struct ReportExport<'a> {
    params: &'a ModelParams,
    log_z: f64,
    graphs: usize,
    results: &'a [NamedValue],
    #[serde(skip_serializing_if = "Option::is_none")]
    table: Option<Vec<TableRow>>,
}

#[derive(Debug, Serialize)]
struct TableRow {
    graph: SegmentGraph,
    log_weight: f64,
    probability: f64,
}

impl EnumerationReport {
    /// JSON export; the per-graph table is only written when `with_table` is set.
    pub fn to_json(&self, results: &[NamedValue], with_table: bool) -> Result<String> {
        let table = with_table.then(|| {
            self.entries
                .iter()
                .map(|e| TableRow {
                    graph: self.graph(e),
                    log_weight: e.log_weight,
                    probability: e.probability,
                })
                .collect()
        });
        let export = ReportExport {
            params: &self.params,
            log_z: self.log_z,
            graphs: self.entries.len(),
            results,
            table,
        };
        Ok(serde_json::to_string_pretty(&export)?)
    }
}
