//! The reference measure and the Gibbs reweighting.
//!
//! Under the reference measure on `[n]` every long pair `{x, y}` is an edge
//! independently with probability `exp(-|x - y|^gamma)`. The Gibbs measure
//! multiplies the reference probability of `g` by `exp(-n^b * H_p(g))`.

mod chain;

pub use chain::{run_chain, run_chains, ChainOutput, ChainState, GibbsSampler, Schedule};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::graph::{EdgeKey, PNorm, SegmentGraph};

/// The four parameters `(n, gamma, b, p)` of the Gibbs measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: usize,
    pub gamma: f64,
    pub b: f64,
    pub p: PNorm,
}

impl ModelParams {
    pub fn new(n: usize, gamma: f64, b: f64, p: PNorm) -> Result<Self> {
        Self { n, gamma, b, p }.validate()
    }

    /// Parameters for reference-measure work, where `b` and `p` are irrelevant.
    pub fn reference(n: usize, gamma: f64) -> Result<Self> {
        Self::new(n, gamma, f64::NEG_INFINITY, PNorm::Infinity)
    }

    pub fn validate(self) -> Result<Self> {
        if self.n < 2 {
            return domain(format!("n must be at least 2, got {}", self.n));
        }
        check_gamma(self.gamma)?;
        if self.b.is_nan() || self.b == f64::INFINITY {
            return domain(format!("b must be a real number or -inf, got {}", self.b));
        }
        self.p.validate()?;
        Ok(self)
    }

    /// The inverse temperature `n^b` in front of `H_p`.
    pub fn gibbs_scale(&self) -> f64 {
        (self.n as f64).powf(self.b)
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return domain(format!("gamma must be a positive real, got {gamma}"));
    }
    Ok(())
}

/// `exp(-|x - y|^gamma)` for a long pair.
pub fn edge_prob(x: usize, y: usize, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let len = x.abs_diff(y);
    if len < 2 {
        return domain(format!(
            "pair {{{x}, {y}}} has length {len}; only pairs of length >= 2 are random"
        ));
    }
    Ok(log_edge_prob(len, gamma).exp())
}

/// `log p_e = -|e|^gamma`, exact even where `p_e` underflows.
#[inline]
pub fn log_edge_prob(len: usize, gamma: f64) -> f64 {
    -(len as f64).powf(gamma)
}

/// `log(1 - p_e)`, accurate for tiny `p_e`.
#[inline]
pub fn log_no_edge_prob(len: usize, gamma: f64) -> f64 {
    (-log_edge_prob(len, gamma).exp()).ln_1p()
}

/// `log p_e - log(1 - p_e)`: the change in reference log-weight from adding `e`.
#[inline]
pub fn log_edge_odds(len: usize, gamma: f64) -> f64 {
    log_edge_prob(len, gamma) - log_no_edge_prob(len, gamma)
}

/// Draws a graph from the reference measure.
///
/// Pairs of each length are scanned with geometric jumps, so the cost is
/// proportional to the number of lengths plus the number of edges drawn.
pub fn sample_reference<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> SegmentGraph {
    let n = params.n;
    let mut g = SegmentGraph::path(n).expect("validated params have n >= 2");
    for len in 2..n {
        let p = log_edge_prob(len, params.gamma).exp();
        if p == 0.0 {
            // p is decreasing in the length
            break;
        }
        let log_q = (-p).ln_1p();
        let slots = n - len;
        let mut x = 0usize;
        loop {
            // failures before the next success, by inversion
            let u: f64 = 1.0 - rng.random::<f64>();
            let skip = (u.ln() / log_q).floor();
            if skip >= (slots - x) as f64 {
                break;
            }
            x += skip as usize + 1;
            let e = EdgeKey::new(x, x + len).expect("distinct endpoints");
            g.insert_edge(e).expect("in-range long edge");
        }
    }
    g
}

/// Exact log-probability of `g` under the reference measure.
pub fn log_reference_weight(g: &SegmentGraph, gamma: f64) -> f64 {
    let n = g.n();
    let mut total: f64 = (2..n)
        .map(|len| (n - len) as f64 * log_no_edge_prob(len, gamma))
        .sum();
    for e in g.long_edges() {
        total += log_edge_odds(e.len(), gamma);
    }
    total
}

/// `-n^b * H_p(g) + log P_ref(g)`, without the normalising constant.
pub fn log_gibbs_weight_unnormalized(g: &SegmentGraph, params: &ModelParams) -> Result<f64> {
    if g.n() != params.n {
        return domain(format!(
            "graph has {} vertices but the model has n = {}",
            g.n(),
            params.n
        ));
    }
    Ok(gibbs_energy(params.gibbs_scale(), g.h_p(params.p)) + log_reference_weight(g, params.gamma))
}

#[inline]
pub(crate) fn gibbs_energy(scale: f64, h: f64) -> f64 {
    // n^b = 0 (b = -inf) must not turn into 0 * inf
    if scale == 0.0 {
        0.0
    } else {
        -scale * h
    }
}

/// Log-probability that every long edge of `sub` is present under the reference measure.
pub fn subgraph_log_prob(sub: &SegmentGraph, gamma: f64) -> f64 {
    sub.long_edges().map(|e| log_edge_prob(e.len(), gamma)).sum()
}
