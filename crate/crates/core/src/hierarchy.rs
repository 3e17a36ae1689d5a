//! Edge layers and the hierarchical graphs built from them.
//!
//! The layer of spacing `l` on `[n]` is the chain
//! `{1, 1+l}, {1+l, 1+2l}, ..., {1+(k-1)l, 1+kl}, {1+kl, n}` where `k` is the
//! integer with `1 + kl < n <= 1 + (k+1)l`. Stacking layers of geometrically
//! spaced lengths gives graphs of small `H_p` whose long edges are cheap under
//! the reference measure; which spacings are used depends on `gamma`.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{domain, Result};
use crate::graph::{EdgeKey, PNorm, SegmentGraph};
use crate::measures::subgraph_log_prob;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpec {
    n: usize,
    ell: usize,
}

impl LayerSpec {
    pub fn new(n: usize, ell: usize) -> Result<Self> {
        if n == 0 || ell == 0 || ell > n {
            return domain(format!("layer spacing must satisfy 1 <= ell <= n, got n={n} ell={ell}"));
        }
        Ok(Self { n, ell })
    }
}

/// The layer of spacing `spec.ell`, including length-one edges.
pub fn layer(spec: LayerSpec) -> BTreeSet<EdgeKey> {
    let LayerSpec { n, ell } = spec;
    let mut out = BTreeSet::new();
    if n < 2 {
        return out;
    }
    let mut start = 1;
    while start + ell < n {
        out.insert(EdgeKey::new(start, start + ell).expect("ell >= 1"));
        start += ell;
    }
    out.insert(EdgeKey::new(start, n).expect("start < n"));
    out
}

/// Which hierarchical construction to use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    /// `gamma in (0, 1)`: layers of spacing `n 2^-j` added from the top.
    SubCritical { gamma: f64, alpha: f64 },
    /// `gamma > 1`: layers of spacing `2^j` added from the bottom.
    SuperCritical { gamma: f64, alpha: f64 },
    /// `gamma = 1`: layers of spacing `n^(j/i)`, `1 <= j < i`.
    Critical { i: u32 },
}

impl Regime {
    /// The critical construction targeting `alpha in (1/i, 1/(i-1))`.
    pub fn critical_for_alpha(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return domain(format!("alpha must lie in (0, 1), got {alpha}"));
        }
        let i = (1.0 / alpha).floor() as u32 + 1;
        if (1.0 / alpha).fract() == 0.0 {
            return domain(format!("alpha = {alpha} is an endpoint 1/i; no critical index"));
        }
        Ok(Regime::Critical { i })
    }

    pub fn validate(self) -> Result<Self> {
        let unit = |a: f64| a > 0.0 && a < 1.0;
        match self {
            Regime::SubCritical { gamma, alpha } if gamma > 0.0 && gamma < 1.0 && unit(alpha) => {
                Ok(self)
            }
            Regime::SuperCritical { gamma, alpha } if gamma > 1.0 && gamma.is_finite() && unit(alpha) => {
                Ok(self)
            }
            Regime::Critical { i } if i >= 2 => Ok(self),
            _ => domain(format!("inconsistent regime parameters: {self:?}")),
        }
    }

    pub fn gamma(self) -> f64 {
        match self {
            Regime::SubCritical { gamma, .. } | Regime::SuperCritical { gamma, .. } => gamma,
            Regime::Critical { .. } => 1.0,
        }
    }

    /// The exponent `alpha` the construction targets (`1/i` in the critical case).
    pub fn alpha(self) -> f64 {
        match self {
            Regime::SubCritical { alpha, .. } | Regime::SuperCritical { alpha, .. } => alpha,
            Regime::Critical { i } => 1.0 / i as f64,
        }
    }

    /// `alpha`, or `i` in the critical case, as used in the CSV output.
    pub fn label(self) -> f64 {
        match self {
            Regime::Critical { i } => i as f64,
            other => other.alpha(),
        }
    }

    /// Layer spacings of the construction on `[n]`, rounded to integers in `[1, n]`.
    pub fn spacings(self, n: usize) -> Result<Vec<usize>> {
        let regime = self.validate()?;
        if n < 2 {
            return domain(format!("constructions need n >= 2, got {n}"));
        }
        let nf = n as f64;
        let round = |x: f64| (x.round() as usize).clamp(1, n);
        let mut out = match regime {
            Regime::SubCritical { alpha, .. } => {
                // smallest i with n 2^-i < n^(1 - alpha)
                let target = nf.powf(1.0 - alpha);
                let mut i = 0;
                while nf / 2f64.powi(i) >= target {
                    i += 1;
                }
                let mut s = vec![1];
                s.extend((0..=i).map(|j| round(nf / 2f64.powi(j))));
                s
            }
            Regime::SuperCritical { alpha, .. } => {
                // smallest i with 2^i > n^alpha
                let target = nf.powf(alpha);
                let mut i = 0;
                while 2f64.powi(i) <= target {
                    i += 1;
                }
                (0..=i).map(|j| round(2f64.powi(j))).collect()
            }
            Regime::Critical { i } => {
                let mut s = vec![1];
                s.extend((1..i).map(|j| round(nf.powf(j as f64 / i as f64))));
                s
            }
        };
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }
}

/// Union of the regime's layers as a [`SegmentGraph`]; the spacing-one layer is the implicit path.
pub fn g_star(n: usize, regime: Regime) -> Result<SegmentGraph> {
    let mut edges = BTreeSet::new();
    for ell in regime.spacings(n)? {
        edges.extend(layer(LayerSpec::new(n, ell)?));
    }
    SegmentGraph::from_edges_lenient(n, edges)
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingRow {
    pub n: usize,
    pub alpha_or_i: f64,
    pub h_p: f64,
    pub log_prob: f64,
    /// `h_p / n^alpha`
    pub ratio_h: f64,
    /// `-log_prob / n^(1 - alpha (1 - gamma))`
    pub ratio_logp: f64,
}

/// `H_p` and reference subgraph log-probability of `g_star` across a grid of sizes.
pub fn verify_scaling(n_grid: &[usize], regime: Regime, p: PNorm) -> Result<Vec<ScalingRow>> {
    if n_grid.is_empty() {
        return domain("verify_scaling needs a non-empty grid");
    }
    let regime = regime.validate()?;
    let (alpha, gamma) = (regime.alpha(), regime.gamma());
    n_grid
        .iter()
        .map(|&n| {
            let g = g_star(n, regime)?;
            let h = g.h_p(p);
            let log_prob = subgraph_log_prob(&g, gamma);
            let nf = n as f64;
            Ok(ScalingRow {
                n,
                alpha_or_i: regime.label(),
                h_p: h,
                log_prob,
                ratio_h: h / nf.powf(alpha),
                ratio_logp: -log_prob / nf.powf(1.0 - alpha * (1.0 - gamma)),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn keys(pairs: &[(usize, usize)]) -> BTreeSet<EdgeKey> {
        pairs.iter().map(|&(x, y)| EdgeKey::new(x, y).unwrap()).collect()
    }

    #[test]
    fn layer_examples() {
        assert_eq!(layer(LayerSpec::new(10, 3).unwrap()), keys(&[(1, 4), (4, 7), (7, 10)]));
        assert_eq!(layer(LayerSpec::new(7, 7).unwrap()), keys(&[(1, 7)]));
        assert_eq!(layer(LayerSpec::new(2, 1).unwrap()), keys(&[(1, 2)]));
        assert_eq!(layer(LayerSpec::new(11, 3).unwrap()), keys(&[(1, 4), (4, 7), (7, 10), (10, 11)]));
        assert!(LayerSpec::new(7, 10).is_err());
        assert!(LayerSpec::new(7, 0).is_err());
    }

    #[test]
    fn super_critical_example() {
        let r = Regime::SuperCritical { gamma: 2.0, alpha: 0.5 };
        assert_eq!(r.spacings(16).unwrap(), vec![1, 2, 4, 8]);
        let g = g_star(16, r).unwrap();
        let mut expected = BTreeSet::new();
        for ell in [2, 4, 8] {
            expected.extend(layer(LayerSpec::new(16, ell).unwrap()));
        }
        let expected = SegmentGraph::from_edges_lenient(16, expected).unwrap();
        assert_eq!(g, expected);
    }

    #[test]
    fn sub_critical_index_follows_strict_inequality() {
        // n 2^-i < n^(1 - alpha) = 4 first holds at i = 3 (16/8 = 2)
        let r = Regime::SubCritical { gamma: 0.5, alpha: 0.5 };
        assert_eq!(r.spacings(16).unwrap(), vec![1, 2, 4, 8, 16]);
    }

    #[test]
    fn critical_example() {
        let r = Regime::Critical { i: 2 };
        assert_eq!(r.spacings(100).unwrap(), vec![1, 10]);
        let g = g_star(100, r).unwrap();
        let layer10 = layer(LayerSpec::new(100, 10).unwrap());
        assert_eq!(g, SegmentGraph::from_edges_lenient(100, layer10).unwrap());
        assert_eq!(Regime::critical_for_alpha(0.4).unwrap(), Regime::Critical { i: 3 });
        assert!(Regime::critical_for_alpha(0.5).is_err());
    }

    #[test]
    fn invalid_regimes() {
        assert!(g_star(10, Regime::SubCritical { gamma: 1.5, alpha: 0.5 }).is_err());
        assert!(g_star(10, Regime::SuperCritical { gamma: 2.0, alpha: 1.0 }).is_err());
        assert!(g_star(10, Regime::Critical { i: 1 }).is_err());
    }

    #[test]
    fn trivial_size() {
        for r in [
            Regime::SubCritical { gamma: 0.5, alpha: 0.3 },
            Regime::SuperCritical { gamma: 3.0, alpha: 0.7 },
            Regime::Critical { i: 4 },
        ] {
            let rows = verify_scaling(&[2], r, PNorm::Finite(2.0)).unwrap();
            assert_eq!(rows[0].h_p, 1.0);
            assert_eq!(rows[0].log_prob, 0.0);
        }
        assert!(verify_scaling(&[], Regime::Critical { i: 2 }, PNorm::Infinity).is_err());
    }

    #[test]
    fn adding_layers_never_increases_diameter() {
        let n = 300;
        let mut edges = BTreeSet::new();
        let mut last = SegmentGraph::path(n).unwrap().h_p(PNorm::Infinity);
        for ell in [2, 4, 8, 16, 32, 64, 128, 256] {
            edges.extend(layer(LayerSpec::new(n, ell).unwrap()));
            let h = SegmentGraph::from_edges_lenient(n, edges.clone())
                .unwrap()
                .h_p(PNorm::Infinity);
            assert!(h <= last);
            last = h;
        }
    }
}
