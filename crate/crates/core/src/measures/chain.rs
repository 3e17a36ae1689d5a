//! Metropolis edge-flip chain targeting the Gibbs measure.
//!
//! Each step picks one long pair uniformly at random and proposes to flip it.
//! The proposal is symmetric, so the flip is accepted with probability
//! `min(1, exp(delta))` where `delta` is the change in unnormalised
//! log-weight. Before paying for an all-pairs BFS the step brackets `delta`
//! using
//!
//! * adding `e`: `H_p(g) - (|e| - 1) <= H_p(g + e) <= H_p(g)`
//! * removing `e`: `H_p(g) <= H_p(g - e) <= H_p(g) + (|e| - 1)`
//!
//! and rejects outright when the uniform draw already exceeds the upper end.
//! Decisions are the same as with the exact `delta`.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{gibbs_energy, log_edge_odds, sample_reference, ModelParams};
use crate::error::{domain, Error, Result};
use crate::graph::{eligible_pairs, EdgeKey, SegmentGraph};
use crate::oracle::{graph_from_mask, mask_of};
use crate::rng::{derive_seed, ChainRng};

use rand::SeedableRng;

/// Largest kernel [`GibbsSampler::transition_matrix`] will build (`2^10` states).
const KERNEL_MAX_PAIRS: usize = 10;

// Slack on the rejection shortcut so that rounding in H_p never flips a decision.
const BOUND_SLACK: f64 = 1e-9;

/// Burn-in, number of recorded samples and spacing between them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Schedule {
    pub burn_in: u64,
    pub n_samples: usize,
    pub thinning: u64,
}

impl Schedule {
    pub fn new(burn_in: u64, n_samples: usize, thinning: u64) -> Result<Self> {
        if n_samples == 0 {
            return domain("a chain schedule needs at least one sample");
        }
        Ok(Self {
            burn_in,
            n_samples,
            thinning,
        })
    }

    /// `burn_in = 50 m`, `thinning = m`, with `m` the number of long pairs.
    pub fn default_for(params: &ModelParams, n_samples: usize) -> Result<Self> {
        let m = crate::graph::eligible_pair_count(params.n) as u64;
        Self::new(50 * m, n_samples, m)
    }

    pub fn total_steps(&self) -> u64 {
        self.burn_in + self.thinning * (self.n_samples as u64 - 1)
    }
}

/// Current graph of one chain together with its cached `H_p` and counters.
#[derive(Debug, Clone)]
pub struct ChainState {
    graph: SegmentGraph,
    cached_hp: f64,
    steps_taken: u64,
    accepted: u64,
    rng: ChainRng,
}

impl ChainState {
    /// Starts from a reference-measure draw made with the chain's own generator.
    pub fn new(params: &ModelParams, seed: u64) -> Self {
        let mut rng = ChainRng::seed_from_u64(seed);
        let graph = sample_reference(params, &mut rng);
        Self::with_rng(graph, params, rng)
    }

    pub fn from_graph(graph: SegmentGraph, params: &ModelParams, seed: u64) -> Result<Self> {
        if graph.n() != params.n {
            return domain(format!(
                "initial graph has {} vertices but the model has n = {}",
                graph.n(),
                params.n
            ));
        }
        Ok(Self::with_rng(graph, params, ChainRng::seed_from_u64(seed)))
    }

    fn with_rng(graph: SegmentGraph, params: &ModelParams, rng: ChainRng) -> Self {
        let cached_hp = graph.h_p(params.p);
        Self {
            graph,
            cached_hp,
            steps_taken: 0,
            accepted: 0,
            rng,
        }
    }

    pub fn graph(&self) -> &SegmentGraph {
        &self.graph
    }

    pub fn cached_hp(&self) -> f64 {
        self.cached_hp
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps_taken
    }

    pub fn accepted(&self) -> u64 {
        self.accepted
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.steps_taken == 0 {
            0.0
        } else {
            self.accepted as f64 / self.steps_taken as f64
        }
    }
}

/// Precomputed proposal set and per-length log-odds for one parameter set.
#[derive(Debug, Clone)]
pub struct GibbsSampler {
    params: ModelParams,
    pairs: Vec<EdgeKey>,
    log_odds: Vec<f64>,
    scale: f64,
}

impl GibbsSampler {
    pub fn new(params: ModelParams) -> Result<Self> {
        let params = params.validate()?;
        let log_odds = (0..params.n)
            .map(|len| {
                if len < 2 {
                    0.0
                } else {
                    log_edge_odds(len, params.gamma)
                }
            })
            .collect();
        Ok(Self {
            pairs: eligible_pairs(params.n),
            log_odds,
            scale: params.gibbs_scale(),
            params,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn pairs(&self) -> &[EdgeKey] {
        &self.pairs
    }

    fn reference_delta(&self, g: &SegmentGraph, e: EdgeKey) -> f64 {
        let odds = self.log_odds[e.len()];
        if g.has_long_edge(e) {
            -odds
        } else {
            odds
        }
    }

    /// Exact change in unnormalised log-weight from flipping `e`, computed as
    /// `-n^b (H_p(g') - H_p(g)) +/- log-odds(e)` with `H_p(g)` taken from the cache.
    pub fn flip_delta(&self, state: &ChainState, e: EdgeKey) -> Result<f64> {
        let mut flipped = state.graph.clone();
        flipped.toggle_edge(e)?;
        let h_new = flipped.h_p(self.params.p);
        Ok(self.delta_from(state.cached_hp, h_new, self.reference_delta(&state.graph, e)))
    }

    fn delta_from(&self, h_old: f64, h_new: f64, reference: f64) -> f64 {
        gibbs_energy(self.scale, h_new - h_old) + reference
    }

    /// One Metropolis step. With no long pairs (`n = 2`) only the step counter moves.
    pub fn step(&self, state: &mut ChainState) {
        state.steps_taken += 1;
        if self.pairs.is_empty() {
            return;
        }
        let e = self.pairs[state.rng.random_range(0..self.pairs.len())];
        let log_u = (1.0 - state.rng.random::<f64>()).ln();

        let present = state.graph.has_long_edge(e);
        let reference = self.reference_delta(&state.graph, e);
        let h = state.cached_hp;
        let reach = (e.len() - 1) as f64;
        // largest possible decrease of H_p, as a change in the Gibbs term
        let best_gibbs_gain = if present {
            0.0
        } else {
            self.scale * reach.min(h - 1.0).max(0.0)
        };
        let upper = reference + best_gibbs_gain;
        if log_u >= upper + BOUND_SLACK * (1.0 + upper.abs()) {
            return;
        }

        state
            .graph
            .toggle_edge(e)
            .expect("proposal pairs are valid long edges");
        let h_new = state.graph.h_p(self.params.p);
        let delta = self.delta_from(h, h_new, reference);
        if log_u < delta {
            state.cached_hp = h_new;
            state.accepted += 1;
        } else {
            state.graph.toggle_edge(e).expect("undo of a valid flip");
        }
    }

    /// Explicit transition matrix over all `2^m` graphs, rows indexed by the
    /// oracle's edge masks. Row sums are one.
    pub fn transition_matrix(&self) -> Result<Vec<Vec<f64>>> {
        let m = self.pairs.len();
        if m > KERNEL_MAX_PAIRS {
            return Err(Error::EnumerationCap {
                size: m,
                cap: KERNEL_MAX_PAIRS,
            });
        }
        let states = 1usize << m;
        let mut kernel = vec![vec![0.0; states]; states];
        for (mask, row) in kernel.iter_mut().enumerate() {
            let g = graph_from_mask(self.params.n, &self.pairs, mask as u64);
            let state = ChainState::from_graph(g, &self.params, 0)?;
            let mut stay = 1.0;
            for (bit, &e) in self.pairs.iter().enumerate() {
                let accept = self.flip_delta(&state, e)?.exp().min(1.0) / m as f64;
                row[mask ^ (1 << bit)] = accept;
                stay -= accept;
            }
            row[mask] += stay;
        }
        Ok(kernel)
    }

    /// Index of `g` in [`transition_matrix`](Self::transition_matrix).
    pub fn state_index(&self, g: &SegmentGraph) -> usize {
        mask_of(g, &self.pairs) as usize
    }

    /// Runs the schedule, calling `visit` on each recorded state.
    pub fn run_with<F>(&self, state: &mut ChainState, schedule: &Schedule, mut visit: F)
    where
        F: FnMut(&ChainState),
    {
        for _ in 0..schedule.burn_in {
            self.step(state);
        }
        for i in 0..schedule.n_samples {
            if i > 0 {
                for _ in 0..schedule.thinning {
                    self.step(state);
                }
            }
            visit(state);
        }
    }
}

/// Recorded samples of one chain and its counters.
#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub seed: u64,
    pub samples: Vec<SegmentGraph>,
    pub steps: u64,
    pub accepted: u64,
}

impl ChainOutput {
    pub fn acceptance_rate(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.accepted as f64 / self.steps as f64
        }
    }
}

/// One chain from a reference-measure start; a deterministic function of
/// `(params, seed, schedule)`.
pub fn run_chain(params: &ModelParams, seed: u64, schedule: &Schedule) -> Result<ChainOutput> {
    let sampler = GibbsSampler::new(*params)?;
    let mut state = ChainState::new(params, seed);
    let mut samples = Vec::with_capacity(schedule.n_samples);
    sampler.run_with(&mut state, schedule, |s| samples.push(s.graph().clone()));
    Ok(ChainOutput {
        seed,
        samples,
        steps: state.steps_taken(),
        accepted: state.accepted(),
    })
}

/// Independent chains; chain `i` is seeded with `derive_seed(master_seed, i)`
/// and outputs come back in chain order whatever the thread count.
pub fn run_chains(
    params: &ModelParams,
    master_seed: u64,
    schedule: &Schedule,
    chains: usize,
) -> Result<Vec<ChainOutput>> {
    (0..chains)
        .into_par_iter()
        .map(|i| run_chain(params, derive_seed(master_seed, i as u64), schedule))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::PNorm;

    #[test]
    fn two_vertices_only_count_steps() {
        let params = ModelParams::new(2, 1.0, 1.0, PNorm::Infinity).unwrap();
        let sampler = GibbsSampler::new(params).unwrap();
        let mut state = ChainState::new(&params, 3);
        for _ in 0..10 {
            sampler.step(&mut state);
        }
        assert_eq!(state.steps_taken(), 10);
        assert_eq!(state.accepted(), 0);
        assert_eq!(state.graph(), &SegmentGraph::path(2).unwrap());
    }

    #[test]
    fn cache_tracks_graph() {
        let params = ModelParams::new(9, 1.2, 0.8, PNorm::Finite(1.5)).unwrap();
        let sampler = GibbsSampler::new(params).unwrap();
        let mut state = ChainState::new(&params, 11);
        for _ in 0..2000 {
            sampler.step(&mut state);
            let exact = state.graph().h_p(params.p);
            assert!((state.cached_hp() - exact).abs() <= 1e-12 * exact);
        }
        assert!(state.accepted() > 0);
    }

    #[test]
    fn schedule_validation() {
        assert!(Schedule::new(0, 0, 1).is_err());
        let params = ModelParams::new(5, 1.0, 0.0, PNorm::Infinity).unwrap();
        let s = Schedule::default_for(&params, 3).unwrap();
        assert_eq!((s.burn_in, s.thinning), (300, 6));
        assert_eq!(s.total_steps(), 312);
    }

    #[test]
    fn run_chain_is_deterministic() {
        let params = ModelParams::new(7, 1.5, 0.5, PNorm::Finite(2.0)).unwrap();
        let schedule = Schedule::new(100, 20, 5).unwrap();
        let a = run_chain(&params, 42, &schedule).unwrap();
        let b = run_chain(&params, 42, &schedule).unwrap();
        assert_eq!(a.samples, b.samples);
        assert_eq!(a.steps, schedule.total_steps());
        let c = run_chain(&params, 43, &schedule).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn kernel_rows_sum_to_one() {
        let params = ModelParams::new(4, 1.0, 0.3, PNorm::Finite(1.0)).unwrap();
        let k = GibbsSampler::new(params).unwrap().transition_matrix().unwrap();
        assert_eq!(k.len(), 8);
        for row in &k {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            assert!(row.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn kernel_refuses_large_state_spaces() {
        let params = ModelParams::new(7, 1.0, 0.3, PNorm::Finite(1.0)).unwrap();
        assert!(matches!(
            GibbsSampler::new(params).unwrap().transition_matrix(),
            Err(Error::EnumerationCap { .. })
        ));
    }
}
