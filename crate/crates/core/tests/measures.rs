use std::collections::HashSet;

use spatial_gibbs::graph::eligible_pairs;
use spatial_gibbs::measures::{
    edge_prob, log_reference_weight, run_chain, sample_reference, ChainState, GibbsSampler,
    Schedule,
};
use spatial_gibbs::oracle::{enumerate, exact_event_probability, mask_of};
use spatial_gibbs::rng::stream;
use spatial_gibbs::stats::mean_stderr;
use spatial_gibbs::{ModelParams, PNorm, SegmentGraph};

#[test]
fn reference_long_edge_mean_at_steep_decay() {
    let params = ModelParams::reference(1000, 3.0).unwrap();
    let counts: Vec<f64> = (0..10_000)
        .map(|i| sample_reference(&params, &mut stream(5, i)).num_long_edges() as f64)
        .collect();
    let (mean, se) = mean_stderr(&counts);
    let expected: f64 = (2..1000).map(|k| (1000 - k) as f64 * (-(k as f64).powi(3)).exp()).sum();
    assert!((expected - 0.335).abs() < 1e-3);
    assert!((mean - expected).abs() < 3.0 * se, "mean={mean} expected={expected} se={se}");
}

#[test]
fn reference_pair_frequency() {
    let params = ModelParams::reference(50, 0.5).unwrap();
    let target = spatial_gibbs::EdgeKey::new(1, 3).unwrap();
    let hits: Vec<f64> = (0..100_000)
        .map(|i| {
            let g = sample_reference(&params, &mut stream(9, i));
            if g.has_long_edge(target) { 1.0 } else { 0.0 }
        })
        .collect();
    let (freq, se) = mean_stderr(&hits);
    let p = (-(2f64).sqrt()).exp();
    assert!((p - 0.2431).abs() < 1e-4);
    assert!((freq - p).abs() < 3.0 * se, "freq={freq} p={p} se={se}");
}

#[test]
fn reference_marginals_for_every_pair() {
    let n = 7;
    let params = ModelParams::reference(n, 0.8).unwrap();
    let pairs = eligible_pairs(n);
    let mut counts = vec![0u64; pairs.len()];
    let draws = 100_000;
    for i in 0..draws {
        let g = sample_reference(&params, &mut stream(21, i));
        for (j, &e) in pairs.iter().enumerate() {
            if g.has_long_edge(e) {
                counts[j] += 1;
            }
        }
    }
    for (j, e) in pairs.iter().enumerate() {
        let p = edge_prob(e.x(), e.y(), 0.8).unwrap();
        let freq = counts[j] as f64 / draws as f64;
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        assert!((freq - p).abs() < 4.0 * se, "{e}: freq={freq} p={p}");
    }
}

#[test]
fn reference_weights_sum_to_one() {
    for (n, gamma) in [(3, 1.0), (5, 0.4), (6, 2.0)] {
        let params = ModelParams::reference(n, gamma).unwrap();
        let report = enumerate(&params).unwrap();
        let total: f64 = report
            .entries()
            .iter()
            .map(|e| log_reference_weight(&report.graph(e), gamma).exp())
            .sum();
        assert!((total - 1.0).abs() < 1e-12, "n={n}");
    }
}

#[test]
fn near_reference_oracle_matches_products() {
    let params = ModelParams::new(4, 1.0, -100.0, PNorm::Finite(2.0)).unwrap();
    let report = enumerate(&params).unwrap();
    for entry in report.entries() {
        let g = report.graph(entry);
        let mut prob = 1.0;
        for e in eligible_pairs(4) {
            let p = edge_prob(e.x(), e.y(), 1.0).unwrap();
            prob *= if g.has_long_edge(e) { p } else { 1.0 - p };
        }
        assert!((entry.probability - prob).abs() < 1e-12);
    }
}

#[test]
fn heavy_weight_collapses_onto_complete_graph() {
    let params = ModelParams::new(5, 2.0, 8.0, PNorm::Finite(1.0)).unwrap();
    let report = enumerate(&params).unwrap();
    let complete = SegmentGraph::complete(5).unwrap();
    assert_eq!(report.graph(report.mode()), complete);
    let p = exact_event_probability(&report, |g| *g == complete);
    assert!(p > 0.99);
}

#[test]
fn nearly_flat_gibbs_matches_reference_marginals() {
    let params = ModelParams::new(5, 1.0, -10.0, PNorm::Finite(2.0)).unwrap();
    let schedule = Schedule::new(1_000, 40_000, 60).unwrap();
    let out = run_chain(&params, 3, &schedule).unwrap();
    for e in eligible_pairs(5) {
        let hits: Vec<f64> = out
            .samples
            .iter()
            .map(|g| if g.has_long_edge(e) { 1.0 } else { 0.0 })
            .collect();
        let p = edge_prob(e.x(), e.y(), 1.0).unwrap();
        let freq = mean_stderr(&hits).0;
        // at thinning 60 a single pair's two-state chain has mixed completely
        let se = (p * (1.0 - p) / hits.len() as f64).sqrt();
        assert!((freq - p).abs() < 3.0 * se, "{e}: freq={freq} p={p}");
    }
}

#[test]
fn chain_reaches_every_state() {
    let params = ModelParams::new(4, 0.3, 0.0, PNorm::Finite(1.0)).unwrap();
    let sampler = GibbsSampler::new(params).unwrap();
    let mut state = ChainState::from_graph(SegmentGraph::path(4).unwrap(), &params, 17).unwrap();
    let mut seen = HashSet::new();
    seen.insert(mask_of(state.graph(), sampler.pairs()));
    for _ in 0..20_000 {
        sampler.step(&mut state);
        seen.insert(mask_of(state.graph(), sampler.pairs()));
    }
    assert_eq!(seen.len(), 1 << sampler.pairs().len());
}

#[test]
fn kernel_is_reversible_with_respect_to_exact_law() {
    let params = ModelParams::new(4, 1.5, 0.5, PNorm::Finite(2.0)).unwrap();
    let kernel = GibbsSampler::new(params).unwrap().transition_matrix().unwrap();
    let pi = enumerate(&params).unwrap().probabilities();
    for i in 0..pi.len() {
        for j in 0..pi.len() {
            assert!((pi[i] * kernel[i][j] - pi[j] * kernel[j][i]).abs() < 1e-15);
        }
    }
}
