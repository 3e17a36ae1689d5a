//! Spatial Gibbs random graphs on the integer segment `[n] = {1, ..., n}`.
//!
//! A graph always contains the nearest-neighbour path `1 - 2 - ... - n`; the
//! random part is the set of *long* edges `{x, y}` with `y - x >= 2`. Under the
//! reference measure each long edge is present independently with probability
//! `exp(-|x - y|^gamma)`. The Gibbs measure reweights a graph `g` by
//! `exp(-n^b * H_p(g))`, where `H_p` is the `l^p` mean of the pairwise graph
//! distances (the diameter for `p = inf`).
//!
//! Modules:
//!
//! * [`graph`]: [`SegmentGraph`], breadth-first distances and `H_p`.
//! * [`measures`]: reference sampling, log-weights and the Metropolis edge-flip chain.
//! * [`oracle`]: exhaustive enumeration for small `n` (partition function, exact events).
//! * [`hierarchy`]: edge layers and the hierarchical low-diameter constructions.
//! * [`local`]: rooted patterns, (truncated) balls, neighbourhood census and `mu^L`.
//! * [`theory`]: closed-form scaling exponent and parameter-regime predicates.
//! * [`cli`]: the experiment driver behind the `sgg` binary.

pub mod cli;
pub mod error;
pub mod graph;
pub mod hierarchy;
pub mod local;
pub mod measures;
pub mod oracle;
pub mod rng;
pub mod stats;
pub mod theory;

pub use error::{Error, Result};
pub use graph::{EdgeKey, PNorm, SegmentGraph};
pub use measures::ModelParams;
