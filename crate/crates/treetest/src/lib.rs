//! Statistical comparison of populations of rooted trees.
//!
//! A tree here is a finite, father-closed set of node addresses in the full
//! m-ary tree ("son present implies father present"). The crate provides:
//!
//! - the weighted node-difference metric d(t,y) = sum phi(v) |t(v) - y(v)|
//!   with phi(v) = z^gen(v) ([`distance`]),
//! - empirical mean trees by per-node majority vote and theoretical
//!   Galton-Watson means ([`mean`]),
//! - binary Galton-Watson tree generation ([`gw`]),
//! - a two-sample Monte Carlo permutation test on the distance between
//!   empirical means, with a power-study harness ([`permtest`]),
//! - VLMC sequence generation and PST context-tree estimation, turning
//!   symbol sequences (e.g. amino-acid chains) into trees ([`vlmc`],
//!   [`pst`]),
//! - deterministic text serialization for samples and results ([`io`]).
//!
//! All operations are pure functions over immutable values; every random
//! routine derives its generator from `(seed, tag, index)` so results are
//! reproducible across runs and thread counts.

pub mod address;
pub mod error;
pub mod fasta;
pub mod gw;
pub mod io;
pub mod mean;
pub mod permtest;
pub mod pst;
pub mod stream;
pub mod tree;
pub mod vlmc;
pub mod weights;

pub use address::NodeAddress;
pub use error::{Error, Result};
pub use gw::{sample_gw_sample, sample_gw_tree, GwParams};
pub use mean::{empirical_mean, gw_theoretical_mean, mean_distance_to, MeanTreePair, TieRule, TreeSample};
pub use permtest::{
    observed_statistic, permutation_null, power_study, run_test, NullMode, PowerStudy, TestConfig,
    TestResult,
};
pub use pst::{pairwise_family_tests, pst_estimate, trees_from_fasta, PairwiseResult, PstParams};
pub use stream::DEFAULT_SEED;
pub use tree::Tree;
pub use vlmc::{ContextModel, Sequence};
pub use weights::{distance, WeightConfig};
