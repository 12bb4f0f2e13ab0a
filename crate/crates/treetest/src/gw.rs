//! Binary binomial Galton-Watson tree generation.
//!
//! Each present node below the depth cap spawns its two children
//! independently with probability p, child 1 drawn before child 2, which
//! reproduces the offspring law (1-p)^2, 2p(1-p), p^2 for 0, 1, 2 children.

use std::collections::VecDeque;

use rand::Rng;
use rayon::prelude::*;

use crate::address::NodeAddress;
use crate::error::{Error, Result};
use crate::mean::TreeSample;
use crate::stream::{rng_for, tags};
use crate::tree::Tree;
use crate::weights::WeightConfig;

/// Parameters of the binary Galton-Watson sampler.
#[derive(Clone, Copy, Debug)]
pub struct GwParams {
    pub p: f64,
    pub max_depth: u32,
    pub seed: u64,
}

impl GwParams {
    pub fn new(p: f64, max_depth: u32, seed: u64) -> Result<GwParams> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!(
                "offspring probability must lie in [0,1], got {p}"
            )));
        }
        if max_depth < 1 {
            return Err(Error::InvalidParameter(
                "max depth must be at least 1".to_string(),
            ));
        }
        Ok(GwParams { p, max_depth, seed })
    }
}

/// One tree from the stream `(seed, tree_index)`; the root is always
/// present and no node exceeds the depth cap.
pub fn sample_gw_tree(params: &GwParams, index: u64) -> Tree {
    let mut rng = rng_for(params.seed, tags::GW_TREE, index);
    sample_tree_with(&mut rng, params.p, params.max_depth)
}

/// Draws one tree from an explicit generator (two Bernoulli draws per
/// expandable node, breadth first).
pub(crate) fn sample_tree_with(rng: &mut impl Rng, p: f64, max_depth: u32) -> Tree {
    let mut nodes = vec![NodeAddress::root()];
    let mut queue = VecDeque::new();
    queue.push_back(NodeAddress::root());
    while let Some(node) = queue.pop_front() {
        if node.generation() >= max_depth {
            continue;
        }
        for symbol in 1..=2u8 {
            if rng.gen_bool(p) {
                let child = node.child(symbol);
                nodes.push(child.clone());
                queue.push_back(child);
            }
        }
    }
    nodes.sort();
    Tree::from_sorted_unchecked(nodes, 2)
}

/// An i.i.d. sample of n trees, reproducible from `(seed, n, max_depth, p)`
/// and identical regardless of thread count: tree i derives its generator
/// from `(seed, i)`.
pub fn sample_gw_sample(params: &GwParams, n: usize, z: f64) -> Result<TreeSample> {
    if n < 1 {
        return Err(Error::InvalidParameter(
            "sample size must be at least 1".to_string(),
        ));
    }
    let config = WeightConfig::new(2, z, params.max_depth)?;
    let trees: Vec<Tree> = (0..n as u64)
        .into_par_iter()
        .map(|i| sample_gw_tree(params, i))
        .collect();
    TreeSample::new(trees, config)
}
