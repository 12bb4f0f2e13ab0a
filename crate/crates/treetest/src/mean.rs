//! Empirical mean trees by per-node majority vote, and the theoretical
//! Galton-Watson mean.

use std::collections::HashMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::address::NodeAddress;
use crate::error::{Error, Result};
use crate::tree::Tree;
use crate::weights::{distance, WeightConfig};

/// An ordered collection of trees sharing one weight configuration.
#[derive(Clone, Debug)]
pub struct TreeSample {
    trees: Vec<Tree>,
    config: WeightConfig,
}

impl TreeSample {
    pub fn new(trees: Vec<Tree>, config: WeightConfig) -> Result<TreeSample> {
        for tree in &trees {
            config.admits(tree)?;
        }
        Ok(TreeSample { trees, config })
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn config(&self) -> &WeightConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }
}

/// Which element of a non-unique empirical mean enters a statistic. For an
/// even sample size the nodes present in exactly half the trees are free;
/// `Minimal` drops all of them, `Maximal` keeps all of them. Odd sample
/// sizes make the two coincide.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TieRule {
    Minimal,
    #[default]
    Maximal,
}

impl FromStr for TieRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<TieRule> {
        match s {
            "minimal" => Ok(TieRule::Minimal),
            "maximal" => Ok(TieRule::Maximal),
            other => Err(Error::InvalidParameter(format!(
                "tie rule must be 'minimal' or 'maximal', got '{other}'"
            ))),
        }
    }
}

/// The two extreme empirical means of a sample.
#[derive(Clone, Debug, PartialEq)]
pub struct MeanTreePair {
    /// Nodes present in strictly more than half of the sample.
    pub minimal: Tree,
    /// Nodes present in at least half of the sample.
    pub maximal: Tree,
}

impl MeanTreePair {
    pub fn select(&self, rule: TieRule) -> &Tree {
        match rule {
            TieRule::Minimal => &self.minimal,
            TieRule::Maximal => &self.maximal,
        }
    }

    /// Whether the empirical mean is unique (always true for odd samples).
    pub fn is_unique(&self) -> bool {
        self.minimal == self.maximal
    }
}

/// Majority-vote tree over borrowed trees: a node enters iff its presence
/// count clears the half-sample threshold for the given rule. Father
/// closure of the result is automatic because a father is present in every
/// tree its son is present in.
pub(crate) fn majority_tree(trees: &[&Tree], rule: TieRule, alphabet_size: u8) -> Tree {
    let n = trees.len();
    let mut counts: HashMap<&NodeAddress, usize> = HashMap::new();
    for tree in trees {
        for node in tree.nodes() {
            *counts.entry(node).or_insert(0) += 1;
        }
    }
    let mut nodes: Vec<NodeAddress> = counts
        .into_iter()
        .filter(|&(_, c)| match rule {
            TieRule::Maximal => 2 * c >= n,
            TieRule::Minimal => 2 * c > n,
        })
        .map(|(node, _)| node.clone())
        .collect();
    nodes.sort();
    Tree::from_sorted_unchecked(nodes, alphabet_size)
}

/// Both extreme empirical d-means of a non-empty sample. Every tree between
/// them (node-set wise) minimizes the average distance to the sample.
pub fn empirical_mean(sample: &TreeSample) -> Result<MeanTreePair> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let refs: Vec<&Tree> = sample.trees().iter().collect();
    let m = sample.config().alphabet_size();
    Ok(MeanTreePair {
        minimal: majority_tree(&refs, TieRule::Minimal, m),
        maximal: majority_tree(&refs, TieRule::Maximal, m),
    })
}

/// The objective minimized by the empirical mean: (1/n) sum of d(T_i, t).
pub fn mean_distance_to(sample: &TreeSample, tree: &Tree) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut total = 0.0;
    for t in sample.trees() {
        total += distance(t, tree, sample.config())?;
    }
    Ok(total / sample.len() as f64)
}

/// Theoretical mean tree of the binary binomial Galton-Watson law: the full
/// tree of depth k0 = max{k >= 0 : p^k >= 1/2}, empty when p < 1/2, capped
/// at the configured depth. A 1e-12 guard band protects the boundary cases
/// where p^k lands exactly on 1/2.
pub fn gw_theoretical_mean(p: f64, config: &WeightConfig) -> Result<Tree> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "offspring probability must lie in [0,1], got {p}"
        )));
    }
    let m = config.alphabet_size();
    let k0 = if p >= 1.0 {
        config.max_depth()
    } else if p <= 0.5 {
        // p^1 >= 1/2 only at the boundary p = 1/2 itself
        if p >= 0.5 - 1e-12 {
            1
        } else {
            0
        }
    } else {
        let exact = (0.5f64).ln() / p.ln();
        let k = (exact + 1e-12).floor() as u32;
        k.min(config.max_depth())
    };
    Ok(if k0 == 0 {
        Tree::empty(m)
    } else {
        Tree::full(m, k0)
    })
}
