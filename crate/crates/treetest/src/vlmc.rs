//! Variable-length Markov chain models and synthetic sequence generation.

use std::collections::HashMap;

use rand::Rng;

use crate::address::NodeAddress;
use crate::error::{Error, Result};
use crate::stream::{rng_for, tags};
use crate::tree::{check_alphabet_size, Tree};

/// A symbol sequence over an alphabet `{1..m}` with an identifying label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sequence {
    pub id: String,
    pub symbols: Vec<u8>,
}

impl Sequence {
    pub fn new(id: impl Into<String>, symbols: Vec<u8>) -> Sequence {
        Sequence {
            id: id.into(),
            symbols,
        }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// A probabilistic context tree (tau, p): a set of contexts and one
/// next-symbol distribution per context.
///
/// A context is a node address whose symbols are the relevant past in
/// temporal order, most recent symbol last; the next-symbol law of the
/// chain is the distribution attached to the unique context that is a
/// suffix of the past.
#[derive(Clone, Debug)]
pub struct ContextModel {
    alphabet_size: u8,
    contexts: Vec<(NodeAddress, Vec<f64>)>,
}

impl ContextModel {
    pub fn new(alphabet_size: u8, contexts: Vec<(NodeAddress, Vec<f64>)>) -> Result<ContextModel> {
        check_alphabet_size(alphabet_size)?;
        if contexts.is_empty() {
            return Err(Error::InvalidParameter(
                "a context model needs at least one context".to_string(),
            ));
        }
        let mut contexts = contexts;
        contexts.sort_by(|a, b| a.0.cmp(&b.0));
        for window in contexts.windows(2) {
            if window[0].0 == window[1].0 {
                return Err(Error::InvalidParameter(format!(
                    "duplicate context {}",
                    window[0].0
                )));
            }
        }
        for (context, probs) in &contexts {
            for &s in context.symbols() {
                if s < 1 || s > alphabet_size {
                    return Err(Error::SymbolOutOfRange {
                        node: context.to_string(),
                        symbol: s,
                        alphabet_size,
                    });
                }
            }
            if probs.len() != alphabet_size as usize {
                return Err(Error::InvalidParameter(format!(
                    "context {context}: expected {alphabet_size} probabilities, got {}",
                    probs.len()
                )));
            }
            if probs.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(Error::InvalidParameter(format!(
                    "context {context}: probabilities must lie in [0,1]"
                )));
            }
            let total: f64 = probs.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "context {context}: probabilities sum to {total}, expected 1"
                )));
            }
        }
        Ok(ContextModel {
            alphabet_size,
            contexts,
        })
    }

    pub fn alphabet_size(&self) -> u8 {
        self.alphabet_size
    }

    pub fn contexts(&self) -> &[(NodeAddress, Vec<f64>)] {
        &self.contexts
    }

    /// Longest context length (the chain's order bound).
    pub fn max_context_length(&self) -> usize {
        self.contexts
            .iter()
            .map(|(c, _)| c.symbols().len())
            .max()
            .unwrap_or(0)
    }

    /// The context tree: all contexts, their suffixes, and the root.
    pub fn as_tree(&self) -> Tree {
        let mut nodes = vec![NodeAddress::root()];
        for (context, _) in &self.contexts {
            let mut node = context.clone();
            loop {
                nodes.push(node.clone());
                match node.father() {
                    Some(f) => node = f,
                    None => break,
                }
            }
        }
        nodes.sort();
        nodes.dedup();
        Tree::from_sorted_unchecked(nodes, self.alphabet_size)
    }

    /// Checks that the contexts form a complete, suffix-free set: in the
    /// context tree every context is a leaf and every other node carries
    /// all m children, so each infinite past matches exactly one context.
    pub fn validate_complete(&self) -> Result<()> {
        let tree = self.as_tree();
        let is_context: HashMap<&NodeAddress, ()> =
            self.contexts.iter().map(|(c, _)| (c, ())).collect();
        for node in tree.nodes() {
            let children_present =
                (1..=self.alphabet_size).filter(|&a| tree.contains(&node.child(a))).count();
            if is_context.contains_key(node) {
                if children_present > 0 {
                    return Err(Error::InvalidParameter(format!(
                        "context {node} is an ancestor of another context (not suffix-free)"
                    )));
                }
            } else if children_present != self.alphabet_size as usize {
                // some past ending in a missing child has no matching context
                let missing = (1..=self.alphabet_size)
                    .find(|&a| !tree.contains(&node.child(a)))
                    .expect("at least one child is missing");
                return Err(Error::NoMatchingContext(node.child(missing).to_string()));
            }
        }
        Ok(())
    }

    /// Generates a sequence: the past is repeatedly matched to its unique
    /// context suffix and the next symbol drawn from that context's law.
    /// The history starts uniform and a burn-in of 10 times the maximum
    /// context length is discarded. Deterministic per seed.
    pub fn sample(&self, length: usize, seed: u64, id: impl Into<String>) -> Result<Sequence> {
        self.validate_complete()?;
        let order = self.max_context_length().max(1);
        if length < order {
            return Err(Error::InvalidParameter(format!(
                "sequence length {length} shorter than the model order {order}"
            )));
        }
        let by_window: HashMap<&[u8], &[f64]> = self
            .contexts
            .iter()
            .map(|(c, p)| (c.symbols(), p.as_slice()))
            .collect();
        let mut rng = rng_for(seed, tags::VLMC, 0);
        let mut history: Vec<u8> = (0..order)
            .map(|_| rng.gen_range(1..=self.alphabet_size))
            .collect();
        let burn = 10 * order;
        let mut out = Vec::with_capacity(length);
        for step in 0..burn + length {
            // shortest matching suffix wins; k = 0 covers the memoryless model
            let mut probs = None;
            for k in 0..=order.min(history.len()) {
                if let Some(&p) = by_window.get(&history[history.len() - k..]) {
                    probs = Some(p);
                    break;
                }
            }
            let probs = probs.ok_or_else(|| {
                let tail = &history[history.len().saturating_sub(order)..];
                Error::NoMatchingContext(NodeAddress::new(tail.to_vec()).to_string())
            })?;
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut symbol = self.alphabet_size;
            for (i, &p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    symbol = i as u8 + 1;
                    break;
                }
            }
            history.push(symbol);
            if history.len() > order {
                history.remove(0);
            }
            if step >= burn {
                out.push(symbol);
            }
        }
        Ok(Sequence::new(id, out))
    }
}
