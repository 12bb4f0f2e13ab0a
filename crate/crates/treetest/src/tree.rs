use std::collections::HashSet;

use crate::address::NodeAddress;
use crate::error::{Error, Result};

/// A finite, father-closed set of node addresses over an alphabet `{1..m}`.
///
/// Nodes are kept in canonical order (generation, then lexicographic), which
/// makes serialization deterministic and the metric an O(|t|+|y|) ordered
/// merge. The empty set is a valid tree; a non-empty tree always contains
/// the root.
#[derive(Clone, PartialEq, Eq)]
pub struct Tree {
    nodes: Vec<NodeAddress>,
    alphabet_size: u8,
}

impl Tree {
    /// Validates and canonicalizes a node set: every symbol must lie in
    /// `1..=m` and every non-root node must have its father present.
    pub fn from_nodes(nodes: impl IntoIterator<Item = NodeAddress>, alphabet_size: u8) -> Result<Tree> {
        check_alphabet_size(alphabet_size)?;
        let mut nodes: Vec<NodeAddress> = nodes.into_iter().collect();
        for node in &nodes {
            for &s in node.symbols() {
                if s < 1 || s > alphabet_size {
                    return Err(Error::SymbolOutOfRange {
                        node: node.to_string(),
                        symbol: s,
                        alphabet_size,
                    });
                }
            }
        }
        nodes.sort();
        nodes.dedup();
        let present: HashSet<&NodeAddress> = nodes.iter().collect();
        for node in &nodes {
            if let Some(father) = node.father() {
                if !present.contains(&father) {
                    return Err(Error::FatherMissing {
                        node: node.to_token(alphabet_size),
                        father: father.to_token(alphabet_size),
                    });
                }
            }
        }
        Ok(Tree {
            nodes,
            alphabet_size,
        })
    }

    /// The empty tree.
    pub fn empty(alphabet_size: u8) -> Tree {
        assert!(alphabet_size >= 2, "alphabet size must be at least 2");
        Tree {
            nodes: Vec::new(),
            alphabet_size,
        }
    }

    /// The full m-ary tree containing every address of generation <= depth.
    pub fn full(alphabet_size: u8, depth: u32) -> Tree {
        assert!(alphabet_size >= 2, "alphabet size must be at least 2");
        let mut nodes = Vec::new();
        if depth >= 1 {
            nodes.push(NodeAddress::root());
            let mut level = vec![NodeAddress::root()];
            for _ in 1..depth {
                let mut next = Vec::with_capacity(level.len() * alphabet_size as usize);
                for v in &level {
                    for a in 1..=alphabet_size {
                        next.push(v.child(a));
                    }
                }
                nodes.extend(next.iter().cloned());
                level = next;
            }
        }
        nodes.sort();
        Tree {
            nodes,
            alphabet_size,
        }
    }

    /// Internal constructor for node sets that are already canonical and
    /// father-closed by construction (majority votes, suffix closures, GW
    /// sampling). Checked in test builds.
    pub(crate) fn from_sorted_unchecked(nodes: Vec<NodeAddress>, alphabet_size: u8) -> Tree {
        debug_assert!(
            Tree::from_nodes(nodes.clone(), alphabet_size)
                .map(|t| t.nodes == nodes)
                .unwrap_or(false),
            "node set is not canonical and father-closed"
        );
        Tree {
            nodes,
            alphabet_size,
        }
    }

    /// Parses a whitespace-separated token list, e.g. `@ 1 2 12 22`.
    /// An empty string is the empty tree.
    pub fn parse_tokens(line: &str, alphabet_size: u8) -> Result<Tree> {
        let mut nodes = Vec::new();
        for token in line.split_whitespace() {
            nodes.push(NodeAddress::parse_token(token, alphabet_size)?);
        }
        Tree::from_nodes(nodes, alphabet_size)
    }

    /// Canonical token list, nodes space-separated in canonical order.
    pub fn tokens(&self) -> String {
        let parts: Vec<String> = self
            .nodes
            .iter()
            .map(|n| n.to_token(self.alphabet_size))
            .collect();
        parts.join(" ")
    }

    pub fn alphabet_size(&self) -> u8 {
        self.alphabet_size
    }

    pub fn nodes(&self) -> &[NodeAddress] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, node: &NodeAddress) -> bool {
        self.nodes.binary_search(node).is_ok()
    }

    /// Maximum generation present; 0 for the empty tree.
    pub fn max_generation(&self) -> u32 {
        self.nodes.last().map_or(0, |n| n.generation())
    }
}

impl std::fmt::Debug for Tree {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Tree(m={}, {{{}}})", self.alphabet_size, self.tokens())
    }
}

pub(crate) fn check_alphabet_size(alphabet_size: u8) -> Result<()> {
    if alphabet_size < 2 {
        Err(Error::InvalidParameter(format!(
            "alphabet size must be at least 2, got {alphabet_size}"
        )))
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn addr(s: &str) -> NodeAddress {
        NodeAddress::parse_token(s, 9).unwrap()
    }

    #[test]
    fn validates_worked_node_set() {
        let t = Tree::from_nodes(
            ["@", "1", "12", "2", "22"].map(addr),
            2,
        )
        .unwrap();
        assert_eq!(t.tokens(), "@ 1 2 12 22");
        assert_eq!(t.len(), 5);
        assert_eq!(t.max_generation(), 3);
    }

    #[test]
    fn empty_set_is_a_valid_tree() {
        let t = Tree::from_nodes([], 2).unwrap();
        assert!(t.is_empty());
        assert_eq!(t.tokens(), "");
        assert_eq!(t.max_generation(), 0);
    }

    #[test]
    fn missing_father_is_rejected() {
        let err = Tree::from_nodes(["@", "12"].map(addr), 2).unwrap_err();
        match err {
            Error::FatherMissing { father, .. } => assert_eq!(father, "2"),
            other => panic!("expected FatherMissing, got {other:?}"),
        }
    }

    #[test]
    fn symbol_out_of_range_is_rejected() {
        let err = Tree::from_nodes([NodeAddress::new(vec![3])], 2).unwrap_err();
        assert!(matches!(err, Error::SymbolOutOfRange { symbol: 3, .. }));
    }

    #[test]
    fn duplicates_collapse() {
        let t = Tree::from_nodes(["1", "@", "1", "@"].map(addr), 2).unwrap();
        assert_eq!(t.tokens(), "@ 1");
    }

    #[test]
    fn full_tree_sizes() {
        assert_eq!(Tree::full(2, 1).len(), 1);
        assert_eq!(Tree::full(2, 2).len(), 3);
        assert_eq!(Tree::full(2, 3).len(), 7);
        assert_eq!(Tree::full(2, 4).len(), 15);
        assert_eq!(Tree::full(3, 2).len(), 4);
    }

    #[test]
    fn parse_tokens_round_trip() {
        let t = Tree::parse_tokens("@ 1 2 12 22", 2).unwrap();
        assert_eq!(Tree::parse_tokens(&t.tokens(), 2).unwrap(), t);
        assert!(Tree::parse_tokens("", 2).unwrap().is_empty());
    }

    #[test]
    fn contains_uses_canonical_order() {
        let t = Tree::full(2, 3);
        assert!(t.contains(&addr("21")));
        assert!(!t.contains(&NodeAddress::new(vec![1, 1, 1])));
    }
}
