use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// Address of one vertex of the full m-ary tree.
///
/// An address is a finite string of symbols from `{1..m}`; the empty string
/// is the root. Symbols are stored oldest-first, so for a VLMC context the
/// last symbol is the most recent one and the father of a node is obtained
/// by dropping the first (oldest) symbol. The father is therefore a suffix
/// of the node as written, e.g. father("21") = "1".
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct NodeAddress {
    symbols: Vec<u8>,
}

impl NodeAddress {
    /// The root address (empty symbol string).
    pub fn root() -> Self {
        NodeAddress {
            symbols: Vec::new(),
        }
    }

    /// Builds an address from raw symbols (oldest first). Symbols are
    /// validated against an alphabet when the address enters a `Tree`.
    pub fn new(symbols: impl Into<Vec<u8>>) -> Self {
        NodeAddress {
            symbols: symbols.into(),
        }
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn is_root(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Generation index; the root is generation 1 and a string of length k
    /// sits at generation k+1.
    pub fn generation(&self) -> u32 {
        self.symbols.len() as u32 + 1
    }

    /// Father address, or `None` for the root.
    pub fn father(&self) -> Option<NodeAddress> {
        if self.symbols.is_empty() {
            None
        } else {
            Some(NodeAddress {
                symbols: self.symbols[1..].to_vec(),
            })
        }
    }

    /// The child `av` reached by prepending symbol `a`.
    pub fn child(&self, symbol: u8) -> NodeAddress {
        debug_assert!(symbol >= 1);
        let mut symbols = Vec::with_capacity(self.symbols.len() + 1);
        symbols.push(symbol);
        symbols.extend_from_slice(&self.symbols);
        NodeAddress { symbols }
    }

    /// Canonical file token: `@` for the root, concatenated digits when the
    /// alphabet fits in one digit per symbol, dot-separated integers
    /// otherwise.
    pub fn to_token(&self, alphabet_size: u8) -> String {
        if self.is_root() {
            return "@".to_string();
        }
        if alphabet_size <= 9 {
            self.symbols.iter().map(|s| (b'0' + s) as char).collect()
        } else {
            let parts: Vec<String> = self.symbols.iter().map(|s| s.to_string()).collect();
            parts.join(".")
        }
    }

    /// Parses a token produced by [`to_token`](Self::to_token).
    pub fn parse_token(token: &str, alphabet_size: u8) -> Result<Self> {
        let bad = |reason: &str| Error::Token {
            token: token.to_string(),
            reason: reason.to_string(),
        };
        if token == "@" {
            return Ok(NodeAddress::root());
        }
        if token.is_empty() {
            return Err(bad("empty token"));
        }
        let mut symbols = Vec::new();
        if alphabet_size <= 9 {
            for c in token.chars() {
                let d = c.to_digit(10).ok_or_else(|| bad("expected a digit"))? as u8;
                if d < 1 || d > alphabet_size {
                    return Err(bad("symbol outside alphabet"));
                }
                symbols.push(d);
            }
        } else {
            for part in token.split('.') {
                let d: u8 = part.parse().map_err(|_| bad("expected an integer"))?;
                if d < 1 || d > alphabet_size {
                    return Err(bad("symbol outside alphabet"));
                }
                symbols.push(d);
            }
        }
        Ok(NodeAddress { symbols })
    }
}

impl Ord for NodeAddress {
    /// Canonical order: by generation, then lexicographically on symbols.
    fn cmp(&self, other: &Self) -> Ordering {
        self.symbols
            .len()
            .cmp(&other.symbols.len())
            .then_with(|| self.symbols.cmp(&other.symbols))
    }
}

impl PartialOrd for NodeAddress {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for NodeAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_root() {
            return write!(f, "@");
        }
        if self.symbols.iter().all(|&s| s <= 9) {
            for s in &self.symbols {
                write!(f, "{s}")?;
            }
            Ok(())
        } else {
            write!(f, "{}", self.to_token(u8::MAX))
        }
    }
}

impl fmt::Debug for NodeAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NodeAddress({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_counts_root_as_one() {
        assert_eq!(NodeAddress::root().generation(), 1);
        assert_eq!(NodeAddress::new(vec![1]).generation(), 2);
        assert_eq!(NodeAddress::new(vec![1, 1, 2]).generation(), 4);
    }

    #[test]
    fn father_drops_oldest_symbol() {
        let v = NodeAddress::new(vec![2, 1]);
        assert_eq!(v.father(), Some(NodeAddress::new(vec![1])));
        assert_eq!(NodeAddress::new(vec![1]).father(), Some(NodeAddress::root()));
        assert_eq!(NodeAddress::root().father(), None);
    }

    #[test]
    fn child_prepends() {
        let v = NodeAddress::new(vec![1]);
        assert_eq!(v.child(2), NodeAddress::new(vec![2, 1]));
        assert_eq!(NodeAddress::root().child(1), NodeAddress::new(vec![1]));
    }

    #[test]
    fn canonical_order_is_generation_then_lex() {
        let mut nodes = vec![
            NodeAddress::new(vec![2, 2]),
            NodeAddress::new(vec![2]),
            NodeAddress::new(vec![1, 2]),
            NodeAddress::root(),
            NodeAddress::new(vec![1]),
        ];
        nodes.sort();
        let tokens: Vec<String> = nodes.iter().map(|n| n.to_token(2)).collect();
        assert_eq!(tokens, vec!["@", "1", "2", "12", "22"]);
    }

    #[test]
    fn token_round_trip_small_alphabet() {
        for raw in [vec![], vec![1], vec![1, 1, 2], vec![2, 1]] {
            let v = NodeAddress::new(raw);
            let tok = v.to_token(2);
            assert_eq!(NodeAddress::parse_token(&tok, 2).unwrap(), v);
        }
    }

    #[test]
    fn token_round_trip_large_alphabet() {
        let v = NodeAddress::new(vec![12, 3, 20]);
        let tok = v.to_token(20);
        assert_eq!(tok, "12.3.20");
        assert_eq!(NodeAddress::parse_token(&tok, 20).unwrap(), v);
    }

    #[test]
    fn parse_token_rejects_out_of_range() {
        assert!(NodeAddress::parse_token("3", 2).is_err());
        assert!(NodeAddress::parse_token("0", 2).is_err());
        assert!(NodeAddress::parse_token("x", 2).is_err());
        assert!(NodeAddress::parse_token("21.0", 20).is_err());
    }
}
