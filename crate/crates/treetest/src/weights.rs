use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::tree::{check_alphabet_size, Tree};

/// Parameters of the node weight phi(v) = z^gen(v): alphabet size m, base z
/// and the maximum generation (root included) any tree may use.
///
/// The depth cap is mandatory; with it, any z > 0 yields a finite total
/// weight. Protein trees use m=20, z=0.36, depth 4, where only the cap
/// keeps the sum finite since z >= 1/m there.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightConfig {
    alphabet_size: u8,
    z: f64,
    max_depth: u32,
}

impl WeightConfig {
    pub fn new(alphabet_size: u8, z: f64, max_depth: u32) -> Result<WeightConfig> {
        check_alphabet_size(alphabet_size)?;
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "weight base z must be a positive finite number, got {z}"
            )));
        }
        if max_depth < 1 {
            return Err(Error::InvalidParameter(
                "max depth must be at least 1".to_string(),
            ));
        }
        Ok(WeightConfig {
            alphabet_size,
            z,
            max_depth,
        })
    }

    pub fn alphabet_size(&self) -> u8 {
        self.alphabet_size
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn max_depth(&self) -> u32 {
        self.max_depth
    }

    /// Node weight phi(v) = z^gen(v).
    pub fn phi(&self, generation: u32) -> f64 {
        self.z.powi(generation as i32)
    }

    /// Checks that a tree lives in the space this configuration defines.
    pub fn admits(&self, tree: &Tree) -> Result<()> {
        if tree.alphabet_size() != self.alphabet_size {
            return Err(Error::ConfigMismatch(format!(
                "tree alphabet size {} differs from configured {}",
                tree.alphabet_size(),
                self.alphabet_size
            )));
        }
        if tree.max_generation() > self.max_depth {
            return Err(Error::ConfigMismatch(format!(
                "tree reaches generation {} beyond configured depth {}",
                tree.max_generation(),
                self.max_depth
            )));
        }
        Ok(())
    }
}

/// The metric d(t,y) = sum over the symmetric difference of z^gen(v),
/// computed as an ordered merge of the two canonical node lists.
pub fn distance(t: &Tree, y: &Tree, config: &WeightConfig) -> Result<f64> {
    config.admits(t)?;
    config.admits(y)?;
    let a = t.nodes();
    let b = y.nodes();
    let mut d = 0.0;
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => {
                d += config.phi(a[i].generation());
                i += 1;
            }
            Ordering::Greater => {
                d += config.phi(b[j].generation());
                j += 1;
            }
            Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    for v in &a[i..] {
        d += config.phi(v.generation());
    }
    for v in &b[j..] {
        d += config.phi(v.generation());
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::address::NodeAddress;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const TOL: f64 = 1e-12;

    fn tree(tokens: &str) -> Tree {
        Tree::parse_tokens(tokens, 2).unwrap()
    }

    fn cfg() -> WeightConfig {
        WeightConfig::new(2, 0.36, 4).unwrap()
    }

    #[test]
    fn worked_context_tree_distance() {
        let t = tree("@ 1 2 11 21");
        let y = tree("@ 1 2 12 22");
        let d = distance(&t, &y, &cfg()).unwrap();
        assert!((d - 0.186624).abs() < TOL, "got {d}");
    }

    #[test]
    fn identical_trees_have_zero_distance() {
        let t = tree("@ 1 2 11 21");
        assert_eq!(distance(&t, &t, &cfg()).unwrap(), 0.0);
    }

    #[test]
    fn root_against_empty() {
        let d = distance(&tree("@"), &tree(""), &cfg()).unwrap();
        assert!((d - 0.36).abs() < TOL);
    }

    #[test]
    fn mismatched_alphabet_is_rejected() {
        let t3 = Tree::full(3, 2);
        assert!(distance(&tree("@"), &t3, &cfg()).is_err());
    }

    #[test]
    fn too_deep_tree_is_rejected() {
        let deep = Tree::full(2, 5);
        assert!(distance(&deep, &tree("@"), &cfg()).is_err());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(WeightConfig::new(1, 0.36, 4).is_err());
        assert!(WeightConfig::new(2, 0.0, 4).is_err());
        assert!(WeightConfig::new(2, -1.0, 4).is_err());
        assert!(WeightConfig::new(2, f64::NAN, 4).is_err());
        assert!(WeightConfig::new(2, 0.36, 0).is_err());
    }

    fn random_tree(rng: &mut ChaCha8Rng, depth: u32) -> Tree {
        // keep each node independently, then close under fathers
        let full = Tree::full(2, depth);
        let mut keep: Vec<NodeAddress> = Vec::new();
        for node in full.nodes() {
            if rng.gen_bool(0.5) {
                keep.push(node.clone());
            }
        }
        let mut closed: Vec<NodeAddress> = Vec::new();
        for mut node in keep {
            loop {
                closed.push(node.clone());
                match node.father() {
                    Some(f) => node = f,
                    None => break,
                }
            }
        }
        Tree::from_nodes(closed, 2).unwrap()
    }

    #[test]
    fn metric_axioms_on_random_pairs() {
        let config = cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let t = random_tree(&mut rng, 4);
            let y = random_tree(&mut rng, 4);
            let u = random_tree(&mut rng, 4);
            let dty = distance(&t, &y, &config).unwrap();
            let dyt = distance(&y, &t, &config).unwrap();
            assert_eq!(dty, dyt);
            assert!(dty >= 0.0);
            assert_eq!(dty == 0.0, t == y);
            let dtu = distance(&t, &u, &config).unwrap();
            let dyu = distance(&y, &u, &config).unwrap();
            assert!(dtu <= dty + dyu + TOL);
        }
    }

    #[test]
    fn distance_matches_enumeration_oracle() {
        // brute force over every address of generation <= 4
        let config = cfg();
        let all = Tree::full(2, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let t = random_tree(&mut rng, 4);
            let y = random_tree(&mut rng, 4);
            let mut expected = 0.0;
            for v in all.nodes() {
                let it = t.contains(v) as i32;
                let iy = y.contains(v) as i32;
                expected += config.phi(v.generation()) * (it - iy).abs() as f64;
            }
            let got = distance(&t, &y, &config).unwrap();
            assert!((got - expected).abs() < TOL);
        }
    }
}
