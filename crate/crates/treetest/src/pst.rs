//! PST context-tree estimation: one tree per symbol sequence, plus the
//! Bonferroni-corrected pairwise family comparison.
//!
//! Estimation keeps a candidate context when its conditional next-symbol
//! law differs enough (likelihood-ratio wise) from its father's; the
//! returned tree is the suffix closure of the retained contexts. The
//! transition probabilities themselves are estimated during growth but
//! deliberately discarded: the test compares structures, not transitions.

use std::collections::HashMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::address::NodeAddress;
use crate::error::{Error, Result};
use crate::fasta::{read_fasta, sequence_from_record, AMINO_ACIDS};
use crate::mean::TreeSample;
use crate::permtest::{alpha_key, run_test, TestConfig, TestResult};
use crate::stream::{derive_seed, rng_for, tags};
use crate::tree::{check_alphabet_size, Tree};
use crate::vlmc::Sequence;
use crate::weights::WeightConfig;

/// PST growth thresholds. The defaults mirror the published PST defaults
/// in spirit and are pinned by the recovery tests on the two reference
/// binary chains; protein runs use context length 3 (trees of depth 4).
#[derive(Clone, Debug, PartialEq)]
pub struct PstParams {
    /// Maximum context length L; estimated trees reach generation L+1.
    pub max_context_length: u32,
    /// Minimum empirical frequency for a candidate context to be examined.
    pub p_min: f64,
    /// Likelihood-ratio threshold: a context is kept when some symbol's
    /// conditional probability differs from its father's by factor >= r
    /// (or <= 1/r).
    pub r: f64,
    /// Smoothing floor: the witnessing symbol needs smoothed probability
    /// at least (1 + alpha_s) * gamma_min.
    pub gamma_min: f64,
    /// Additive smoothing weight; 0 gives maximum-likelihood estimates.
    pub alpha_s: f64,
}

impl Default for PstParams {
    fn default() -> PstParams {
        PstParams {
            max_context_length: 3,
            p_min: 0.001,
            r: 1.05,
            gamma_min: 0.001,
            alpha_s: 0.0,
        }
    }
}

impl PstParams {
    pub fn with_max_context_length(length: u32) -> PstParams {
        PstParams {
            max_context_length: length,
            ..PstParams::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_context_length < 1 {
            return Err(Error::InvalidParameter(
                "maximum context length must be at least 1".to_string(),
            ));
        }
        if !(self.p_min > 0.0 && self.p_min < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "p_min must lie in (0,1), got {}",
                self.p_min
            )));
        }
        if !(self.r > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "ratio threshold r must exceed 1, got {}",
                self.r
            )));
        }
        if !(self.gamma_min > 0.0 && self.gamma_min < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma_min must lie in (0,1), got {}",
                self.gamma_min
            )));
        }
        if !(self.alpha_s >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha_s must be nonnegative, got {}",
                self.alpha_s
            )));
        }
        Ok(())
    }
}

/// Next-symbol counts for one context window.
struct ContextCounts {
    next: Vec<u64>,
    total: u64,
}

/// Estimates the context tree of one sequence.
pub fn pst_estimate(seq: &Sequence, alphabet_size: u8, params: &PstParams) -> Result<Tree> {
    check_alphabet_size(alphabet_size)?;
    params.validate()?;
    let m = alphabet_size as usize;
    let max_len = params.max_context_length as usize;
    let n = seq.len();
    if n <= max_len {
        return Err(Error::SequenceTooShort {
            id: seq.id.clone(),
            len: n,
            min: max_len,
        });
    }
    for (i, &s) in seq.symbols.iter().enumerate() {
        if s < 1 || s > alphabet_size {
            return Err(Error::SymbolOutOfRange {
                node: format!("{} position {}", seq.id, i + 1),
                symbol: s,
                alphabet_size,
            });
        }
    }

    // transition counts per window length: window = seq[j+1-k ..= j],
    // next symbol = seq[j+1]
    let mut tables: Vec<HashMap<&[u8], ContextCounts>> = Vec::with_capacity(max_len);
    for k in 1..=max_len {
        let mut table: HashMap<&[u8], ContextCounts> = HashMap::new();
        for j in (k - 1)..(n - 1) {
            let window = &seq.symbols[j + 1 - k..=j];
            let entry = table.entry(window).or_insert_with(|| ContextCounts {
                next: vec![0; m],
                total: 0,
            });
            entry.next[seq.symbols[j + 1] as usize - 1] += 1;
            entry.total += 1;
        }
        tables.push(table);
    }
    // the empty context: unconditional next-symbol counts
    let mut root_counts = ContextCounts {
        next: vec![0; m],
        total: 0,
    };
    for &s in &seq.symbols[1..] {
        root_counts.next[s as usize - 1] += 1;
        root_counts.total += 1;
    }

    let smoothed = |counts: &ContextCounts, a: usize| -> f64 {
        (counts.next[a] as f64 + params.alpha_s)
            / (counts.total as f64 + m as f64 * params.alpha_s)
    };

    let mut retained: Vec<NodeAddress> = vec![NodeAddress::root()];
    for (table, k) in tables.iter().zip(1..) {
        for (window, counts) in table {
            let freq = counts.total as f64 / (n - k) as f64;
            if freq < params.p_min {
                continue;
            }
            let father_counts = if k == 1 {
                &root_counts
            } else {
                &tables[k - 2][&window[1..]]
            };
            let keep = (0..m).any(|a| {
                let p_here = smoothed(counts, a);
                if p_here < (1.0 + params.alpha_s) * params.gamma_min {
                    return false;
                }
                let p_father = smoothed(father_counts, a);
                if p_father <= 0.0 {
                    return p_here > 0.0;
                }
                let ratio = p_here / p_father;
                ratio >= params.r || ratio <= 1.0 / params.r
            });
            if keep {
                // suffix closure: a retained context brings all its fathers
                let mut node = NodeAddress::new(window.to_vec());
                loop {
                    retained.push(node.clone());
                    match node.father() {
                        Some(f) => node = f,
                        None => break,
                    }
                }
            }
        }
    }
    retained.sort();
    retained.dedup();
    Ok(Tree::from_sorted_unchecked(retained, alphabet_size))
}

/// What to do with a FASTA record containing a non-standard residue.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum UnknownResiduePolicy {
    /// Fail the whole import (the default).
    #[default]
    Error,
    /// Drop the offending record and report it.
    SkipRecord,
}

/// Result of a FASTA import: one estimated tree per usable record.
#[derive(Clone, Debug)]
pub struct FastaImport {
    pub sample: TreeSample,
    pub ids: Vec<String>,
    /// Records dropped under [`UnknownResiduePolicy::SkipRecord`], with the
    /// reason.
    pub skipped: Vec<String>,
}

/// Estimates one context tree per FASTA record over the 20-letter
/// amino-acid alphabet. The tree space is m=20 with maximum generation
/// L+1.
pub fn trees_from_fasta(
    path: &Path,
    z: f64,
    params: &PstParams,
    policy: UnknownResiduePolicy,
) -> Result<FastaImport> {
    params.validate()?;
    let records = read_fasta(path)?;
    let config = WeightConfig::new(
        AMINO_ACIDS.len() as u8,
        z,
        params.max_context_length + 1,
    )?;
    let mut sequences = Vec::new();
    let mut skipped = Vec::new();
    for record in &records {
        match sequence_from_record(record) {
            Ok(seq) => sequences.push(seq),
            Err(e @ Error::UnknownResidue { .. }) => match policy {
                UnknownResiduePolicy::Error => return Err(e),
                UnknownResiduePolicy::SkipRecord => skipped.push(e.to_string()),
            },
            Err(e) => return Err(e),
        }
    }
    if sequences.is_empty() {
        return Err(Error::Parse {
            line: 0,
            reason: "no usable records after residue filtering".to_string(),
        });
    }
    let m = config.alphabet_size();
    let trees: Vec<Result<Tree>> = sequences
        .par_iter()
        .map(|seq| pst_estimate(seq, m, params))
        .collect();
    let mut ids = Vec::with_capacity(sequences.len());
    let mut ok_trees = Vec::with_capacity(sequences.len());
    for (seq, tree) in sequences.iter().zip(trees) {
        ok_trees.push(tree?);
        ids.push(seq.id.clone());
    }
    Ok(FastaImport {
        sample: TreeSample::new(ok_trees, config)?,
        ids,
        skipped,
    })
}

/// One off-diagonal entry of the pairwise comparison matrix.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PairResult {
    pub i: usize,
    pub j: usize,
    /// Rejection threshold q at the corrected level.
    pub critical: f64,
    pub observed: f64,
    pub p_value: f64,
    pub reject: bool,
}

/// Diagonal null check: one sample split at random into two halves.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiagonalResult {
    pub index: usize,
    pub observed: f64,
    pub p_value: f64,
}

/// All pairwise tests at the Bonferroni-corrected level.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PairwiseResult {
    pub names: Vec<String>,
    pub overall_alpha: f64,
    pub corrected_alpha: f64,
    pub pairs: Vec<PairResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagonal: Option<Vec<DiagonalResult>>,
}

impl PairwiseResult {
    pub fn pair(&self, i: usize, j: usize) -> Option<&PairResult> {
        self.pairs
            .iter()
            .find(|p| (p.i, p.j) == (i.min(j), i.max(j)))
    }
}

/// Runs every unordered pair of samples through the permutation test at
/// level overall_alpha / C(K,2). With `diagonal` set, each sample is also
/// split at random in two subsets and tested against itself.
pub fn pairwise_family_tests(
    samples: &[TreeSample],
    names: &[String],
    cfg: &TestConfig,
    overall_alpha: f64,
    diagonal: bool,
) -> Result<PairwiseResult> {
    if samples.len() < 2 {
        return Err(Error::InvalidParameter(
            "pairwise comparison needs at least two samples".to_string(),
        ));
    }
    if names.len() != samples.len() {
        return Err(Error::InvalidParameter(
            "one name per sample is required".to_string(),
        ));
    }
    if !(overall_alpha > 0.0 && overall_alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "overall alpha must lie in (0,1), got {overall_alpha}"
        )));
    }
    for sample in samples {
        if sample.config() != samples[0].config() {
            return Err(Error::ConfigMismatch(
                "all samples must share one weight configuration".to_string(),
            ));
        }
    }
    let k = samples.len();
    let num_pairs = k * (k - 1) / 2;
    let corrected = overall_alpha / num_pairs as f64;

    let index_pairs: Vec<(usize, usize)> = (0..k)
        .flat_map(|i| ((i + 1)..k).map(move |j| (i, j)))
        .collect();
    let results: Vec<Result<PairResult>> = index_pairs
        .par_iter()
        .enumerate()
        .map(|(pair_idx, &(i, j))| {
            let pair_cfg = TestConfig {
                alphas: vec![corrected],
                seed: derive_seed(cfg.seed, tags::PAIRWISE, pair_idx as u64),
                ..cfg.clone()
            };
            let result = run_test(&samples[i], &samples[j], &pair_cfg)?;
            Ok(PairResult {
                i,
                j,
                critical: result.q_for(corrected).expect("configured level"),
                observed: result.observed_d,
                p_value: result.p_value,
                reject: result.reject_at(corrected).expect("configured level"),
            })
        })
        .collect();
    let mut pairs = Vec::with_capacity(num_pairs);
    for r in results {
        pairs.push(r?);
    }

    let diagonal = if diagonal {
        let diag: Vec<Result<DiagonalResult>> = (0..k)
            .into_par_iter()
            .map(|i| {
                let result = split_half_test(&samples[i], cfg, i as u64)?;
                Ok(DiagonalResult {
                    index: i,
                    observed: result.observed_d,
                    p_value: result.p_value,
                })
            })
            .collect();
        let mut out = Vec::with_capacity(k);
        for d in diag {
            out.push(d?);
        }
        Some(out)
    } else {
        None
    };

    Ok(PairwiseResult {
        names: names.to_vec(),
        overall_alpha,
        corrected_alpha: corrected,
        pairs,
        diagonal,
    })
}

/// Splits one sample at random into two halves and tests them against each
/// other; the null check applied to the matrix diagonal.
pub fn split_half_test(sample: &TreeSample, cfg: &TestConfig, index: u64) -> Result<TestResult> {
    if sample.len() < 2 {
        return Err(Error::InvalidParameter(
            "splitting needs at least two trees".to_string(),
        ));
    }
    use rand::seq::SliceRandom;
    let mut rng = rng_for(cfg.seed, tags::SPLIT, 2 * index);
    let mut indices: Vec<usize> = (0..sample.len()).collect();
    indices.shuffle(&mut rng);
    let half = sample.len() / 2;
    let pick = |ix: &[usize]| -> Vec<Tree> { ix.iter().map(|&i| sample.trees()[i].clone()).collect() };
    let s1 = TreeSample::new(pick(&indices[..half]), sample.config().clone())?;
    let s2 = TreeSample::new(pick(&indices[half..]), sample.config().clone())?;
    let split_cfg = TestConfig {
        seed: derive_seed(cfg.seed, tags::SPLIT, 2 * index + 1),
        ..cfg.clone()
    };
    run_test(&s1, &s2, &split_cfg)
}

/// Human-readable matrix in the (critical value, observed value) layout;
/// diagonal entries show (observed, p-value).
pub fn format_pairwise_table(result: &PairwiseResult) -> String {
    let k = result.names.len();
    let mut cells = vec![vec![String::new(); k]; k];
    for p in &result.pairs {
        cells[p.i][p.j] = format!("({:.4}, {:.4})", p.critical, p.observed);
    }
    if let Some(diag) = &result.diagonal {
        for d in diag {
            cells[d.index][d.index] = format!("[{:.4}, p={:.3}]", d.observed, d.p_value);
        }
    }
    let name_width = result.names.iter().map(|n| n.len()).max().unwrap_or(6).max(6);
    let cell_width = cells
        .iter()
        .flatten()
        .map(|c| c.len())
        .max()
        .unwrap_or(8)
        .max(8);
    let mut out = String::new();
    out.push_str(&format!(
        "pairwise tests at corrected level {} (overall {})\n",
        alpha_key(result.corrected_alpha),
        alpha_key(result.overall_alpha)
    ));
    out.push_str(&format!("{:name_width$}", ""));
    for name in &result.names {
        out.push_str(&format!(" {name:>cell_width$}"));
    }
    out.push('\n');
    for i in 0..k {
        out.push_str(&format!("{:name_width$}", result.names[i]));
        for j in 0..k {
            out.push_str(&format!(" {:>cell_width$}", cells[i][j]));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vlmc::ContextModel;

    fn addr(s: &str) -> NodeAddress {
        NodeAddress::parse_token(s, 2).unwrap()
    }

    fn model_a() -> ContextModel {
        ContextModel::new(
            2,
            vec![
                (addr("11"), vec![0.7, 0.3]),
                (addr("21"), vec![0.4, 0.6]),
                (addr("2"), vec![0.2, 0.8]),
            ],
        )
        .unwrap()
    }

    fn model_b() -> ContextModel {
        ContextModel::new(
            2,
            vec![
                (addr("1"), vec![0.6, 0.4]),
                (addr("12"), vec![0.2, 0.8]),
                (addr("22"), vec![0.4, 0.6]),
            ],
        )
        .unwrap()
    }

    fn binary_params() -> PstParams {
        PstParams::with_max_context_length(2)
    }

    #[test]
    fn recovers_the_two_reference_context_trees() {
        let seq_a = model_a().sample(100_000, 41, "a").unwrap();
        let tree_a = pst_estimate(&seq_a, 2, &binary_params()).unwrap();
        assert_eq!(tree_a.tokens(), "@ 1 2 11 21");

        let seq_b = model_b().sample(100_000, 42, "b").unwrap();
        let tree_b = pst_estimate(&seq_b, 2, &binary_params()).unwrap();
        assert_eq!(tree_b.tokens(), "@ 1 2 12 22");
    }

    #[test]
    fn reference_trees_sit_at_the_worked_distance() {
        let config = WeightConfig::new(2, 0.36, 3).unwrap();
        let d = crate::weights::distance(&model_a().as_tree(), &model_b().as_tree(), &config)
            .unwrap();
        assert!((d - 0.186624).abs() < 1e-12);
    }

    #[test]
    fn memoryless_sequence_estimates_to_the_root() {
        let iid = ContextModel::new(2, vec![(NodeAddress::root(), vec![0.5, 0.5])]).unwrap();
        let seq = iid.sample(100_000, 7, "iid").unwrap();
        let tree = pst_estimate(&seq, 2, &binary_params()).unwrap();
        assert_eq!(tree.tokens(), "@");
    }

    #[test]
    fn estimated_trees_respect_the_generation_cap() {
        let seq = model_a().sample(50_000, 3, "a").unwrap();
        for max_len in 1..=4 {
            let params = PstParams::with_max_context_length(max_len);
            let tree = pst_estimate(&seq, 2, &params).unwrap();
            assert!(tree.max_generation() <= max_len + 1);
            assert!(tree.contains(&NodeAddress::root()));
        }
    }

    #[test]
    fn short_sequence_is_rejected() {
        let seq = Sequence::new("s", vec![1, 2, 1]);
        let err = pst_estimate(&seq, 2, &PstParams::with_max_context_length(3)).unwrap_err();
        assert!(matches!(err, Error::SequenceTooShort { .. }));
    }

    #[test]
    fn invalid_symbols_are_rejected() {
        let seq = Sequence::new("s", vec![1, 2, 3, 1, 2]);
        assert!(pst_estimate(&seq, 2, &binary_params()).is_err());
    }

    #[test]
    fn parameter_validation() {
        let mut p = PstParams::default();
        p.r = 1.0;
        assert!(p.validate().is_err());
        p = PstParams::default();
        p.p_min = 0.0;
        assert!(p.validate().is_err());
        p = PstParams::default();
        p.max_context_length = 0;
        assert!(p.validate().is_err());
        p = PstParams::default();
        p.alpha_s = -1.0;
        assert!(p.validate().is_err());
    }

    fn synthetic_family(model: &ContextModel, count: usize, seed: u64) -> TreeSample {
        let params = binary_params();
        let config = WeightConfig::new(2, 0.36, params.max_context_length + 1).unwrap();
        let trees: Vec<Tree> = (0..count)
            .map(|i| {
                let seq = model
                    .sample(2_000, derive_seed(seed, 999, i as u64), format!("s{i}"))
                    .unwrap();
                pst_estimate(&seq, 2, &params).unwrap()
            })
            .collect();
        TreeSample::new(trees, config).unwrap()
    }

    #[test]
    fn pairwise_separates_distinct_families_and_corrects_the_level() {
        let fam_a = synthetic_family(&model_a(), 40, 1);
        let fam_b = synthetic_family(&model_b(), 40, 2);
        let fam_a2 = synthetic_family(&model_a(), 40, 3);
        let cfg = TestConfig {
            num_permutations: 400,
            ..TestConfig::default()
        };
        let names = vec!["a".to_string(), "b".to_string(), "a2".to_string()];
        let result =
            pairwise_family_tests(&[fam_a, fam_b, fam_a2], &names, &cfg, 0.05, true).unwrap();
        assert_eq!(result.pairs.len(), 3);
        assert!((result.corrected_alpha - 0.05 / 3.0).abs() < 1e-15);
        // distinct structures are told apart, identical ones are not
        assert!(result.pair(0, 1).unwrap().reject);
        assert!(result.pair(1, 2).unwrap().reject);
        assert!(!result.pair(0, 2).unwrap().reject);
        let diag = result.diagonal.as_ref().unwrap();
        assert_eq!(diag.len(), 3);
        for d in diag {
            assert!(d.p_value > 0.05, "diagonal p-value {}", d.p_value);
        }
        let table = format_pairwise_table(&result);
        assert!(table.contains("a2"));
    }

    #[test]
    fn pairwise_rejects_degenerate_input() {
        let fam = synthetic_family(&model_a(), 10, 5);
        let cfg = TestConfig::default();
        assert!(pairwise_family_tests(&[fam.clone()], &["a".to_string()], &cfg, 0.05, false)
            .is_err());
        assert!(
            pairwise_family_tests(&[fam.clone(), fam.clone()], &["a".to_string()], &cfg, 0.05, false)
                .is_err()
        );
        assert!(pairwise_family_tests(
            &[fam.clone(), fam],
            &["a".to_string(), "b".to_string()],
            &cfg,
            1.5,
            false
        )
        .is_err());
    }
}
