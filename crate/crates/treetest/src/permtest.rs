//! Two-sample test on the distance between empirical mean trees, with a
//! Monte Carlo null and the power-study harness.
//!
//! Two null constructions are available: `Permute` rearranges the pooled
//! observations and resplits at the original sizes (the choice for real
//! data), `Mixture` draws fresh pooled samples from the half-half mixture
//! of two known generating laws (the simulation protocol). A power study
//! builds the mixture null once and scores many independent sample pairs
//! against its quantiles.

use std::collections::BTreeMap;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gw::{sample_tree_with, GwParams};
use crate::mean::{majority_tree, TieRule, TreeSample};
use crate::stream::{rng_for, tags, DEFAULT_SEED};
use crate::tree::Tree;
use crate::weights::{distance, WeightConfig};

/// Monte Carlo test parameters.
#[derive(Clone, Debug)]
pub struct TestConfig {
    pub num_permutations: usize,
    pub alphas: Vec<f64>,
    pub tie_rule: TieRule,
    pub seed: u64,
}

impl Default for TestConfig {
    fn default() -> TestConfig {
        TestConfig {
            num_permutations: 1000,
            alphas: vec![0.10, 0.05, 0.01],
            tie_rule: TieRule::default(),
            seed: DEFAULT_SEED,
        }
    }
}

impl TestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_permutations < 1 {
            return Err(Error::InvalidParameter(
                "number of permutations must be at least 1".to_string(),
            ));
        }
        if self.alphas.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one alpha level is required".to_string(),
            ));
        }
        for &a in &self.alphas {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "alpha levels must lie in (0,1), got {a}"
                )));
            }
        }
        Ok(())
    }
}

/// Stable map key for an alpha level: two decimals when exact ("0.10",
/// "0.05", "0.01"), shortest round-trip form otherwise.
pub fn alpha_key(alpha: f64) -> String {
    let two = format!("{alpha:.2}");
    match two.parse::<f64>() {
        Ok(v) if v == alpha => two,
        _ => format!("{alpha}"),
    }
}

/// Outcome of one two-sample test.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TestResult {
    /// Distance between the empirical mean trees of the two samples.
    pub observed_d: f64,
    /// Null statistics ordered by replicate index; may be omitted on disk.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub null_distances: Vec<f64>,
    /// Rejection threshold per alpha level, keyed by [`alpha_key`].
    pub q_alpha: BTreeMap<String, f64>,
    /// Permutation p-value with the +1/(N+1) convention (never exactly 0).
    pub p_value: f64,
    /// Decision per alpha level: observed_d > q_alpha.
    pub reject: BTreeMap<String, bool>,
}

impl TestResult {
    pub fn q_for(&self, alpha: f64) -> Option<f64> {
        self.q_alpha.get(&alpha_key(alpha)).copied()
    }

    pub fn reject_at(&self, alpha: f64) -> Option<bool> {
        self.reject.get(&alpha_key(alpha)).copied()
    }
}

/// Which null distribution a simulation study uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NullMode {
    /// Rearrange the pooled observations and resplit at the original sizes.
    Permute,
    /// Draw fresh pooled samples from the half-half mixture of both laws.
    Mixture,
}

impl FromStr for NullMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<NullMode> {
        match s {
            "permute" => Ok(NullMode::Permute),
            "mixture" => Ok(NullMode::Mixture),
            other => Err(Error::InvalidParameter(format!(
                "null mode must be 'permute' or 'mixture', got '{other}'"
            ))),
        }
    }
}

fn shared_config(s1: &TreeSample, s2: &TreeSample) -> Result<WeightConfig> {
    if s1.config() != s2.config() {
        return Err(Error::ConfigMismatch(format!(
            "samples use different weight configurations: {:?} vs {:?}",
            s1.config(),
            s2.config()
        )));
    }
    if s1.is_empty() || s2.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(s1.config().clone())
}

/// Distance between the group means of one split of the pooled trees.
fn split_statistic(
    group1: &[&Tree],
    group2: &[&Tree],
    rule: TieRule,
    config: &WeightConfig,
) -> f64 {
    let m = config.alphabet_size();
    let m1 = majority_tree(group1, rule, m);
    let m2 = majority_tree(group2, rule, m);
    distance(&m1, &m2, config).expect("group means live in the sample space")
}

/// Distance between the tie-rule-selected empirical means of two samples.
pub fn observed_statistic(s1: &TreeSample, s2: &TreeSample, rule: TieRule) -> Result<f64> {
    let config = shared_config(s1, s2)?;
    let g1: Vec<&Tree> = s1.trees().iter().collect();
    let g2: Vec<&Tree> = s2.trees().iter().collect();
    Ok(split_statistic(&g1, &g2, rule, &config))
}

/// N independent rearrangement statistics of the pooled sample, ordered by
/// replicate index. Replicate k shuffles the pooled index vector with the
/// Fisher-Yates stream `(seed, k)` and assigns the first n1 positions to
/// the first group.
pub fn permutation_null(s1: &TreeSample, s2: &TreeSample, cfg: &TestConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let config = shared_config(s1, s2)?;
    let pooled: Vec<&Tree> = s1.trees().iter().chain(s2.trees().iter()).collect();
    let n1 = s1.len();
    let rule = cfg.tie_rule;
    let null: Vec<f64> = (0..cfg.num_permutations as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_for(cfg.seed, tags::PERMUTATION, k);
            let mut indices: Vec<usize> = (0..pooled.len()).collect();
            indices.shuffle(&mut rng);
            let group1: Vec<&Tree> = indices[..n1].iter().map(|&i| pooled[i]).collect();
            let group2: Vec<&Tree> = indices[n1..].iter().map(|&i| pooled[i]).collect();
            split_statistic(&group1, &group2, rule, &config)
        })
        .collect();
    Ok(null)
}

/// The [N(1-alpha)]-th order statistic (1-based, index clamped to [1, N])
/// of the null distances. A 1e-9 guard keeps exact products like
/// 1000 x 0.95 from flooring one short.
fn empirical_quantile(sorted: &[f64], alpha: f64) -> f64 {
    let n = sorted.len();
    let raw = (n as f64 * (1.0 - alpha) + 1e-9).floor() as usize;
    let idx = raw.clamp(1, n);
    sorted[idx - 1]
}

fn quantiles(sorted: &[f64], alphas: &[f64]) -> BTreeMap<String, f64> {
    alphas
        .iter()
        .map(|&a| (alpha_key(a), empirical_quantile(sorted, a)))
        .collect()
}

fn p_value(null: &[f64], observed: f64) -> f64 {
    let exceed = null.iter().filter(|&&d| d >= observed).count();
    (exceed + 1) as f64 / (null.len() + 1) as f64
}

fn assemble_result(observed: f64, null: Vec<f64>, alphas: &[f64]) -> TestResult {
    let mut sorted = null.clone();
    sorted.sort_by(f64::total_cmp);
    let q_alpha = quantiles(&sorted, alphas);
    let reject = alphas
        .iter()
        .map(|&a| (alpha_key(a), observed > q_alpha[&alpha_key(a)]))
        .collect();
    TestResult {
        observed_d: observed,
        p_value: p_value(&null, observed),
        null_distances: null,
        q_alpha,
        reject,
    }
}

/// Runs the permutation test: observed statistic, rearrangement null,
/// quantiles, p-value and per-level decisions.
pub fn run_test(s1: &TreeSample, s2: &TreeSample, cfg: &TestConfig) -> Result<TestResult> {
    let observed = observed_statistic(s1, s2, cfg.tie_rule)?;
    let null = permutation_null(s1, s2, cfg)?;
    Ok(assemble_result(observed, null, &cfg.alphas))
}

/// A power-study cell: two Galton-Watson laws, a per-sample size, and the
/// number of independent test pairs to score.
#[derive(Clone, Debug)]
pub struct PowerStudy {
    pub p: f64,
    pub p_star: f64,
    pub sample_size: usize,
    pub z: f64,
    pub max_depth: u32,
    pub num_tests: usize,
    pub null_mode: NullMode,
}

impl PowerStudy {
    pub fn new(p: f64, p_star: f64, sample_size: usize, num_tests: usize) -> Result<PowerStudy> {
        let study = PowerStudy {
            p,
            p_star,
            sample_size,
            z: 0.36,
            max_depth: 12,
            num_tests,
            null_mode: NullMode::Mixture,
        };
        study.validate()?;
        Ok(study)
    }

    pub fn validate(&self) -> Result<()> {
        GwParams::new(self.p, self.max_depth, 0)?;
        GwParams::new(self.p_star, self.max_depth, 0)?;
        WeightConfig::new(2, self.z, self.max_depth)?;
        if self.sample_size < 1 || self.num_tests < 1 {
            return Err(Error::InvalidParameter(
                "sample size and number of tests must be at least 1".to_string(),
            ));
        }
        Ok(())
    }
}

fn draw_trees(rng: &mut impl Rng, p: f64, max_depth: u32, n: usize) -> Vec<Tree> {
    (0..n).map(|_| sample_tree_with(rng, p, max_depth)).collect()
}

/// Percentage of rejections per alpha level over independent sample pairs
/// drawn from GP(p) and GP(p*), in the order of `cfg.alphas`.
pub fn power_study(study: &PowerStudy, cfg: &TestConfig) -> Result<Vec<(f64, f64)>> {
    study.validate()?;
    cfg.validate()?;
    let n = study.sample_size;
    let rejected: Vec<Vec<bool>> = match study.null_mode {
        NullMode::Mixture => {
            // one shared null from the half-half mixture of both laws
            let mut null: Vec<f64> = (0..cfg.num_permutations as u64)
                .into_par_iter()
                .map(|k| {
                    let mut rng = rng_for(cfg.seed, tags::MIXTURE_NULL, k);
                    let pool: Vec<Tree> = (0..2 * n)
                        .map(|_| {
                            let p = if rng.gen_bool(0.5) { study.p } else { study.p_star };
                            sample_tree_with(&mut rng, p, study.max_depth)
                        })
                        .collect();
                    let refs: Vec<&Tree> = pool.iter().collect();
                    let config = WeightConfig::new(2, study.z, study.max_depth).unwrap();
                    split_statistic(&refs[..n], &refs[n..], cfg.tie_rule, &config)
                })
                .collect();
            null.sort_by(f64::total_cmp);
            let qs: Vec<f64> = cfg.alphas.iter().map(|&a| empirical_quantile(&null, a)).collect();
            (0..study.num_tests as u64)
                .into_par_iter()
                .map(|t| {
                    let config = WeightConfig::new(2, study.z, study.max_depth).unwrap();
                    let mut rng1 = rng_for(cfg.seed, tags::TEST_SAMPLE_A, t);
                    let mut rng2 = rng_for(cfg.seed, tags::TEST_SAMPLE_B, t);
                    let s1 = draw_trees(&mut rng1, study.p, study.max_depth, n);
                    let s2 = draw_trees(&mut rng2, study.p_star, study.max_depth, n);
                    let g1: Vec<&Tree> = s1.iter().collect();
                    let g2: Vec<&Tree> = s2.iter().collect();
                    let observed = split_statistic(&g1, &g2, cfg.tie_rule, &config);
                    qs.iter().map(|&q| observed > q).collect()
                })
                .collect()
        }
        NullMode::Permute => (0..study.num_tests as u64)
            .into_par_iter()
            .map(|t| {
                let config = WeightConfig::new(2, study.z, study.max_depth).unwrap();
                let mut rng1 = rng_for(cfg.seed, tags::TEST_SAMPLE_A, t);
                let mut rng2 = rng_for(cfg.seed, tags::TEST_SAMPLE_B, t);
                let s1 = TreeSample::new(
                    draw_trees(&mut rng1, study.p, study.max_depth, n),
                    config.clone(),
                )
                .unwrap();
                let s2 = TreeSample::new(
                    draw_trees(&mut rng2, study.p_star, study.max_depth, n),
                    config,
                )
                .unwrap();
                let per_test = TestConfig {
                    seed: crate::stream::derive_seed(cfg.seed, tags::TEST_NULL, t),
                    ..cfg.clone()
                };
                let result = run_test(&s1, &s2, &per_test).unwrap();
                cfg.alphas
                    .iter()
                    .map(|&a| result.reject_at(a).unwrap())
                    .collect()
            })
            .collect(),
    };
    let mut percentages = Vec::with_capacity(cfg.alphas.len());
    for (i, &alpha) in cfg.alphas.iter().enumerate() {
        let count = rejected.iter().filter(|flags| flags[i]).count();
        percentages.push((alpha, 100.0 * count as f64 / study.num_tests as f64));
    }
    Ok(percentages)
}
