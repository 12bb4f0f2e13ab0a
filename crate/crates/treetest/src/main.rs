//! Command line front end: simulate-gw, mean-tree, distance, test, power,
//! pst, pairwise.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or validation error.
//! A key=value config file (--config) can supply defaults for the tuning
//! flags; explicit command line flags always win. Seeds default to a fixed
//! constant so published runs are reproducible; pass --seed random to opt
//! into entropy.

use std::collections::HashMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::parser::ValueSource;
use clap::{ArgMatches, CommandFactory, FromArgMatches, Parser, Subcommand};

use treetest::io::{
    read_key_value_config, read_sample, write_sample, write_test_result, write_test_result_to,
};
use treetest::pst::{
    format_pairwise_table, pairwise_family_tests, trees_from_fasta, PstParams,
    UnknownResiduePolicy,
};
use treetest::{
    distance, empirical_mean, power_study, run_test, sample_gw_sample, Error, GwParams, NullMode,
    PowerStudy, Result, TestConfig, TieRule, DEFAULT_SEED,
};

#[derive(Parser)]
#[command(
    name = "treetest",
    version,
    about = "Statistical comparison of populations of rooted trees"
)]
struct Cli {
    /// Key=value file supplying defaults for tuning flags (flags win)
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Cap worker threads; 0 uses all cores (results do not depend on this)
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Emit machine-readable JSON instead of human-oriented text
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a Galton-Watson tree sample and write a sample file
    #[command(name = "simulate-gw")]
    SimulateGw(SimulateGwArgs),
    /// Print the empirical mean tree of a sample file
    #[command(name = "mean-tree")]
    MeanTree(MeanTreeArgs),
    /// Distance between two stored trees
    Distance(DistanceArgs),
    /// Two-sample permutation test between two sample files
    Test(TestArgs),
    /// Rejection percentages over simulated Galton-Watson sample pairs
    Power(PowerArgs),
    /// Estimate one context tree per FASTA record
    Pst(PstArgs),
    /// All pairwise sample comparisons at a Bonferroni-corrected level
    Pairwise(PairwiseArgs),
}

#[derive(clap::Args)]
struct SimulateGwArgs {
    /// Child presence probability of the Galton-Watson law
    #[arg(long)]
    p: f64,
    /// Number of trees to draw
    #[arg(long)]
    n: usize,
    /// Maximum generation, root included
    #[arg(long, default_value_t = 12)]
    depth: u32,
    /// Weight base of the metric, phi(v) = z^gen(v)
    #[arg(long, default_value_t = 0.36)]
    z: f64,
    /// Seed (unsigned integer, or 'random' for entropy)
    #[arg(long, default_value_t = DEFAULT_SEED, value_parser = parse_seed)]
    seed: u64,
    /// Output sample file
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(clap::Args)]
struct MeanTreeArgs {
    /// Input sample file
    #[arg(long, value_name = "FILE")]
    sample: PathBuf,
    /// Which mean to print when the sample size is even: minimal|maximal
    #[arg(long, default_value = "maximal")]
    rule: TieRule,
}

#[derive(clap::Args)]
struct DistanceArgs {
    /// First sample file
    #[arg(long, value_name = "FILE")]
    a: PathBuf,
    /// Second sample file
    #[arg(long, value_name = "FILE")]
    b: PathBuf,
    /// Record indices into the two files
    #[arg(long, num_args = 2, value_names = ["I", "J"], default_values_t = [0, 0])]
    index: Vec<usize>,
}

#[derive(clap::Args)]
struct TestArgs {
    /// First sample file
    #[arg(long, value_name = "FILE")]
    sample1: PathBuf,
    /// Second sample file
    #[arg(long, value_name = "FILE")]
    sample2: PathBuf,
    /// Number of permutation replicates
    #[arg(long = "N", default_value_t = 1000)]
    num_permutations: usize,
    /// Significance level (repeatable)
    #[arg(long = "alpha", default_values_t = [0.10, 0.05, 0.01])]
    alphas: Vec<f64>,
    /// Mean tie rule: minimal|maximal
    #[arg(long, default_value = "maximal")]
    tie_rule: TieRule,
    /// Seed (unsigned integer, or 'random' for entropy)
    #[arg(long, default_value_t = DEFAULT_SEED, value_parser = parse_seed)]
    seed: u64,
    /// Write the JSON result here instead of stdout
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Keep the full null distance vector in the result
    #[arg(long)]
    include_null: bool,
}

#[derive(clap::Args)]
struct PowerArgs {
    /// Law of the first sample
    #[arg(long)]
    p: f64,
    /// Law of the second sample
    #[arg(long)]
    pstar: f64,
    /// Per-sample size (repeatable; one table column per value)
    #[arg(long = "n", default_values_t = [31, 51, 101, 151, 201])]
    sample_sizes: Vec<usize>,
    /// Number of independent test pairs per cell
    #[arg(long, default_value_t = 1000)]
    tests: usize,
    /// Number of Monte Carlo null replicates
    #[arg(long = "N", default_value_t = 1000)]
    num_permutations: usize,
    /// Significance level (repeatable; one table row per value)
    #[arg(long = "alpha", default_values_t = [0.10, 0.05, 0.01])]
    alphas: Vec<f64>,
    /// Maximum generation, root included
    #[arg(long, default_value_t = 12)]
    depth: u32,
    /// Weight base of the metric
    #[arg(long, default_value_t = 0.36)]
    z: f64,
    /// Null construction: mixture|permute
    #[arg(long, default_value = "mixture")]
    null_mode: NullMode,
    /// Mean tie rule: minimal|maximal
    #[arg(long, default_value = "maximal")]
    tie_rule: TieRule,
    /// Seed (unsigned integer, or 'random' for entropy)
    #[arg(long, default_value_t = DEFAULT_SEED, value_parser = parse_seed)]
    seed: u64,
    /// Write the CSV (or JSON) table here instead of stdout
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct PstArgs {
    /// Input FASTA file of amino-acid sequences
    #[arg(long, value_name = "FILE")]
    fasta: PathBuf,
    /// Maximum context length (trees reach generation L+1)
    #[arg(long = "L", default_value_t = 3)]
    max_context_length: u32,
    /// Weight base of the metric
    #[arg(long, default_value_t = 0.36)]
    z: f64,
    /// Minimum empirical frequency for a candidate context
    #[arg(long, default_value_t = 0.001)]
    p_min: f64,
    /// Likelihood-ratio retention threshold
    #[arg(long, default_value_t = 1.05)]
    r: f64,
    /// Smoothing floor for the witnessing symbol
    #[arg(long, default_value_t = 0.001)]
    gamma_min: f64,
    /// Additive smoothing weight (0 = maximum likelihood)
    #[arg(long, default_value_t = 0.0)]
    alpha_s: f64,
    /// Drop records with non-standard residues instead of failing
    #[arg(long)]
    skip_unknown: bool,
    /// Output sample file
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(clap::Args)]
struct PairwiseArgs {
    /// Sample files to compare (at least two)
    #[arg(long, num_args = 2.., value_name = "FILE")]
    samples: Vec<PathBuf>,
    /// Family-wise level; each pair is tested at overall_alpha / C(K,2)
    #[arg(long, default_value_t = 0.05)]
    overall_alpha: f64,
    /// Number of permutation replicates per pair
    #[arg(long = "N", default_value_t = 1000)]
    num_permutations: usize,
    /// Mean tie rule: minimal|maximal
    #[arg(long, default_value = "maximal")]
    tie_rule: TieRule,
    /// Also split each sample in half and test it against itself
    #[arg(long)]
    diagonal: bool,
    /// Seed (unsigned integer, or 'random' for entropy)
    #[arg(long, default_value_t = DEFAULT_SEED, value_parser = parse_seed)]
    seed: u64,
    /// Write the JSON matrix here as well
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

fn parse_seed(s: &str) -> std::result::Result<u64, String> {
    if s == "random" {
        Ok(rand::random())
    } else {
        s.parse::<u64>()
            .map_err(|e| format!("expected an unsigned integer or 'random': {e}"))
    }
}

/// Values from the config file for flags the user did not set explicitly.
struct Overrides<'a> {
    matches: &'a ArgMatches,
    values: HashMap<String, String>,
}

impl Overrides<'_> {
    /// `arg_id` is the clap field id, `key` the config-file key.
    fn resolve<T>(&self, arg_id: &str, key: &str, from_flags: T) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        if self.matches.value_source(arg_id) == Some(ValueSource::CommandLine) {
            return Ok(from_flags);
        }
        match self.values.get(key) {
            Some(raw) => raw.parse::<T>().map_err(|e| {
                Error::InvalidParameter(format!("config entry {key}={raw}: {e}"))
            }),
            None => Ok(from_flags),
        }
    }

    fn resolve_alphas(&self, arg_id: &str, key: &str, from_flags: Vec<f64>) -> Result<Vec<f64>> {
        if self.matches.value_source(arg_id) == Some(ValueSource::CommandLine) {
            return Ok(from_flags);
        }
        match self.values.get(key) {
            Some(raw) => raw
                .split(',')
                .map(|part| {
                    part.trim().parse::<f64>().map_err(|e| {
                        Error::InvalidParameter(format!("config entry {key}={raw}: {e}"))
                    })
                })
                .collect(),
            None => Ok(from_flags),
        }
    }
}

fn main() {
    let matches = match Cli::command().try_get_matches() {
        Ok(matches) => matches,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let cli = Cli::from_arg_matches(&matches).expect("matches come from Cli::command()");
    if let Err(e) = dispatch(cli, &matches) {
        eprintln!("error: {e}");
        std::process::exit(2);
    }
}

fn dispatch(cli: Cli, matches: &ArgMatches) -> Result<()> {
    let mut values = HashMap::new();
    if let Some(path) = &cli.config {
        for (key, value) in read_key_value_config(path)? {
            values.insert(key, value);
        }
    }
    let threads = Overrides {
        matches,
        values: values.clone(),
    }
    .resolve("threads", "threads", cli.threads)?;
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    }
    let (_, sub_matches) = matches
        .subcommand()
        .expect("a subcommand is required by clap");
    let overrides = Overrides {
        matches: sub_matches,
        values,
    };
    match cli.command {
        Command::SimulateGw(args) => cmd_simulate_gw(args, &overrides),
        Command::MeanTree(args) => cmd_mean_tree(args, &overrides, cli.json),
        Command::Distance(args) => cmd_distance(args, cli.json),
        Command::Test(args) => cmd_test(args, &overrides),
        Command::Power(args) => cmd_power(args, &overrides, cli.json),
        Command::Pst(args) => cmd_pst(args, &overrides),
        Command::Pairwise(args) => cmd_pairwise(args, &overrides, cli.json),
    }
}

fn cmd_simulate_gw(args: SimulateGwArgs, overrides: &Overrides) -> Result<()> {
    let depth = overrides.resolve("depth", "depth", args.depth)?;
    let z = overrides.resolve("z", "z", args.z)?;
    let seed = overrides.resolve("seed", "seed", args.seed)?;
    let params = GwParams::new(args.p, depth, seed)?;
    let sample = sample_gw_sample(&params, args.n, z)?;
    let ids: Vec<String> = (0..args.n).map(|i| format!("t{i}")).collect();
    let provenance = format!(
        "simulate-gw p={} n={} depth={depth} z={z} seed={seed}",
        args.p, args.n
    );
    write_sample(&sample, &ids, &provenance, &args.out)
}

fn cmd_mean_tree(args: MeanTreeArgs, overrides: &Overrides, json: bool) -> Result<()> {
    let rule = overrides.resolve("rule", "tie_rule", args.rule)?;
    let file = read_sample(&args.sample)?;
    let mean = empirical_mean(&file.sample)?;
    if json {
        let out = serde_json::json!({
            "minimal": mean.minimal.tokens(),
            "maximal": mean.maximal.tokens(),
            "unique": mean.is_unique(),
            "selected": mean.select(rule).tokens(),
        });
        println!("{}", serde_json::to_string_pretty(&out).expect("serializable"));
    } else {
        println!("{}", mean.select(rule).tokens());
    }
    Ok(())
}

fn cmd_distance(args: DistanceArgs, json: bool) -> Result<()> {
    let a = read_sample(&args.a)?;
    let b = read_sample(&args.b)?;
    if a.sample.config() != b.sample.config() {
        return Err(Error::ConfigMismatch(format!(
            "{} and {} use different headers",
            args.a.display(),
            args.b.display()
        )));
    }
    let fetch = |file: &treetest::io::SampleFile, idx: usize, name: &Path| {
        file.sample.trees().get(idx).cloned().ok_or_else(|| {
            Error::InvalidParameter(format!(
                "index {idx} out of range for {} ({} records)",
                name.display(),
                file.sample.len()
            ))
        })
    };
    let t = fetch(&a, args.index[0], &args.a)?;
    let y = fetch(&b, args.index[1], &args.b)?;
    let d = distance(&t, &y, a.sample.config())?;
    if json {
        println!(
            "{}",
            serde_json::json!({ "distance": d, "a": t.tokens(), "b": y.tokens() })
        );
    } else {
        println!("{d:.6}");
    }
    Ok(())
}

fn cmd_test(args: TestArgs, overrides: &Overrides) -> Result<()> {
    let cfg = TestConfig {
        num_permutations: overrides.resolve("num_permutations", "N", args.num_permutations)?,
        alphas: overrides.resolve_alphas("alphas", "alpha", args.alphas)?,
        tie_rule: overrides.resolve("tie_rule", "tie_rule", args.tie_rule)?,
        seed: overrides.resolve("seed", "seed", args.seed)?,
    };
    let s1 = read_sample(&args.sample1)?;
    let s2 = read_sample(&args.sample2)?;
    let result = run_test(&s1.sample, &s2.sample, &cfg)?;
    match &args.out {
        Some(path) => write_test_result(&result, path, args.include_null),
        None => {
            let mut stdout = std::io::stdout().lock();
            write_test_result_to(&mut stdout, &result, args.include_null)
        }
    }
}

fn cmd_power(args: PowerArgs, overrides: &Overrides, json: bool) -> Result<()> {
    let cfg = TestConfig {
        num_permutations: overrides.resolve("num_permutations", "N", args.num_permutations)?,
        alphas: overrides.resolve_alphas("alphas", "alpha", args.alphas)?,
        tie_rule: overrides.resolve("tie_rule", "tie_rule", args.tie_rule)?,
        seed: overrides.resolve("seed", "seed", args.seed)?,
    };
    let depth = overrides.resolve("depth", "depth", args.depth)?;
    let z = overrides.resolve("z", "z", args.z)?;
    let null_mode = overrides.resolve("null_mode", "null_mode", args.null_mode)?;
    let tests = overrides.resolve("tests", "tests", args.tests)?;

    // one column per sample size, rows by alpha as in the published table
    let mut columns = Vec::new();
    for &n in &args.sample_sizes {
        let study = PowerStudy {
            p: args.p,
            p_star: args.pstar,
            sample_size: n,
            z,
            max_depth: depth,
            num_tests: tests,
            null_mode,
        };
        columns.push(power_study(&study, &cfg)?);
    }

    let rendered = if json {
        let rows: Vec<serde_json::Value> = cfg
            .alphas
            .iter()
            .enumerate()
            .map(|(row, alpha)| {
                let cells: Vec<serde_json::Value> = args
                    .sample_sizes
                    .iter()
                    .zip(&columns)
                    .map(|(n, col)| {
                        serde_json::json!({ "n": n, "rejection_pct": col[row].1 })
                    })
                    .collect();
                serde_json::json!({ "alpha": alpha, "cells": cells })
            })
            .collect();
        format!(
            "{}\n",
            serde_json::to_string_pretty(&serde_json::json!({
                "p": args.p,
                "pstar": args.pstar,
                "tests": tests,
                "rows": rows,
            }))
            .expect("serializable")
        )
    } else {
        let mut out = String::from("alpha");
        for n in &args.sample_sizes {
            out.push_str(&format!(",n={n}"));
        }
        out.push('\n');
        for (row, alpha) in cfg.alphas.iter().enumerate() {
            out.push_str(&treetest::permtest::alpha_key(*alpha));
            for col in &columns {
                out.push_str(&format!(",{:.1}", col[row].1));
            }
            out.push('\n');
        }
        out
    };
    match &args.out {
        Some(path) => std::fs::write(path, rendered).map_err(Error::from),
        None => {
            print!("{rendered}");
            Ok(())
        }
    }
}

fn cmd_pst(args: PstArgs, overrides: &Overrides) -> Result<()> {
    let params = PstParams {
        max_context_length: overrides.resolve("max_context_length", "L", args.max_context_length)?,
        p_min: overrides.resolve("p_min", "p_min", args.p_min)?,
        r: overrides.resolve("r", "r", args.r)?,
        gamma_min: overrides.resolve("gamma_min", "gamma_min", args.gamma_min)?,
        alpha_s: overrides.resolve("alpha_s", "alpha_s", args.alpha_s)?,
    };
    let z = overrides.resolve("z", "z", args.z)?;
    let policy = if args.skip_unknown {
        UnknownResiduePolicy::SkipRecord
    } else {
        UnknownResiduePolicy::Error
    };
    let import = trees_from_fasta(&args.fasta, z, &params, policy)?;
    for reason in &import.skipped {
        eprintln!("warning: skipped {reason}");
    }
    let provenance = format!(
        "pst fasta={} L={} p_min={} r={} gamma_min={} alpha_s={} z={z}",
        args.fasta
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| args.fasta.display().to_string()),
        params.max_context_length,
        params.p_min,
        params.r,
        params.gamma_min,
        params.alpha_s,
    );
    write_sample(&import.sample, &import.ids, &provenance, &args.out)
}

fn cmd_pairwise(args: PairwiseArgs, overrides: &Overrides, json: bool) -> Result<()> {
    let cfg = TestConfig {
        num_permutations: overrides.resolve("num_permutations", "N", args.num_permutations)?,
        tie_rule: overrides.resolve("tie_rule", "tie_rule", args.tie_rule)?,
        seed: overrides.resolve("seed", "seed", args.seed)?,
        ..TestConfig::default()
    };
    let overall_alpha = overrides.resolve("overall_alpha", "overall_alpha", args.overall_alpha)?;
    let mut samples = Vec::new();
    let mut names = Vec::new();
    for path in &args.samples {
        let file = read_sample(path)?;
        samples.push(file.sample);
        names.push(
            path.file_stem()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string()),
        );
    }
    let result = pairwise_family_tests(&samples, &names, &cfg, overall_alpha, args.diagonal)?;
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&result).expect("serializable")
        );
    } else {
        print!("{}", format_pairwise_table(&result));
    }
    if let Some(path) = &args.out {
        let text = serde_json::to_string_pretty(&result).expect("serializable");
        std::fs::write(path, text + "\n")?;
    }
    Ok(())
}
