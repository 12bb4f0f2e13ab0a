//! Deterministic text serialization: tree sample files, test-result JSON
//! and key=value configuration files.
//!
//! Sample file format, one tree per record:
//!
//! ```text
//! m=2 z=0.36 depth=12 alphabet=12 provenance=simulate-gw p=0.5
//! t0 @ 1 2 12
//! t1 @
//! t2
//! ```
//!
//! The root token is `@`; an empty token list is the empty tree. Node
//! tokens are concatenated digits for alphabets up to 9 symbols and
//! dot-separated integers beyond that. Writing then reading a file (or the
//! reverse) reproduces it byte for byte.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::fasta::AMINO_ACIDS;
use crate::mean::TreeSample;
use crate::permtest::TestResult;
use crate::tree::Tree;
use crate::weights::WeightConfig;

fn open_file(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| Error::File {
        path: path.display().to_string(),
        source,
    })
}

fn create_file(path: &Path) -> Result<File> {
    File::create(path).map_err(|source| Error::File {
        path: path.display().to_string(),
        source,
    })
}

/// A parsed sample file.
#[derive(Clone, Debug)]
pub struct SampleFile {
    pub sample: TreeSample,
    pub ids: Vec<String>,
    pub provenance: String,
}

/// Default alphabet table for a header: digits for small alphabets, the
/// amino-acid code for m=20, unspecified otherwise.
pub fn default_alphabet_table(alphabet_size: u8) -> String {
    if alphabet_size <= 9 {
        (1..=alphabet_size).map(|s| (b'0' + s) as char).collect()
    } else if alphabet_size as usize == AMINO_ACIDS.len() {
        AMINO_ACIDS.to_string()
    } else {
        "-".to_string()
    }
}

/// Writes a sample in the tree text format; `ids` must match the sample
/// length and contain no whitespace.
pub fn write_sample(sample: &TreeSample, ids: &[String], provenance: &str, path: &Path) -> Result<()> {
    let file = create_file(path)?;
    let mut writer = BufWriter::new(file);
    write_sample_to(&mut writer, sample, ids, provenance)?;
    writer.flush()?;
    Ok(())
}

pub fn write_sample_to(
    out: &mut impl Write,
    sample: &TreeSample,
    ids: &[String],
    provenance: &str,
) -> Result<()> {
    if ids.len() != sample.len() {
        return Err(Error::InvalidParameter(format!(
            "{} ids for {} trees",
            ids.len(),
            sample.len()
        )));
    }
    for id in ids {
        if id.is_empty() || id.chars().any(|c| c.is_whitespace()) {
            return Err(Error::InvalidParameter(format!(
                "record id '{id}' must be non-empty and free of whitespace"
            )));
        }
    }
    let config = sample.config();
    writeln!(
        out,
        "m={} z={} depth={} alphabet={} provenance={}",
        config.alphabet_size(),
        config.z(),
        config.max_depth(),
        default_alphabet_table(config.alphabet_size()),
        if provenance.is_empty() { "-" } else { provenance },
    )?;
    for (id, tree) in ids.iter().zip(sample.trees()) {
        let tokens = tree.tokens();
        if tokens.is_empty() {
            writeln!(out, "{id}")?;
        } else {
            writeln!(out, "{id} {tokens}")?;
        }
    }
    Ok(())
}

/// Reads and validates a sample file.
pub fn read_sample(path: &Path) -> Result<SampleFile> {
    let file = open_file(path)?;
    read_sample_from(BufReader::new(file))
}

pub fn read_sample_from(reader: impl BufRead) -> Result<SampleFile> {
    let mut lines = reader.lines().enumerate();
    let (header_line, header) = loop {
        match lines.next() {
            Some((i, line)) => {
                let line = line?;
                if !line.trim().is_empty() {
                    break (i + 1, line);
                }
            }
            None => {
                return Err(Error::Parse {
                    line: 0,
                    reason: "missing header line".to_string(),
                })
            }
        }
    };
    let config = parse_header(&header, header_line)?;
    let provenance = header
        .split_once("provenance=")
        .map(|(_, rest)| rest.trim().to_string())
        .unwrap_or_else(|| "-".to_string());

    let mut trees = Vec::new();
    let mut ids = Vec::new();
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let id = parts.next().expect("non-empty line").to_string();
        let rest: Vec<&str> = parts.collect();
        let tree = Tree::parse_tokens(&rest.join(" "), config.alphabet_size()).map_err(|e| {
            Error::Parse {
                line: i + 1,
                reason: format!("record {id}: {e}"),
            }
        })?;
        config.admits(&tree).map_err(|e| Error::Parse {
            line: i + 1,
            reason: format!("record {id}: {e}"),
        })?;
        trees.push(tree);
        ids.push(id);
    }
    Ok(SampleFile {
        sample: TreeSample::new(trees, config)?,
        ids,
        provenance,
    })
}

fn parse_header(header: &str, line: usize) -> Result<WeightConfig> {
    let bad = |reason: String| Error::Parse { line, reason };
    let mut m = None;
    let mut z = None;
    let mut depth = None;
    let mut alphabet = None;
    for field in header.split_whitespace() {
        let Some((key, value)) = field.split_once('=') else {
            return Err(bad(format!("malformed header field '{field}'")));
        };
        match key {
            "m" => {
                m = Some(value.parse::<u8>().map_err(|_| {
                    bad(format!("alphabet size '{value}' is not an integer"))
                })?)
            }
            "z" => {
                z = Some(
                    value
                        .parse::<f64>()
                        .map_err(|_| bad(format!("weight base '{value}' is not a number")))?,
                )
            }
            "depth" => {
                depth = Some(value.parse::<u32>().map_err(|_| {
                    bad(format!("depth '{value}' is not an integer"))
                })?)
            }
            "alphabet" => alphabet = Some(value.to_string()),
            "provenance" => break, // free-form tail, parsed separately
            other => return Err(bad(format!("unknown header key '{other}'"))),
        }
    }
    let m = m.ok_or_else(|| bad("header is missing m=".to_string()))?;
    let z = z.ok_or_else(|| bad("header is missing z=".to_string()))?;
    let depth = depth.ok_or_else(|| bad("header is missing depth=".to_string()))?;
    if let Some(table) = alphabet {
        if table != "-" && table.chars().count() != m as usize {
            return Err(bad(format!(
                "alphabet table '{table}' does not have {m} entries"
            )));
        }
    }
    WeightConfig::new(m, z, depth)
}

/// Writes a test result as JSON. With `include_null` unset the (possibly
/// long) null distance vector is omitted from the file.
pub fn write_test_result(result: &TestResult, path: &Path, include_null: bool) -> Result<()> {
    let file = create_file(path)?;
    let mut writer = BufWriter::new(file);
    write_test_result_to(&mut writer, result, include_null)?;
    writer.flush()?;
    Ok(())
}

pub fn write_test_result_to(
    out: &mut impl Write,
    result: &TestResult,
    include_null: bool,
) -> Result<()> {
    let mut result = result.clone();
    if !include_null {
        result.null_distances.clear();
    }
    serde_json::to_writer_pretty(&mut *out, &result)
        .map_err(|e| Error::Parse {
            line: 0,
            reason: format!("serializing test result: {e}"),
        })?;
    writeln!(out)?;
    Ok(())
}

pub fn read_test_result(path: &Path) -> Result<TestResult> {
    let mut text = String::new();
    open_file(path)?.read_to_string(&mut text)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        reason: format!("parsing test result: {e}"),
    })
}

/// Reads a key=value configuration file; '#' starts a comment and blank
/// lines are ignored. Later occurrences of a key win. Command line flags
/// override anything read here.
pub fn read_key_value_config(path: &Path) -> Result<Vec<(String, String)>> {
    let reader = BufReader::new(open_file(path)?);
    let mut pairs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse {
                line: i + 1,
                reason: format!("expected key=value, got '{line}'"),
            });
        };
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gw::{sample_gw_sample, GwParams};
    use crate::permtest::{run_test, TestConfig};
    use std::io::Cursor;

    fn sample_of(tokens: &[&str]) -> (TreeSample, Vec<String>) {
        let config = WeightConfig::new(2, 0.36, 4).unwrap();
        let trees: Vec<Tree> = tokens
            .iter()
            .map(|t| Tree::parse_tokens(t, 2).unwrap())
            .collect();
        let ids = (0..trees.len()).map(|i| format!("t{i}")).collect();
        (TreeSample::new(trees, config).unwrap(), ids)
    }

    fn write_to_string(sample: &TreeSample, ids: &[String], provenance: &str) -> String {
        let mut buf = Vec::new();
        write_sample_to(&mut buf, sample, ids, provenance).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn sample_file_layout() {
        let (sample, ids) = sample_of(&["@ 1 2 12 22", "@", ""]);
        let text = write_to_string(&sample, &ids, "unit");
        assert_eq!(
            text,
            "m=2 z=0.36 depth=4 alphabet=12 provenance=unit\nt0 @ 1 2 12 22\nt1 @\nt2\n"
        );
    }

    #[test]
    fn read_inverts_write() {
        let (sample, ids) = sample_of(&["@ 1 2 12 22", "@", "", "@ 2"]);
        let text = write_to_string(&sample, &ids, "unit");
        let parsed = read_sample_from(Cursor::new(text.clone())).unwrap();
        assert_eq!(parsed.ids, ids);
        assert_eq!(parsed.sample.trees(), sample.trees());
        assert_eq!(parsed.sample.config(), sample.config());
        assert_eq!(parsed.provenance, "unit");
        // and writing the parsed sample reproduces the bytes
        let round = write_to_string(&parsed.sample, &parsed.ids, &parsed.provenance);
        assert_eq!(round, text);
    }

    #[test]
    fn random_sample_round_trip_is_byte_identical() {
        let params = GwParams::new(0.7, 8, 123).unwrap();
        let sample = sample_gw_sample(&params, 1000, 0.36).unwrap();
        let ids: Vec<String> = (0..sample.len()).map(|i| format!("g{i}")).collect();
        let text = write_to_string(&sample, &ids, "gw p=0.7 seed=123");
        let parsed = read_sample_from(Cursor::new(text.clone())).unwrap();
        let again = write_to_string(&parsed.sample, &parsed.ids, &parsed.provenance);
        assert_eq!(text, again);
    }

    #[test]
    fn malformed_inputs_are_reported_with_lines() {
        // missing header
        assert!(read_sample_from(Cursor::new("")).is_err());
        // bad header field
        let err = read_sample_from(Cursor::new("m=2 z=abc depth=4\n")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        // father missing inside a record, reported with the record id
        let text = "m=2 z=0.36 depth=4 alphabet=12 provenance=-\nbad @ 12\n";
        match read_sample_from(Cursor::new(text)) {
            Err(Error::Parse { line, reason }) => {
                assert_eq!(line, 2);
                assert!(reason.contains("bad"), "reason: {reason}");
                assert!(reason.contains("father"), "reason: {reason}");
            }
            other => panic!("expected Parse error, got {other:?}"),
        }
        // record deeper than the declared depth
        let text = "m=2 z=0.36 depth=2 alphabet=12 provenance=-\nd @ 1 2 11\n";
        assert!(read_sample_from(Cursor::new(text)).is_err());
        // token outside the alphabet
        let text = "m=2 z=0.36 depth=4 alphabet=12 provenance=-\nx @ 3\n";
        assert!(read_sample_from(Cursor::new(text)).is_err());
    }

    #[test]
    fn id_validation() {
        let (sample, _) = sample_of(&["@"]);
        let mut buf = Vec::new();
        assert!(write_sample_to(&mut buf, &sample, &[], "p").is_err());
        assert!(write_sample_to(&mut buf, &sample, &["a b".to_string()], "p").is_err());
        assert!(write_sample_to(&mut buf, &sample, &["".to_string()], "p").is_err());
    }

    #[test]
    fn test_result_json_round_trip() {
        let (sample, _) = sample_of(&["@ 1", "@ 2", "@ 1 2", "@"]);
        let cfg = TestConfig {
            num_permutations: 50,
            seed: 3,
            ..TestConfig::default()
        };
        let result = run_test(&sample, &sample, &cfg).unwrap();
        assert_eq!(result.p_value, 1.0);

        let mut buf = Vec::new();
        write_test_result_to(&mut buf, &result, true).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("\"0.10\""));
        assert!(text.contains("\"0.05\""));
        assert!(text.contains("\"0.01\""));
        let parsed: TestResult = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed.observed_d, result.observed_d);
        assert_eq!(parsed.reject, result.reject);
        assert_eq!(parsed.null_distances, result.null_distances);

        // without the flag the null vector is dropped
        let mut buf = Vec::new();
        write_test_result_to(&mut buf, &result, false).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(!text.contains("null_distances"));
        let parsed: TestResult = serde_json::from_str(&text).unwrap();
        assert!(parsed.null_distances.is_empty());
        assert_eq!(parsed.q_alpha, result.q_alpha);
    }

    #[test]
    fn key_value_config_parsing() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(
            f,
            "# defaults\nz = 0.36\nseed=7 # inline comment\n\ndepth=12\nseed=8\n"
        )
        .unwrap();
        let pairs = read_key_value_config(f.path()).unwrap();
        assert_eq!(
            pairs,
            vec![
                ("z".to_string(), "0.36".to_string()),
                ("seed".to_string(), "7".to_string()),
                ("depth".to_string(), "12".to_string()),
                ("seed".to_string(), "8".to_string()),
            ]
        );

        let mut bad = tempfile::NamedTempFile::new().unwrap();
        write!(bad, "novalue\n").unwrap();
        assert!(read_key_value_config(bad.path()).is_err());
    }
}
