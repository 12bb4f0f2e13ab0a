//! FASTA ingestion for amino-acid sequences.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};
use crate::vlmc::Sequence;

/// The 20 standard amino acids; letter i (0-based) maps to symbol i+1.
/// The table is fixed so trees estimated in different runs stay comparable.
pub const AMINO_ACIDS: &str = "ACDEFGHIKLMNPQRSTVWY";

/// Symbol in 1..=20 for a standard residue, `None` for anything else
/// (B, Z, X, U, O, gaps, ...). Lower case is accepted.
pub fn residue_symbol(residue: char) -> Option<u8> {
    AMINO_ACIDS
        .find(residue.to_ascii_uppercase())
        .map(|i| i as u8 + 1)
}

/// One raw FASTA record.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FastaRecord {
    pub id: String,
    pub residues: String,
}

/// Reads all records of a FASTA file. The id is the header up to the first
/// whitespace. A file without any record is an error.
pub fn read_fasta(path: &Path) -> Result<Vec<FastaRecord>> {
    let file = File::open(path).map_err(|source| Error::File {
        path: path.display().to_string(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    let mut current: Option<FastaRecord> = None;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('>') {
            if let Some(rec) = current.take() {
                records.push(rec);
            }
            let id = header.split_whitespace().next().unwrap_or("").to_string();
            if id.is_empty() {
                return Err(Error::Parse {
                    line: lineno + 1,
                    reason: "empty FASTA header".to_string(),
                });
            }
            current = Some(FastaRecord {
                id,
                residues: String::new(),
            });
        } else {
            match current.as_mut() {
                Some(rec) => rec.residues.push_str(line.trim()),
                None => {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        reason: "sequence data before any '>' header".to_string(),
                    })
                }
            }
        }
    }
    if let Some(rec) = current.take() {
        records.push(rec);
    }
    if records.is_empty() {
        return Err(Error::Parse {
            line: 0,
            reason: "FASTA file contains no records".to_string(),
        });
    }
    Ok(records)
}

/// Translates a record into a symbol sequence over the amino-acid alphabet.
/// Non-standard residues are rejected, not remapped: silent substitutions
/// would corrupt the context statistics.
pub fn sequence_from_record(record: &FastaRecord) -> Result<Sequence> {
    let mut symbols = Vec::with_capacity(record.residues.len());
    for (i, c) in record.residues.chars().enumerate() {
        match residue_symbol(c) {
            Some(s) => symbols.push(s),
            None => {
                return Err(Error::UnknownResidue {
                    record: record.id.clone(),
                    residue: c,
                    position: i + 1,
                })
            }
        }
    }
    Ok(Sequence::new(record.id.clone(), symbols))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn parses_multi_line_records() {
        let f = write_temp(">seq1 some description\nACDE\nFGHI\n>seq2\nKLMN\n");
        let records = read_fasta(f.path()).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].id, "seq1");
        assert_eq!(records[0].residues, "ACDEFGHI");
        assert_eq!(records[1].id, "seq2");
        assert_eq!(records[1].residues, "KLMN");
    }

    #[test]
    fn empty_file_is_an_error() {
        let f = write_temp("");
        assert!(matches!(read_fasta(f.path()), Err(Error::Parse { .. })));
    }

    #[test]
    fn data_before_header_is_an_error() {
        let f = write_temp("ACDE\n>seq1\nACDE\n");
        assert!(read_fasta(f.path()).is_err());
    }

    #[test]
    fn residue_mapping_covers_the_table() {
        assert_eq!(residue_symbol('A'), Some(1));
        assert_eq!(residue_symbol('C'), Some(2));
        assert_eq!(residue_symbol('Y'), Some(20));
        assert_eq!(residue_symbol('a'), Some(1));
        for bad in ['X', 'B', 'Z', 'U', 'O', '-', '*'] {
            assert_eq!(residue_symbol(bad), None, "residue {bad}");
        }
    }

    #[test]
    fn unknown_residue_is_reported_with_position() {
        let record = FastaRecord {
            id: "seq1".to_string(),
            residues: "ACXDE".to_string(),
        };
        match sequence_from_record(&record) {
            Err(Error::UnknownResidue {
                record,
                residue,
                position,
            }) => {
                assert_eq!(record, "seq1");
                assert_eq!(residue, 'X');
                assert_eq!(position, 3);
            }
            other => panic!("expected UnknownResidue, got {other:?}"),
        }
    }
}
