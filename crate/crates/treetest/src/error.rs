use thiserror::Error;

/// Errors produced by tree validation, sampling, estimation and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("node {node}: symbol {symbol} outside alphabet 1..={alphabet_size}")]
    SymbolOutOfRange {
        node: String,
        symbol: u8,
        alphabet_size: u8,
    },

    #[error("node {node}: father {father} missing from node set")]
    FatherMissing { node: String, father: String },

    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),

    #[error("sample is empty")]
    EmptySample,

    #[error("sequence {id}: length {len} too short, need more than {min} symbols")]
    SequenceTooShort { id: String, len: usize, min: usize },

    #[error("no matching context for past ending in {0}")]
    NoMatchingContext(String),

    #[error("record {record}: unknown residue '{residue}' at position {position}")]
    UnknownResidue {
        record: String,
        residue: char,
        position: usize,
    },

    #[error("bad token '{token}': {reason}")]
    Token { token: String, reason: String },

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
