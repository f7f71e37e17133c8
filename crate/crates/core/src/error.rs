use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while building lattices, frequency sets, propagators and
/// experiment runs.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed lattice: {0}")]
    MalformedLattice(String),

    #[error("modulus n_{next} = {next_modulus} does not divide n_{prev} = {prev_modulus}")]
    NonDivisibleModuli {
        prev: usize,
        next: usize,
        prev_modulus: i64,
        next_modulus: i64,
    },

    #[error("component {coordinate} of generator {column} ({value}) is not coprime to its modulus {modulus}")]
    NonCoprimeComponent {
        column: usize,
        coordinate: usize,
        value: i64,
        modulus: i64,
    },

    #[error("generating vectors are linearly dependent over the rationals")]
    RankDeficientGenerators,

    #[error("generators and moduli describe {actual} distinct points, expected {expected}")]
    PointCountMismatch { expected: u64, actual: u64 },

    #[error("lattice coordinates would overflow 64-bit integer arithmetic")]
    OverflowRisk,

    #[error("generating vector component {value} is not coprime to n = {modulus}")]
    NonCoprime { value: i64, modulus: i64 },

    #[error("frequency search hit radius cap {cap} with {filled} of {total} residues filled")]
    RadiusExhausted { cap: f64, filled: usize, total: usize },

    #[error("fields or operators were built on different lattices")]
    SpecMismatch,

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("function has zero or non-finite L2 norm")]
    NonNormalizable,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("reference lattice too coarse: n_ref = {reference} must be at least 16 times n = {finest}")]
    ReferenceTooCoarse { reference: usize, finest: usize },

    #[error("numerical invariant violated: {0}")]
    InvariantViolation(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
