//! Code description and construction: degree distributions, finite-length
//! degree sequences, PEG graphs, GF edge weights, syndromes and the on-disk
//! format.

pub mod degree;
pub mod format;
pub mod matrix;
pub mod peg;
pub mod realize;

use rand::Rng;
use thiserror::Error;

use crate::gf::GfError;

pub use degree::{
    concentrated_rho, validate_lambda, CheckedLambda, DegreeDistribution, EdgeDistribution, LambdaPolicy, RawTerms,
};
pub use format::{parse_code, read_code_file, serialize_code, write_code_file, FormatError};
pub use matrix::{assign_edge_weights, SparseParityCheck, Syndrome};
pub use peg::{peg_construct, TannerGraph};
pub use realize::{check_count, realize_degree_sequences, DegreeSequences};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodeError {
    #[error("negative or non-finite coefficient {value} for degree {degree}")]
    NegativeCoefficient { degree: usize, value: f64 },
    #[error("coefficients sum to {sum}, more than {tolerance} away from 1")]
    SumMismatch { sum: f64, tolerance: f64 },
    #[error("degree {degree} exceeds the maximum {max}")]
    DegreeTooLarge { degree: usize, max: usize },
    #[error("variable degree {0} is below 2")]
    DegreeTooSmall(usize),
    #[error("{count} distinct degrees exceed the sparsity limit {max}")]
    TooManyDegrees { count: usize, max: usize },
    #[error("degree distribution is empty")]
    EmptyDistribution,
    #[error("design rate {0} outside (0, 1)")]
    InvalidRate(f64),
    #[error("required average check degree {0} is below 2")]
    CheckDegreeTooSmall(f64),
    #[error("required average check degree {0} is unreasonably large")]
    CheckDegreeTooLarge(f64),
    #[error("cannot parse degree distribution: {0}")]
    Parse(String),
    #[error("infeasible construction: {0}")]
    Infeasible(String),
    #[error("variable side has {var} edges, check side {chk}")]
    EdgeCountMismatch { var: usize, chk: usize },
    #[error("no eligible check for edge {edge} of variable {var}")]
    PlacementImpossible { var: usize, edge: usize },
    #[error("row {row}: column {col} out of range for n={n}")]
    ColumnOutOfRange { row: usize, col: usize, n: usize },
    #[error("row {row}: duplicate column {col}")]
    DuplicateEntry { row: usize, col: usize },
    #[error("row {row}, column {col}: weight {weight} is not a nonzero element of GF({q})")]
    WeightOutOfRange {
        row: usize,
        col: usize,
        weight: usize,
        q: usize,
    },
    #[error("row {0} has no entries")]
    EmptyRow(usize),
    #[error("column {0} has no entries")]
    EmptyColumn(usize),
    #[error("dense row {row} has the wrong length")]
    RaggedDense { row: usize },
    #[error("word length {found}, expected {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("symbol {symbol} at position {position} is not an element of GF({q})")]
    SymbolOutOfRange { position: usize, symbol: usize, q: usize },
    #[error(transparent)]
    Field(#[from] GfError),
}

/// Summary of a freshly built code.
#[derive(Debug, Clone)]
pub struct ConstructedCode {
    pub code: SparseParityCheck,
    pub sequences: DegreeSequences,
    pub girth: Option<usize>,
}

/// Degree sequences, PEG and edge weights in one go, all drawn from `rng`.
pub fn construct_code<R: Rng + ?Sized>(
    dist: &DegreeDistribution,
    q: usize,
    n: usize,
    rng: &mut R,
) -> Result<ConstructedCode, CodeError> {
    let m = check_count(n, dist.design_rate())?;
    let sequences = realize_degree_sequences(dist, n, m, rng)?;
    let graph = peg_construct(&sequences.var, &sequences.chk, rng)?;
    let girth = graph.girth();
    let code = assign_edge_weights(&graph, q, rng)?;
    Ok(ConstructedCode { code, sequences, girth })
}
