use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid region set: {0}")]
    InvalidRegion(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid grid data: {0}")]
    InvalidGridData(String),
    #[error("vocabulary is empty after applying min_count={min_count} ({distinct} distinct tokens seen)")]
    EmptyVocabulary { min_count: u64, distinct: usize },
    #[error("no {side} seed word is present in the graph")]
    MissingSeeds { side: &'static str },
    #[error("seed sets overlap on token {0:?}")]
    OverlappingSeeds(String),
    #[error("random walk did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("tag token {tag:?} already occurs in record {record:?}")]
    TagCollision { tag: String, record: String },
    #[error("too few records: {got} < {need}")]
    TooFewRecords { got: usize, need: usize },
    #[error("tag token {0:?} is missing from the vocabulary; lower min_count for tags")]
    MissingTag(String),
    #[error("lexicons share no tokens")]
    EmptyJoin,
    #[error("zero variance: {0}")]
    ZeroVariance(String),
    #[error("empty input: {0}")]
    EmptyInput(String),
}
