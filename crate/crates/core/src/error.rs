use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported order {0}")]
    UnsupportedOrder(usize),
    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: u64, limit: u64 },
    #[error("unknown channel `{0}`")]
    UnknownChannel(String),
    #[error("invalid correlation coefficient {0}; expected 0 <= rho < 1")]
    InvalidCorrelation(f64),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("work estimate {requested} exceeds budget {budget}")]
    BudgetExceeded { requested: f64, budget: f64 },
    #[error("integer overflow computing {0}")]
    Overflow(&'static str),
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("invalid group size {group_size} for {n} subchannels")]
    InvalidGroupSize { group_size: usize, n: usize },
    #[error("group {group} exceeds evaluation budget: {source}")]
    GroupBudgetExceeded {
        group: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
