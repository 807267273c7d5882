use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown variable `{name}` at byte {pos}")]
    UnknownVariable { pos: usize, name: String },
    #[error("variable x{0} has no assigned matrix")]
    UnassignedVariable(u32),
    #[error("{0} is not a prime below 2^63")]
    NotPrime(u64),
    #[error("expected a square matrix, got {0}x{1}")]
    NotSquare(usize, usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("no gate in the splitter window (size {0})")]
    NoSplitter(u64),
    #[error("inverse gate in a formula that must be division-free")]
    InverseGate,
    #[error("distinguished variable x{var} occurs {count} times")]
    MultipleOccurrence { var: u32, count: u64 },
    #[error("oracle inconsistency at `{0}`")]
    OracleInconsistency(String),
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("commutator oracle is bounded to n <= 16, got {0}")]
    CommutatorTooLarge(usize),
    #[error("format error on line {line}: {msg}")]
    Format { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
