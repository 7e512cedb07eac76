use thiserror::Error;

use crate::rules::RuleId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid definition: {0}")]
    InvalidDefinition(String),

    #[error("symbol {symbol:?} is not in the alphabet")]
    UnknownSymbol { symbol: char },

    #[error("unknown rule {0}")]
    UnknownRule(RuleId),

    #[error("precondition {precondition:?} of {rule} does not occur in {memory:?}")]
    NoMatch {
        rule: RuleId,
        precondition: String,
        memory: String,
    },

    #[error("rule set is not reversible: {pairs:?} share an action")]
    NotReversible { pairs: Vec<(RuleId, RuleId)> },

    #[error("transition is not deterministic: symbol {symbol:?} has several quadruples")]
    NotDeterministic { symbol: char },

    #[error("output tape is not blank at cell {cell}")]
    OutputNotBlank { cell: usize },

    #[error("inverse of {rule} cannot be applied: {precondition:?} absent from {memory:?}")]
    InverseNoMatch {
        rule: RuleId,
        precondition: String,
        memory: String,
    },

    #[error("machine is not ready for this phase: {0}")]
    Phase(String),

    #[error("reversible run diverged from the forward run: {0}")]
    VerificationFailed(String),

    #[error("control table is not normalized for condition {condition:?} (sum {sum})")]
    NotNormalized { condition: String, sum: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("dense export needs {size}x{size} entries, limit is {limit}")]
    TooLarge { size: usize, limit: usize },

    #[error("{count} states do not fit in {bits} bits")]
    EncodingOverflow { count: usize, bits: u32 },

    #[error("x code {0} does not decode to a state")]
    DecodeFailure(usize),

    #[error("register needs {qubits} qubits, simulator limit is {limit}")]
    TooManyQubits { qubits: u32, limit: u32 },

    #[error("malformed {what}: {message}")]
    Format { what: &'static str, message: String },
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn format(what: &'static str, message: impl ToString) -> Self {
        Error::Format {
            what,
            message: message.to_string(),
        }
    }
}
