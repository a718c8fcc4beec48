use thiserror::Error;

use crate::ordinal::SmallOrdinal;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("period {period} exceeds the configured cap {cap}")]
    PeriodOverflow { period: u128, cap: u64 },
    #[error("threshold {threshold} exceeds the configured cap {cap}")]
    ThresholdOverflow { threshold: u128, cap: u64 },
    #[error("arithmetic overflow while computing {0}")]
    ValueOverflow(&'static str),
    #[error("malformed input: {0}")]
    MalformedInput(String),
    #[error("syntax error at position {position}: {message}")]
    SyntaxError { position: usize, message: String },
    #[error("{0} is not a limit ordinal")]
    NotALimit(SmallOrdinal),
    #[error("map is not injective: {0}")]
    NotInjective(String),
    #[error("inverse is not representable: {0}")]
    NotRepresentable(String),
    #[error("unbound variable x{0}")]
    UnboundVariable(usize),
    #[error("arity mismatch: {0}")]
    ArityMismatch(String),
    #[error("environment has no value for level {0}")]
    MissingLevel(u32),
    #[error("term has rank {rank}, expected at most {max}")]
    RankTooHigh { rank: u32, max: u32 },
    #[error("stage {stage} exceeds the stage cap {cap}")]
    StageCapExceeded { stage: SmallOrdinal, cap: SmallOrdinal },
    #[error("no successor-stage representative for a thread at stage {0}")]
    NoRepresentative(SmallOrdinal),
    #[error("invalid representative: {0}")]
    InvalidRepresentative(String),
    #[error("diagram {diagram} does not commute at {witness}")]
    DiagramViolation { diagram: String, witness: String },
    #[error("{0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn malformed(msg: impl Into<String>) -> Self {
        Error::MalformedInput(msg.into())
    }
}
