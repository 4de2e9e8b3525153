use thiserror::Error;

/// Errors raised by the toolkit.
///
/// Everything except [`Error::Internal`] is a precondition (guard) violation
/// and names the guard that failed.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,

    #[error("valuation of zero is undefined")]
    ZeroValuation,

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("{0} is not squarefree")]
    NotSquarefree(u64),

    #[error("{what} = {value} is out of range ({expected})")]
    OutOfRange {
        what: &'static str,
        value: String,
        expected: &'static str,
    },

    #[error("parity violation: psi(-1) = {character_sign} but (-1)^{index} = {expected_sign}")]
    Parity {
        index: i64,
        character_sign: i64,
        expected_sign: i64,
    },

    #[error("character {label} is not primitive (conductor {conductor})")]
    NotPrimitive { label: String, conductor: u64 },

    #[error("{a} and {b} are not coprime")]
    NotCoprime { a: u64, b: u64 },

    #[error("coefficient at index {index} is not {l}-integral")]
    NonIntegral { index: usize, l: u64 },

    #[error("ring mismatch: {0} vs {1}")]
    RingMismatch(String, String),

    #[error("level mismatch: spec level {spec} vs cusp level {cusp}")]
    LevelMismatch { spec: u64, cusp: u64 },

    #[error("invalid Eisenstein spec: {0}")]
    InvalidSpec(String),

    #[error("oddness violation: {0}")]
    Oddness(String),

    #[error("unknown character label {0:?}")]
    UnknownCharacter(String),

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    /// True for violated preconditions, false for internal failures.
    pub fn is_guard_violation(&self) -> bool {
        !matches!(self, Error::Internal(_))
    }

    pub(crate) fn out_of_range(
        what: &'static str,
        value: impl ToString,
        expected: &'static str,
    ) -> Self {
        Error::OutOfRange {
            what,
            value: value.to_string(),
            expected,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
