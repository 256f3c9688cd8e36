use thiserror::Error;

/// Errors produced by the trace counting library.
#[derive(Debug, Error)]
pub enum Error {
    /// Input text (JSON automaton, DNF, word, rational) could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    /// Input parsed but violates a structural requirement.
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),

    /// An exhaustive procedure would exceed its configured work budget.
    #[error("budget exceeded: {what} needs {needed}, budget is {budget}")]
    Budget {
        what: &'static str,
        needed: u128,
        budget: u128,
    },

    /// A value is larger than every acceptable estimate value.
    #[error("estimate overflow: {0}")]
    Overflow(String),

    /// The requested slice of the language contains no word.
    #[error("the language has no word of length {0}")]
    EmptyLanguage(usize),

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
