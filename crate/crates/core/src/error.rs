use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("unknown letter {0:?}")]
    UnknownLetter(String),

    #[error("alphabet mismatch: expected {expected} symbols, found {found}")]
    AlphabetMismatch { expected: usize, found: usize },

    #[error("enumeration of {what} exceeded budget of {budget}")]
    BudgetExceeded { what: String, budget: u64 },

    #[error("graph is not complete")]
    NotComplete,

    #[error("graph is not folded")]
    NotFolded,

    #[error("word does not label a closed path at the identity")]
    NotClosed,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no canonical morphism between the given groups")]
    MissingMorphism,

    #[error("level {level} exceeds the configured maximum {max}")]
    LevelOutOfRange { level: usize, max: usize },

    /// A step that is guaranteed to succeed under its hypotheses did not.
    #[error("theorem violation: {0}")]
    TheoremViolation(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::BudgetExceeded { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
