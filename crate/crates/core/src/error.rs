use thiserror::Error;

/// Errors raised by the Fock-space routines.
#[derive(Debug, Error)]
pub enum FockError {
    #[error("alphabet size must be at least 1")]
    EmptyAlphabet,
    #[error("alphabet mismatch: {left} letters vs {right} letters")]
    AlphabetMismatch { left: usize, right: usize },
    #[error("letter {letter} is outside the alphabet 1..={n}")]
    LetterOutOfRange { letter: usize, n: usize },
    #[error("word {word} appears more than once")]
    DuplicateWord { word: String },
    #[error("non-finite coefficient for word {word}")]
    NonFinite { word: String },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("finite section needs {columns} columns, above the cap of {cap}")]
    ResourceCap { columns: usize, cap: usize },
    #[error("not divisible: residual {residual:.3e} exceeds allowance {allowance:.3e}")]
    NotDivisible { residual: f64, allowance: f64 },
    #[error("not formally invertible: constant coefficient is zero")]
    NotFormallyInvertible,
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, FockError>;
