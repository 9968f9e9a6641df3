use thiserror::Error;

/// Errors raised by the grading engine.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported construct: {0}")]
    Unsupported(String),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("ambiguous attribute `{0}`")]
    AmbiguousAttribute(String),
    #[error("scope error: {0}")]
    Scope(String),
    #[error("schema document is malformed: {0}")]
    SchemaParse(String),
    #[error("invalid schema: {0}")]
    Validation(String),
    #[error("canonicalization did not converge after {0} rule applications")]
    FixpointOverrun(usize),
    #[error("the correct query has zero weighted size")]
    DegenerateTotal,
    #[error("inconsistent edit: {0}")]
    InconsistentEdit(String),
    #[error("invalid assignment: {0}")]
    Assignment(String),
    #[error("evaluation failed: {0}")]
    Evaluation(String),
}

impl Error {
    /// True for errors caused by the submitted SQL text itself.
    pub fn is_query_error(&self) -> bool {
        matches!(
            self,
            Error::Syntax { .. }
                | Error::Unsupported(_)
                | Error::UnknownRelation(_)
                | Error::UnknownAttribute(_)
                | Error::AmbiguousAttribute(_)
                | Error::Scope(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
