use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure class, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Model,
    Numeric,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("undeclared identifier `{0}`")]
    UndeclaredIdentifier(String),
    #[error("unbound parameter `{0}`")]
    UnboundParameter(String),
    #[error("not a polynomial: {0}")]
    NotPolynomial(String),
    #[error("series error: {0}")]
    Series(String),
    #[error("unsupported geometry: {0}")]
    Geometry(String),
    #[error("degenerate corner: {0}")]
    Degenerate(String),
    #[error("invalid chart: {0}")]
    Chart(String),
    #[error("invalid section: {0}")]
    Section(String),
    #[error("exponent {exponent} lies within {band:e} of the pole at {pole}")]
    Pole { exponent: f64, pole: f64, band: f64 },
    #[error("tolerance not reached: {0}")]
    Tolerance(String),
    #[error("index out of range: {0}")]
    Index(String),
    #[error("missing coefficient: {0}")]
    MissingCoefficient(String),
    #[error("sign pattern mismatch: {0}")]
    Pattern(String),
    #[error("integration failed: {0}")]
    Integration(String),
    #[error("maximum integration time {0} exceeded")]
    MaxTime(f64),
    #[error("trajectory left the region of validity: {0}")]
    Escape(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("model error: {0}")]
    Model(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("{stage}: {source}")]
    Stage { stage: String, source: Box<Error> },
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Stage { source, .. } => source.class(),
            Error::Usage(_) => ErrorClass::Usage,
            Error::Syntax { .. }
            | Error::UndeclaredIdentifier(_)
            | Error::UnboundParameter(_)
            | Error::NotPolynomial(_)
            | Error::Geometry(_)
            | Error::Degenerate(_)
            | Error::Chart(_)
            | Error::Section(_)
            | Error::Pattern(_)
            | Error::Model(_) => ErrorClass::Model,
            _ => ErrorClass::Numeric,
        }
    }

    /// Tag the error with the pipeline stage it came from.
    pub fn in_stage(self, stage: &str) -> Error {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }
}
