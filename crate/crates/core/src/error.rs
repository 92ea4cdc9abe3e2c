use thiserror::Error;

/// Errors raised by relaxkit operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument violated an operation's precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// `s` coincides (numerically) with an eigenvalue of `A`.
    #[error("transfer function evaluated at a pole: s = {s_re}{s_im:+}i is within conditioning limits of eigenvalue {pole_re}{pole_im:+}i")]
    Pole {
        s_re: f64,
        s_im: f64,
        pole_re: f64,
        pole_im: f64,
    },

    /// The eigenstructure of `A` is complex or defective beyond tolerance.
    #[error("no real diagonal modal form: {0}")]
    NotModal(String),

    /// Hankel analysis requires a Hurwitz `A`.
    #[error("Hankel operator unavailable: spectral abscissa {abscissa} is not strictly negative")]
    UnstableForHankel { abscissa: f64 },

    /// The T-matrix equations do not determine a unique solution.
    #[error("T-matrix is not unique: nullspace dimension {nullity}")]
    NonUnique { nullity: usize },

    /// A factorization or iteration failed.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Malformed input document.
    #[error("parse error: {0}")]
    Parse(String),

    /// Well-formed document with inconsistent content.
    #[error("validation error in field `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
