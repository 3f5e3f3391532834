use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("Fock truncation must be at least 2, got {0}")]
    Truncation(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("integration diverged at t = {t:e} s")]
    Diverged { t: f64 },

    #[error("state is not positive semidefinite (minimum eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("form factor is undefined for a loop with zero perimeter")]
    ZeroPerimeter,

    #[error("subsystem selection `{0}` is invalid")]
    Selection(String),

    #[error("{0} is only defined for qubit sites")]
    QubitOnly(&'static str),

    #[error("configuration rejected:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("malformed CSV `{path}`: {reason}")]
    Csv { path: String, reason: String },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { field: field.into(), reason: reason.into() }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context { context: context.into(), source: Box::new(self) }
    }
}
