use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report.
///
/// Variants map one-to-one onto the error kinds of the public operations; the
/// CLI serializes [`Error::kind`] into its machine-readable error output.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("state vector has zero norm")]
    ZeroState,
    #[error("metric operator is not invertible: {0}")]
    SingularMetric(String),
    #[error("operator is not positive-definite: {0}")]
    NotPositiveDefinite(String),
    #[error("operator is not Hermitian: {0}")]
    NotHermitian(String),
    #[error("eigenvalue computation failed: {0}")]
    Eigen(String),
    #[error("operator is not unitary: {0}")]
    NonUnitary(String),
    #[error("point outside the chart domain: {0}")]
    ChartDomain(String),
    #[error("no derivative data at domain boundary: {0}")]
    Boundary(String),
    #[error("integration failed: {0}")]
    Integration(String),
    #[error("reparametrization is not monotone: {0}")]
    NotMonotone(String),
    #[error("curve is not closed: {0}")]
    NotALoop(String),
    #[error("evolution operator is numerically singular: {0}")]
    SingularEvolution(String),
    #[error("intertwiner is numerically singular: {0}")]
    SingularIntertwiner(String),
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("validation error in `{field}`: {message}")]
    Validation { field: String, message: String },
    #[error("usage error: {0}")]
    Usage(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Stable identifier used in machine-readable error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "DimensionError",
            Error::ZeroState => "ZeroStateError",
            Error::SingularMetric(_) => "SingularMetricError",
            Error::NotPositiveDefinite(_) => "NotPositiveDefiniteError",
            Error::NotHermitian(_) => "NotHermitianError",
            Error::Eigen(_) => "EigenError",
            Error::NonUnitary(_) => "NonUnitaryError",
            Error::ChartDomain(_) => "ChartDomainError",
            Error::Boundary(_) => "BoundaryError",
            Error::Integration(_) => "IntegrationError",
            Error::NotMonotone(_) => "NotMonotoneError",
            Error::NotALoop(_) => "NotALoopError",
            Error::SingularEvolution(_) => "SingularEvolutionError",
            Error::SingularIntertwiner(_) => "SingularIntertwinerError",
            Error::InvalidValue(_) => "InvalidValueError",
            Error::Parse { .. } => "ParseError",
            Error::Validation { .. } => "ValidationError",
            Error::Usage(_) => "UsageError",
            Error::Io(_) => "IoError",
        }
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
