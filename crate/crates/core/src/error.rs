use thiserror::Error;

/// Errors raised by the numerical kernel and the thermodynamic layers built on it.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (max |m - m^dagger| = {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("function undefined on eigenvalue {eigenvalue}")]
    DomainError { eigenvalue: f64 },

    #[error("inverse temperature must be positive and finite, got {0}")]
    InvalidBeta(f64),

    #[error("not a density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("support violation: {weight:.3e} of the state lies outside the reference support")]
    SupportViolation { weight: f64 },

    #[error("Kraus list is empty")]
    EmptyKrausList,

    #[error("Kraus operators are not trace preserving (max deviation {deviation:.3e})")]
    NotTracePreserving { deviation: f64 },

    #[error("backward operators are not unital as a dual map (max deviation {deviation:.3e})")]
    BackwardNotUnital { deviation: f64 },

    #[error("decomposition is not valid: {0}")]
    InvalidDecomposition(String),

    #[error("unknown channel preset `{0}`")]
    UnknownPreset(String),

    #[error("parameter out of range for `{preset}`: {message}")]
    ParamOutOfRange { preset: String, message: String },

    #[error("distribution has zero total mass")]
    ZeroMass,

    #[error("support mismatch at delta_u = {delta_u}: forward mass {forward:.3e}, backward mass {backward:.3e}")]
    SupportMismatch {
        delta_u: f64,
        forward: f64,
        backward: f64,
    },

    #[error("scenario `{name}`: {source}")]
    Scenario { name: String, source: Box<Error> },
}

impl Error {
    pub fn in_scenario(self, name: &str) -> Self {
        match self {
            e @ Error::Scenario { .. } => e,
            other => Error::Scenario {
                name: name.to_string(),
                source: Box::new(other),
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
