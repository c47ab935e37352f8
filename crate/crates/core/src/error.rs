use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PerifluxError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("incompatible field: {0}")]
    IncompatibleField(String),

    #[error("solver failure in {context}: residual {residual:.3e} after {iterations} iterations")]
    SolverFailure {
        context: String,
        residual: f64,
        iterations: usize,
    },

    #[error("degenerate geometry: projected axial direction has norm {norm:.3e}")]
    DegenerateGeometry { norm: f64 },

    #[error("pressure is not decomposable: axial mean gradient varies by {spread:.3e} across the section")]
    NotDecomposable { spread: f64 },

    #[error("Picard iteration diverged at iterate {iteration}: norm {norm:.3e} exceeds {limit:.3e}; try a smaller flux or a larger viscosity")]
    DivergenceDetected {
        iteration: usize,
        norm: f64,
        limit: f64,
    },

    #[error("Picard iteration did not reach tolerance within {maxit} iterations (last increment {increment:.3e})")]
    MaxitExceeded { maxit: usize, increment: f64 },

    #[error("invalid oracle use: {0}")]
    InvalidOracleUse(String),

    #[error("time stepper did not converge to a periodic orbit within {periods} periods (final gap {gap:.3e})")]
    OracleNonconvergence { periods: usize, gap: f64 },

    #[error("config error at `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("io error: {0}")]
    Io(String),
}

impl PerifluxError {
    pub fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        PerifluxError::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub fn parse(line: usize, reason: impl Into<String>) -> Self {
        PerifluxError::Parse {
            line,
            reason: reason.into(),
        }
    }

    /// Short machine-readable tag used in error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            PerifluxError::InvalidParameter { .. } => "invalid-parameter",
            PerifluxError::InvalidGeometry(_) => "invalid-geometry",
            PerifluxError::IncompatibleField(_) => "incompatible-field",
            PerifluxError::SolverFailure { .. } => "solver-failure",
            PerifluxError::DegenerateGeometry { .. } => "degenerate-geometry",
            PerifluxError::NotDecomposable { .. } => "not-decomposable",
            PerifluxError::DivergenceDetected { .. } => "divergence-detected",
            PerifluxError::MaxitExceeded { .. } => "maxit-exceeded",
            PerifluxError::InvalidOracleUse(_) => "invalid-oracle-use",
            PerifluxError::OracleNonconvergence { .. } => "oracle-nonconvergence",
            PerifluxError::Config { .. } => "config-parse-error",
            PerifluxError::Parse { .. } => "parse-error",
            PerifluxError::Io(_) => "io-error",
        }
    }
}

impl From<std::io::Error> for PerifluxError {
    fn from(e: std::io::Error) -> Self {
        PerifluxError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, PerifluxError>;
