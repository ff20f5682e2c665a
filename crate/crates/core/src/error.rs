use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid error: {0}")]
    Grid(String),

    /// The data does not allow a decision (e.g. sampled range too short).
    #[error("inconclusive: {0}")]
    Inconclusive(String),

    /// Quadrature, root finding or time stepping failed numerically.
    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("construction error: {0}")]
    Construction(String),

    #[error("CFL violation: dt = {dt:e} exceeds the stable limit {limit:e}")]
    Cfl { dt: f64, limit: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("input error: {0}")]
    Input(String),
}

impl Error {
    /// Failures caused by floating-point computation, as opposed to bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Numeric(_) | Error::Cfl { .. })
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Grid(_) => "grid",
            Error::Inconclusive(_) => "inconclusive",
            Error::Numeric(_) => "numeric",
            Error::Construction(_) => "construction",
            Error::Cfl { .. } => "cfl",
            Error::Config(_) => "config",
            Error::Unsupported(_) => "unsupported",
            Error::Input(_) => "input",
        }
    }
}
