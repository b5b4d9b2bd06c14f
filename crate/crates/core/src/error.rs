use thiserror::Error;

/// Errors raised across the library.
///
/// Variants are grouped by what went wrong rather than by module, so a
/// caller can tell an input problem from a numerical failure.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("range error: {0}")]
    Range(String),

    /// Point lies outside the rarefaction region (edge or vacuum).
    #[error("regime error: {0}")]
    Regime(String),

    #[error("singular integral: {0}")]
    Singular(String),

    #[error("time monotonicity violated: requested {requested}, current {current}")]
    Monotonicity { requested: f64, current: f64 },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("size cap exceeded: {0}")]
    Size(String),

    #[error("tail too heavy: achieved bound {achieved:e}, requested {requested:e}")]
    TailTooHeavy { achieved: f64, requested: f64 },

    #[error("quadrature did not converge: {what} (last delta {delta:e})")]
    Quadrature { what: String, delta: f64 },

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("stencil placement error: {0}")]
    Placement(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Short machine-readable tag for the error record emitted by the CLI.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Range(_) => "range",
            Error::Regime(_) => "regime",
            Error::Singular(_) => "singular",
            Error::Monotonicity { .. } => "monotonicity",
            Error::Invariant(_) => "invariant",
            Error::Size(_) => "size",
            Error::TailTooHeavy { .. } => "tail_too_heavy",
            Error::Quadrature { .. } => "quadrature",
            Error::Consistency(_) => "consistency",
            Error::Placement(_) => "placement",
            Error::Resolution(_) => "resolution",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }

    /// True for errors caused by bad user input rather than numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::Range(_)
                | Error::Regime(_)
                | Error::Invariant(_)
                | Error::Size(_)
                | Error::Placement(_)
                | Error::Config(_)
                | Error::Io(_)
                | Error::Monotonicity { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
