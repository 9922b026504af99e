use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    /// All three roots of the characteristic cubic became real.
    #[error("complex-conjugate root pair lost at c = {c}")]
    PairLost { c: f64 },

    #[error("Re(lambda) does not change sign on [{lo}, {hi}]")]
    NoCrossing { lo: f64, hi: f64 },

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("solution collapsed to the trivial state (amplitude {amplitude:e})")]
    CollapsedToZero { amplitude: f64 },

    #[error("Floquet exponent {0} outside (-pi, pi]")]
    ThetaOutOfRange(f64),

    #[error("QR iteration failed to converge for a {size}x{size} matrix")]
    EigFailure { size: usize },

    #[error("at eps = {eps}: {source}")]
    AtEps {
        eps: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("at theta = {theta}: {source}")]
    AtTheta {
        theta: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn at_eps(self, eps: f64) -> Self {
        Error::AtEps { eps, source: Box::new(self) }
    }

    pub(crate) fn at_theta(self, theta: f64) -> Self {
        Error::AtTheta { theta, source: Box::new(self) }
    }

    /// Strips `AtEps` / `AtTheta` context wrappers.
    pub fn innermost(&self) -> &Error {
        match self {
            Error::AtEps { source, .. } | Error::AtTheta { source, .. } => source.innermost(),
            other => other,
        }
    }
}
