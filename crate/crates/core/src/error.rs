use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("eigen-iteration did not converge after {iterations} iterations (relative change {residual:e})")]
    EigenNonConvergence { iterations: usize, residual: f64 },

    #[error("linear solver stagnated at step {step}: residual history {history:?}")]
    SolverStagnation { step: usize, history: Vec<f64> },

    #[error("quadrature failed on [{a}, {b}]: {reason}")]
    Quadrature { a: f64, b: f64, reason: String },

    #[error("invalid index: {0}")]
    Index(String),

    #[error("probe invariant violated: {0}")]
    Probe(String),

    #[error("grid cannot resolve sigma = {sigma}: {reason}")]
    Resolution { sigma: f64, reason: String },

    #[error("fiber grid too coarse: {0}")]
    FiberGrid(String),

    #[error("invalid lift: {0}")]
    Lift(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
