use thiserror::Error;

/// Errors raised by the solver stack.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("degenerate constraint: Gram determinant {det:e} is not positive")]
    DegenerateConstraint { det: f64 },

    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("component {component} collapsed at iteration {iteration} (norm² {norm_sq:e} < {threshold:e})")]
    Collapse { component: &'static str, iteration: usize, norm_sq: f64, threshold: f64 },

    #[error("interface topology: expected exactly one sign change, found {crossings}")]
    Topology { crossings: usize },

    #[error("no threshold bracket found in [{lo:e}, {hi:e}]")]
    Bracket { lo: f64, hi: f64 },

    #[error("search failed: {0}")]
    Search(String),

    #[error("check failed: {0}")]
    Check(String),

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
