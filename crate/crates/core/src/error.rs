use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid potential: {0}")]
    InvalidSpec(String),

    #[error("no finite critical strength: mu*a = {mu_a} >= 4")]
    NoCriticalStrength { mu_a: f64 },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("Newton iteration diverged after {iterations} iterations (last iterate {last})")]
    Divergence { last: Complex64, iterations: usize },

    #[error("degenerate transfer matrix: |M22| = {0:e}")]
    DegenerateSystem(f64),

    #[error("stale or invalid bound state: {0}")]
    InvalidState(String),

    #[error("divergent integral: {0}")]
    DivergentIntegral(String),

    #[error("usage: {0}")]
    Usage(String),
}

impl Error {
    /// 2 for bad input, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::InvalidSpec(_) | Self::Domain(_) | Self::NoCriticalStrength { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
