use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("frame is not unitary (residual {0:.3e})")]
    Frame(f64),
    #[error("operator is not flag-compatible at level {level} (residual {residual:.3e})")]
    Compatibility { level: usize, residual: f64 },
    #[error("level {level} out of range 1..={levels}")]
    Level { level: usize, levels: usize },
    #[error("closure error: {0}")]
    Closure(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("mismatch: {0}")]
    Mismatch(String),
    #[error("Schur symbol is not positive semidefinite (min eigenvalue {0:.3e})")]
    Positivity(f64),
    #[error("Schur symbol has a diagonal entry {0:.6} above 1")]
    Contraction(f64),
    #[error("certificate failed: {0}")]
    Certificate(String),
    #[error("Gram matrix has eigenvalue {0:.3e} below the PSD tolerance")]
    Rank(f64),
    #[error("maps differ: {0}")]
    MapMismatch(String),
    #[error("domination fails: {0}")]
    Domination(String),
    #[error("spectrum of T lies outside [0, 1]: [{min:.3e}, {max:.3e}]")]
    Spectrum { min: f64, max: f64 },
    #[error("operator is not in the commutant (residual {0:.3e})")]
    Commutant(f64),
    #[error("commutant basis is empty")]
    EmptyCommutant,
    #[error("inner product error: {0}")]
    InnerProduct(String),
    #[error("degenerate module element: {0}")]
    Degeneracy(String),
    #[error("inducing maps differ (residual {0:.3e})")]
    Equivalence(f64),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("parameter error: {0}")]
    Param(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Input problems (exit code 2) as opposed to mathematical failures (exit code 1).
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse(_) | Error::Param(_) | Error::Io(_) | Error::Dimension(_) | Error::Frame(_) | Error::Level { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
