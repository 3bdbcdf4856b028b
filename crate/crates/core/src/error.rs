use thiserror::Error;

use crate::solver::SolveReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("fractional order s = {0} is outside (0, 1)")]
    InvalidOrder(f64),

    #[error("unsupported dimension {0} (only 1 and 2 are supported)")]
    UnsupportedDimension(usize),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error(
        "grid has {nodes} interior nodes, above the cap of {cap}; \
         the dense operator would need {bytes} bytes"
    )]
    GridTooLarge { nodes: usize, cap: usize, bytes: u64 },

    #[error("adaptive quadrature did not converge: achieved {achieved:.3e}, requested {requested:.3e}")]
    QuadratureNonConvergence { achieved: f64, requested: f64 },

    #[error("singular system: {0}")]
    SingularMatrix(String),

    #[error(
        "Newton iteration did not converge ({} iterations, residual {:.3e}); \
         this is evidence only, not a proof of nonexistence",
        .0.iterations, .0.residual_norm
    )]
    NonConvergence(Box<SolveReport>),

    #[error("domain is not star-shaped with respect to the chosen origin (margin {0:.3e})")]
    NotStarShaped(f64),

    #[error("ill-conditioned fit: {0}")]
    IllConditionedFit(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("operator cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Validates a fractional order.
pub fn check_order(s: f64) -> Result<()> {
    if s.is_finite() && s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidOrder(s))
    }
}
