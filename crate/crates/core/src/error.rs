use thiserror::Error;

/// Errors raised anywhere in the discretization / control / experiment pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive definite: pivot {pivot:e} at row {row}")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("grids are not nested: cannot map level {from} to level {to}")]
    GridNotNested { from: u32, to: u32 },

    #[error("quadrature failed: integrand returned {value} at ({x}, {y})")]
    QuadratureFailure { x: f64, y: f64, value: f64 },

    #[error("low-rank factor exceeded rank cap: rank {rank} > {cap}")]
    RankExplosion { rank: usize, cap: usize },

    #[error("core update (I + tau S P) is numerically singular")]
    SingularCoreUpdate,

    #[error("time {t} is not a node of the time grid")]
    TimeNotOnGrid { t: f64 },

    #[error("order fit is degenerate: all scales are equal")]
    DegenerateFit,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Errors caused by bad input rather than by the numerics.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Io(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
