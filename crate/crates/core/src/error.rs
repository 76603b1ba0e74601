use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("no root: {0}")]
    NoRoot(String),
    #[error("Nehari projection failed (last residuals {g1:.3e}, {g2:.3e})")]
    ProjectionFailure { g1: f64, g2: f64 },
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("energy increased during descent at iteration {iteration}: {before} -> {after}")]
    EnergyIncrease { iteration: usize, before: f64, after: f64 },
    #[error("refinement needed: spike width {width:.3e} below 4h = {limit:.3e}")]
    RefinementNeeded { width: f64, limit: f64 },
    #[error("singular system: {0}")]
    Singular(String),
    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("missing dependency: {0}")]
    Dependency(String),
    #[error("bracket not found: {0}")]
    Bracket(String),
    #[error("configuration error: {0}")]
    Config(String),
}
