use thiserror::Error;

/// Everything that can go wrong in this crate.
///
/// The variants split into two families that the command-line front end maps
/// onto distinct exit codes: domain problems (bad arguments, unsupported
/// parameter combinations) and numerical convergence failures.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("pole of the gamma function at x = {0}")]
    GammaPole(f64),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("unsupported case: {0}")]
    Unsupported(String),

    #[error("series failed to converge after {terms} terms")]
    SeriesConvergence { terms: usize },

    #[error("adaptive quadrature did not reach tolerance {tol:e} (estimate {estimate:e})")]
    QuadratureConvergence { tol: f64, estimate: f64 },

    #[error("irregular singular point: {0}")]
    IrregularPoint(String),

    #[error("point lambda = {lambda} lies outside the series trust region (|t| = {distance} > {limit})")]
    TrustRegion { lambda: f64, distance: f64, limit: f64 },

    #[error("ill-conditioned connection problem (condition estimate {0:e})")]
    IllConditioned(f64),

    #[error("matching points disagree by {0:e}")]
    MatchingInconsistency(f64),

    #[error("marked points violate the required order: {0}")]
    OrderViolation(String),

    #[error("finite-difference stencil degenerate: {0}")]
    StepDegeneracy(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("lattice of {sites} sites exceeds the memory budget of {budget_bytes} bytes")]
    MemoryBudget { sites: usize, budget_bytes: usize },

    #[error("Monte Carlo misconfiguration: {0}")]
    Misconfigured(String),
}

impl Error {
    /// True for failures of an iterative numerical method, as opposed to bad input.
    pub fn is_convergence(&self) -> bool {
        matches!(
            self,
            Error::SeriesConvergence { .. }
                | Error::QuadratureConvergence { .. }
                | Error::IllConditioned(_)
                | Error::MatchingInconsistency(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
