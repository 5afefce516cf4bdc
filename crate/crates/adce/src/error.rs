//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AdceError {
    #[error("photon cutoff n_max = {0} is too small; subspaces with three members need n_max >= 2")]
    InvalidCutoff(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{regime} regime violated: {detail}")]
    RegimeViolation { regime: &'static str, detail: String },

    #[error("subspace m = {0} is not covered by the dressed basis")]
    MissingSubspace(usize),

    #[error("subspace m = {m} touches the excitation cutoff while computing {what}; increase n_max")]
    BoundarySubspace { m: usize, what: &'static str },

    #[error("near-degenerate energy denominator: {0}; the perturbative rate is invalid there")]
    NearDegeneracy(String),

    #[error("modulation tone {index} (eta = {eta}) matches both the fast and slow gap families")]
    AmbiguousTone { index: usize, eta: f64 },

    #[error("tone {index} misused: {detail}")]
    ToneClass { index: usize, detail: String },

    #[error("integrator failure: {0}")]
    Integrator(String),

    #[error("population {population:.3e} at the photon cutoff exceeds {tol:.1e}; increase n_max")]
    CutoffLeakage { population: f64, tol: f64 },

    #[error("operator is not block-diagonal over excitation subspaces: {0}")]
    NotBlockDiagonal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, AdceError>;
