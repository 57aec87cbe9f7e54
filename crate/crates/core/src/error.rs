use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    Parameter(String),

    #[error("invalid grid: {0}")]
    Grid(String),

    /// `∂x⁻¹`/`∂x⁻²` applied to data carrying an x-mean.
    #[error("nonzero x-mean {amplitude:.3e} (relative tolerance {tolerance:.1e}) where a mean-free field is required")]
    NonzeroMean { amplitude: f64, tolerance: f64 },

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("transverse frequency k = 0 passed where ∂x⁻² is required")]
    ZeroFrequency,

    #[error("eigensolver failed to converge: {0}")]
    Convergence(String),

    #[error("no integer multiple of k0 = {k0} lies in the unstable band (upper edge {band_hi})")]
    NoUnstableMode { k0: f64, band_hi: f64 },

    #[error("mode stack truncation: support {needed} does not fit in K = {available}")]
    Truncation { needed: usize, available: usize },

    #[error("time step {dt} exceeds the stability bound {limit}")]
    Stability { dt: f64, limit: f64 },

    #[error("blow-up guard tripped at t = {t}: max |u_x| = {max_slope:.3e} > {threshold:.3e}")]
    Blowup { t: f64, max_slope: f64, threshold: f64 },

    #[error("KP constraint violated: x-mean {violation:.3e} on a nonzero transverse mode")]
    Constraint { violation: f64 },

    #[error("only {succeeded} runs succeeded, at least {required} are required")]
    InsufficientData { succeeded: usize, required: usize },

    #[error("hierarchy order {order}: {source}")]
    Hierarchy {
        order: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
