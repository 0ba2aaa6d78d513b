use std::path::PathBuf;

/// Errors raised across the scattering, decomposition, fitting and simulation layers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("radial grid too coarse: step*k = {step_k:.4} exceeds 0.1")]
    Resolution { step_k: f64 },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("phase shift failed at E = {energy}, l = {l}: {source}")]
    PhaseShiftCell {
        energy: f64,
        l: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("no resonance found in partial wave {l}: {reason}")]
    NoResonance { l: usize, reason: String },

    #[error("energy {energy} outside table range [{lo}, {hi}]")]
    Extrapolation { energy: f64, lo: f64, hi: f64 },

    #[error("angular distribution is identically zero")]
    DegenerateDistribution,

    #[error("normal matrix is rank deficient; unidentifiable combination: {combination}")]
    RankDeficient { combination: String },

    #[error("model evaluation failed at point {index}: {source}")]
    ModelPoint {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("R^2 undefined: total sum of squares is zero")]
    UndefinedRSquared,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
