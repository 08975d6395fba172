use thiserror::Error;

/// Errors raised across the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("empty ensemble")]
    EmptyEnsemble,

    #[error("density has zero total mass")]
    ZeroMass,

    #[error("map undefined at point {index}: {reason}")]
    MapUndefined { index: usize, reason: String },

    #[error("singular evaluation at x = {x:?} (distance to singular set {distance:e})")]
    SingularEvaluation { x: Vec<f64>, distance: f64 },

    #[error("non-finite value at {location:?}: {what}")]
    NonFinite { location: Vec<f64>, what: String },

    #[error("unknown family `{0}`")]
    UnknownFamily(String),

    #[error("trajectory is not complete ({0})")]
    IncompleteTrajectory(String),

    #[error("invalid mass fraction {fraction:e} exceeds tolerance {max:e}")]
    InvalidMassFraction { fraction: f64, max: f64 },

    #[error("measure point {index} is not a base point of the flow map")]
    OffBaseCloud { index: usize },

    #[error("test function support lies within {distance:e} of the singular set (margin {margin:e})")]
    SupportTooClose { distance: f64, margin: f64 },

    #[error("CFL violation: dt = {dt:e} exceeds stable step {max_dt:e}; use dt <= {max_dt:e}")]
    Cfl { dt: f64, max_dt: f64 },

    #[error("grid resolution: {0}")]
    Resolution(String),

    #[error("index mismatch: {0}")]
    IndexMismatch(String),

    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
