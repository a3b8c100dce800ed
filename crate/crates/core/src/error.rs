use thiserror::Error;

/// Errors surfaced by field algebra, solvers and experiments.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("malformed field: {0}")]
    MalformedField(String),

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("Lebesgue exponent must satisfy p >= 1, got {0}")]
    InvalidExponent(f64),

    #[error("field history is empty")]
    EmptyHistory,

    #[error("history times must be strictly increasing and nonnegative")]
    BadHistoryTimes,

    #[error("operation requires a uniform time grid")]
    NonUniformTimeGrid,

    #[error("mollifier radius {radius} too large for box of edge {box_length} (must be < box/4)")]
    RadiusTooLarge { radius: f64, box_length: f64 },

    #[error("time must be nonnegative, got {0}")]
    NegativeTime(f64),

    #[error("time must be strictly positive, got {0}")]
    NonPositiveTime(f64),

    #[error("ratio undefined for zero initial data")]
    ZeroInitialData,

    #[error("need at least {needed} strictly increasing sample times, got {got}")]
    TooFewTimes { needed: usize, got: usize },

    #[error("kappa threshold {threshold} unattainable for horizons in [{t_min}, {t_max}]")]
    HorizonNotFound { threshold: f64, t_min: f64, t_max: f64 },

    #[error("Picard iterate left the smallness regime (|v|_5 = {norm} > {bound}); horizon too large")]
    IterationBlowup { norm: f64, bound: f64 },

    #[error("time step {dt} violates the CFL bound; suggested dt = {suggested}")]
    StepRejected { dt: f64, suggested: f64 },

    #[error("test function support exceeds the periodic box")]
    BumpSupportExceedsBox,

    #[error("t = {t} lies beyond the run horizon {horizon}")]
    BeyondHorizon { t: f64, horizon: f64 },

    #[error("experiment incomplete at stage `{stage}`: {source}")]
    ExperimentIncomplete {
        stage: String,
        #[source]
        source: Box<CoreError>,
    },

    #[error("family is not weakly convergent as configured: {0}")]
    MisconfiguredFamily(String),

    #[error("unknown preset `{0}` (expected bump, taylor_green_localized, two_bump, rough, oscillatory(m), translated(m))")]
    UnknownPreset(String),

    #[error("rescale factor {0} must be a positive power of two")]
    IncommensurateScale(f64),

    #[error("kernel sample set is empty")]
    EmptySampleSet,

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("snapshot sidecar: {0}")]
    SnapshotFormat(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
