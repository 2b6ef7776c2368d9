use thiserror::Error;

/// Errors raised by geometry, quadrature, bound checks and the runner.
#[derive(Debug, Error)]
pub enum FluxError {
    #[error("EMPTY_BOUNDARY: no sign change of the level function inside the bounding box of `{0}`")]
    EmptyBoundary(String),
    #[error("RESOLUTION_TOO_COARSE: {count} grid edges carry two crossings (limit {limit})")]
    ResolutionTooCoarse { count: usize, limit: usize },
    #[error("BAD_PARAMS: {0}")]
    BadParams(String),
    #[error("DIMENSION_MISMATCH: expected dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unsupported dimension {0}; meshing is available for d = 2 and d = 3")]
    UnsupportedDimension(usize),
    #[error("DEGENERATE_GRADIENT: |grad phi| = {magnitude:e} at an accepted oracle sample")]
    DegenerateGradient { magnitude: f64 },
    #[error("NOT_DIVERGENCE_FREE: sampled |div f| reached {max_divergence:e}")]
    NotDivergenceFree { max_divergence: f64 },
    #[error("NOT_CONVEX: midpoint of two inside points lies outside (phi = {violation:e})")]
    NotConvex { violation: f64 },
    #[error("EMPTY_MESH: empirical measure needs a mesh with positive area")]
    EmptyMesh,
    #[error("PRECONDITION_FAILED: {0}")]
    PreconditionFailed(String),
    #[error("STEP_UNDERFLOW: required step {step:e} at t = {time}")]
    StepUnderflow { step: f64, time: f64 },
    #[error("CROSSING_UNRESOLVED: boundary crossing near t = {time} could not be isolated")]
    CrossingUnresolved { time: f64 },
    #[error("NOT_SIMPLE: curve self-intersects between segments {first} and {second}")]
    NotSimple { first: usize, second: usize },
    #[error("CONFIG_INVALID: {0}")]
    ConfigInvalid(String),
    #[error("RUNTIME_FAILURE: {0}")]
    Runtime(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = FluxError> = std::result::Result<T, E>;
