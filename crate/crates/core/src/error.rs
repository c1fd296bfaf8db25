use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid subspace `{name}`: {reason}")]
    InvalidSubspace { name: String, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unknown face `{0}`")]
    UnknownFace(String),

    #[error("point lies within the ambiguity band of face `{face}` (distance {distance:e})")]
    AmbiguousLocation { face: String, distance: f64 },

    #[error("point is not on face `{face}` (distance {distance:e})")]
    NotOnFace { face: String, distance: f64 },

    #[error("base point is singular: it lies on the strictly smaller face `{smaller}`")]
    SingularBasePoint { smaller: String },

    #[error("invalid covector: {0}")]
    InvalidCovector(String),

    #[error("energy must be positive, got {0}")]
    InvalidEnergy(f64),

    #[error("state is off the energy shell: tau^2 + |v|^2 = {found}, lambda = {lambda}")]
    OffShell { found: f64, lambda: f64 },

    #[error("point outside the chart domain (geodesic radius {radius})")]
    ChartDomain { radius: f64 },

    #[error("integration diverged at t = {t}")]
    IntegrationDiverged { t: f64 },

    #[error("radial degeneracy: {0}")]
    RadialDegeneracy(String),

    #[error("center is in the wrong stratum: expected {expected}, found {found}")]
    WrongStratum { expected: String, found: String },

    #[error("ambiguous hit with face `{face}` at s = {s} (closest approach {distance:e}); {prefix_events} break events traced before it")]
    AmbiguousHit {
        face: String,
        s: f64,
        distance: f64,
        prefix_events: usize,
        prefix: Box<crate::broken::BrokenPath>,
    },

    #[error("family has no uniform limit: successive sup distances {gaps:?}")]
    NoUniformLimit { gaps: Vec<f64> },

    #[error("insufficient resolution: {0}")]
    InsufficientResolution(String),

    #[error("sampling produced no points in the region after {proposals} proposals")]
    EmptyRegion { proposals: usize },

    #[error("analytic and finite-difference derivatives disagree: {analytic} vs {numeric}")]
    DerivativeMismatch { analytic: f64, numeric: f64 },

    #[error("parameter constraint violated: {0}")]
    ConstraintViolation(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
