use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("velocity must be nonzero")]
    ZeroVelocity,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CharError {
    #[error("step size must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("characteristic reached zero or non-finite velocity at t = {t}")]
    ZeroVelocity { t: f64 },
    #[error("trajectory is empty")]
    EmptyTrajectory,
    #[error(transparent)]
    Geom(#[from] GeomError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid initial data: {0}")]
    InvalidInitialData(String),
    #[error("invalid run parameter: {0}")]
    InvalidParameter(String),
    #[error("small-velocity barrier violated: min |V| = {min_speed} < {threshold} at t = {t}")]
    BarrierViolated { min_speed: f64, threshold: f64, t: f64 },
    #[error("ensemble carries no tangent matrices")]
    MissingTangents,
    #[error("sample {index} has f0 = 0")]
    ZeroDensitySample { index: usize },
    #[error(transparent)]
    Char(#[from] CharError),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IneqError {
    #[error("test function `{name}` failed its derivative gate: {detail}")]
    GateFailed { name: String, detail: String },
    #[error("unknown family member `{0}`")]
    UnknownMember(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
