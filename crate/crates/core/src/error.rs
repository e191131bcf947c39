use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid body: {0}")]
    InvalidBody(String),
    #[error("unbounded body")]
    UnboundedBody,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("profile not increasing")]
    ProfileNotIncreasing,
    #[error("conjugate requires convex profile")]
    ConjugateNotConvex,
    #[error("integral diverges")]
    IntegralDiverges,
    #[error("level {0} outside the profile range")]
    LevelOutOfRange(f64),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("generation error: {0}")]
    Generation(String),
    #[error(
        "input not plurisubharmonic at resolution h = {h} ({fraction:.4} of points below -tau)"
    )]
    NotPlurisubharmonic { h: f64, fraction: f64 },
    #[error("input not convex at resolution h = {h} ({fraction:.4} of points below -tau)")]
    NotConvex { h: f64, fraction: f64 },
    #[error("level not interior")]
    LevelNotInterior,
    #[error("insufficient level sampling: {0} points")]
    InsufficientSampling(usize),
    #[error("endpoints not attained: c = {c} < {required}")]
    EndpointsNotAttained { c: f64, required: f64 },
    #[error("input not monotone in t")]
    NotMonotone,
    #[error("field format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
