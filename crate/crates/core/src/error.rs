use thiserror::Error;

use crate::exprlang::ExprError;
use crate::numeric::NumericError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("operation requires a {expected} representation")]
    WrongRepresentation { expected: &'static str },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid frame: {0}")]
    InvalidFrame(String),
    #[error("independent checks disagree: {0}")]
    InconsistentChecks(String),
    #[error("cached orientation {cached} contradicts newly computed {found}")]
    OrientationMismatch { cached: i8, found: i8 },
    #[error("fiber is nearly horizontal: <u, V0> = {0:e}")]
    NearHorizontalFiber(f64),
    #[error("vectors are not tangent to the oriented-line space (defect {0:e})")]
    NonTangent(f64),
    #[error("point is off the sphere of radius {radius} by {defect:e}")]
    OffSphere { radius: f64, defect: f64 },
    #[error("lift lost transversality at t = {t} (<V, u*> = {dot:e})")]
    LostTransversality { t: f64, dot: f64 },
    #[error("curve needs at least {min} samples, got {got}")]
    DegenerateCurve { min: usize, got: usize },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("no sample of the circle lies in the upper hemisphere")]
    NoUpperHemispherePoints,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
