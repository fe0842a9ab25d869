use thiserror::Error;

/// Errors raised by the geometry, forms, kernel, quadrature and operator layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate boundary: defining function gradient vanishes at the queried point")]
    DegenerateBoundary,

    #[error("point is not on the boundary: |rho| = {residual:e}")]
    NotOnBoundary { residual: f64 },

    #[error("complex Hessian is not Hermitian (deviation {deviation:e}); derivative mode fault")]
    NonHermitian { deviation: f64 },

    #[error("form degree mismatch: {0}")]
    DegreeMismatch(String),

    #[error("kernel singular at w = z")]
    SingularPoint,

    #[error("vanishing denominator: domain is not strictly C-linearly convex at this pair (|<d rho(w), w - z>| = {value:e})")]
    LinearConvexityViolation { value: f64 },

    #[error("convexity violation: Re(<d rho(w), w - z> - rho(w)) = {value:e} is not positive")]
    ConvexityViolation { value: f64 },

    #[error("glued denominator vanished (|g| = {value:e})")]
    VanishingDenominator { value: f64 },

    #[error("no sign change of rho along the ray; star-shape bracket not found")]
    NoBracket,

    #[error("ray is tangent to the boundary (|<grad rho, u>| / |grad rho| = {cosine:e})")]
    StarShapeViolation { cosine: f64 },

    #[error("target is too close to the boundary: distance {distance:e} < {minimum:e}")]
    TooCloseToBoundary { distance: f64, minimum: f64 },

    #[error("empty sample set")]
    EmptySamples,

    #[error("matrix is singular to working precision")]
    SingularMatrix,

    #[error("nonpositive measure weight at index {index}")]
    NonPositiveWeight { index: usize },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
