use thiserror::Error;

/// Named background assumptions that a metric or problem can violate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assumption {
    /// `1/2 <= V <= 3/2` on the closed domain.
    LapseBounds,
    /// `lambda I <= h_AB <= Lambda I` with `lambda > 0`.
    AngularEllipticity,
    /// `det(h_AB)` independent of retarded time and `z`.
    StaticAngularVolume,
    /// `V -> 1`, `U^A -> 0`, `eta -> 0`, `h -> g_S2` as `z -> 0`.
    AsymptoticFlatness,
}

impl std::fmt::Display for Assumption {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Assumption::LapseBounds => write!(f, "lapse bound 1/2 <= V <= 3/2"),
            Assumption::AngularEllipticity => write!(f, "angular ellipticity lambda I <= h <= Lambda I"),
            Assumption::StaticAngularVolume => write!(f, "det(h_AB) independent of tau and z"),
            Assumption::AsymptoticFlatness => write!(f, "asymptotic flatness at z = 0"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("assumption violated ({assumption}): {detail}")]
    AssumptionViolation { assumption: Assumption, detail: String },

    #[error("unsupported background class: {0}")]
    UnsupportedClass(String),

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("corner incompatibility: |phi(z0) - psi(0)| = {mismatch:e} exceeds {tol:e}")]
    CornerIncompatibility { mismatch: f64, tol: f64 },

    #[error("instability at step {step} (tau = {tau}): {reason}")]
    Instability { step: usize, tau: f64, reason: String },

    #[error("positivity certificate failed after {iterations} escalations: margin {margin:e} at {worst}")]
    CertificateFailure { iterations: usize, margin: f64, worst: String },

    #[error("ill-conditioned fit (condition number {condition:e}); try a smaller order")]
    IllConditionedFit { condition: f64 },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("violated uniqueness: data norms vanish but solution norm is {lhs:e}")]
    ViolatedUniqueness { lhs: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
