use thiserror::Error;

/// Errors raised by the geometry engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("point off the model: {0}")]
    OffModel(String),
    #[error("degenerate immersion: det g = {det_g:e}")]
    DegenerateImmersion { det_g: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("parameter point {point:?} is closer than {margin:e} to the chart boundary")]
    BoundaryProximity { point: Vec<f64>, margin: f64 },
    #[error("Frenet frame undefined: curvature {k:e} below threshold")]
    FrameUndefined { k: f64 },
    #[error("singular factor: {0}")]
    SingularFactor(String),
    #[error("no root in bracket [{lo}, {hi}]: best objective {best:e}")]
    NoRootInBracket { lo: f64, hi: f64, best: f64 },
    #[error("Newton iteration did not converge after {iterations} steps (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("post-verification failed: max residual {residual:e} exceeds tolerance {tol:e}")]
    PostVerification { residual: f64, tol: f64 },
    #[error("solution p = {p}, q = {q} lies outside the admissible range p > 1, q > 1")]
    Inadmissible { p: f64, q: f64 },
    #[error("chart is minimal on the sampled grid; no proper solution exists")]
    MinimalOnly,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, GeomError>;
