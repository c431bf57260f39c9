use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid cohesive law: axiom `{axiom}` produced a non-finite value at s = {at}")]
    InvalidLaw { axiom: &'static str, at: f64 },

    #[error("cohesive law violates hypotheses: {0}")]
    HypothesesViolated(String),

    #[error("proximal step too large: 4 * tau * sup|g''| = {product} must be < 1")]
    StepTooLarge { product: f64 },

    #[error("degenerate grid: {0}")]
    GridDegenerate(String),

    #[error("boundary data does not decay: max |u_A| on the lateral boundary is {max} > {tol}")]
    BoundaryNotDecaying { max: f64, tol: f64 },

    #[error("solver did not converge in {iterations} iterations (last KKT residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("analysis window contains the negative phase (min trace {min_trace:e}); re-center on a single phase")]
    PhaseWindow { min_trace: f64 },

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("zero field: F(r) = 0 at r = {r}")]
    ZeroField { r: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
