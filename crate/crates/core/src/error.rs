use thiserror::Error;

/// Errors surfaced by the measurement pipeline.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("chart construction failed at parameter {theta}: {reason}")]
    Chart { theta: f64, reason: String },

    #[error("unknown conductivity field `{0}`")]
    UnknownField(String),

    #[error("conductivity lower bound is not positive (gamma0 = {0})")]
    NonpositiveLowerBound(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "element budget exceeded: {requested} triangles > cap {cap} \
         (requested h_near = {h_near:.3e})"
    )]
    ElementBudget {
        requested: usize,
        cap: usize,
        h_near: f64,
    },

    #[error("boundary function grids do not match ({left} vs {right} samples)")]
    GridMismatch { left: usize, right: usize },

    #[error(
        "boundary function under-resolved: estimated tail mass {tail:.3e} of the \
         squared norm lies beyond the resolved modes"
    )]
    UnderResolved { tail: f64 },

    #[error("pointwise division by a non-positive boundary factor (min = {0})")]
    NonpositiveDivisor(f64),

    #[error("linear system is singular or ill-conditioned (diagonal ratio estimate {0:.3e})")]
    IllConditioned(f64),

    #[error(
        "trace interpolation under-resolved: boundary grid has {grid} samples for \
         {vertices} boundary vertices (need at least a factor 2)"
    )]
    TraceResolution { grid: usize, vertices: usize },

    #[error("analytic Dirichlet-to-Neumann path requires the unit disk")]
    AnalyticPathUnavailable,

    #[error("probe support 1/M = {support:.3e} exceeds chart radius {radius:.3e}")]
    ProbeSupport { support: f64, radius: f64 },

    #[error("rate fit is degenerate: {0}")]
    DegenerateFit(String),

    #[error("solver did not reach the requested tolerance: residual {residual:.3e}")]
    SolverTolerance { residual: f64 },
}
