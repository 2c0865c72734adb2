use thiserror::Error;

/// Errors produced by kernels, operators and solvers.
///
/// Numeric payloads are carried as `f64` regardless of the working scalar
/// type so the enum stays non-generic.
#[derive(Debug, Error)]
pub enum Error {
    #[error("kernel not normalizable: integral of the weight over [0, R] is zero")]
    NonNormalizable,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("x = {x} lies outside the domain [0, {length}]")]
    OutOfDomain { x: f64, length: f64 },

    #[error("field has {found} cells, grid expects {expected}")]
    GridMismatch { expected: usize, found: usize },

    #[error("non-finite state at t = {0}")]
    NonFiniteState(f64),

    #[error("time step underflow at t = {t} (dt = {dt})")]
    StepSizeUnderflow { t: f64, dt: f64 },

    #[error("positivity lost at t = {t}: min u = {min_u} below {floor}")]
    PositivityLost { t: f64, min_u: f64, floor: f64 },

    #[error("no steady state reached by t = {0}")]
    NotConverged(f64),

    #[error("Newton diverged at iteration {iter}, residual {residual}")]
    NewtonDiverged { iter: usize, residual: f64 },

    #[error("singular Jacobian in Newton solve")]
    SingularJacobian,

    #[error("mode n = {0} is degenerate: |M_n| below threshold")]
    DegenerateMode(usize),

    #[error("kernel unsupported here: {0}")]
    UnsupportedKernel(String),

    #[error("density not positive: min u = {0}")]
    NonPositiveDensity(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
