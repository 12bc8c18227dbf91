use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("rotation axis is degenerate (zero-length vector)")]
    DegenerateAxis,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("quadrature exceeded {subdivisions} subdivisions (error estimate {estimate:.3e})")]
    IntegrationBudget { subdivisions: usize, estimate: f64 },
    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },
    #[error("ansatz has {params} free parameters but the system has {residuals} residuals")]
    DimensionMismatch { params: usize, residuals: usize },
    #[error("no root found: best residue {residue:.3e} after {evaluations} evaluations ({reason})")]
    RootNotFound {
        residue: f64,
        evaluations: usize,
        reason: String,
    },
    #[error("input pulse fails its conditions: {0}")]
    FailsCheck(String),
    #[error("slope fit failed: {0}")]
    FitFailure(String),
    #[error("{}", match line { Some(l) => format!("line {l}: {message}"), None => message.clone() })]
    Parse { line: Option<usize>, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
