//! Everything downstream of a run: blow-up time, rate fits, the blow-up set,
//! and monitors for the inequalities the solutions are known to satisfy.

mod blowup_set;
mod blowup_time;
mod monitors;
mod quadrature;
mod rate;
mod trace;

use thiserror::Error;

use crate::problem::ProblemKind;

pub use blowup_set::{estimate_blowup_set, BlowupSet, DEFAULT_BOUND_LEVEL};
pub use blowup_time::{
    estimate_blowup_time, estimate_blowup_time_in, BlowupTimeEstimate, GrowthLaw, GEOMETRIC_TAIL,
    REGRESSION_TAIL,
};
pub use monitors::{
    check_pointwise_bound, monitor_f_dirichlet, monitor_f_neumann, monitor_j, monitor_monotonicity, Location,
    MonitorReport, NeumannFReport, DEFAULT_DELTA,
};
pub use quadrature::{g_integral, integrate_adaptive, GEvaluation, GFunction, Quadrature};
pub use rate::{fit_rate, fit_rate_in, theory_slope, LinearFit, RateFit};
pub use trace::{FitWindow, RunTrace, SampleFlags, TraceMeta, TraceSample, MIN_WINDOW, TRIM_TAIL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("run did not blow up")]
    NotBlownUp,
    #[error("fit window has {got} samples, need {needed}")]
    WindowTooSmall { needed: usize, got: usize },
    #[error("analysis requires a {expected:?} run")]
    KindMismatch { expected: ProblemKind },
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("u(0,t) never reached the activation level {threshold}")]
    ThresholdNeverReached { threshold: f64 },
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("trace times not strictly increasing at sample {0}")]
    NonMonotoneTimes(usize),
}
