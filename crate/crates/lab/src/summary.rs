//! Machine-readable record of one run, written as `summary.json`.

use blowup_core::analysis::{
    check_pointwise_bound, estimate_blowup_set, estimate_blowup_time, fit_rate, monitor_f_dirichlet,
    monitor_f_neumann, monitor_j, monitor_monotonicity, BlowupTimeEstimate, RateFit, DEFAULT_BOUND_LEVEL,
    DEFAULT_DELTA,
};
use blowup_core::problem::{ProblemKind, ValidationReport};
use blowup_core::solver::{RunResult, StopReason};
use serde::{Deserialize, Serialize};

use crate::config::RunParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    pub slope: f64,
    pub intercept: f64,
    pub rms_residual: f64,
    pub theory_slope: f64,
    /// Empirical `log C` of the upper envelope at the theory slope.
    pub envelope_log_c: f64,
    pub lower_log_c: f64,
    pub window_start: usize,
    pub window_end: usize,
}

/// Satisfied fractions of the monitors that apply to the run, with their
/// calibrated constants.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MonitorSummary {
    pub monotonicity: Option<f64>,
    pub gradient_functional: Option<f64>,
    pub gradient_epsilon: Option<f64>,
    pub pointwise_bound: Option<f64>,
    pub axis_growth: Option<f64>,
    pub axis_growth_alpha: Option<f64>,
    pub gradient_growth: Option<f64>,
    pub gradient_growth_window: Option<f64>,
    pub boundary_growth_window: Option<f64>,
    pub neumann_epsilon: Option<f64>,
    pub neumann_epsilon_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupSetSummary {
    pub level: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: RunParams,
    pub validation: Option<ValidationReport>,
    pub stop_reason: StopReason,
    pub blew_up: bool,
    pub final_time: f64,
    pub steps: usize,
    pub samples: usize,
    pub t_hat: Option<f64>,
    pub t_hat_geometric: Option<f64>,
    pub estimator_spread: Option<f64>,
    pub relative_spread: Option<f64>,
    pub rate: Option<RateSummary>,
    pub monitors: MonitorSummary,
    pub blowup_set: Option<BlowupSetSummary>,
    /// Analyses that could not be carried out, with the reason.
    pub notes: Vec<String>,
}

/// Everything computed from a finished run.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub summary: RunSummary,
    pub estimate: Option<BlowupTimeEstimate>,
    pub rate: Option<RateFit>,
}

fn record<T, E: std::fmt::Display>(notes: &mut Vec<String>, what: &str, r: Result<T, E>) -> Option<T> {
    r.map_err(|e| notes.push(format!("{what}: {e}"))).ok()
}

pub fn analyze(params: &RunParams, run: &RunResult) -> Analysis {
    let mut notes = Vec::new();
    let trace = &run.trace;
    let estimate =
        if run.blew_up { record(&mut notes, "blow-up time", estimate_blowup_time(trace)) } else { None };
    let rate = estimate.as_ref().and_then(|est| record(&mut notes, "rate fit", fit_rate(trace, est)));

    let mut monitors = MonitorSummary {
        monotonicity: record(&mut notes, "monotonicity", monitor_monotonicity(run)).map(|r| r.fraction()),
        ..MonitorSummary::default()
    };
    match run.spec.kind() {
        ProblemKind::DirichletSource => {
            if let Some((eps, j)) = record(&mut notes, "gradient functional", monitor_j(run, DEFAULT_DELTA)) {
                monitors.gradient_functional = Some(j.fraction());
                monitors.gradient_epsilon = Some(eps);
                monitors.pointwise_bound =
                    record(&mut notes, "pointwise bound", check_pointwise_bound(run, DEFAULT_DELTA, eps))
                        .map(|r| r.fraction());
            }
            if run.blew_up {
                if let Some((alpha, f)) = record(&mut notes, "axis growth", monitor_f_dirichlet(run)) {
                    monitors.axis_growth = Some(f.fraction());
                    monitors.axis_growth_alpha = Some(alpha);
                }
            }
        }
        ProblemKind::NeumannFlux => {
            if let Some(f) = record(&mut notes, "gradient growth", monitor_f_neumann(run)) {
                monitors.gradient_growth = Some(f.all_samples.fraction());
                monitors.gradient_growth_window = (f.fit_window.checked > 0).then(|| f.fit_window.fraction());
                monitors.boundary_growth_window = (f.boundary.checked > 0).then(|| f.boundary.fraction());
                monitors.neumann_epsilon = Some(f.epsilon);
                monitors.neumann_epsilon_bound = Some(f.epsilon_bound);
            }
        }
    }

    let blowup_set = if run.blew_up {
        record(&mut notes, "blow-up set", estimate_blowup_set(run, DEFAULT_BOUND_LEVEL)).and_then(|set| {
            let (r_min, r_max) = set.hull()?;
            Some(BlowupSetSummary { level: set.level, r_min, r_max, nodes: set.radii.len() })
        })
    } else {
        None
    };

    let summary = RunSummary {
        config: *params,
        validation: run.spec.validation().cloned(),
        stop_reason: run.stop_reason,
        blew_up: run.blew_up,
        final_time: run.final_state.t,
        steps: run.final_state.step_index,
        samples: trace.len(),
        t_hat: estimate.map(|e| e.t_hat),
        t_hat_geometric: estimate.and_then(|e| e.t_hat_geometric),
        estimator_spread: estimate.and_then(|e| e.spread),
        relative_spread: estimate.and_then(|e| e.relative_spread(trace)),
        rate: rate.map(|r| RateSummary {
            slope: r.slope,
            intercept: r.intercept,
            rms_residual: r.rms_residual,
            theory_slope: r.theory_slope,
            envelope_log_c: r.envelope_log_c,
            lower_log_c: r.lower_log_c,
            window_start: r.window.start,
            window_end: r.window.end,
        }),
        monitors,
        blowup_set,
        notes,
    };
    Analysis { summary, estimate, rate }
}
