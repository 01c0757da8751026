use serde::Serialize;

use super::quadrature::GFunction;
use super::{AnalysisError, FitWindow};
use crate::problem::{validate_dirichlet_ic, validate_neumann_ic, ProblemKind};
use crate::solver::RunResult;

/// Default `δ` for the gradient functional and the pointwise bound.
pub const DEFAULT_DELTA: f64 = 0.5;

// Tolerances scale with the truncation error of the second-order stencil.
const TOL_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Location {
    pub r: f64,
    pub t: f64,
}

/// Outcome of checking one inequality `margin >= -tol` at many space-time points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonitorReport {
    pub name: String,
    pub checked: usize,
    pub satisfied: usize,
    /// Smallest raw margin seen (negative means the inequality failed there).
    pub worst_margin: f64,
    pub worst_location: Option<Location>,
}

impl MonitorReport {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            checked: 0,
            satisfied: 0,
            worst_margin: f64::INFINITY,
            worst_location: None,
        }
    }

    fn check(&mut self, margin: f64, tol: f64, r: f64, t: f64) {
        self.checked += 1;
        if margin >= -tol {
            self.satisfied += 1;
        }
        if !(margin >= self.worst_margin) {
            self.worst_margin = margin;
            self.worst_location = Some(Location { r, t });
        }
    }

    /// Fraction of checked points that satisfy the inequality (1 when empty).
    pub fn fraction(&self) -> f64 {
        if self.checked == 0 {
            1.0
        } else {
            self.satisfied as f64 / self.checked as f64
        }
    }

    pub fn all_satisfied(&self) -> bool {
        self.satisfied == self.checked
    }
}

fn require_kind(run: &RunResult, expected: ProblemKind) -> Result<(), AnalysisError> {
    if run.spec.kind() == expected {
        Ok(())
    } else {
        Err(AnalysisError::KindMismatch { expected })
    }
}

/// `∂_r u` at every node: centered inside, zero at the axis, and the
/// boundary value from the closure (one-sided for Dirichlet, the flux for Neumann).
fn radial_derivative(run: &RunResult, u: &[f64], out: &mut Vec<f64>) {
    let h = run.grid().spacing();
    let m = u.len() - 1;
    out.clear();
    out.push(0.0);
    for i in 1..m {
        out.push((u[i + 1] - u[i - 1]) / (2.0 * h));
    }
    let boundary = match run.spec.kind() {
        ProblemKind::DirichletSource => (3.0 * u[m] - 4.0 * u[m - 1] + u[m - 2]) / (2.0 * h),
        ProblemKind::NeumannFlux if run.spec.forcing() => {
            run.spec.nonlinearity().f(u[m]).unwrap_or(f64::INFINITY)
        }
        ProblemKind::NeumannFlux => 0.0,
    };
    out.push(boundary);
}

/// Forward difference in time between consecutive samples.
fn time_derivative(run: &RunResult, k: usize, i: usize) -> f64 {
    let s = run.trace.samples();
    (run.snapshots[k + 1][i] - run.snapshots[k][i]) / (s[k + 1].t - s[k].t)
}

fn pow_p(u: f64, p: f64) -> f64 {
    u.max(0.0).powf(p)
}

fn check_delta(delta: f64) -> Result<(), AnalysisError> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(AnalysisError::InvalidArgument(format!("delta = {delta} not in (0, 1)")))
    }
}

/// Checks `G(u(r,t)) >= ε r²/2` at every sample and node of a Dirichlet run,
/// with `G(s) = ∫_s^∞ exp(-δ u^p) du`.
pub fn check_pointwise_bound(
    run: &RunResult,
    delta: f64,
    epsilon: f64,
) -> Result<MonitorReport, AnalysisError> {
    require_kind(run, ProblemKind::DirichletSource)?;
    check_delta(delta)?;
    if !(epsilon > 0.0) {
        return Err(AnalysisError::InvalidArgument(format!("epsilon = {epsilon} must be positive")));
    }
    let g = GFunction::new(delta, run.spec.p())?;
    let grid = run.grid();
    let h2 = grid.spacing().powi(2);
    let mut report = MonitorReport::new("pointwise_bound");
    for (sample, u) in run.trace.samples().iter().zip(&run.snapshots) {
        for (i, &ui) in u.iter().enumerate() {
            let r = grid.node(i);
            let lhs = g.value(ui.max(0.0))?;
            let rhs = 0.5 * epsilon * r * r;
            report.check(lhs - rhs, TOL_FACTOR * h2 * lhs.max(rhs), r, sample.t);
        }
    }
    Ok(report)
}

/// Calibrated `ε` for the gradient functional: half the largest value the
/// initial data admits.
fn j_epsilon(run: &RunResult, delta: f64) -> Result<f64, AnalysisError> {
    let frid = match run.spec.validation().and_then(|v| v.frid_delta) {
        Some(d) => d,
        None => validate_dirichlet_ic(run.spec.initial_data(), run.spec.p())
            .map_err(|e| AnalysisError::PreconditionFailed(e.to_string()))?
            .frid_delta
            .unwrap_or(0.0),
    };
    if !(frid > 0.0) {
        return Err(AnalysisError::PreconditionFailed(format!(
            "initial data not strictly decreasing away from the axis (δ_0 = {frid})"
        )));
    }
    let u0_max = run.spec.initial_data().values().max();
    let p = run.spec.p();
    Ok(0.5 * (frid * (-delta * pow_p(u0_max, p)).exp()).min((1.0 - delta) / (2.0 * delta)))
}

/// Checks `J = r^{n-1} u_r + ε r^n exp(δ u^p) <= 0` at every sample and node.
/// Returns the calibrated `ε` with the report.
pub fn monitor_j(run: &RunResult, delta: f64) -> Result<(f64, MonitorReport), AnalysisError> {
    require_kind(run, ProblemKind::DirichletSource)?;
    check_delta(delta)?;
    let epsilon = j_epsilon(run, delta)?;
    let grid = run.grid();
    let n = grid.dim();
    let p = run.spec.p();
    let h2 = grid.spacing().powi(2);
    let mut report = MonitorReport::new("gradient_functional");
    let mut ur = Vec::with_capacity(grid.num_nodes());
    for (sample, u) in run.trace.samples().iter().zip(&run.snapshots) {
        radial_derivative(run, u, &mut ur);
        for (i, (&ui, &uri)) in u.iter().zip(&ur).enumerate() {
            let r = grid.node(i);
            let transport = r.powf(n - 1.0) * uri;
            let growth = epsilon * r.powf(n) * (delta * pow_p(ui, p)).exp();
            let j = transport + growth;
            report.check(-j, TOL_FACTOR * h2 * (transport.abs() + growth), r, sample.t);
        }
    }
    Ok((epsilon, report))
}

/// Checks `u_t(0,t) >= α f(u(0,t))` from the first time `u(0,t)` reaches
/// `p^{1/(p-1)}` to the end of the fit window. `α` is half the smallest
/// ratio `u_t / f(u)` over `r <= R/2` at that time.
pub fn monitor_f_dirichlet(run: &RunResult) -> Result<(f64, MonitorReport), AnalysisError> {
    require_kind(run, ProblemKind::DirichletSource)?;
    if !run.blew_up {
        return Err(AnalysisError::NotBlownUp);
    }
    let nl = run.spec.nonlinearity();
    let threshold = nl.activation_threshold();
    let window = run.trace.fit_window()?;
    let samples = run.trace.samples();
    let last = samples.len() - 1;
    let tau = (0..last)
        .find(|&k| samples[k].u_center >= threshold)
        .ok_or(AnalysisError::ThresholdNeverReached { threshold })?;
    let grid = run.grid();
    let half = 0.5 * grid.radius();
    let mut ratio = f64::INFINITY;
    for i in (0..grid.num_nodes()).take_while(|&i| grid.node(i) <= half) {
        let f = nl.f(run.snapshots[tau][i]).map_err(|e| AnalysisError::PreconditionFailed(e.to_string()))?;
        ratio = ratio.min(time_derivative(run, tau, i) / f);
    }
    if !(ratio > 0.0) {
        return Err(AnalysisError::PreconditionFailed(format!(
            "u_t / f(u) = {ratio} near the axis at the activation time"
        )));
    }
    let alpha = 0.5 * ratio;
    let h2 = grid.spacing().powi(2);
    let mut report = MonitorReport::new("axis_growth");
    for k in tau..window.end.min(last) {
        let ut = time_derivative(run, k, 0);
        let f = nl.f(run.snapshots[k][0]).map_err(|e| AnalysisError::PreconditionFailed(e.to_string()))?;
        report.check(ut - alpha * f, TOL_FACTOR * h2 * (ut.abs() + alpha * f), 0.0, samples[k].t);
    }
    Ok((alpha, report))
}

/// Result of [`monitor_f_neumann`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeumannFReport {
    pub epsilon: f64,
    /// `p u_0(R)^{p-1} / 2`; the calibrated `ε` never exceeds it.
    pub epsilon_bound: f64,
    /// `u_t >= ε u_r²` over every sample pair and node.
    pub all_samples: MonitorReport,
    /// The same inequality restricted to the fit window.
    pub fit_window: MonitorReport,
    /// Its boundary consequence `u_t(R,t) >= ε exp(2 u(R,t)^p)` on the fit window.
    pub boundary: MonitorReport,
}

/// Checks `u_t >= ε u_r²` for a Neumann run. `ε` is half the largest value
/// allowed by the initial data: `min(p u_0(R)^{p-1}/2, a / max u_{0r}²)`
/// where `a` is the convexity floor of the data.
pub fn monitor_f_neumann(run: &RunResult) -> Result<NeumannFReport, AnalysisError> {
    require_kind(run, ProblemKind::NeumannFlux)?;
    let p = run.spec.p();
    let grid = run.grid();
    let data = run.spec.initial_data();
    let a = convexity_floor(run)?;
    let u0_r = data.values().values()[grid.num_cells()];
    if !(u0_r > 0.0) {
        return Err(AnalysisError::PreconditionFailed(format!("u_0(R) = {u0_r} must be positive")));
    }
    let epsilon_bound = 0.5 * p * u0_r.powf(p - 1.0);
    let max_ur2 =
        grid.nodes().map(|r| data.family().radial_derivative(r, grid.radius()).powi(2)).fold(0.0, f64::max);
    let gradient_bound = if max_ur2 > 0.0 { a / max_ur2 } else { f64::INFINITY };
    let epsilon = 0.5 * epsilon_bound.min(gradient_bound);

    let window = run.trace.fit_window().ok();
    let h2 = grid.spacing().powi(2);
    let samples = run.trace.samples();
    let m = grid.num_cells();
    let mut all_samples = MonitorReport::new("gradient_growth");
    let mut in_window = MonitorReport::new("gradient_growth_window");
    let mut boundary = MonitorReport::new("boundary_growth_window");
    let mut ur = Vec::with_capacity(grid.num_nodes());
    let windowed = |k: usize, w: Option<FitWindow>| w.is_some_and(|w| k >= w.start && k < w.end);
    for k in 0..samples.len().saturating_sub(1) {
        radial_derivative(run, &run.snapshots[k], &mut ur);
        let t = samples[k].t;
        for i in 0..=m {
            let ut = time_derivative(run, k, i);
            let rhs = epsilon * ur[i] * ur[i];
            let margin = ut - rhs;
            let tol = TOL_FACTOR * h2 * (ut.abs() + rhs);
            all_samples.check(margin, tol, grid.node(i), t);
            if windowed(k, window) {
                in_window.check(margin, tol, grid.node(i), t);
            }
        }
        if windowed(k, window) {
            let ut = time_derivative(run, k, m);
            let rhs = epsilon * (2.0 * pow_p(run.snapshots[k][m], p)).exp();
            boundary.check(ut - rhs, TOL_FACTOR * h2 * (ut.abs() + rhs), grid.radius(), t);
        }
    }
    Ok(NeumannFReport { epsilon, epsilon_bound, all_samples, fit_window: in_window, boundary })
}

fn convexity_floor(run: &RunResult) -> Result<f64, AnalysisError> {
    let a = match run.spec.validation().and_then(|v| v.convexity_floor) {
        Some(a) => a,
        None => validate_neumann_ic(run.spec.initial_data(), run.spec.p())
            .map_err(|e| AnalysisError::PreconditionFailed(e.to_string()))?
            .convexity_floor
            .unwrap_or(0.0),
    };
    if a > 0.0 {
        Ok(a)
    } else {
        Err(AnalysisError::PreconditionFailed(format!("convexity floor {a} must be positive")))
    }
}

/// Checks the monotonicity the solutions inherit from their data.
///
/// Dirichlet: `u_r <= 0` and `u_t >= 0`. Neumann: `u_r >= 0` and `u_t >= a`
/// with `a` the convexity floor. Both with tolerance `10 h²`.
pub fn monitor_monotonicity(run: &RunResult) -> Result<MonitorReport, AnalysisError> {
    let grid = run.grid();
    let tol = TOL_FACTOR * grid.spacing().powi(2);
    let kind = run.spec.kind();
    let (sign, ut_floor) = match kind {
        ProblemKind::DirichletSource => (-1.0, 0.0),
        ProblemKind::NeumannFlux => (1.0, convexity_floor(run)?),
    };
    let samples = run.trace.samples();
    let mut report = MonitorReport::new("monotonicity");
    let mut ur = Vec::with_capacity(grid.num_nodes());
    for (k, u) in run.snapshots.iter().enumerate() {
        radial_derivative(run, u, &mut ur);
        let t = samples[k].t;
        for (i, &d) in ur.iter().enumerate() {
            report.check(sign * d, tol, grid.node(i), t);
            if k + 1 < samples.len() {
                // the pinned Dirichlet boundary has u_t = 0 by construction
                let floor = if kind == ProblemKind::DirichletSource && i == grid.num_cells() {
                    0.0
                } else {
                    ut_floor
                };
                report.check(time_derivative(run, k, i) - floor, tol, grid.node(i), t);
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_tracks_worst_and_fraction() {
        let mut r = MonitorReport::new("x");
        r.check(1.0, 0.0, 0.0, 0.0);
        r.check(-0.5, 0.1, 0.2, 1.0);
        r.check(-0.05, 0.1, 0.3, 2.0);
        assert_eq!(r.checked, 3);
        assert_eq!(r.satisfied, 2);
        assert_eq!(r.worst_margin, -0.5);
        assert_eq!(r.worst_location, Some(Location { r: 0.2, t: 1.0 }));
        assert!((r.fraction() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(MonitorReport::new("empty").fraction(), 1.0);
    }
}
