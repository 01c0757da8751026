use serde::Serialize;

use super::quadrature::GFunction;
use super::rate::linear_fit;
use super::{AnalysisError, FitWindow, RunTrace};

/// Trailing window samples used by the regression estimator.
pub const REGRESSION_TAIL: usize = 50;
/// Trailing step sizes used by the geometric estimator.
pub const GEOMETRIC_TAIL: usize = 20;

/// Transform `y(u)` that is close to linear in `t` as `t -> T`, with
/// `y -> 0` at blow-up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum GrowthLaw {
    /// `y = ∫_u^∞ exp(-s^p) ds`, exactly `T - t` for `u' = exp(u^p)`.
    SourceIntegral,
    /// `y = exp(-rate * u)`, exactly linear for `u' = exp(rate * u) / rate`.
    Exponential { rate: f64 },
}

impl GrowthLaw {
    fn transformer(self, p: f64) -> Result<impl Fn(f64) -> Result<f64, AnalysisError>, AnalysisError> {
        let g = match self {
            GrowthLaw::SourceIntegral => Some(GFunction::general(1.0, p)?),
            GrowthLaw::Exponential { rate } if rate > 0.0 && rate.is_finite() => None,
            GrowthLaw::Exponential { rate } => {
                return Err(AnalysisError::InvalidArgument(format!("growth rate {rate} must be positive")))
            }
        };
        Ok(move |u: f64| match (self, g) {
            (GrowthLaw::Exponential { rate }, _) => Ok((-rate * u).exp()),
            (_, Some(g)) => g.value(u.max(0.0)),
            _ => unreachable!("source law always carries its integral"),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlowupTimeEstimate {
    /// The reported blow-up time (the regression estimate).
    pub t_hat: f64,
    pub t_hat_regression: f64,
    /// Geometric extrapolation of the step sizes, `None` if they do not shrink.
    pub t_hat_geometric: Option<f64>,
    /// `|t_hat_regression - t_hat_geometric|`.
    pub spread: Option<f64>,
    pub window: FitWindow,
}

impl BlowupTimeEstimate {
    /// Spread relative to the time the observable spends in the fit window.
    pub fn relative_spread(&self, trace: &RunTrace) -> Option<f64> {
        let t0 = trace.samples()[self.window.start].t;
        self.spread.map(|s| s / (self.t_hat - t0))
    }
}

/// Blow-up time of a run that stopped on the threshold, using the default
/// fit window and [`GrowthLaw::SourceIntegral`].
pub fn estimate_blowup_time(trace: &RunTrace) -> Result<BlowupTimeEstimate, AnalysisError> {
    if !trace.meta().blew_up {
        return Err(AnalysisError::NotBlownUp);
    }
    let window = trace.fit_window()?;
    estimate_blowup_time_in(trace, window, GrowthLaw::SourceIntegral)
}

/// Blow-up time from an explicit window and growth law.
///
/// The regression estimate fits `y(u_k) = a + b t_k` over the last
/// [`REGRESSION_TAIL`] window samples and returns the root `t = -a/b`.
/// The geometric estimate fits `log dt_k` linearly over the last
/// [`GEOMETRIC_TAIL`] samples and sums the resulting series of steps.
pub fn estimate_blowup_time_in(
    trace: &RunTrace,
    window: FitWindow,
    law: GrowthLaw,
) -> Result<BlowupTimeEstimate, AnalysisError> {
    if !trace.meta().blew_up {
        return Err(AnalysisError::NotBlownUp);
    }
    if window.len() < REGRESSION_TAIL {
        return Err(AnalysisError::WindowTooSmall { needed: REGRESSION_TAIL, got: window.len() });
    }
    let transform = law.transformer(trace.meta().p)?;
    let samples = trace.samples();
    let tail = &samples[window.end - REGRESSION_TAIL..window.end];
    let t_ref = tail[0].t;
    let mut xs = Vec::with_capacity(REGRESSION_TAIL);
    let mut ys = Vec::with_capacity(REGRESSION_TAIL);
    for (k, s) in tail.iter().enumerate() {
        xs.push(s.t - t_ref);
        ys.push(transform(trace.observed(window.end - REGRESSION_TAIL + k))?);
    }
    let fit = linear_fit(&xs, &ys)?;
    if !(fit.slope < 0.0) {
        return Err(AnalysisError::DegenerateFit(format!(
            "transformed observable not decreasing (slope {})",
            fit.slope
        )));
    }
    let t_hat_regression = t_ref - fit.intercept / fit.slope;

    let t_hat_geometric = geometric_estimate(trace);
    let spread = t_hat_geometric.map(|tb| (t_hat_regression - tb).abs());
    Ok(BlowupTimeEstimate { t_hat: t_hat_regression, t_hat_regression, t_hat_geometric, spread, window })
}

fn geometric_estimate(trace: &RunTrace) -> Option<f64> {
    let samples = trace.samples();
    let n = samples.len();
    if n < GEOMETRIC_TAIL + 1 {
        return None;
    }
    let tail = &samples[n - GEOMETRIC_TAIL..];
    if tail.iter().any(|s| !(s.dt > 0.0)) {
        return None;
    }
    let xs: Vec<f64> = tail.iter().map(|s| s.step as f64 - tail[0].step as f64).collect();
    let ys: Vec<f64> = tail.iter().map(|s| s.dt.ln()).collect();
    let q = linear_fit(&xs, &ys).ok()?.slope.exp();
    if !(q < 1.0) {
        return None;
    }
    let last = tail[GEOMETRIC_TAIL - 1];
    Some(last.t + last.dt * q / (1.0 - q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::TraceMeta;
    use crate::problem::ProblemKind;
    use approx::assert_relative_eq;

    fn meta(p: f64, u_stop: f64, blew_up: bool) -> TraceMeta {
        TraceMeta { kind: ProblemKind::DirichletSource, p, u_stop, radius: 1.0, blew_up }
    }

    #[test]
    fn exponential_law_recovers_synthetic_time() {
        // u = -(1/κ) log(κ (T - t)) with T = 1, κ = 2
        let kappa = 2.0;
        let series: Vec<_> = (0..200)
            .map(|k| {
                let t = 0.5 + 0.49 * k as f64 / 199.0;
                (t, -(kappa * (1.0 - t)).ln() / kappa)
            })
            .collect();
        let trace = RunTrace::from_series(meta(2.0, 10.0, true), &series).unwrap();
        let window = FitWindow::new(&trace, 0, 195).unwrap();
        let est = estimate_blowup_time_in(&trace, window, GrowthLaw::Exponential { rate: kappa }).unwrap();
        assert_relative_eq!(est.t_hat, 1.0, max_relative = 1e-10);
        // uniform spacing: no geometric estimate
        assert_eq!(est.t_hat_geometric, None);
    }

    #[test]
    fn requires_blow_up() {
        let series: Vec<_> = (0..100).map(|k| (k as f64, k as f64)).collect();
        let trace = RunTrace::from_series(meta(2.0, 100.0, false), &series).unwrap();
        assert_eq!(estimate_blowup_time(&trace).unwrap_err(), AnalysisError::NotBlownUp);
    }

    #[test]
    fn window_needs_fifty_samples() {
        let series: Vec<_> = (0..45).map(|k| (k as f64 * 0.01, 1.0 + k as f64 * 0.01)).collect();
        let trace = RunTrace::from_series(meta(2.0, 10.0, true), &series).unwrap();
        let window = FitWindow::new(&trace, 0, 40).unwrap();
        assert!(matches!(
            estimate_blowup_time_in(&trace, window, GrowthLaw::SourceIntegral),
            Err(AnalysisError::WindowTooSmall { needed: 50, got: 40 })
        ));
    }

    #[test]
    fn geometric_steps_sum_to_limit() {
        // t_k = 1 - 0.9^k: steps shrink by q = 0.9 and accumulate at 1
        let series: Vec<_> = (0..120).map(|k| (1.0 - 0.9f64.powi(k), k as f64)).collect();
        let trace = RunTrace::from_series(meta(2.0, 1e3, true), &series).unwrap();
        assert_relative_eq!(geometric_estimate(&trace).unwrap(), 1.0, max_relative = 1e-12);
    }
}
