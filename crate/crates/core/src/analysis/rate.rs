use serde::Serialize;

use super::{AnalysisError, BlowupTimeEstimate, FitWindow, RunTrace};
use crate::problem::ProblemKind;

/// Ordinary least squares `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub rms_residual: f64,
}

pub(crate) fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit, AnalysisError> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(AnalysisError::DegenerateFit(format!(
            "need two or more paired points, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if !(sxx > 0.0) || !sxy.is_finite() {
        return Err(AnalysisError::DegenerateFit("abscissae do not vary".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Ok(LinearFit { slope, intercept, rms_residual: (ss / n).sqrt() })
}

/// Fit of `u_k` against `-log(t_hat - t_k)` over the fit window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub t_hat: f64,
    pub slope: f64,
    pub intercept: f64,
    pub rms_residual: f64,
    pub window: FitWindow,
    pub estimator_spread: Option<f64>,
    /// Coefficient of the proven upper bound: `1/p` (interior) or `1/(2p)` (boundary).
    pub theory_slope: f64,
    /// Smallest `log C` with `u <= log C - theory_slope * log(t_hat - t)` on the window.
    pub envelope_log_c: f64,
    /// Largest `log c` with `u >= log c - log(t_hat - t)` on the window.
    pub lower_log_c: f64,
}

impl RateFit {
    /// True if the slope falls below `lo` while the fit itself is tight, the
    /// signature of a bound that holds but is not sharp.
    pub fn below_band_with_small_residual(&self, lo: f64, residual_tol: f64) -> bool {
        self.slope < lo && self.rms_residual <= residual_tol
    }
}

pub fn theory_slope(kind: ProblemKind, p: f64) -> f64 {
    match kind {
        ProblemKind::DirichletSource => 1.0 / p,
        ProblemKind::NeumannFlux => 1.0 / (2.0 * p),
    }
}

/// Rate fit on the default window with the time from `estimate`.
pub fn fit_rate(trace: &RunTrace, estimate: &BlowupTimeEstimate) -> Result<RateFit, AnalysisError> {
    fit_rate_in(trace, estimate.window, estimate.t_hat, estimate.spread)
}

pub fn fit_rate_in(
    trace: &RunTrace,
    window: FitWindow,
    t_hat: f64,
    estimator_spread: Option<f64>,
) -> Result<RateFit, AnalysisError> {
    if !trace.meta().blew_up {
        return Err(AnalysisError::NotBlownUp);
    }
    let samples = trace.samples();
    let mut xs = Vec::with_capacity(window.len());
    let mut ys = Vec::with_capacity(window.len());
    for i in window.indices() {
        let gap = t_hat - samples[i].t;
        if !(gap > 0.0) {
            return Err(AnalysisError::InvalidArgument(format!(
                "t_hat = {t_hat} does not exceed sample time {}",
                samples[i].t
            )));
        }
        xs.push(-gap.ln());
        ys.push(trace.observed(i));
    }
    let fit = linear_fit(&xs, &ys)?;
    let theory = theory_slope(trace.meta().kind, trace.meta().p);
    let envelope_log_c = xs.iter().zip(&ys).map(|(x, y)| y - theory * x).fold(f64::NEG_INFINITY, f64::max);
    let lower_log_c = xs.iter().zip(&ys).map(|(x, y)| y - x).fold(f64::INFINITY, f64::min);
    Ok(RateFit {
        t_hat,
        slope: fit.slope,
        intercept: fit.intercept,
        rms_residual: fit.rms_residual,
        window,
        estimator_spread,
        theory_slope: theory,
        envelope_log_c,
        lower_log_c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::TraceMeta;
    use approx::assert_relative_eq;

    #[test]
    fn exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        let fit = linear_fit(&xs, &ys).unwrap();
        assert_relative_eq!(fit.slope, -0.5, epsilon = 1e-15);
        assert_relative_eq!(fit.intercept, 2.0, epsilon = 1e-15);
        assert!(fit.rms_residual < 1e-15);
    }

    #[test]
    fn constant_abscissa_is_degenerate() {
        assert!(linear_fit(&[1.0, 1.0, 1.0], &[0.0, 1.0, 2.0]).is_err());
        assert!(linear_fit(&[1.0], &[0.0]).is_err());
    }

    #[test]
    fn synthetic_profile_slope() {
        // u = c - 0.25 log(1 - t): slope 0.25, envelope at theory slope 1/p = 0.5
        let meta = TraceMeta {
            kind: ProblemKind::DirichletSource,
            p: 2.0,
            u_stop: 10.0,
            radius: 1.0,
            blew_up: true,
        };
        let series: Vec<_> = (0..100)
            .map(|k| {
                let t = 0.9 * k as f64 / 99.0;
                (t, 0.3 - 0.25 * (1.0 - t).ln())
            })
            .collect();
        let trace = RunTrace::from_series(meta, &series).unwrap();
        let window = FitWindow::new(&trace, 0, 100).unwrap();
        let fit = fit_rate_in(&trace, window, 1.0, None).unwrap();
        assert_relative_eq!(fit.slope, 0.25, epsilon = 1e-12);
        assert_relative_eq!(fit.intercept, 0.3, epsilon = 1e-12);
        assert_eq!(fit.theory_slope, 0.5);
        // u - 0.5 x = 0.3 - 0.25 x is largest at x = 0
        assert_relative_eq!(fit.envelope_log_c, 0.3, epsilon = 1e-12);
        assert!(fit.below_band_with_small_residual(0.4, 1e-8));
        assert!(fit_rate_in(&trace, window, 0.5, None).is_err());
    }
}
