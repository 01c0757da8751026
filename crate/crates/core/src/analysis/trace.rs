use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::problem::ProblemKind;

/// Samples dropped from the end of every fit window.
pub const TRIM_TAIL: usize = 5;
/// Minimum number of samples in a fit window.
pub const MIN_WINDOW: usize = 30;

/// Per-sample runtime flags.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SampleFlags(u8);

impl SampleFlags {
    /// Some nodal value is negative.
    pub const NEGATIVE: Self = Self(1);
    /// `max u` dropped since the previous sample.
    pub const UMAX_DECREASED: Self = Self(1 << 1);
    /// The maximum is not at the center (Dirichlet) or the sphere (Neumann).
    pub const ARGMAX_OFF_AXIS: Self = Self(1 << 2);
    /// The step size sat on `dt_min`.
    pub const DT_FLOOR: Self = Self(1 << 3);
    /// Part of the stride-1 window before the stop.
    pub const DENSE_TAIL: Self = Self(1 << 4);

    pub const fn empty() -> Self {
        Self(0)
    }

    pub const fn bits(self) -> u8 {
        self.0
    }

    pub fn contains(self, other: Self) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn insert(&mut self, other: Self) {
        self.0 |= other.0;
    }
}

/// Run-level facts the analysis needs alongside the samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub kind: ProblemKind,
    pub p: f64,
    pub u_stop: f64,
    pub radius: f64,
    pub blew_up: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    /// Accepted-step index that produced the sample (0 for the initial state).
    pub step: usize,
    pub t: f64,
    /// Size of the step that produced the sample (0 for the initial state).
    pub dt: f64,
    pub u_center: f64,
    pub u_boundary: f64,
    pub u_max: f64,
    pub argmax_radius: f64,
    pub flags: SampleFlags,
}

/// Time series of scalar diagnostics with strictly increasing times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    meta: TraceMeta,
    samples: Vec<TraceSample>,
}

impl RunTrace {
    pub fn new(meta: TraceMeta, samples: Vec<TraceSample>) -> Result<Self, AnalysisError> {
        if let Some(i) = samples.windows(2).position(|w| !(w[1].t > w[0].t)) {
            return Err(AnalysisError::NonMonotoneTimes(i + 1));
        }
        Ok(Self { meta, samples })
    }

    /// Builds a trace from `(t, u)` pairs, with `u` used for every column.
    /// Sample spacing doubles as `dt`. Intended for synthetic data.
    pub fn from_series(meta: TraceMeta, series: &[(f64, f64)]) -> Result<Self, AnalysisError> {
        let samples = series
            .iter()
            .enumerate()
            .map(|(i, &(t, u))| TraceSample {
                step: i,
                t,
                dt: if i == 0 { 0.0 } else { t - series[i - 1].0 },
                u_center: u,
                u_boundary: u,
                u_max: u,
                argmax_radius: 0.0,
                flags: SampleFlags::empty(),
            })
            .collect();
        Self::new(meta, samples)
    }

    pub fn meta(&self) -> &TraceMeta {
        &self.meta
    }

    pub fn samples(&self) -> &[TraceSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// The blow-up observable: `u(0,t)` for the Dirichlet problem,
    /// `u(R,t) = max u` for the Neumann problem.
    pub fn observed(&self, i: usize) -> f64 {
        let s = &self.samples[i];
        match self.meta.kind {
            ProblemKind::DirichletSource => s.u_center,
            ProblemKind::NeumannFlux => s.u_boundary,
        }
    }

    /// Samples with the observable in `[u_stop/2, u_stop]`, minus the last
    /// [`TRIM_TAIL`] samples of the trace.
    pub fn fit_window(&self) -> Result<FitWindow, AnalysisError> {
        let lower = 0.5 * self.meta.u_stop;
        let upper = self.meta.u_stop;
        let mut end = self.len().saturating_sub(TRIM_TAIL);
        let start = (0..end).find(|&i| self.observed(i) >= lower).unwrap_or(end);
        while end > start && self.observed(end - 1) > upper {
            end -= 1;
        }
        FitWindow::new(self, start, end)
    }
}

/// Half-open range of sample indices used by the fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitWindow {
    pub start: usize,
    pub end: usize,
}

impl FitWindow {
    /// Explicit window; must hold at least [`MIN_WINDOW`] samples.
    pub fn new(trace: &RunTrace, start: usize, end: usize) -> Result<Self, AnalysisError> {
        if end > trace.len() || start > end {
            return Err(AnalysisError::InvalidArgument(format!(
                "window {start}..{end} outside trace of {} samples",
                trace.len()
            )));
        }
        if end - start < MIN_WINDOW {
            return Err(AnalysisError::WindowTooSmall { needed: MIN_WINDOW, got: end - start });
        }
        Ok(Self { start, end })
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    pub fn indices(&self) -> std::ops::Range<usize> {
        self.start..self.end
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta(u_stop: f64) -> TraceMeta {
        TraceMeta { kind: ProblemKind::DirichletSource, p: 2.0, u_stop, radius: 1.0, blew_up: true }
    }

    #[test]
    fn rejects_repeated_times() {
        let err = RunTrace::from_series(meta(4.0), &[(0.0, 1.0), (0.1, 1.1), (0.1, 1.2)]).unwrap_err();
        assert_eq!(err, AnalysisError::NonMonotoneTimes(2));
    }

    #[test]
    fn window_trims_tail_and_low_values() {
        // u_k = k / 25 for k = 0..=100, u_stop = 4: window starts at u = 2 (k = 50)
        let series: Vec<_> = (0..=100).map(|k| (k as f64, k as f64 / 25.0)).collect();
        let trace = RunTrace::from_series(meta(4.0), &series).unwrap();
        let w = trace.fit_window().unwrap();
        assert_eq!(w.start, 50);
        assert_eq!(w.end, 96);
    }

    #[test]
    fn window_too_small() {
        let series: Vec<_> = (0..=40).map(|k| (k as f64, k as f64 / 10.0)).collect();
        let trace = RunTrace::from_series(meta(4.0), &series).unwrap();
        assert!(matches!(trace.fit_window(), Err(AnalysisError::WindowTooSmall { .. })));
    }

    #[test]
    fn flags_compose() {
        let mut f = SampleFlags::empty();
        f.insert(SampleFlags::NEGATIVE);
        f.insert(SampleFlags::DENSE_TAIL);
        assert!(f.contains(SampleFlags::NEGATIVE));
        assert!(!f.contains(SampleFlags::DT_FLOOR));
        assert_eq!(f.bits(), 0b10001);
    }
}
