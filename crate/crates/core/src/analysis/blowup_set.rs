use serde::Serialize;

use super::AnalysisError;
use crate::solver::RunResult;

/// Default fraction of `u_stop` above which a node counts as blowing up.
pub const DEFAULT_BOUND_LEVEL: f64 = 0.5;

/// Nodes of the final profile above `level * u_stop`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowupSet {
    pub level: f64,
    pub threshold: f64,
    pub radii: Vec<f64>,
}

impl BlowupSet {
    /// Smallest and largest radius in the set.
    pub fn hull(&self) -> Option<(f64, f64)> {
        Some((*self.radii.first()?, *self.radii.last()?))
    }

    /// Whether the set is `{0}` up to `tol`.
    pub fn is_axis(&self, tol: f64) -> bool {
        self.hull().is_some_and(|(_, hi)| hi <= tol)
    }

    /// Whether the set lies within `tol` of the sphere `r = radius`.
    pub fn is_boundary(&self, radius: f64, tol: f64) -> bool {
        self.hull().is_some_and(|(lo, _)| lo >= radius - tol)
    }
}

pub fn estimate_blowup_set(run: &RunResult, level: f64) -> Result<BlowupSet, AnalysisError> {
    if !(level > 0.0 && level < 1.0) {
        return Err(AnalysisError::InvalidArgument(format!("level = {level} not in (0, 1)")));
    }
    if !run.blew_up {
        return Err(AnalysisError::NotBlownUp);
    }
    let grid = run.grid();
    let threshold = level * run.config.u_stop;
    let radii = run
        .final_state
        .field
        .values()
        .iter()
        .enumerate()
        .filter(|(_, &u)| u > threshold)
        .map(|(i, _)| grid.node(i))
        .collect();
    Ok(BlowupSet { level, threshold, radii })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hull_predicates() {
        let set = BlowupSet { level: 0.5, threshold: 2.0, radii: vec![0.0, 0.01] };
        assert!(set.is_axis(0.02));
        assert!(!set.is_axis(0.005));
        assert!(!set.is_boundary(1.0, 0.1));
        let edge = BlowupSet { level: 0.5, threshold: 2.0, radii: vec![0.48, 0.5] };
        assert!(edge.is_boundary(0.5, 0.025));
        assert!(BlowupSet { level: 0.5, threshold: 2.0, radii: vec![] }.hull().is_none());
    }
}
