//! Experiment configuration: a flat TOML table, bounds-checked on load.

use std::path::{Path, PathBuf};

use blowup_core::grid::MIN_CELLS;
use blowup_core::problem::{solve_neumann_curvature, InitialFamily, ProblemKind};
use blowup_core::solver::SolverConfig;
use serde::{Deserialize, Serialize};

use crate::LabError;

const MAX_AXIS_LEN: usize = 64;

/// One experiment, optionally with sweep axes.
///
/// ```toml
/// kind = "dirichlet_source"
/// p = 2.0
/// n_dim = 1
/// radius = 1.5
/// num_cells = 200
/// amplitude = 1.0
/// shape = 1
/// sweep_num_cells = [100, 200, 400]
/// ```
///
/// For `neumann_flux`, `center_value` sets `u_0(0)` and `curvature` is solved
/// from the boundary compatibility condition unless given. The amplitude
/// axis sweeps `center_value` for that kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ProblemKind,
    pub p: f64,
    #[serde(default = "default_n_dim")]
    pub n_dim: usize,
    pub radius: f64,
    pub num_cells: usize,

    pub amplitude: Option<f64>,
    pub shape: Option<u32>,
    pub center_value: Option<f64>,
    pub curvature: Option<f64>,

    pub cfl_safety: Option<f64>,
    pub reaction_safety: Option<f64>,
    pub dt_min: Option<f64>,
    pub u_stop: Option<f64>,
    pub t_max: Option<f64>,
    pub record_every: Option<usize>,

    #[serde(default)]
    pub sweep_p: Vec<f64>,
    #[serde(default)]
    pub sweep_num_cells: Vec<usize>,
    #[serde(default)]
    pub sweep_amplitude: Vec<f64>,

    pub out_dir: Option<PathBuf>,
}

fn default_n_dim() -> usize {
    1
}

/// Fully resolved parameters of a single run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunParams {
    pub kind: ProblemKind,
    pub p: f64,
    pub n_dim: usize,
    pub radius: f64,
    pub num_cells: usize,
    pub family: InitialFamily,
    pub solver: SolverConfig,
}

/// Coordinates of one sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub p: f64,
    pub num_cells: usize,
    pub amplitude: f64,
}

fn parse_err(msg: impl Into<String>) -> LabError {
    LabError::ConfigParse(msg.into())
}

fn check_range(name: &str, value: f64, lo: f64, hi: f64) -> Result<(), LabError> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(())
    } else {
        Err(parse_err(format!("{name} = {value} outside [{lo}, {hi}]")))
    }
}

fn check_p(p: f64) -> Result<(), LabError> {
    if !(p > 1.0) {
        return Err(parse_err(format!("p = {p} violates the hypothesis p > 1")));
    }
    check_range("p", p, 1.0, 16.0)
}

fn check_cells(m: usize) -> Result<(), LabError> {
    if (MIN_CELLS..=100_000).contains(&m) {
        Ok(())
    } else {
        Err(parse_err(format!("num_cells = {m} outside [{}, 100000]", MIN_CELLS)))
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, LabError> {
        let cfg: Self = toml::from_str(text).map_err(|e| parse_err(e.message().to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| LabError::ConfigRead { path: path.to_path_buf(), source })?;
        Self::from_toml_str(&text)
    }

    /// Bounds on every field, including each sweep value and the solver
    /// settings at every swept exponent.
    pub fn check(&self) -> Result<(), LabError> {
        check_p(self.p)?;
        if !(1..=16).contains(&self.n_dim) {
            return Err(parse_err(format!("n_dim = {} outside [1, 16]", self.n_dim)));
        }
        check_range("radius", self.radius, 1e-6, 100.0)?;
        check_cells(self.num_cells)?;
        match self.kind {
            ProblemKind::DirichletSource => {
                if self.center_value.is_some() || self.curvature.is_some() {
                    return Err(parse_err("center_value and curvature only apply to neumann_flux"));
                }
                let a = self.amplitude.ok_or_else(|| parse_err("dirichlet_source needs amplitude"))?;
                check_range("amplitude", a, 0.0, 50.0)?;
                if let Some(k) = self.shape {
                    if !(1..=16).contains(&k) {
                        return Err(parse_err(format!("shape = {k} outside [1, 16]")));
                    }
                }
            }
            ProblemKind::NeumannFlux => {
                if self.amplitude.is_some() || self.shape.is_some() {
                    return Err(parse_err("amplitude and shape only apply to dirichlet_source"));
                }
                check_range("center_value", self.center_value.unwrap_or(0.0), -50.0, 50.0)?;
                if let Some(b) = self.curvature {
                    check_range("curvature", b, 1e-12, 1e6)?;
                }
            }
        }
        if let Some(r) = self.record_every {
            if r == 0 {
                return Err(parse_err("record_every must be >= 1"));
            }
        }
        for (name, len) in [
            ("sweep_p", self.sweep_p.len()),
            ("sweep_num_cells", self.sweep_num_cells.len()),
            ("sweep_amplitude", self.sweep_amplitude.len()),
        ] {
            if len > MAX_AXIS_LEN {
                return Err(parse_err(format!("{name} has {len} values, at most {MAX_AXIS_LEN} allowed")));
            }
        }
        for &p in &self.sweep_p {
            check_p(p)?;
        }
        for &m in &self.sweep_num_cells {
            check_cells(m)?;
        }
        let amp_range = match self.kind {
            ProblemKind::DirichletSource => (0.0, 50.0),
            ProblemKind::NeumannFlux => (-50.0, 50.0),
        };
        for &a in &self.sweep_amplitude {
            check_range("sweep_amplitude value", a, amp_range.0, amp_range.1)?;
        }
        for p in std::iter::once(self.p).chain(self.sweep_p.iter().copied()) {
            self.solver_config(p).validate(p).map_err(|e| parse_err(e.to_string()))?;
        }
        Ok(())
    }

    pub fn has_sweep(&self) -> bool {
        !(self.sweep_p.is_empty() && self.sweep_num_cells.is_empty() && self.sweep_amplitude.is_empty())
    }

    /// Solver settings at exponent `p`: defaults overridden by the config.
    pub fn solver_config(&self, p: f64) -> SolverConfig {
        let d = SolverConfig::for_exponent(p);
        SolverConfig {
            cfl_safety: self.cfl_safety.unwrap_or(d.cfl_safety),
            reaction_safety: self.reaction_safety.unwrap_or(d.reaction_safety),
            dt_min: self.dt_min.unwrap_or(d.dt_min),
            u_stop: self.u_stop.unwrap_or(d.u_stop),
            t_max: self.t_max.unwrap_or(d.t_max),
            record_every: self.record_every.unwrap_or(d.record_every),
        }
    }

    fn base_amplitude(&self) -> f64 {
        match self.kind {
            ProblemKind::DirichletSource => self.amplitude.unwrap_or(0.0),
            ProblemKind::NeumannFlux => self.center_value.unwrap_or(0.0),
        }
    }

    pub fn base_point(&self) -> SweepPoint {
        SweepPoint { p: self.p, num_cells: self.num_cells, amplitude: self.base_amplitude() }
    }

    /// Cartesian product of the sweep axes (missing axes take the base value),
    /// ordered by `p`, then `num_cells`, then amplitude.
    pub fn sweep_points(&self) -> Vec<SweepPoint> {
        let ps = if self.sweep_p.is_empty() { vec![self.p] } else { self.sweep_p.clone() };
        let ms =
            if self.sweep_num_cells.is_empty() { vec![self.num_cells] } else { self.sweep_num_cells.clone() };
        let amps = if self.sweep_amplitude.is_empty() {
            vec![self.base_amplitude()]
        } else {
            self.sweep_amplitude.clone()
        };
        let mut points = Vec::with_capacity(ps.len() * ms.len() * amps.len());
        for &p in &ps {
            for &num_cells in &ms {
                for &amplitude in &amps {
                    points.push(SweepPoint { p, num_cells, amplitude });
                }
            }
        }
        points
    }

    /// Resolves a sweep point into run parameters. For the Neumann problem
    /// this solves for the compatible curvature unless one is configured.
    pub fn params_at(&self, point: SweepPoint) -> Result<RunParams, LabError> {
        let family = match self.kind {
            ProblemKind::DirichletSource => {
                InitialFamily::PolynomialBump { amplitude: point.amplitude, shape: self.shape.unwrap_or(1) }
            }
            ProblemKind::NeumannFlux => {
                let curvature = match self.curvature {
                    Some(b) => b,
                    None => solve_neumann_curvature(point.amplitude, self.radius, point.p)
                        .map_err(|e| LabError::ValidationFailed(e.to_string()))?,
                };
                InitialFamily::QuadraticNeumann { center_value: point.amplitude, curvature }
            }
        };
        Ok(RunParams {
            kind: self.kind,
            p: point.p,
            n_dim: self.n_dim,
            radius: self.radius,
            num_cells: point.num_cells,
            family,
            solver: self.solver_config(point.p),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DIRICHLET: &str = r#"
kind = "dirichlet_source"
p = 2.0
radius = 1.5
num_cells = 200
amplitude = 1.0
"#;

    #[test]
    fn parses_minimal_config() {
        let cfg = ExperimentConfig::from_toml_str(DIRICHLET).unwrap();
        assert_eq!(cfg.n_dim, 1);
        assert!(!cfg.has_sweep());
        let params = cfg.params_at(cfg.base_point()).unwrap();
        assert_eq!(params.family, InitialFamily::PolynomialBump { amplitude: 1.0, shape: 1 });
        assert_eq!(params.solver, SolverConfig::for_exponent(2.0));
    }

    #[test]
    fn rejects_sublinear_exponent() {
        let text = DIRICHLET.replace("p = 2.0", "p = 0.5");
        let err = ExperimentConfig::from_toml_str(&text).unwrap_err().to_string();
        assert!(err.contains("p > 1"), "{err}");
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = format!("{DIRICHLET}colour = \"blue\"\n");
        assert!(matches!(ExperimentConfig::from_toml_str(&text), Err(LabError::ConfigParse(_))));
    }

    #[test]
    fn rejects_out_of_range_fields() {
        for (from, to) in [
            ("num_cells = 200", "num_cells = 3"),
            ("radius = 1.5", "radius = -1.0"),
            ("amplitude = 1.0", "amplitude = 1e9"),
        ] {
            let text = DIRICHLET.replace(from, to);
            assert!(ExperimentConfig::from_toml_str(&text).is_err(), "{to}");
        }
        let text = format!("{DIRICHLET}cfl_safety = 2.0\n");
        assert!(ExperimentConfig::from_toml_str(&text).is_err());
        let text = format!("{DIRICHLET}sweep_p = [2.0, 0.9]\n");
        assert!(ExperimentConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn rejects_fields_of_the_other_problem() {
        let text = format!("{DIRICHLET}curvature = 1.0\n");
        assert!(ExperimentConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn sweep_is_a_cartesian_product() {
        let text = format!("{DIRICHLET}sweep_p = [2.0, 3.0]\nsweep_num_cells = [50, 100, 200]\n");
        let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
        let points = cfg.sweep_points();
        assert_eq!(points.len(), 6);
        assert_eq!(points[0], SweepPoint { p: 2.0, num_cells: 50, amplitude: 1.0 });
        assert_eq!(points[5], SweepPoint { p: 3.0, num_cells: 200, amplitude: 1.0 });
        // u_stop follows the swept exponent
        let params = cfg.params_at(points[5]).unwrap();
        assert_eq!(params.solver.u_stop, SolverConfig::default_u_stop(3.0));
    }

    #[test]
    fn neumann_curvature_is_solved() {
        let text = r#"
kind = "neumann_flux"
p = 2.0
radius = 0.5
num_cells = 100
"#;
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        match cfg.params_at(cfg.base_point()).unwrap().family {
            InitialFamily::QuadraticNeumann { center_value, curvature } => {
                assert_eq!(center_value, 0.0);
                let residual = 2.0 * curvature * 0.5 - (curvature * 0.25f64).powi(2).exp();
                assert!(residual.abs() < 1e-8);
            }
            other => panic!("unexpected family {other:?}"),
        }
        let no_root = text.replace("radius = 0.5", "radius = 1.0");
        let cfg = ExperimentConfig::from_toml_str(&no_root).unwrap();
        assert!(matches!(cfg.params_at(cfg.base_point()), Err(LabError::ValidationFailed(_))));
    }
}
