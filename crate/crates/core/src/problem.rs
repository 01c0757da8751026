//! The nonlinearity `f(u) = e^{u^p}`, the two problem presets, parametric
//! initial data, and admissibility checks for that data.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{GridError, NodalField, RadialGrid};

/// Evaluation of `e^{u^p}` stops once `u^p` exceeds this (natural-log scale of
/// the double-precision ceiling).
pub const LOG_OVERFLOW_LIMIT: f64 = 700.0;
/// Relative tolerance on the sign conditions for initial data.
pub const TOL_IC: f64 = 1e-9;
/// Absolute tolerance on the Neumann compatibility residual.
pub const TOL_COMPAT: f64 = 1e-8;
/// Target for `|g(β)|` in [`solve_neumann_curvature`].
pub const ROOT_TOL: f64 = 1e-12;
const ROOT_SCAN_STEPS: usize = 20_000;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum SourceError {
    #[error("e^(u^p) overflows: u = {u}, p = {p}")]
    Overflow { u: f64, p: f64 },
    #[error("source evaluated at negative or NaN u = {0}")]
    NegativeInput(f64),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("exponent must satisfy p > 1, got {0}")]
    InvalidExponent(f64),
    #[error("{validator} expects {expected} initial data")]
    FamilyMismatch { validator: &'static str, expected: &'static str },
    #[error("no compatible quadratic datum for alpha = {alpha}, R = {radius}, p = {p}")]
    NoRoot { alpha: f64, radius: f64, p: f64 },
    #[error("invalid curvature-solver input: {0}")]
    InvalidInput(String),
    #[error("initial data rejected: {}", .0.notes.join("; "))]
    ValidationFailed(ValidationReport),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// `e^{u^p}` for `u >= 0`.
pub fn eval_f(u: f64, p: f64) -> Result<f64, SourceError> {
    Ok(exponent(u, p)?.exp())
}

/// `f'(u) = p u^{p-1} e^{u^p}`.
pub fn eval_f_prime(u: f64, p: f64) -> Result<f64, SourceError> {
    let e = exponent(u, p)?;
    Ok(p * u.powf(p - 1.0) * e.exp())
}

fn exponent(u: f64, p: f64) -> Result<f64, SourceError> {
    if !(u >= 0.0) {
        return Err(SourceError::NegativeInput(u));
    }
    let e = u.powf(p);
    if e > LOG_OVERFLOW_LIMIT {
        return Err(SourceError::Overflow { u, p });
    }
    Ok(e)
}

/// `f(u) = e^{u^p}` with `p > 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Nonlinearity {
    p: f64,
}

impl Nonlinearity {
    pub fn new(p: f64) -> Result<Self, ProblemError> {
        if p.is_finite() && p > 1.0 {
            Ok(Self { p })
        } else {
            Err(ProblemError::InvalidExponent(p))
        }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn f(&self, u: f64) -> Result<f64, SourceError> {
        eval_f(u, self.p)
    }

    pub fn f_prime(&self, u: f64) -> Result<f64, SourceError> {
        eval_f_prime(u, self.p)
    }

    /// Level `p^{1/(p-1)}` past which `e^{u^p} >= e^{p u}`.
    pub fn activation_threshold(&self) -> f64 {
        self.p.powf(1.0 / (self.p - 1.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    /// `u_t = Δu + e^{u^p}` in the ball, `u = 0` on the sphere.
    DirichletSource,
    /// `u_t = Δu` in the ball, `∂u/∂η = e^{u^p}` on the sphere.
    NeumannFlux,
}

impl ProblemKind {
    pub fn label(&self) -> &'static str {
        match self {
            ProblemKind::DirichletSource => "dirichlet",
            ProblemKind::NeumannFlux => "neumann",
        }
    }
}

/// Parametric radial initial data. `R` is the ball radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum InitialFamily {
    /// `A (1 - (r/R)^2)^k`: positive inside, zero on the sphere, radially nonincreasing.
    PolynomialBump { amplitude: f64, shape: u32 },
    /// `α + β r^2`: radially nondecreasing with `Δu_0 = 2nβ`.
    QuadraticNeumann { center_value: f64, curvature: f64 },
}

impl InitialFamily {
    pub fn name(&self) -> &'static str {
        match self {
            InitialFamily::PolynomialBump { .. } => "polynomial_bump",
            InitialFamily::QuadraticNeumann { .. } => "quadratic_neumann",
        }
    }

    pub fn value(&self, r: f64, radius: f64) -> f64 {
        match *self {
            InitialFamily::PolynomialBump { amplitude, shape } => {
                let w = 1.0 - (r / radius).powi(2);
                amplitude * w.powi(shape as i32)
            }
            InitialFamily::QuadraticNeumann { center_value, curvature } => center_value + curvature * r * r,
        }
    }

    pub fn radial_derivative(&self, r: f64, radius: f64) -> f64 {
        match *self {
            InitialFamily::PolynomialBump { amplitude, shape } => {
                if shape == 0 {
                    return 0.0;
                }
                let k = shape as i32;
                let w = 1.0 - (r / radius).powi(2);
                -2.0 * amplitude * f64::from(shape) * r / (radius * radius) * w.powi(k - 1)
            }
            InitialFamily::QuadraticNeumann { curvature, .. } => 2.0 * curvature * r,
        }
    }

    /// Analytic `u_rr + ((n-1)/r) u_r`, with the `r = 0` limit `n u_rr(0)`.
    pub fn laplacian(&self, r: f64, radius: f64, n_dim: usize) -> f64 {
        let n = n_dim as f64;
        match *self {
            InitialFamily::PolynomialBump { amplitude, shape } => {
                if shape == 0 {
                    return 0.0;
                }
                let k = f64::from(shape);
                let r2 = radius * radius;
                let w = 1.0 - (r / radius).powi(2);
                let mut lap = -2.0 * amplitude * k * n / r2 * w.powi(shape as i32 - 1);
                if shape >= 2 {
                    lap += 4.0 * amplitude * k * (k - 1.0) * r * r / (r2 * r2) * w.powi(shape as i32 - 2);
                }
                lap
            }
            InitialFamily::QuadraticNeumann { curvature, .. } => 2.0 * n * curvature,
        }
    }
}

/// Initial data: its family plus the realized nodal values.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    family: InitialFamily,
    values: NodalField,
}

impl InitialData {
    pub fn realize(family: InitialFamily, grid: RadialGrid) -> Result<Self, ProblemError> {
        let radius = grid.radius();
        let values = NodalField::from_fn(grid, |r| family.value(r, radius))?;
        Ok(Self { family, values })
    }

    pub fn family(&self) -> &InitialFamily {
        &self.family
    }

    pub fn values(&self) -> &NodalField {
        &self.values
    }

    pub fn grid(&self) -> &RadialGrid {
        self.values.grid()
    }
}

/// Outcome of checking initial data against the hypotheses of its problem.
///
/// Fields that do not apply to a problem are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub passed: bool,
    /// `min (Δu_0 + e^{u_0^p})` over nodes with `r < R` (Dirichlet).
    pub source_sign_min: Option<f64>,
    /// Largest `δ` with `u_0r(r) <= -δ r` on the nodes of `(0, R]` (Dirichlet).
    pub frid_delta: Option<f64>,
    /// `|u_0'(R) - e^{u_0(R)^p}|` (Neumann).
    pub compat_residual: Option<f64>,
    /// `min Δu_0` (Neumann).
    pub convexity_floor: Option<f64>,
    /// One entry per failed condition.
    pub notes: Vec<String>,
}

impl ValidationReport {
    fn empty() -> Self {
        Self {
            passed: false,
            source_sign_min: None,
            frid_delta: None,
            compat_residual: None,
            convexity_floor: None,
            notes: Vec::new(),
        }
    }

    fn fail(&mut self, note: String) {
        self.notes.push(note);
    }

    fn finish(mut self) -> Self {
        self.passed = self.notes.is_empty();
        self
    }
}

fn common_checks(report: &mut ValidationReport, data: &InitialData) {
    let grid = data.grid();
    let values = data.values().values();
    if values.iter().all(|&v| v == 0.0) {
        report.fail("u_0 is identically zero".into());
    }
    if let Some(i) = values.iter().position(|&v| v < 0.0) {
        report.fail(format!("u_0 >= 0 violated at r={}", grid.node(i)));
    }
}

/// Checks a [`InitialFamily::PolynomialBump`] against the Dirichlet hypotheses:
/// nonnegative, nonzero, vanishing on the sphere, radially nonincreasing,
/// `Δu_0 + e^{u_0^p} >= 0` in the open ball, and `u_0r <= -δ r` with `δ > 0`.
///
/// Derivatives are the family's closed forms evaluated at the mesh nodes.
pub fn validate_dirichlet_ic(data: &InitialData, p: f64) -> Result<ValidationReport, ProblemError> {
    let family = *data.family();
    let InitialFamily::PolynomialBump { amplitude, .. } = family else {
        return Err(ProblemError::FamilyMismatch {
            validator: "validate_dirichlet_ic",
            expected: "polynomial_bump",
        });
    };
    let grid = data.grid();
    let radius = grid.radius();
    let mut report = ValidationReport::empty();
    common_checks(&mut report, data);

    let u_r = family.value(radius, radius);
    if u_r.abs() > TOL_IC * amplitude.abs().max(1.0) {
        report.fail(format!("u_0(R) = 0 violated: u_0(R) = {u_r}"));
    }

    let mut sign_min = f64::INFINITY;
    let mut sign_violation: Option<f64> = None;
    let mut slope_violation: Option<f64> = None;
    let mut delta = f64::INFINITY;
    for (i, r) in grid.nodes().enumerate() {
        let u0 = data.values().values()[i];
        let du = family.radial_derivative(r, radius);
        if du > TOL_IC * du.abs().max(1.0) && slope_violation.is_none() {
            slope_violation = Some(r);
        }
        if i > 0 {
            delta = delta.min(-du / r);
        }
        if i < grid.num_cells() {
            let lap = family.laplacian(r, radius, grid.n_dim());
            match eval_f(u0.max(0.0), p) {
                Ok(f) => {
                    let s = lap + f;
                    sign_min = sign_min.min(s);
                    if s < -TOL_IC * (lap.abs() + f) && sign_violation.is_none() {
                        sign_violation = Some(r);
                    }
                }
                Err(e) => report.fail(format!("e^(u_0^p) not representable at r={r}: {e}")),
            }
        }
    }
    if let Some(r) = slope_violation {
        report.fail(format!("u_0r <= 0 violated at r={r}"));
    }
    if let Some(r) = sign_violation {
        report.fail(format!("condition Δu_0+e^{{u_0^p}} >= 0 violated at r={r}"));
    }
    if !(delta > 0.0) {
        report.fail(format!("slope condition u_0r <= -δ r needs δ > 0, largest δ is {delta}"));
    }
    report.source_sign_min = Some(sign_min);
    report.frid_delta = Some(delta);
    Ok(report.finish())
}

/// Checks a [`InitialFamily::QuadraticNeumann`] against the Neumann hypotheses:
/// the compatibility condition `u_0'(R) = e^{u_0(R)^p}`, `Δu_0 >= a > 0`,
/// radially nondecreasing, nonnegative, nonzero.
pub fn validate_neumann_ic(data: &InitialData, p: f64) -> Result<ValidationReport, ProblemError> {
    let family = *data.family();
    let InitialFamily::QuadraticNeumann { .. } = family else {
        return Err(ProblemError::FamilyMismatch {
            validator: "validate_neumann_ic",
            expected: "quadratic_neumann",
        });
    };
    let grid = data.grid();
    let radius = grid.radius();
    let mut report = ValidationReport::empty();
    common_checks(&mut report, data);

    match eval_f(family.value(radius, radius).max(0.0), p) {
        Ok(flux) => {
            let residual = (family.radial_derivative(radius, radius) - flux).abs();
            report.compat_residual = Some(residual);
            if residual > TOL_COMPAT {
                report
                    .fail(format!("compatibility u_0'(R) = e^{{u_0(R)^p}} violated: residual {residual:e}"));
            }
        }
        Err(e) => report.fail(format!("boundary flux not representable: {e}")),
    }

    let floor = grid.nodes().map(|r| family.laplacian(r, radius, grid.n_dim())).fold(f64::INFINITY, f64::min);
    report.convexity_floor = Some(floor);
    if !(floor > 0.0) {
        report.fail(format!("condition Δu_0 >= a > 0 violated: min Δu_0 = {floor}"));
    }
    if let Some(r) = grid.nodes().find(|&r| family.radial_derivative(r, radius) < 0.0) {
        report.fail(format!("u_0r >= 0 violated at r={r}"));
    }
    Ok(report.finish())
}

/// Smallest `β > 0` with `2βR = e^{(α + βR^2)^p}`, so that `α + β r^2` meets
/// the flux condition at `t = 0`.
///
/// `g(β) = 2βR - e^{(α+βR²)^p}` is negative at `β = 0` and for
/// `βR² >= max(1, 2 ln(2/R))`, so the scan covers every admissible root. A
/// tangential (double) root can be missed by the scan and is reported as
/// [`ProblemError::NoRoot`].
pub fn solve_neumann_curvature(alpha: f64, radius: f64, p: f64) -> Result<f64, ProblemError> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(ProblemError::InvalidInput(format!("alpha = {alpha}")));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(ProblemError::InvalidInput(format!("radius = {radius}")));
    }
    Nonlinearity::new(p)?;

    let g = |beta: f64| -> f64 {
        match eval_f(alpha + beta * radius * radius, p) {
            Ok(f) => 2.0 * beta * radius - f,
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let beta_max = 1.0f64.max(2.0 * (2.0 / radius).ln()) / (radius * radius);
    let step = beta_max / ROOT_SCAN_STEPS as f64;
    let mut lo = 0.0;
    let mut bracket = None;
    for j in 1..=ROOT_SCAN_STEPS {
        let hi = j as f64 * step;
        if g(hi) >= 0.0 {
            bracket = Some((lo, hi));
            break;
        }
        lo = hi;
    }
    let (mut lo, mut hi) = bracket.ok_or(ProblemError::NoRoot { alpha, radius, p })?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if gm.abs() <= ROOT_TOL || mid == lo || mid == hi {
            return Ok(mid);
        }
        if gm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if g(lo).abs() < g(hi).abs() { lo } else { hi })
}

/// A fully specified problem instance.
///
/// Built with [`ProblemSpec::new`] the initial data has passed the validator
/// for its kind. [`ProblemSpec::unvalidated`] skips the hypotheses and exists
/// for diagnostics such as pure-diffusion runs.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    kind: ProblemKind,
    nonlinearity: Nonlinearity,
    grid: RadialGrid,
    initial_data: InitialData,
    forcing: bool,
    validation: Option<ValidationReport>,
}

impl ProblemSpec {
    pub fn new(
        kind: ProblemKind,
        p: f64,
        grid: RadialGrid,
        family: InitialFamily,
    ) -> Result<Self, ProblemError> {
        let mut spec = Self::unvalidated(kind, p, grid, family)?;
        let report = match kind {
            ProblemKind::DirichletSource => validate_dirichlet_ic(&spec.initial_data, p)?,
            ProblemKind::NeumannFlux => validate_neumann_ic(&spec.initial_data, p)?,
        };
        if !report.passed {
            return Err(ProblemError::ValidationFailed(report));
        }
        spec.validation = Some(report);
        Ok(spec)
    }

    pub fn unvalidated(
        kind: ProblemKind,
        p: f64,
        grid: RadialGrid,
        family: InitialFamily,
    ) -> Result<Self, ProblemError> {
        Ok(Self {
            kind,
            nonlinearity: Nonlinearity::new(p)?,
            grid,
            initial_data: InitialData::realize(family, grid)?,
            forcing: true,
            validation: None,
        })
    }

    /// Turns off the source term (Dirichlet) or the boundary flux (Neumann),
    /// leaving the plain heat equation.
    pub fn without_forcing(mut self) -> Self {
        self.forcing = false;
        self
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nonlinearity
    }

    pub fn p(&self) -> f64 {
        self.nonlinearity.p()
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn initial_data(&self) -> &InitialData {
        &self.initial_data
    }

    pub fn forcing(&self) -> bool {
        self.forcing
    }

    pub fn validation(&self) -> Option<&ValidationReport> {
        self.validation.as_ref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::E;

    fn bump(amplitude: f64, shape: u32) -> InitialFamily {
        InitialFamily::PolynomialBump { amplitude, shape }
    }

    #[test]
    fn source_values() {
        assert_eq!(eval_f(0.0, 2.0).unwrap(), 1.0);
        assert_eq!(eval_f(0.0, 7.5).unwrap(), 1.0);
        assert_relative_eq!(eval_f(1.0, 2.0).unwrap(), E, max_relative = 1e-15);
        assert_relative_eq!(eval_f(2.0, 2.0).unwrap(), 54.598_150_033_144_236, max_relative = 1e-14);
        assert_eq!(eval_f_prime(0.0, 2.0).unwrap(), 0.0);
        assert_relative_eq!(eval_f_prime(1.0, 2.0).unwrap(), 2.0 * E, max_relative = 1e-15);
    }

    #[test]
    fn source_errors() {
        assert!(matches!(eval_f(-0.1, 2.0), Err(SourceError::NegativeInput(_))));
        assert!(matches!(eval_f(f64::NAN, 2.0), Err(SourceError::NegativeInput(_))));
        // 26.5^2 = 702.25 > 700
        assert!(matches!(eval_f(26.5, 2.0), Err(SourceError::Overflow { .. })));
        assert!(eval_f(26.4, 2.0).unwrap().is_finite());
        assert!(matches!(eval_f_prime(26.5, 2.0), Err(SourceError::Overflow { .. })));
    }

    #[test]
    fn derivative_matches_central_difference() {
        let (u, p, eps) = (0.7, 3.0, 1e-6);
        let fd = (eval_f(u + eps, p).unwrap() - eval_f(u - eps, p).unwrap()) / (2.0 * eps);
        assert_relative_eq!(eval_f_prime(u, p).unwrap(), fd, max_relative = 1e-6);
    }

    #[test]
    fn exponent_must_exceed_one() {
        assert!(Nonlinearity::new(1.0).is_err());
        assert!(Nonlinearity::new(0.5).is_err());
        assert!(Nonlinearity::new(f64::NAN).is_err());
        assert_eq!(Nonlinearity::new(2.0).unwrap().activation_threshold(), 2.0);
        assert_relative_eq!(
            Nonlinearity::new(3.0).unwrap().activation_threshold(),
            1.732_050_8,
            epsilon = 1e-7
        );
    }

    #[test]
    fn bump_slope_constant_for_quadratic_shape() {
        let g = RadialGrid::new(1, 1.0, 50).unwrap();
        let data = InitialData::realize(bump(0.3, 1), g).unwrap();
        let report = validate_dirichlet_ic(&data, 2.0).unwrap();
        assert!(report.passed, "{:?}", report.notes);
        assert_relative_eq!(report.frid_delta.unwrap(), 0.6, max_relative = 1e-12);
    }

    #[test]
    fn zero_datum_fails() {
        let g = RadialGrid::new(1, 1.0, 50).unwrap();
        let data = InitialData::realize(bump(0.0, 1), g).unwrap();
        let report = validate_dirichlet_ic(&data, 2.0).unwrap();
        assert!(!report.passed);
        assert!(report.notes.iter().any(|n| n.contains("identically zero")));
    }

    #[test]
    fn higher_shapes_fail_slope_condition() {
        let g = RadialGrid::new(1, 1.0, 50).unwrap();
        let data = InitialData::realize(bump(0.3, 2), g).unwrap();
        let report = validate_dirichlet_ic(&data, 2.0).unwrap();
        assert!(!report.passed);
        assert_eq!(report.frid_delta, Some(0.0));
    }

    #[test]
    fn dirichlet_validator_rejects_neumann_family() {
        let g = RadialGrid::new(1, 1.0, 50).unwrap();
        let data =
            InitialData::realize(InitialFamily::QuadraticNeumann { center_value: 0.0, curvature: 1.0 }, g)
                .unwrap();
        assert!(matches!(validate_dirichlet_ic(&data, 2.0), Err(ProblemError::FamilyMismatch { .. })));
        let data = InitialData::realize(bump(1.0, 1), g).unwrap();
        assert!(matches!(validate_neumann_ic(&data, 2.0), Err(ProblemError::FamilyMismatch { .. })));
    }

    #[test]
    fn large_bump_violates_source_sign_near_boundary() {
        // A=2, k=1, n=1, R=1, p=2: -4 + e^{4(1-r^2)^2} < 0 for r > 0.641
        let g = RadialGrid::new(1, 1.0, 200).unwrap();
        let data = InitialData::realize(bump(2.0, 1), g).unwrap();
        let report = validate_dirichlet_ic(&data, 2.0).unwrap();
        assert!(!report.passed);
        let note = report.notes.iter().find(|n| n.contains("Δu_0+e^{u_0^p}")).unwrap();
        let r: f64 = note.rsplit("r=").next().unwrap().parse().unwrap();
        assert!((0.64..0.65).contains(&r), "{note}");
    }

    #[test]
    fn convexity_floor_and_sign() {
        let g = RadialGrid::new(2, 1.0, 20).unwrap();
        let data =
            InitialData::realize(InitialFamily::QuadraticNeumann { center_value: 0.0, curvature: 1.0 }, g)
                .unwrap();
        let report = validate_neumann_ic(&data, 2.0).unwrap();
        assert_eq!(report.convexity_floor, Some(4.0));

        let data =
            InitialData::realize(InitialFamily::QuadraticNeumann { center_value: 1.0, curvature: -0.5 }, g)
                .unwrap();
        let report = validate_neumann_ic(&data, 2.0).unwrap();
        assert!(!report.passed);
        assert!(report.convexity_floor.unwrap() <= 0.0);
        assert!(report.notes.iter().any(|n| n.contains("Δu_0 >= a > 0")));
    }

    #[test]
    fn no_compatible_datum_on_unit_ball_for_p2() {
        // max over x of 2x e^{-x^2} is about 0.858 < R = 1
        assert!(matches!(solve_neumann_curvature(0.0, 1.0, 2.0), Err(ProblemError::NoRoot { .. })));
        assert!(matches!(solve_neumann_curvature(0.0, 25.0, 2.0), Err(ProblemError::NoRoot { .. })));
    }

    #[test]
    fn curvature_solver_rejects_bad_input() {
        assert!(solve_neumann_curvature(-1.0, 0.5, 2.0).is_err());
        assert!(solve_neumann_curvature(0.0, 0.0, 2.0).is_err());
        assert!(solve_neumann_curvature(0.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn solved_curvature_makes_datum_compatible() {
        for &(alpha, radius, p) in &[(0.0, 0.5, 2.0), (0.1, 0.4, 3.0), (0.0, 0.8, 2.0)] {
            let beta = solve_neumann_curvature(alpha, radius, p).unwrap();
            let g = RadialGrid::new(1, radius, 40).unwrap();
            let family = InitialFamily::QuadraticNeumann { center_value: alpha, curvature: beta };
            let data = InitialData::realize(family, g).unwrap();
            let report = validate_neumann_ic(&data, p).unwrap();
            assert!(report.passed, "{:?}", report.notes);
            assert!(report.compat_residual.unwrap() <= 1e-10);
        }
    }

    #[test]
    fn spec_construction_validates() {
        let g = RadialGrid::new(1, 1.0, 40).unwrap();
        let err = ProblemSpec::new(ProblemKind::DirichletSource, 2.0, g, bump(2.0, 1)).unwrap_err();
        assert!(matches!(err, ProblemError::ValidationFailed(_)));
        assert!(err.to_string().contains("violated at r="));
        let spec = ProblemSpec::new(ProblemKind::DirichletSource, 2.0, g, bump(0.4, 1)).unwrap();
        assert!(spec.validation().unwrap().passed);
        assert!(ProblemSpec::new(ProblemKind::DirichletSource, 0.5, g, bump(0.4, 1)).is_err());
    }
}
