//! The acceptance suite: reference runs, one check per criterion, and a
//! printable table.

use std::fmt::Write;
use std::time::{Duration, Instant};

use blowup_core::analysis::{
    estimate_blowup_time_in, fit_rate_in, FitWindow, GFunction, GrowthLaw, RunTrace, SampleFlags, TraceMeta,
};
use blowup_core::grid::{radial_laplacian, BoundaryClosure, NodalField, RadialGrid};
use blowup_core::problem::{solve_neumann_curvature, InitialFamily, ProblemKind};
use blowup_core::solver::{integrate_reaction_only, SolverConfig};
use rayon::prelude::*;
use statrs::function::gamma::gamma;

use crate::config::RunParams;
use crate::runner::{execute, to_json, RunOutcome};

pub const DIRICHLET_RADIUS: f64 = 1.5;
pub const NEUMANN_RADIUS: f64 = 0.5;
pub const REFERENCE_P: f64 = 2.0;
pub const REFERENCE_CELLS: [usize; 2] = [200, 400];
/// Extra coarse Dirichlet grid for the convergence sweep.
pub const COARSE_CELLS: usize = 100;

/// Tolerance on the growth of the envelope constant under refinement
/// ("decreases or stabilizes"); equal to the allowed slope drift.
pub const ENVELOPE_STABILITY: f64 = 0.05;
/// Fit residual below which a slope under the band is flagged as consistent
/// with a non-sharp upper bound.
pub const SMALL_RESIDUAL: f64 = 0.05;

#[derive(Debug, Clone, Copy, Default)]
pub struct VerifyOptions {
    /// Overrides σ in every reference run (values above 1 are unstable).
    pub cfl_safety: Option<f64>,
    /// Worker threads for the reference runs (0 = one per core).
    pub jobs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: &'static str,
    pub name: &'static str,
    pub measured: String,
    pub bound: String,
    pub passed: bool,
    /// Supplementary rows are reported but do not decide the exit code.
    pub gating: bool,
    pub notes: Vec<String>,
}

impl CriterionResult {
    fn new(id: &'static str, name: &'static str, bound: impl Into<String>) -> Self {
        Self {
            id,
            name,
            measured: String::new(),
            bound: bound.into(),
            passed: false,
            gating: true,
            notes: Vec::new(),
        }
    }

    fn fail_with(mut self, msg: impl Into<String>) -> Self {
        self.measured = msg.into();
        self.passed = false;
        self
    }

    pub fn line(&self) -> String {
        let status = match (self.passed, self.gating) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "INFO",
        };
        format!(
            "criterion {:<2} {} {}: measured {} | bound {}",
            self.id, status, self.name, self.measured, self.bound
        )
    }
}

pub fn dirichlet_reference(num_cells: usize, cfl_safety: Option<f64>) -> RunParams {
    let mut solver = SolverConfig::for_exponent(REFERENCE_P);
    if let Some(s) = cfl_safety {
        solver.cfl_safety = s;
    }
    RunParams {
        kind: ProblemKind::DirichletSource,
        p: REFERENCE_P,
        n_dim: 1,
        radius: DIRICHLET_RADIUS,
        num_cells,
        family: InitialFamily::PolynomialBump { amplitude: 1.0, shape: 1 },
        solver,
    }
}

pub fn neumann_reference(num_cells: usize, cfl_safety: Option<f64>) -> RunParams {
    let curvature = solve_neumann_curvature(0.0, NEUMANN_RADIUS, REFERENCE_P)
        .expect("reference datum has a compatible root");
    let mut solver = SolverConfig::for_exponent(REFERENCE_P);
    if let Some(s) = cfl_safety {
        solver.cfl_safety = s;
    }
    RunParams {
        kind: ProblemKind::NeumannFlux,
        p: REFERENCE_P,
        n_dim: 1,
        radius: NEUMANN_RADIUS,
        num_cells,
        family: InitialFamily::QuadraticNeumann { center_value: 0.0, curvature },
        solver,
    }
}

/// Outcome of one reference run; failures are kept as text so that every
/// criterion can still report.
#[derive(Debug, Clone)]
pub struct ReferenceRun {
    pub params: RunParams,
    pub outcome: Result<RunOutcome, String>,
}

#[derive(Debug, Clone)]
pub struct ReferenceRuns {
    /// Dirichlet runs at [`REFERENCE_CELLS`].
    pub dirichlet: Vec<ReferenceRun>,
    /// Neumann runs at [`REFERENCE_CELLS`].
    pub neumann: Vec<ReferenceRun>,
    /// Dirichlet run at [`COARSE_CELLS`].
    pub coarse: ReferenceRun,
    pub options: VerifyOptions,
}

impl ReferenceRuns {
    pub fn compute(options: VerifyOptions) -> Self {
        let mut params: Vec<RunParams> = REFERENCE_CELLS
            .iter()
            .map(|&m| dirichlet_reference(m, options.cfl_safety))
            .chain(REFERENCE_CELLS.iter().map(|&m| neumann_reference(m, options.cfl_safety)))
            .collect();
        params.push(dirichlet_reference(COARSE_CELLS, options.cfl_safety));
        let run_all = || -> Vec<ReferenceRun> {
            params
                .par_iter()
                .map(|p| ReferenceRun { params: *p, outcome: execute(p).map_err(|e| e.to_string()) })
                .collect()
        };
        let mut runs = match rayon::ThreadPoolBuilder::new().num_threads(options.jobs).build() {
            Ok(pool) => pool.install(run_all),
            Err(_) => run_all(),
        };
        let coarse = runs.pop().expect("coarse run");
        let neumann = runs.split_off(REFERENCE_CELLS.len());
        Self { dirichlet: runs, neumann, coarse, options }
    }
}

fn outcomes(runs: &[ReferenceRun]) -> Result<Vec<&RunOutcome>, String> {
    runs.iter()
        .map(|r| r.outcome.as_ref().map_err(|e| format!("M={} run failed: {e}", r.params.num_cells)))
        .collect()
}

fn fmt(x: f64) -> String {
    format!("{x:.4}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt).unwrap_or_else(|| "n/a".into())
}

fn list(xs: &[Option<f64>]) -> String {
    xs.iter().map(|&x| fmt_opt(x)).collect::<Vec<_>>().join(", ")
}

fn reaction_config(p: f64) -> SolverConfig {
    SolverConfig { reaction_safety: 0.01, ..SolverConfig::for_exponent(p) }
}

/// Flat ODE `u' = e^{u^p}` against its exact blow-up time.
pub fn criterion_1() -> CriterionResult {
    let mut c = CriterionResult::new("1", "reaction-only blow-up time", "rel. error <= 0.5%, runtime < 5 s");
    let start = Instant::now();
    // ∫_0^∞ e^{-u²} du = Γ(3/2), independent of the solver's quadrature
    let cases = [(1.0, 0.0, 1.0), (1.0, 1.0, (-1.0f64).exp()), (2.0, 0.0, gamma(1.5))];
    let mut worst: f64 = 0.0;
    let mut errs = Vec::new();
    for (p, u0, exact) in cases {
        match integrate_reaction_only(u0, p, &reaction_config(p)) {
            Ok(run) => {
                let rel = (run.t_hat - exact).abs() / exact;
                worst = worst.max(rel);
                errs.push(format!("{rel:.2e}"));
            }
            Err(e) => return c.fail_with(format!("p={p}, u0={u0}: {e}")),
        }
    }
    let elapsed = start.elapsed();
    c.measured = format!("rel. errors [{}], {:.2} s", errs.join(", "), elapsed.as_secs_f64());
    c.passed = worst <= 5e-3 && elapsed < Duration::from_secs(5);
    c
}

type Column = Vec<Option<f64>>;

fn rate_values(outs: &[&RunOutcome]) -> (Column, Column, Column) {
    let rates: Vec<_> = outs.iter().map(|o| o.summary().rate.clone()).collect();
    (
        rates.iter().map(|r| r.as_ref().map(|r| r.slope)).collect(),
        rates.iter().map(|r| r.as_ref().map(|r| r.envelope_log_c)).collect(),
        rates.iter().map(|r| r.as_ref().map(|r| r.rms_residual)).collect(),
    )
}

fn slope_checks(
    c: &mut CriterionResult,
    slopes: &[Option<f64>],
    residuals: &[Option<f64>],
    band: (f64, f64),
) -> bool {
    let in_band = slopes.iter().all(|s| s.is_some_and(|b| b >= band.0 && b <= band.1));
    let drift = match (slopes[0], slopes[1]) {
        (Some(a), Some(b)) => Some((a - b).abs()),
        _ => None,
    };
    for (s, r) in slopes.iter().zip(residuals) {
        if let (Some(b), Some(res)) = (s, r) {
            if *b < band.0 && *res <= SMALL_RESIDUAL {
                c.notes.push(format!(
                    "slope {b:.4} below band with rms residual {res:.4}: consistent with a non-sharp upper bound"
                ));
            }
        }
    }
    c.measured = format!("slopes [{}], drift {}", list(slopes), fmt_opt(drift));
    in_band && drift.is_some_and(|d| d <= 0.05)
}

/// Interior rate: slope band, drift, envelope constant.
pub fn criterion_2(refs: &ReferenceRuns) -> CriterionResult {
    let mut c = CriterionResult::new(
        "2",
        "Dirichlet blow-up rate",
        "slope in [0.4, 0.6] at M=200,400, drift <= 0.05, log C finite and not growing, runtime < 2 min",
    );
    let outs = match outcomes(&refs.dirichlet) {
        Ok(o) => o,
        Err(e) => return c.fail_with(e),
    };
    let (slopes, envelopes, residuals) = rate_values(&outs);
    let slopes_ok = slope_checks(&mut c, &slopes, &residuals, (0.4, 0.6));
    let envelope_ok = match (envelopes[0], envelopes[1]) {
        (Some(a), Some(b)) => a.is_finite() && b.is_finite() && b <= a + ENVELOPE_STABILITY,
        _ => false,
    };
    let runtime: Duration = outs.iter().map(|o| o.wall_clock).sum();
    let _ = write!(c.measured, ", log C [{}], {:.1} s", list(&envelopes), runtime.as_secs_f64());
    c.passed = slopes_ok && envelope_ok && runtime < Duration::from_secs(120);
    c
}

/// Largest value over all recorded samples at radii `>= r_min`.
fn far_field_max(outcome: &RunOutcome, r_min: f64) -> f64 {
    let grid = outcome.run.grid();
    outcome
        .run
        .snapshots
        .iter()
        .flat_map(|u| u.iter().enumerate().filter(|(i, _)| grid.node(*i) >= r_min).map(|(_, &v)| v))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Single-point blow-up at the center.
pub fn criterion_3(refs: &ReferenceRuns) -> CriterionResult {
    let r = DIRICHLET_RADIUS;
    let mut c = CriterionResult::new(
        "3",
        "single-point blow-up",
        "set within [0, 0.2R], M=400 set within M=200 set, u <= 0.6 u_stop for r >= 0.2R",
    );
    let outs = match outcomes(&refs.dirichlet) {
        Ok(o) => o,
        Err(e) => return c.fail_with(e),
    };
    let hulls: Vec<Option<(f64, f64)>> =
        outs.iter().map(|o| o.summary().blowup_set.as_ref().map(|s| (s.r_min, s.r_max))).collect();
    let (Some(coarse), Some(fine)) = (hulls[0], hulls[1]) else {
        return c.fail_with("blow-up set unavailable");
    };
    // the coarse set is resolved only to its own spacing
    let h_coarse = outs[0].run.grid().spacing();
    let nested = fine.1 <= coarse.1 + h_coarse && fine.0 >= coarse.0 - h_coarse;
    let far: Vec<f64> = outs.iter().map(|o| far_field_max(o, 0.2 * r)).collect();
    let caps: Vec<f64> = outs.iter().map(|o| 0.6 * o.run.config.u_stop).collect();
    c.measured = format!(
        "sets [{:.4}, {:.4}] and [{:.4}, {:.4}], far-field max [{}] vs [{}]",
        coarse.0,
        coarse.1,
        fine.0,
        fine.1,
        far.iter().map(|&v| fmt(v)).collect::<Vec<_>>().join(", "),
        caps.iter().map(|&v| fmt(v)).collect::<Vec<_>>().join(", ")
    );
    c.passed = coarse.1 <= 0.2 * r && nested && far.iter().zip(&caps).all(|(f, cap)| f <= cap);
    c
}

fn fraction_criterion(
    mut c: CriterionResult,
    runs: &[ReferenceRun],
    pick: impl Fn(&RunOutcome) -> Option<f64>,
    floor: f64,
) -> CriterionResult {
    let outs = match outcomes(runs) {
        Ok(o) => o,
        Err(e) => return c.fail_with(e),
    };
    let fractions: Vec<Option<f64>> = outs.iter().map(|o| pick(o)).collect();
    c.measured = format!("fractions [{}]", list(&fractions));
    c.passed = fractions.iter().all(|f| f.is_some_and(|v| v >= floor));
    for o in outs {
        c.notes.extend(o.summary().notes.iter().cloned());
    }
    c
}

/// Pointwise bound `G(u) >= ε r²/2`.
pub fn criterion_4(refs: &ReferenceRuns) -> CriterionResult {
    let c = CriterionResult::new("4", "pointwise G bound", "fraction >= 0.99 at M=200,400 (δ = 0.5)");
    fraction_criterion(c, &refs.dirichlet, |o| o.summary().monitors.pointwise_bound, 0.99)
}

/// Gradient functional `J <= 0`.
pub fn criterion_5(refs: &ReferenceRuns) -> CriterionResult {
    let c =
        CriterionResult::new("5", "gradient functional J", "fraction >= 0.99 at M=200,400 (tol 10 h² scale)");
    fraction_criterion(c, &refs.dirichlet, |o| o.summary().monitors.gradient_functional, 0.99)
}

/// Boundary rate, blow-up set on the sphere, argmax on the sphere.
pub fn criterion_6(refs: &ReferenceRuns) -> CriterionResult {
    let r = NEUMANN_RADIUS;
    let mut c = CriterionResult::new(
        "6",
        "Neumann blow-up rate",
        "slope in [0.175, 0.325] at M=200,400, drift <= 0.05, set within [0.8R, R], argmax at R",
    );
    let outs = match outcomes(&refs.neumann) {
        Ok(o) => o,
        Err(e) => return c.fail_with(e),
    };
    let (slopes, _, residuals) = rate_values(&outs);
    let slopes_ok = slope_checks(&mut c, &slopes, &residuals, (0.175, 0.325));
    let sets_ok = outs
        .iter()
        .all(|o| o.summary().blowup_set.as_ref().is_some_and(|s| s.r_min >= 0.8 * r && s.r_max <= r));
    let off_axis: usize = outs
        .iter()
        .map(|o| {
            o.run.trace.samples().iter().filter(|s| s.flags.contains(SampleFlags::ARGMAX_OFF_AXIS)).count()
        })
        .sum();
    let r_mins: Vec<Option<f64>> =
        outs.iter().map(|o| o.summary().blowup_set.as_ref().map(|s| s.r_min)).collect();
    let _ = write!(c.measured, ", set r_min [{}], off-sphere maxima {off_axis}", list(&r_mins));
    c.passed = slopes_ok && sets_ok && off_axis == 0;
    c
}

/// Monotonicity in `r` and `t` on all four reference runs.
pub fn criterion_7(refs: &ReferenceRuns) -> CriterionResult {
    let runs: Vec<ReferenceRun> = refs.dirichlet.iter().chain(&refs.neumann).cloned().collect();
    let c = CriterionResult::new("7", "monotonicity", "fraction = 1.0 on all reference runs (tol 10 h²)");
    fraction_criterion(c, &runs, |o| o.summary().monitors.monotonicity, 1.0)
}

/// Growth functionals on the fit windows.
pub fn criterion_8(refs: &ReferenceRuns) -> CriterionResult {
    let mut c = CriterionResult::new(
        "8",
        "growth functionals",
        "fraction >= 0.99 on fit windows, Neumann ε <= p u_0(R)^{p-1}/2",
    );
    let (d, n) = match (outcomes(&refs.dirichlet), outcomes(&refs.neumann)) {
        (Ok(d), Ok(n)) => (d, n),
        (Err(e), _) | (_, Err(e)) => return c.fail_with(e),
    };
    let axis: Vec<Option<f64>> = d.iter().map(|o| o.summary().monitors.axis_growth).collect();
    let grad: Vec<Option<f64>> = n.iter().map(|o| o.summary().monitors.gradient_growth_window).collect();
    let eps_ok = n.iter().all(|o| {
        let m = &o.summary().monitors;
        matches!((m.neumann_epsilon, m.neumann_epsilon_bound), (Some(e), Some(b)) if e > 0.0 && e <= b)
    });
    let boundary: Vec<Option<f64>> = n.iter().map(|o| o.summary().monitors.boundary_growth_window).collect();
    c.notes.push(format!(
        "boundary consequence u_t(R) >= ε exp(2u(R)^p) on the fit window: fractions [{}]",
        list(&boundary)
    ));
    c.measured = format!("Dirichlet [{}], Neumann [{}], ε within bound {}", list(&axis), list(&grad), eps_ok);
    let ok = |v: &[Option<f64>]| v.iter().all(|f| f.is_some_and(|x| x >= 0.99));
    c.passed = ok(&axis) && ok(&grad) && eps_ok;
    c
}

fn laplacian_quadratic_error() -> f64 {
    let (radius, a, b) = (1.3, 0.4, -2.5);
    let mut worst: f64 = 0.0;
    for n in 1..=4 {
        let grid = RadialGrid::new(n, radius, 17).expect("valid grid");
        let field = NodalField::from_fn(grid, |r| a + b * r * r).expect("finite field");
        let expected = 2.0 * n as f64 * b;
        let dir = radial_laplacian(&field, BoundaryClosure::Dirichlet { value: a + b * radius * radius });
        let neu = radial_laplacian(&field, BoundaryClosure::Neumann { flux: 2.0 * b * radius });
        for v in dir.values()[..grid.num_cells()].iter().chain(neu.values()) {
            worst = worst.max((v - expected).abs() / expected.abs());
        }
    }
    worst
}

fn gamma_identity_error() -> f64 {
    let mut worst: f64 = 0.0;
    for delta in [0.25f64, 0.5, 0.75] {
        for p in [1.5, 2.0, 3.0] {
            let exact = delta.powf(-1.0 / p) * gamma(1.0 + 1.0 / p);
            let got = GFunction::new(delta, p).and_then(|g| g.value(0.0)).unwrap_or(f64::NAN);
            worst = worst.max((got - exact).abs());
        }
    }
    worst
}

fn synthetic_fit_error() -> f64 {
    let meta =
        TraceMeta { kind: ProblemKind::DirichletSource, p: 2.0, u_stop: 100.0, radius: 1.0, blew_up: true };
    let (t_blow, slope, c, rate) = (0.75, 0.37, 0.2, 2.0);
    let times: Vec<f64> =
        (0..200).map(|k| t_blow * (1.0 - 0.5f64.powf(1.0 + 12.0 * k as f64 / 199.0))).collect();
    let series: Vec<(f64, f64)> = times.iter().map(|&t| (t, c - slope * (t_blow - t).ln())).collect();
    let fit = RunTrace::from_series(meta, &series)
        .and_then(|tr| FitWindow::new(&tr, 0, tr.len()).and_then(|w| fit_rate_in(&tr, w, t_blow, None)));
    let slope_err = fit.map(|f| (f.slope - slope).abs()).unwrap_or(f64::NAN);
    let series: Vec<(f64, f64)> = times.iter().map(|&t| (t, -(rate * (t_blow - t)).ln() / rate)).collect();
    let est = RunTrace::from_series(meta, &series).and_then(|tr| {
        FitWindow::new(&tr, 0, tr.len() - 5)
            .and_then(|w| estimate_blowup_time_in(&tr, w, GrowthLaw::Exponential { rate }))
    });
    let time_err = est.map(|e| (e.t_hat - t_blow).abs() / t_blow).unwrap_or(f64::NAN);
    slope_err.max(time_err)
}

/// Numerical hygiene, estimator agreement, determinism and total runtime.
pub fn criterion_9(refs: &ReferenceRuns, suite_start: Instant) -> CriterionResult {
    let mut c = CriterionResult::new(
        "9",
        "numerical hygiene",
        "Laplacian 1e-12, Γ identity 1e-10, synthetic fits 1e-8, spread <= 2%, deterministic, <= 10 min",
    );
    let lap = laplacian_quadratic_error();
    let gam = gamma_identity_error();
    let syn = synthetic_fit_error();
    let runs: Vec<ReferenceRun> = refs.dirichlet.iter().chain(&refs.neumann).cloned().collect();
    let spreads: Vec<Option<f64>> = match outcomes(&runs) {
        Ok(outs) => outs.iter().map(|o| o.summary().relative_spread).collect(),
        Err(e) => return c.fail_with(e),
    };
    let spread_ok = spreads.iter().all(|s| s.is_some_and(|v| v <= 0.02));
    let deterministic = match &refs.dirichlet[0].outcome {
        Ok(first) => match execute(&refs.dirichlet[0].params) {
            Ok(again) => {
                matches!((to_json(first.summary()), to_json(again.summary())), (Ok(a), Ok(b)) if a == b)
            }
            Err(_) => false,
        },
        Err(_) => false,
    };
    let elapsed = suite_start.elapsed();
    c.measured = format!(
        "Laplacian {lap:.1e}, Γ {gam:.1e}, synthetic {syn:.1e}, spreads [{}], deterministic {deterministic}, {:.1} s",
        spreads.iter().map(|s| s.map_or("n/a".into(), |v| format!("{v:.1e}"))).collect::<Vec<_>>().join(", "),
        elapsed.as_secs_f64()
    );
    c.passed = lap <= 1e-12
        && gam <= 1e-10
        && syn <= 1e-8
        && spread_ok
        && deterministic
        && elapsed <= Duration::from_secs(600);
    c
}

/// Convergence of the blow-up time under refinement (reported, not gating).
pub fn convergence_row(refs: &ReferenceRuns) -> CriterionResult {
    let mut c = CriterionResult::new("S", "convergence sweep", "|T(100) - T(200)| > |T(200) - T(400)|");
    c.gating = false;
    let runs: Vec<ReferenceRun> =
        std::iter::once(refs.coarse.clone()).chain(refs.dirichlet.iter().cloned()).collect();
    let t: Vec<Option<f64>> = match outcomes(&runs) {
        Ok(outs) => outs.iter().map(|o| o.summary().t_hat).collect(),
        Err(e) => return c.fail_with(e),
    };
    if let [Some(a), Some(b), Some(d)] = t[..] {
        let (d1, d2) = ((a - b).abs(), (b - d).abs());
        c.measured = format!("T = [{a:.9}, {b:.9}, {d:.9}], changes {d1:.2e}, {d2:.2e}");
        c.passed = d2 < d1;
    } else {
        c.measured = format!("T = [{}]", list(&t));
    }
    c
}

/// Result of the whole suite.
#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub criteria: Vec<CriterionResult>,
    pub elapsed: Duration,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.criteria.iter().filter(|c| c.gating).all(|c| c.passed)
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        for c in &self.criteria {
            let _ = writeln!(out, "{}", c.line());
            for note in &c.notes {
                let _ = writeln!(out, "    note: {note}");
            }
        }
        let failed: Vec<&str> =
            self.criteria.iter().filter(|c| c.gating && !c.passed).map(|c| c.id).collect();
        let _ = writeln!(
            out,
            "{} ({:.1} s){}",
            if failed.is_empty() { "all criteria passed" } else { "some criteria failed" },
            self.elapsed.as_secs_f64(),
            if failed.is_empty() { String::new() } else { format!(": {}", failed.join(", ")) }
        );
        out
    }
}

pub fn run_suite(options: VerifyOptions) -> SuiteReport {
    let start = Instant::now();
    let c1 = criterion_1();
    let refs = ReferenceRuns::compute(options);
    let criteria = vec![
        c1,
        criterion_2(&refs),
        criterion_3(&refs),
        criterion_4(&refs),
        criterion_5(&refs),
        criterion_6(&refs),
        criterion_7(&refs),
        criterion_8(&refs),
        criterion_9(&refs, start),
        convergence_row(&refs),
    ];
    SuiteReport { criteria, elapsed: start.elapsed() }
}
