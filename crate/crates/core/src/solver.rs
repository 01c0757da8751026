//! Explicit Heun (trapezoidal Runge–Kutta) integration of both problems into
//! the blow-up regime, with step control that resolves both the diffusion and
//! the reaction time scales.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{estimate_blowup_time, AnalysisError, RunTrace, SampleFlags, TraceMeta, TraceSample};
use crate::grid::{argmax, laplacian_into, BoundaryClosure, NodalField, RadialGrid};
use crate::problem::{eval_f, eval_f_prime, ProblemKind, ProblemSpec, SourceError, LOG_OVERFLOW_LIMIT};

/// Number of trailing accepted steps always recorded at stride 1.
pub const DENSE_TAIL: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("rhs requested for {requested:?} but spec is {actual:?}")]
    KindMismatch { requested: ProblemKind, actual: ProblemKind },
    #[error(transparent)]
    Source(#[from] SourceError),
    #[error("reaction-only estimate failed: {0}")]
    Estimate(#[from] AnalysisError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// σ: fraction of the explicit diffusion limit `h²/(2n)`.
    pub cfl_safety: f64,
    /// ρ: target per-step growth of `u` from the nonlinearity.
    pub reaction_safety: f64,
    pub dt_min: f64,
    /// Stop once `max u` reaches this.
    pub u_stop: f64,
    pub t_max: f64,
    /// Record every this many accepted steps (plus the final dense window).
    pub record_every: usize,
}

impl SolverConfig {
    /// Defaults for exponent `p`.
    pub fn for_exponent(p: f64) -> Self {
        Self {
            cfl_safety: 0.9,
            reaction_safety: 0.05,
            dt_min: 1e-14,
            u_stop: Self::default_u_stop(p),
            t_max: 50.0,
            record_every: 50,
        }
    }

    /// 4, reduced for large `p` so that `u_stop^p <= 20`.
    pub fn default_u_stop(p: f64) -> f64 {
        4.0f64.min(20f64.powf(1.0 / p))
    }

    /// Full bounds check: `0 < σ <= 1`, `0 < ρ <= 1`, positive `dt_min`,
    /// `t_max` and stride, and `u_stop^p` under the overflow limit.
    pub fn validate(&self, p: f64) -> Result<(), SolverError> {
        let bad = |what: String| Err(SolverError::InvalidConfig(what));
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return bad(format!("cfl_safety must lie in (0, 1], got {}", self.cfl_safety));
        }
        if !(self.reaction_safety > 0.0 && self.reaction_safety <= 1.0) {
            return bad(format!("reaction_safety must lie in (0, 1], got {}", self.reaction_safety));
        }
        if !(self.u_stop > 0.0 && self.u_stop.powf(p) < LOG_OVERFLOW_LIMIT) {
            return bad(format!(
                "u_stop must be positive with u_stop^p < {LOG_OVERFLOW_LIMIT}, got {}",
                self.u_stop
            ));
        }
        self.check_runnable()
    }

    /// The weaker check `integrate` relies on. Allows σ > 1 so that
    /// deliberately unstable runs can be exercised.
    fn check_runnable(&self) -> Result<(), SolverError> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.cfl_safety) || !positive(self.reaction_safety) {
            return Err(SolverError::InvalidConfig("safety factors must be positive".into()));
        }
        if !positive(self.dt_min) || !positive(self.t_max) || !positive(self.u_stop) {
            return Err(SolverError::InvalidConfig("dt_min, t_max and u_stop must be positive".into()));
        }
        if self.record_every == 0 {
            return Err(SolverError::InvalidConfig("record_every must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionState {
    pub t: f64,
    pub field: NodalField,
    pub step_index: usize,
    pub last_dt: f64,
}

impl SolutionState {
    pub fn initial(spec: &ProblemSpec) -> Self {
        Self { t: 0.0, field: spec.initial_data().values().clone(), step_index: 0, last_dt: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ThresholdReached,
    DtUnderflow,
    TMaxReached,
    OverflowGuard,
    /// A step produced a negative or non-finite value (unstable step size).
    InvalidState,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub spec: ProblemSpec,
    pub config: SolverConfig,
    pub trace: RunTrace,
    /// Full nodal profile for each trace sample, same order as `trace.samples()`.
    pub snapshots: Vec<Vec<f64>>,
    pub final_state: SolutionState,
    pub stop_reason: StopReason,
    pub blew_up: bool,
}

impl RunResult {
    pub fn grid(&self) -> &RadialGrid {
        self.spec.grid()
    }
}

fn blew_up(reason: StopReason, u_max: f64, u_stop: f64) -> bool {
    match reason {
        StopReason::ThresholdReached | StopReason::OverflowGuard => true,
        StopReason::DtUnderflow => u_max >= 0.5 * u_stop,
        StopReason::TMaxReached | StopReason::InvalidState => false,
    }
}

/// Right-hand side `Δu + f(u)` with `u(R) = 0` pinned (zero boundary row).
pub fn rhs_dirichlet(state: &SolutionState, spec: &ProblemSpec) -> Result<NodalField, SolverError> {
    rhs_field(state, spec, ProblemKind::DirichletSource)
}

/// Right-hand side `Δu` with the flux `e^{u(R)^p}` entering through the ghost node.
pub fn rhs_neumann(state: &SolutionState, spec: &ProblemSpec) -> Result<NodalField, SolverError> {
    rhs_field(state, spec, ProblemKind::NeumannFlux)
}

fn rhs_field(
    state: &SolutionState,
    spec: &ProblemSpec,
    kind: ProblemKind,
) -> Result<NodalField, SolverError> {
    if spec.kind() != kind {
        return Err(SolverError::KindMismatch { requested: kind, actual: spec.kind() });
    }
    let mut out = vec![0.0; spec.grid().num_nodes()];
    rhs_into(spec, state.field.values(), &mut out)?;
    NodalField::new(*spec.grid(), out).map_err(|e| SolverError::InvalidConfig(e.to_string()))
}

fn rhs_into(spec: &ProblemSpec, u: &[f64], out: &mut [f64]) -> Result<(), SourceError> {
    let grid = spec.grid();
    let m = grid.num_cells();
    let p = spec.p();
    match spec.kind() {
        ProblemKind::DirichletSource => {
            laplacian_into(grid, u, BoundaryClosure::Dirichlet { value: 0.0 }, out);
            if spec.forcing() {
                for (o, &ui) in out[..m].iter_mut().zip(&u[..m]) {
                    *o += eval_f(ui, p)?;
                }
            }
            out[m] = 0.0;
        }
        ProblemKind::NeumannFlux => {
            let flux = if spec.forcing() { eval_f(u[m], p)? } else { 0.0 };
            laplacian_into(grid, u, BoundaryClosure::Neumann { flux }, out);
        }
    }
    Ok(())
}

/// Factor by which the nonlinearity's rate enters the fastest-growing row:
/// 1 for the interior source, `2/h + (n-1)/R` for the ghost-node flux.
fn reaction_gain(spec: &ProblemSpec) -> f64 {
    let grid = spec.grid();
    match spec.kind() {
        ProblemKind::DirichletSource => 1.0,
        ProblemKind::NeumannFlux => 2.0 / grid.spacing() + (grid.dim() - 1.0) / grid.radius(),
    }
}

/// Step size `max(dt_min, min(σh²/(2n), ρ/(κ f'(u_max)), ρ/(κ f(u_max))))`,
/// with `κ` the reaction gain of the problem (1 for the interior source).
pub fn adaptive_dt(
    state: &SolutionState,
    spec: &ProblemSpec,
    cfg: &SolverConfig,
) -> Result<f64, SourceError> {
    step_size(spec, cfg, state.field.max())
}

fn step_size(spec: &ProblemSpec, cfg: &SolverConfig, u_max: f64) -> Result<f64, SourceError> {
    let grid = spec.grid();
    let h = grid.spacing();
    let mut dt = cfg.cfl_safety * h * h / (2.0 * grid.dim());
    if spec.forcing() {
        let gain = reaction_gain(spec);
        let u = u_max.max(0.0);
        let f = gain * eval_f(u, spec.p())?;
        let fp = gain * eval_f_prime(u, spec.p())?;
        dt = dt.min(cfg.reaction_safety / f);
        if fp > 0.0 {
            dt = dt.min(cfg.reaction_safety / fp);
        }
    }
    Ok(dt.max(cfg.dt_min))
}

/// One Heun step in place. `scratch` holds three work vectors of `u.len()`.
fn heun_step<F>(u: &mut [f64], dt: f64, scratch: &mut [Vec<f64>; 3], mut rhs: F) -> Result<(), SourceError>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<(), SourceError>,
{
    let [k1, k2, pred] = scratch;
    rhs(u, k1)?;
    for ((p, &ui), &k) in pred.iter_mut().zip(u.iter()).zip(k1.iter()) {
        *p = ui + dt * k;
    }
    rhs(pred, k2)?;
    for ((ui, &a), &b) in u.iter_mut().zip(k1.iter()).zip(k2.iter()) {
        *ui += 0.5 * dt * (a + b);
    }
    Ok(())
}

struct Recorded {
    sample: TraceSample,
    values: Vec<f64>,
}

/// Keeps every `stride`-th accepted state plus the last [`DENSE_TAIL`] states.
struct Recorder {
    stride: usize,
    regular: Vec<Recorded>,
    tail: VecDeque<Recorded>,
    grid: Option<RadialGrid>,
}

impl Recorder {
    fn new(stride: usize, grid: Option<RadialGrid>) -> Self {
        Self { stride, regular: Vec::new(), tail: VecDeque::with_capacity(DENSE_TAIL + 1), grid }
    }

    fn push(&mut self, step: usize, t: f64, dt: f64, u: &[f64]) {
        let m = u.len() - 1;
        let imax = argmax(u);
        let argmax_radius = match self.grid {
            Some(g) => g.node(imax),
            None => 0.0,
        };
        let sample = TraceSample {
            step,
            t,
            dt,
            u_center: u[0],
            u_boundary: u[m],
            u_max: u[imax],
            argmax_radius,
            flags: SampleFlags::empty(),
        };
        if step.is_multiple_of(self.stride) {
            self.regular.push(Recorded { sample, values: u.to_vec() });
        }
        let mut slot = if self.tail.len() == DENSE_TAIL {
            self.tail.pop_front().expect("tail is full")
        } else {
            Recorded { sample, values: Vec::with_capacity(u.len()) }
        };
        slot.sample = sample;
        slot.values.clear();
        slot.values.extend_from_slice(u);
        self.tail.push_back(slot);
    }

    fn finish(self, kind: ProblemKind, dt_min: f64) -> (Vec<TraceSample>, Vec<Vec<f64>>) {
        let first_tail = self.tail.front().map_or(usize::MAX, |r| r.sample.step);
        let tail_len = self.tail.len();
        let mut samples = Vec::new();
        let mut snapshots = Vec::new();
        for r in self.regular.into_iter().filter(|r| r.sample.step < first_tail) {
            samples.push(r.sample);
            snapshots.push(r.values);
        }
        let n_regular_end = samples.len();
        for r in self.tail {
            samples.push(r.sample);
            snapshots.push(r.values);
        }
        let mut prev_max: Option<f64> = None;
        for (i, (s, u)) in samples.iter_mut().zip(&snapshots).enumerate() {
            let mut flags = SampleFlags::empty();
            if u.iter().any(|&v| v < 0.0) {
                flags.insert(SampleFlags::NEGATIVE);
            }
            if prev_max.is_some_and(|pm| s.u_max < pm) {
                flags.insert(SampleFlags::UMAX_DECREASED);
            }
            let expected = match kind {
                ProblemKind::DirichletSource => 0,
                ProblemKind::NeumannFlux => u.len() - 1,
            };
            if argmax(u) != expected {
                flags.insert(SampleFlags::ARGMAX_OFF_AXIS);
            }
            if s.dt > 0.0 && s.dt <= dt_min {
                flags.insert(SampleFlags::DT_FLOOR);
            }
            if i >= n_regular_end && tail_len > 0 {
                flags.insert(SampleFlags::DENSE_TAIL);
            }
            s.flags = flags;
            prev_max = Some(s.u_max);
        }
        (samples, snapshots)
    }
}

/// Integrates `spec` from its initial data until a stop condition.
///
/// Records the initial state, every `record_every`-th accepted step, and the
/// final [`DENSE_TAIL`] accepted steps at stride 1.
pub fn integrate(spec: &ProblemSpec, cfg: &SolverConfig) -> Result<RunResult, SolverError> {
    cfg.check_runnable()?;
    let grid = *spec.grid();
    let m = grid.num_cells();
    let mut u = spec.initial_data().values().values().to_vec();
    if spec.kind() == ProblemKind::DirichletSource {
        u[m] = 0.0;
    }
    let mut scratch = [vec![0.0; m + 1], vec![0.0; m + 1], vec![0.0; m + 1]];
    let mut saved = vec![0.0; m + 1];
    let mut recorder = Recorder::new(cfg.record_every, Some(grid));
    let mut t = 0.0;
    let mut step = 0usize;
    let mut last_dt = 0.0;
    recorder.push(0, t, 0.0, &u);

    let max_of = |u: &[f64]| u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let stop_reason = loop {
        let u_max = max_of(&u);
        if u_max >= cfg.u_stop {
            break StopReason::ThresholdReached;
        }
        if t >= cfg.t_max {
            break StopReason::TMaxReached;
        }
        let mut dt = match step_size(spec, cfg, u_max) {
            Ok(dt) => dt,
            Err(SourceError::Overflow { .. }) => break StopReason::OverflowGuard,
            Err(SourceError::NegativeInput(_)) => break StopReason::InvalidState,
        };
        if dt <= cfg.dt_min {
            break StopReason::DtUnderflow;
        }
        if t + dt > cfg.t_max {
            dt = cfg.t_max - t;
        }

        saved.copy_from_slice(&u);
        let outcome = heun_step(&mut u, dt, &mut scratch, |x, out| rhs_into(spec, x, out));
        if let Err(e) = outcome {
            u.copy_from_slice(&saved);
            break match e {
                SourceError::Overflow { .. } => StopReason::OverflowGuard,
                SourceError::NegativeInput(_) => StopReason::InvalidState,
            };
        }
        if spec.kind() == ProblemKind::DirichletSource {
            u[m] = 0.0;
        }
        if u.iter().any(|v| !v.is_finite()) {
            u.copy_from_slice(&saved);
            break StopReason::InvalidState;
        }
        t += dt;
        step += 1;
        last_dt = dt;
        recorder.push(step, t, dt, &u);
        if u.iter().any(|&v| v < 0.0) {
            break StopReason::InvalidState;
        }
    };

    let u_max = max_of(&u);
    let blew_up = blew_up(stop_reason, u_max, cfg.u_stop);
    let (samples, snapshots) = recorder.finish(spec.kind(), cfg.dt_min);
    let meta =
        TraceMeta { kind: spec.kind(), p: spec.p(), u_stop: cfg.u_stop, radius: grid.radius(), blew_up };
    let trace = RunTrace::new(meta, samples).map_err(SolverError::Estimate)?;
    let field = NodalField::new(grid, u).map_err(|e| SolverError::InvalidConfig(e.to_string()))?;
    Ok(RunResult {
        spec: spec.clone(),
        config: *cfg,
        trace,
        snapshots,
        final_state: SolutionState { t, field, step_index: step, last_dt },
        stop_reason,
        blew_up,
    })
}

/// Result of integrating the spatially flat ODE `u' = e^{u^p}`.
#[derive(Debug, Clone)]
pub struct ReactionOnlyRun {
    /// Extrapolated blow-up time.
    pub t_hat: f64,
    pub trace: RunTrace,
    pub stop_reason: StopReason,
}

/// Integrates `u' = e^{u^p}`, `u(0) = u0` with the Heun stepper and returns
/// the blow-up time extrapolated from its trace. `p = 1` is accepted here.
///
/// The fit window needs at least 50 samples with `u` in `[u_stop/2, u_stop]`;
/// `reaction_safety = 0.01` gives about 100 per unit of `u`.
pub fn integrate_reaction_only(u0: f64, p: f64, cfg: &SolverConfig) -> Result<ReactionOnlyRun, SolverError> {
    cfg.check_runnable()?;
    if !(u0 >= 0.0 && u0 < cfg.u_stop) {
        return Err(SolverError::InvalidConfig(format!("u0 must lie in [0, u_stop), got {u0}")));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(SolverError::InvalidConfig(format!("p must be >= 1, got {p}")));
    }
    let mut u = [u0];
    let mut scratch = [vec![0.0; 1], vec![0.0; 1], vec![0.0; 1]];
    let mut recorder = Recorder::new(cfg.record_every, None);
    recorder.push(0, 0.0, 0.0, &u);
    let mut t = 0.0;
    let mut step = 0usize;
    let stop_reason = loop {
        if u[0] >= cfg.u_stop {
            break StopReason::ThresholdReached;
        }
        if t >= cfg.t_max {
            break StopReason::TMaxReached;
        }
        let f = eval_f(u[0], p)?;
        let fp = eval_f_prime(u[0], p)?;
        let mut dt = cfg.reaction_safety / f;
        if fp > 0.0 {
            dt = dt.min(cfg.reaction_safety / fp);
        }
        let dt = dt.max(cfg.dt_min);
        if dt <= cfg.dt_min {
            break StopReason::DtUnderflow;
        }
        match heun_step(&mut u, dt, &mut scratch, |x, out| {
            out[0] = eval_f(x[0], p)?;
            Ok(())
        }) {
            Ok(()) => {}
            Err(SourceError::Overflow { .. }) => break StopReason::OverflowGuard,
            Err(e) => return Err(e.into()),
        }
        t += dt;
        step += 1;
        recorder.push(step, t, dt, &u);
    };
    let (samples, _) = recorder.finish(ProblemKind::DirichletSource, cfg.dt_min);
    let meta = TraceMeta {
        kind: ProblemKind::DirichletSource,
        p,
        u_stop: cfg.u_stop,
        radius: 0.0,
        blew_up: blew_up(stop_reason, u[0], cfg.u_stop),
    };
    let trace = RunTrace::new(meta, samples)?;
    let estimate = estimate_blowup_time(&trace)?;
    Ok(ReactionOnlyRun { t_hat: estimate.t_hat, trace, stop_reason })
}
