//! Single runs and sweeps, and the files they leave behind.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use blowup_core::grid::RadialGrid;
use blowup_core::problem::{ProblemError, ProblemSpec};
use blowup_core::solver::{integrate, RunResult};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, RunParams, SweepPoint};
use crate::format::{g17, g17_opt};
use crate::summary::{analyze, Analysis, RunSummary};
use crate::svg::{LinePlot, Series};
use crate::LabError;

pub const TRACE_HEADER: [&str; 6] = ["t", "dt", "u_center", "u_boundary", "u_max", "argmax_r"];
pub const PROFILE_HEADER: [&str; 2] = ["r", "u"];
pub const SWEEP_HEADER: [&str; 19] = [
    "index",
    "dir",
    "kind",
    "p",
    "num_cells",
    "amplitude",
    "status",
    "error",
    "blew_up",
    "t_hat",
    "relative_spread",
    "slope",
    "theory_slope",
    "envelope_log_c",
    "monotonicity",
    "gradient_functional",
    "pointwise_bound",
    "axis_growth",
    "gradient_growth_window",
];
pub const CONVERGENCE_HEADER: [&str; 5] = ["p", "amplitude", "num_cells", "t_hat", "delta_t_hat"];

/// Output root used when neither `--out`, `BLOWUP_LAB_OUT` nor `out_dir` is set.
pub const DEFAULT_OUT_DIR: &str = "blowup-out";

/// A finished and analyzed run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub params: RunParams,
    pub run: RunResult,
    pub analysis: Analysis,
    pub wall_clock: Duration,
}

impl RunOutcome {
    pub fn summary(&self) -> &RunSummary {
        &self.analysis.summary
    }
}

/// Builds and validates the problem. Fails before anything is integrated.
pub fn build_spec(params: &RunParams) -> Result<ProblemSpec, LabError> {
    let grid = RadialGrid::new(params.n_dim, params.radius, params.num_cells)
        .map_err(|e| LabError::ConfigParse(e.to_string()))?;
    ProblemSpec::new(params.kind, params.p, grid, params.family).map_err(|e| match e {
        ProblemError::ValidationFailed(report) => LabError::ValidationFailed(report.notes.join("; ")),
        ProblemError::InvalidExponent(_) => LabError::ConfigParse(e.to_string()),
        other => LabError::ValidationFailed(other.to_string()),
    })
}

/// Validates, integrates and analyzes. Touches no files.
pub fn execute(params: &RunParams) -> Result<RunOutcome, LabError> {
    let start = Instant::now();
    let spec = build_spec(params)?;
    let run = integrate(&spec, &params.solver)?;
    let analysis = analyze(params, &run);
    Ok(RunOutcome { params: *params, run, analysis, wall_clock: start.elapsed() })
}

/// Output root: explicit choice (flag or environment), then the config, then the default.
pub fn resolve_out_root(explicit: Option<&Path>, config: &ExperimentConfig) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, LabError> {
    let file = std::fs::File::create(path).map_err(LabError::io(path))?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> LabError + '_ {
    move |e| LabError::Io { path: path.to_path_buf(), source: std::io::Error::other(e.to_string()) }
}

fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<(), LabError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(csv_err(path))?;
    for row in rows {
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(LabError::io(path))
}

fn write_text(path: &Path, text: &str) -> Result<(), LabError> {
    std::fs::write(path, text).map_err(LabError::io(path))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, LabError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| LabError::Serialize(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn rate_plot(outcome: &RunOutcome) -> LinePlot {
    let trace = &outcome.run.trace;
    let samples = trace.samples();
    match outcome.analysis.rate {
        Some(fit) => {
            let points: Vec<(f64, f64)> =
                fit.window.indices().map(|i| (-(fit.t_hat - samples[i].t).ln(), trace.observed(i))).collect();
            let line = |a: f64, b: f64| points.iter().map(|&(x, _)| (x, a + b * x)).collect();
            LinePlot {
                title: format!("rate fit: slope {:.4} (bound {:.4})", fit.slope, fit.theory_slope),
                x_label: "-log(T - t)".into(),
                y_label: "u".into(),
                series: vec![
                    Series::solid("samples", points.clone()),
                    Series::dashed("least squares", line(fit.intercept, fit.slope)),
                    Series::dashed("upper envelope", line(fit.envelope_log_c, fit.theory_slope)),
                ],
            }
        }
        None => LinePlot {
            title: "no rate fit: observable against time".into(),
            x_label: "t".into(),
            y_label: "u".into(),
            series: vec![Series::solid(
                "u",
                (0..samples.len()).map(|i| (samples[i].t, trace.observed(i))).collect(),
            )],
        },
    }
}

fn profile_plot(outcome: &RunOutcome) -> LinePlot {
    let grid = outcome.run.grid();
    let profile = |u: &[f64]| u.iter().enumerate().map(|(i, &v)| (grid.node(i), v)).collect();
    LinePlot {
        title: format!("profile at t = {:.6}", outcome.run.final_state.t),
        x_label: "r".into(),
        y_label: "u".into(),
        series: vec![
            Series::dashed("initial", profile(&outcome.run.snapshots[0])),
            Series::solid("final", profile(outcome.run.final_state.field.values())),
        ],
    }
}

/// Writes trace.csv, profile_final.csv, summary.json, rate_fit.svg,
/// profile.svg and timing.json into `dir`.
pub fn write_run_outputs(outcome: &RunOutcome, dir: &Path) -> Result<(), LabError> {
    std::fs::create_dir_all(dir).map_err(LabError::io(dir))?;
    let samples = outcome.run.trace.samples();
    write_csv(
        &dir.join("trace.csv"),
        &TRACE_HEADER,
        samples.iter().map(|s| {
            vec![g17(s.t), g17(s.dt), g17(s.u_center), g17(s.u_boundary), g17(s.u_max), g17(s.argmax_radius)]
        }),
    )?;
    let grid = outcome.run.grid();
    write_csv(
        &dir.join("profile_final.csv"),
        &PROFILE_HEADER,
        outcome
            .run
            .final_state
            .field
            .values()
            .iter()
            .enumerate()
            .map(|(i, &u)| vec![g17(grid.node(i)), g17(u)]),
    )?;
    write_text(&dir.join("summary.json"), &to_json(outcome.summary())?)?;
    write_text(&dir.join("rate_fit.svg"), &rate_plot(outcome).render())?;
    write_text(&dir.join("profile.svg"), &profile_plot(outcome).render())?;
    // kept apart from summary.json so that the summary is reproducible byte for byte
    let timing = serde_json::json!({ "wall_clock_seconds": outcome.wall_clock.as_secs_f64() });
    write_text(&dir.join("timing.json"), &to_json(&timing)?)
}

/// Runs the base point of `config` and writes its files into `out_dir`.
/// Nothing is written if validation or integration fails.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutcome, LabError> {
    let params = config.params_at(config.base_point())?;
    let outcome = execute(&params)?;
    write_run_outputs(&outcome, out_dir)?;
    Ok(outcome)
}

/// One row of sweep.csv.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub index: usize,
    pub dir: String,
    pub point: SweepPoint,
    pub result: Result<RunSummary, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Whether convergence.csv was written (two or more grid sizes).
    pub convergence: bool,
}

fn sweep_record(config: &ExperimentConfig, row: &SweepRow) -> Vec<String> {
    let pt = row.point;
    let mut rec = vec![
        row.index.to_string(),
        row.dir.clone(),
        config.kind.label().to_string(),
        g17(pt.p),
        pt.num_cells.to_string(),
        g17(pt.amplitude),
    ];
    match &row.result {
        Ok(s) => {
            let m = &s.monitors;
            rec.extend([
                "ok".to_string(),
                String::new(),
                s.blew_up.to_string(),
                g17_opt(s.t_hat),
                g17_opt(s.relative_spread),
                g17_opt(s.rate.as_ref().map(|r| r.slope)),
                g17_opt(s.rate.as_ref().map(|r| r.theory_slope)),
                g17_opt(s.rate.as_ref().map(|r| r.envelope_log_c)),
                g17_opt(m.monotonicity),
                g17_opt(m.gradient_functional),
                g17_opt(m.pointwise_bound),
                g17_opt(m.axis_growth),
                g17_opt(m.gradient_growth_window),
            ]);
        }
        Err(e) => {
            rec.extend(["failed".to_string(), e.clone()]);
            rec.extend(std::iter::repeat_n(String::new(), SWEEP_HEADER.len() - 8));
        }
    }
    rec
}

fn convergence_records(rows: &[SweepRow]) -> Vec<Vec<String>> {
    type Group = ((f64, f64), Vec<(usize, Option<f64>)>);
    let mut groups: Vec<Group> = Vec::new();
    for row in rows {
        let key = (row.point.p, row.point.amplitude);
        let t_hat = row.result.as_ref().ok().and_then(|s| s.t_hat);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push((row.point.num_cells, t_hat)),
            None => groups.push((key, vec![(row.point.num_cells, t_hat)])),
        }
    }
    let mut out = Vec::new();
    for ((p, amplitude), mut runs) in groups {
        runs.sort_by_key(|r| r.0);
        let mut prev: Option<f64> = None;
        for (m, t_hat) in runs {
            let delta = match (prev, t_hat) {
                (Some(a), Some(b)) => Some((b - a).abs()),
                _ => None,
            };
            out.push(vec![g17(p), g17(amplitude), m.to_string(), g17_opt(t_hat), g17_opt(delta)]);
            prev = t_hat;
        }
    }
    out
}

/// Runs the cartesian product of the sweep axes, up to `jobs` at a time
/// (0 = one per core). Each run writes into its own `run_NNN` directory;
/// failed runs become rows marked `failed` and leave no directory.
pub fn run_sweep(config: &ExperimentConfig, out_root: &Path, jobs: usize) -> Result<SweepReport, LabError> {
    if !config.has_sweep() {
        return Err(LabError::EmptySweep);
    }
    let points = config.sweep_points();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| LabError::Serialize(format!("thread pool: {e}")))?;
    let rows: Vec<SweepRow> = pool.install(|| {
        points
            .par_iter()
            .enumerate()
            .map(|(index, &point)| {
                let dir = format!("run_{index:03}");
                let result = config
                    .params_at(point)
                    .and_then(|params| execute(&params))
                    .and_then(|outcome| {
                        write_run_outputs(&outcome, &out_root.join(&dir))?;
                        Ok(outcome.analysis.summary)
                    })
                    .map_err(|e| e.to_string());
                SweepRow { index, dir, point, result }
            })
            .collect()
    });
    std::fs::create_dir_all(out_root).map_err(LabError::io(out_root))?;
    write_csv(&out_root.join("sweep.csv"), &SWEEP_HEADER, rows.iter().map(|r| sweep_record(config, r)))?;
    let mut sizes: Vec<usize> = points.iter().map(|p| p.num_cells).collect();
    sizes.sort_unstable();
    sizes.dedup();
    let convergence = sizes.len() >= 2;
    if convergence {
        write_csv(&out_root.join("convergence.csv"), &CONVERGENCE_HEADER, convergence_records(&rows))?;
    }
    Ok(SweepReport { rows, convergence })
}
