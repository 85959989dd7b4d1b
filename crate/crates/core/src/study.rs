//! Monte Carlo convergence studies over a ladder of time steps.
//!
//! A study fixes a network, a randomization scheme, and a spatial
//! resolution, then for each time step `h` compares randomized runs against
//! a deterministic reference — either plain simulations (forward study) or
//! optimal-control solves (control study). Each cell reports mean and sample
//! standard deviation over independent realizations, identifying each metric
//! by name so emitted documents are self-describing.
//!
//! Error metrics carry a `_percent` suffix and are stored ×100;
//! `_count` metrics are integers; everything else (timings) is in raw units.
//! Timing rows are inherently nondeterministic; all other rows are exactly
//! reproducible for a fixed seed.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::control::{
    compare_controls, ControlDifference, ControlVector, OptimizerConfig, TrackingProblem,
};
use crate::error::{Result, ValidationError};
use crate::graph::Graph;
use crate::grid::{Discretization, TimeGrid};
use crate::par::indexed_map;
use crate::randomization::{realization_rng, BatchScheme};
use crate::riemann::{Signal, TargetField};
use crate::solver::{error_norms, Dynamics, ErrorNorms, InitialData, Simulator, Trajectory};

/// One study measurement: statistics of a named metric at one time step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub h: f64,
    pub metric: String,
    pub mean: f64,
    /// Sample standard deviation over realizations (0 for single-valued
    /// metrics such as the deterministic reference timing).
    pub std: f64,
}

/// All rows of one study, in time-step order with a fixed per-cell metric
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyOutput {
    pub rows: Vec<StudyRow>,
}

impl StudyOutput {
    /// The `(h, mean)` sequence of one metric, in row order — the shape
    /// consumed by [`estimate_rate`].
    pub fn series(&self, metric: &str) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.metric == metric)
            .map(|r| (r.h, r.mean))
            .collect()
    }
}

/// Forward-dynamics study: randomized simulations against a deterministic
/// reference, per time step.
pub struct ForwardStudyConfig {
    pub graph: Arc<Graph>,
    pub scheme: BatchScheme,
    pub horizon: f64,
    /// Time steps, typically in decreasing order.
    pub steps: Vec<f64>,
    pub max_dx: f64,
    pub initial: InitialData,
    /// One boundary signal per controlled vertex.
    pub controls: Vec<Signal>,
    pub realizations: usize,
    pub study_seed: u64,
}

/// Optimal-control study: randomized optimal controls against the
/// deterministic optimum, per time step.
pub struct ControlStudyConfig {
    pub graph: Arc<Graph>,
    pub scheme: BatchScheme,
    pub horizon: f64,
    pub steps: Vec<f64>,
    pub max_dx: f64,
    pub initial: InitialData,
    pub target: TargetField,
    pub alpha: f64,
    pub optimizer: OptimizerConfig,
    pub realizations: usize,
    pub study_seed: u64,
}

fn check_study_shape(steps: &[f64], realizations: usize) -> Result<(), ValidationError> {
    if steps.is_empty() {
        return Err(ValidationError::Config {
            context: "study".into(),
            message: "the time-step list is empty".into(),
        });
    }
    if realizations == 0 {
        return Err(ValidationError::Config {
            context: "study".into(),
            message: "at least one realization is required".into(),
        });
    }
    Ok(())
}

/// Sample mean and standard deviation (n−1 normalization).
fn stats(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = samples
        .iter()
        .map(|x| {
            let d = x - mean;
            d * d
        })
        .sum::<f64>()
        / (n as f64 - 1.0);
    (mean, var.sqrt())
}

fn push_stat(rows: &mut Vec<StudyRow>, h: f64, metric: &str, samples: &[f64]) {
    let (mean, std) = stats(samples);
    rows.push(StudyRow {
        h,
        metric: metric.into(),
        mean,
        std,
    });
}

fn push_single(rows: &mut Vec<StudyRow>, h: f64, metric: &str, value: f64) {
    rows.push(StudyRow {
        h,
        metric: metric.into(),
        mean: value,
        std: 0.0,
    });
}

/// Relative trajectory errors, treating an exactly identical pair as zero
/// even when the reference itself is zero.
fn state_errors(trial: &Trajectory, reference: &Trajectory) -> Result<ErrorNorms> {
    let identical =
        (0..=reference.steps()).all(|n| trial.state(n) == reference.state(n));
    if identical {
        return Ok(ErrorNorms {
            rel_w: 0.0,
            rel_y: 0.0,
        });
    }
    error_norms(trial, reference)
}

/// Relative control distances, treating an exactly identical pair as zero
/// even when the reference is the zero control.
fn control_errors(
    trial: &ControlVector,
    reference: &ControlVector,
) -> Result<ControlDifference> {
    if trial == reference {
        return Ok(ControlDifference {
            rel_l2: 0.0,
            rel_h2: 0.0,
        });
    }
    compare_controls(trial, reference)
}

/// Run randomized simulations against the deterministic reference for every
/// configured time step.
///
/// Per-cell metrics: `deterministic_seconds`, `randomized_seconds`,
/// `time_ratio_percent` (randomized/deterministic, per realization),
/// `rel_w_percent`, `rel_y_percent`, and `factorization_count` (operator
/// factorizations performed for the cell — the scheme's subsets plus the
/// deterministic operator, never more).
pub fn run_forward_study(config: &ForwardStudyConfig) -> Result<StudyOutput> {
    check_study_shape(&config.steps, config.realizations)?;
    let mut rows = Vec::new();
    for &h in &config.steps {
        let tgrid = TimeGrid::new(config.horizon, h)?;
        let disc = Arc::new(Discretization::new(
            Arc::clone(&config.graph),
            tgrid,
            config.max_dx,
        )?);
        let sim = Simulator::new(disc, Some(&config.scheme))?;
        let reference =
            sim.simulate(Dynamics::Deterministic, &config.initial, &config.controls)?;
        let det_seconds = reference.wall_time();

        let samples = indexed_map(config.realizations, |r| -> Result<[f64; 3]> {
            let mut rng = realization_rng(config.study_seed, r as u64);
            let realization = config.scheme.sample_realization(tgrid.steps(), &mut rng);
            let traj = sim.simulate(
                Dynamics::Randomized(&realization),
                &config.initial,
                &config.controls,
            )?;
            let errs = state_errors(&traj, &reference)?;
            Ok([traj.wall_time(), errs.rel_w, errs.rel_y])
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

        let rand_seconds: Vec<f64> = samples.iter().map(|s| s[0]).collect();
        let ratios: Vec<f64> = samples
            .iter()
            .map(|s| 100.0 * s[0] / det_seconds.max(1e-9))
            .collect();
        let rel_w: Vec<f64> = samples.iter().map(|s| 100.0 * s[1]).collect();
        let rel_y: Vec<f64> = samples.iter().map(|s| 100.0 * s[2]).collect();

        push_single(&mut rows, h, "deterministic_seconds", det_seconds);
        push_stat(&mut rows, h, "randomized_seconds", &rand_seconds);
        push_stat(&mut rows, h, "time_ratio_percent", &ratios);
        push_stat(&mut rows, h, "rel_w_percent", &rel_w);
        push_stat(&mut rows, h, "rel_y_percent", &rel_y);
        push_single(
            &mut rows,
            h,
            "factorization_count",
            sim.cache().build_count() as f64,
        );
    }
    Ok(StudyOutput { rows })
}

/// Solve the deterministic control problem once per time step, then the
/// randomized problem per realization, comparing optima.
///
/// Per-cell metrics: `ocp_seconds`, `rocp_seconds`, `time_ratio_percent`,
/// `gap_percent` (relative optimal-cost gap), `control_l2_percent` /
/// `control_h2_percent` (distances between the optimal controls),
/// `state_w_percent` / `state_y_percent` (distances between the
/// deterministic trajectories driven by the two optima),
/// `unconverged_count`, and `factorization_count`.
pub fn run_control_study(config: &ControlStudyConfig) -> Result<StudyOutput> {
    check_study_shape(&config.steps, config.realizations)?;
    let mut rows = Vec::new();
    for &h in &config.steps {
        let tgrid = TimeGrid::new(config.horizon, h)?;
        let disc = Arc::new(Discretization::new(
            Arc::clone(&config.graph),
            tgrid,
            config.max_dx,
        )?);
        let sim = Simulator::new(disc, Some(&config.scheme))?;
        let problem = TrackingProblem {
            simulator: &sim,
            initial: &config.initial,
            target: &config.target,
            alpha: config.alpha,
        };
        let det = problem.solve(Dynamics::Deterministic, &config.optimizer)?;
        let reference_traj = sim.simulate(
            Dynamics::Deterministic,
            &config.initial,
            &det.control.to_signals(),
        )?;

        struct Cell {
            seconds: f64,
            gap: f64,
            control: ControlDifference,
            state: ErrorNorms,
            converged: bool,
        }
        let samples = indexed_map(config.realizations, |r| -> Result<Cell> {
            let mut rng = realization_rng(config.study_seed, r as u64);
            let realization = config.scheme.sample_realization(tgrid.steps(), &mut rng);
            let sol = problem.solve(Dynamics::Randomized(&realization), &config.optimizer)?;
            let gap_abs = (sol.cost.total - det.cost.total).abs();
            let gap = if gap_abs == 0.0 {
                0.0
            } else {
                gap_abs / det.cost.total
            };
            let control = control_errors(&sol.control, &det.control)?;
            let driven = sim.simulate(
                Dynamics::Deterministic,
                &config.initial,
                &sol.control.to_signals(),
            )?;
            let state = state_errors(&driven, &reference_traj)?;
            Ok(Cell {
                seconds: sol.wall_time,
                gap,
                control,
                state,
                converged: sol.converged,
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

        let rocp_seconds: Vec<f64> = samples.iter().map(|c| c.seconds).collect();
        let ratios: Vec<f64> = samples
            .iter()
            .map(|c| 100.0 * c.seconds / det.wall_time.max(1e-9))
            .collect();
        let gaps: Vec<f64> = samples.iter().map(|c| 100.0 * c.gap).collect();
        let ctrl_l2: Vec<f64> = samples.iter().map(|c| 100.0 * c.control.rel_l2).collect();
        let ctrl_h2: Vec<f64> = samples.iter().map(|c| 100.0 * c.control.rel_h2).collect();
        let state_w: Vec<f64> = samples.iter().map(|c| 100.0 * c.state.rel_w).collect();
        let state_y: Vec<f64> = samples.iter().map(|c| 100.0 * c.state.rel_y).collect();
        let unconverged = samples.iter().filter(|c| !c.converged).count();

        push_single(&mut rows, h, "ocp_seconds", det.wall_time);
        push_stat(&mut rows, h, "rocp_seconds", &rocp_seconds);
        push_stat(&mut rows, h, "time_ratio_percent", &ratios);
        push_stat(&mut rows, h, "gap_percent", &gaps);
        push_stat(&mut rows, h, "control_l2_percent", &ctrl_l2);
        push_stat(&mut rows, h, "control_h2_percent", &ctrl_h2);
        push_stat(&mut rows, h, "state_w_percent", &state_w);
        push_stat(&mut rows, h, "state_y_percent", &state_y);
        push_single(&mut rows, h, "unconverged_count", unconverged as f64);
        push_single(
            &mut rows,
            h,
            "factorization_count",
            sim.cache().build_count() as f64,
        );
    }
    Ok(StudyOutput { rows })
}

/// Least-squares slope of `log(error)` against `log(h)`, with the fit's
/// coefficient of determination. An error sequence behaving like `C·hᵖ`
/// yields `(p, 1.0)`.
pub fn estimate_rate(pairs: &[(f64, f64)]) -> Result<(f64, f64), ValidationError> {
    if pairs.len() < 2 {
        return Err(ValidationError::Config {
            context: "rate estimation".into(),
            message: format!("need at least two (h, error) pairs, got {}", pairs.len()),
        });
    }
    for &(h, err) in pairs {
        if h <= 0.0 || err <= 0.0 {
            return Err(ValidationError::Config {
                context: "rate estimation".into(),
                message: format!("nonpositive sample (h = {h}, error = {err})"),
            });
        }
    }
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean) * (x - x_mean)).sum();
    if sxx == 0.0 {
        return Err(ValidationError::Config {
            context: "rate estimation".into(),
            message: "all time steps are equal; the slope is undefined".into(),
        });
    }
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - x_mean) * (y - y_mean))
        .sum();
    let slope = sxy / sxx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let fit = y_mean + slope * (x - x_mean);
            (y - fit) * (y - fit)
        })
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - y_mean) * (y - y_mean)).sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    Ok((slope, r_squared))
}

fn format_value(metric: &str, v: f64) -> String {
    if metric.ends_with("_percent") {
        format!("{v:.2}")
    } else if metric.ends_with("_count") {
        format!("{v:.0}")
    } else {
        format!("{v:e}")
    }
}

fn require_rows(rows: &[StudyRow]) -> Result<(), ValidationError> {
    if rows.is_empty() {
        return Err(ValidationError::Config {
            context: "study emission".into(),
            message: "no rows to emit".into(),
        });
    }
    Ok(())
}

/// Render rows as CSV with header `h,metric,mean,std`. Percent metrics use
/// two decimals, counts are integers, and raw quantities (timings) use
/// scientific notation.
pub fn to_csv(rows: &[StudyRow]) -> Result<String, ValidationError> {
    require_rows(rows)?;
    let mut out = String::from("h,metric,mean,std\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.h,
            row.metric,
            format_value(&row.metric, row.mean),
            format_value(&row.metric, row.std),
        ));
    }
    Ok(out)
}

/// Render rows as pretty-printed JSON preserving full float precision, so
/// parsing the document recovers the rows exactly.
pub fn to_json(rows: &[StudyRow]) -> Result<String, ValidationError> {
    require_rows(rows)?;
    serde_json::to_string_pretty(rows).map_err(|e| ValidationError::Config {
        context: "study emission".into(),
        message: e.to_string(),
    })
}

/// Parse rows back from [`to_json`] output.
pub fn from_json(text: &str) -> Result<Vec<StudyRow>, ValidationError> {
    serde_json::from_str(text).map_err(|e| ValidationError::Config {
        context: "study parsing".into(),
        message: e.to_string(),
    })
}
