//! Output documents: every command renders its result as CSV or JSON and
//! hands the finished text to [`write_document`].
//!
//! CSV columns keep a stable order; floating-point cells use exact
//! (shortest round-trip) formatting except for the percent/seconds
//! conventions the study tables establish. JSON documents carry the same
//! data with full-precision numbers.

use std::fs;
use std::path::PathBuf;

use netwave::{OcpSolution, Trajectory};
use serde::Serialize;

use crate::CliError;

#[derive(Copy, Clone, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Write `doc` to `out`, or stdout when no file is given.
pub fn write_document(out: &Option<PathBuf>, doc: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, doc).map_err(|e| {
            CliError::Validation(format!("cannot write {}: {e}", path.display()))
        }),
        None => {
            print!("{doc}");
            Ok(())
        }
    }
}

pub fn to_json_doc<T: Serialize>(value: &T) -> String {
    let mut doc = serde_json::to_string_pretty(value).expect("report serialization");
    doc.push('\n');
    doc
}

/// Summary of a single forward run. The comparison fields are present
/// only for randomized runs (relative errors against the deterministic
/// reference on the same grids).
#[derive(Serialize)]
pub struct RunReport {
    pub horizon: f64,
    pub step: f64,
    pub steps: usize,
    pub state_size: usize,
    pub wall_seconds: f64,
    pub final_energy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_w_percent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_y_percent: Option<f64>,
}

impl RunReport {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => to_json_doc(self),
            Format::Csv => {
                let mut doc = String::from("metric,value\n");
                doc.push_str(&format!("horizon,{}\n", self.horizon));
                doc.push_str(&format!("step,{}\n", self.step));
                doc.push_str(&format!("steps,{}\n", self.steps));
                doc.push_str(&format!("state_size,{}\n", self.state_size));
                doc.push_str(&format!("wall_seconds,{:e}\n", self.wall_seconds));
                doc.push_str(&format!("final_energy,{:e}\n", self.final_energy));
                if let Some(seed) = self.seed {
                    doc.push_str(&format!("seed,{seed}\n"));
                }
                if let Some(v) = self.rel_w_percent {
                    doc.push_str(&format!("rel_w_percent,{v:.2}\n"));
                }
                if let Some(v) = self.rel_y_percent {
                    doc.push_str(&format!("rel_y_percent,{v:.2}\n"));
                }
                doc
            }
        }
    }
}

#[derive(Serialize)]
struct EdgeField {
    /// 1-based edge id, matching the configuration files.
    edge: usize,
    /// Grid positions along the edge.
    x: Vec<f64>,
    /// Displacement per time step (outer index) and position (inner).
    y: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct TrajectoryDoc {
    times: Vec<f64>,
    edges: Vec<EdgeField>,
}

/// Render the displacement field of a finished run: long-format CSV rows
/// `(t, edge, x, y)` or the equivalent nested JSON arrays.
pub fn trajectory_document(traj: &Trajectory, format: Format) -> String {
    let disc = traj.disc();
    let tgrid = disc.tgrid();
    match format {
        Format::Csv => {
            let mut doc = String::from("t,edge,x,y\n");
            for n in 0..=traj.steps() {
                let t = tgrid.time(n);
                let y = traj.displacement_at(n);
                for (e, grid) in disc.grids().iter().enumerate() {
                    for j in 0..grid.points {
                        doc.push_str(&format!(
                            "{t},{},{},{:e}\n",
                            e + 1,
                            disc.position(e, j),
                            y[disc.node(e, j)]
                        ));
                    }
                }
            }
            doc
        }
        Format::Json => {
            let times: Vec<f64> = (0..=traj.steps()).map(|n| tgrid.time(n)).collect();
            let edges = disc
                .grids()
                .iter()
                .enumerate()
                .map(|(e, grid)| EdgeField {
                    edge: e + 1,
                    x: (0..grid.points).map(|j| disc.position(e, j)).collect(),
                    y: (0..=traj.steps())
                        .map(|n| {
                            let y = traj.displacement_at(n);
                            (0..grid.points).map(|j| y[disc.node(e, j)]).collect()
                        })
                        .collect(),
                })
                .collect();
            to_json_doc(&TrajectoryDoc { times, edges })
        }
    }
}

#[derive(Serialize)]
struct ControlDoc {
    t: Vec<f64>,
    /// Control samples keyed by controlled vertex (1-based, `v3`).
    controls: std::collections::BTreeMap<String, Vec<f64>>,
    cost_tracking: f64,
    cost_regularization: f64,
    cost_total: f64,
    iterations: usize,
    gradient_norm: f64,
    converged: bool,
}

/// Render an optimal control: one column of samples per controlled
/// vertex, with the solve summary attached in the JSON form.
pub fn control_document(sol: &OcpSolution, controlled: &[usize], format: Format) -> String {
    let tgrid = sol.control.tgrid();
    let samples = tgrid.steps() + 1;
    match format {
        Format::Csv => {
            let mut doc = String::from("t");
            for &v in controlled {
                doc.push_str(&format!(",u_v{}", v + 1));
            }
            doc.push('\n');
            for m in 0..samples {
                doc.push_str(&format!("{}", tgrid.time(m)));
                for ch in 0..sol.control.channels() {
                    doc.push_str(&format!(",{:e}", sol.control.channel(ch)[m]));
                }
                doc.push('\n');
            }
            doc
        }
        Format::Json => {
            let controls = controlled
                .iter()
                .enumerate()
                .map(|(ch, &v)| (format!("v{}", v + 1), sol.control.channel(ch).to_vec()))
                .collect();
            to_json_doc(&ControlDoc {
                t: (0..samples).map(|m| tgrid.time(m)).collect(),
                controls,
                cost_tracking: sol.cost.tracking,
                cost_regularization: sol.cost.regularization,
                cost_total: sol.cost.total,
                iterations: sol.iterations,
                gradient_norm: sol.gradient_norm,
                converged: sol.converged,
            })
        }
    }
}

/// One Monte Carlo bound check: the estimated statistic against its
/// theoretical bound, with the sampling error.
#[derive(Serialize)]
pub struct LemmaRow {
    pub lemma: &'static str,
    /// 1-based edge id.
    pub edge: usize,
    pub h: f64,
    pub samples: usize,
    pub lhs: f64,
    pub bound: f64,
    pub margin: f64,
    pub std_error: f64,
}

pub fn lemma_document(rows: &[LemmaRow], format: Format) -> String {
    match format {
        Format::Json => to_json_doc(&rows),
        Format::Csv => {
            let mut doc = String::from("lemma,edge,h,samples,lhs,bound,margin,std_error\n");
            for row in rows {
                doc.push_str(&format!(
                    "{},{},{},{},{:e},{:e},{:e},{:e}\n",
                    row.lemma, row.edge, row.h, row.samples, row.lhs, row.bound, row.margin,
                    row.std_error
                ));
            }
            doc
        }
    }
}

/// Key/value summary emitted by `parse-check`.
pub struct ParseReport {
    fields: Vec<(&'static str, serde_json::Value)>,
}

impl ParseReport {
    pub fn new() -> Self {
        Self { fields: Vec::new() }
    }

    pub fn push(&mut self, key: &'static str, value: impl Into<serde_json::Value>) {
        self.fields.push((key, value.into()));
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let map: serde_json::Map<String, serde_json::Value> = self
                    .fields
                    .iter()
                    .map(|(k, v)| (k.to_string(), v.clone()))
                    .collect();
                to_json_doc(&map)
            }
            Format::Csv => {
                let mut doc = String::from("field,value\n");
                for (key, value) in &self.fields {
                    match value {
                        serde_json::Value::String(s) => doc.push_str(&format!("{key},{s}\n")),
                        other => doc.push_str(&format!("{key},{other}\n")),
                    }
                }
                doc
            }
        }
    }
}
