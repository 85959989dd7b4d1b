//! TOML configuration documents for networks and studies.
//!
//! Vertex and edge ids in documents are 1-based — matching how the
//! benchmark networks are usually drawn — and are converted to the crate's
//! 0-based ids during parsing. The files in `fixtures/` at the repository
//! root are the normative schema examples: `diamond.toml` and
//! `pipeline40.toml` for networks, `diamond-forward.toml`,
//! `diamond-control.toml`, and `pipeline40-forward.toml` for studies.

use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use crate::control::OptimizerConfig;
use crate::error::ValidationError;
use crate::graph::{Edge, Graph};
use crate::randomization::BatchScheme;
use crate::riemann::{Profile, Signal, TargetField};
use crate::solver::InitialData;
use crate::study::{ControlStudyConfig, ForwardStudyConfig};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDoc {
    vertices: usize,
    controlled: Vec<usize>,
    #[serde(rename = "edge")]
    edges: Vec<EdgeDoc>,
    scheme: Option<SchemeDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    from: usize,
    to: usize,
    length: f64,
    speed: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemeDoc {
    subsets: Vec<Vec<usize>>,
    probabilities: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum NetworkRef {
    Path(String),
    Inline(NetworkDoc),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDoc {
    network: NetworkRef,
    horizon: f64,
    steps: Vec<f64>,
    max_dx: f64,
    control: String,
    target: Option<String>,
    alpha: Option<f64>,
    realizations: Option<usize>,
    study_seed: Option<u64>,
    initial: Option<InitialDoc>,
    optimizer: Option<OptimizerDoc>,
    scheme: Option<SchemeDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InitialDoc {
    displacement: Vec<String>,
    velocity: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OptimizerDoc {
    max_iters: Option<usize>,
    grad_tol: Option<f64>,
}

fn config_error(context: &str, message: impl Into<String>) -> ValidationError {
    ValidationError::Config {
        context: context.into(),
        message: message.into(),
    }
}

/// Convert a 1-based document id to a 0-based index, rejecting 0 and
/// anything past `count`.
fn one_based(value: usize, count: usize, what: &str, context: &str) -> Result<usize, ValidationError> {
    if value == 0 || value > count {
        return Err(config_error(
            context,
            format!("{what} {value} is out of range; ids are 1-based and go up to {count}"),
        ));
    }
    Ok(value - 1)
}

fn scheme_from_doc(doc: SchemeDoc, edge_count: usize) -> Result<BatchScheme, ValidationError> {
    let mut subsets = Vec::with_capacity(doc.subsets.len());
    for (s, subset) in doc.subsets.into_iter().enumerate() {
        let context = format!("scheme subset {}", s + 1);
        subsets.push(
            subset
                .into_iter()
                .map(|e| one_based(e, edge_count, "edge", &context))
                .collect::<Result<Vec<_>, _>>()?,
        );
    }
    BatchScheme::new(subsets, doc.probabilities, edge_count)
}

fn network_from_doc(doc: NetworkDoc) -> Result<(Graph, Option<BatchScheme>), ValidationError> {
    let mut edges = Vec::with_capacity(doc.edges.len());
    for (id, e) in doc.edges.iter().enumerate() {
        let context = format!("edge {}", id + 1);
        edges.push(Edge {
            start: one_based(e.from, doc.vertices, "vertex", &context)?,
            end: one_based(e.to, doc.vertices, "vertex", &context)?,
            length: e.length,
            speed: e.speed,
        });
    }
    let controlled = doc
        .controlled
        .iter()
        .map(|&v| one_based(v, doc.vertices, "vertex", "controlled list"))
        .collect::<Result<Vec<_>, _>>()?;
    let edge_count = edges.len();
    let graph = Graph::new(doc.vertices, edges, controlled)?;
    let scheme = doc
        .scheme
        .map(|s| scheme_from_doc(s, edge_count))
        .transpose()?;
    Ok((graph, scheme))
}

/// Parse a network document: vertex count, edge list, controlled vertices,
/// and an optional randomization scheme.
pub fn parse_network(text: &str) -> Result<(Graph, Option<BatchScheme>), ValidationError> {
    let doc: NetworkDoc = toml::from_str(text)
        .map_err(|e| config_error("network document", e.to_string()))?;
    network_from_doc(doc)
}

/// How a study drives the controlled vertices.
#[derive(Debug, Clone)]
pub enum ControlMode {
    /// Fixed boundary signals, one per controlled vertex.
    Signals(Vec<Signal>),
    /// Solve for the optimal control.
    Optimize,
}

/// A fully resolved experiment description: network, scheme, grids, control
/// mode, and Monte Carlo parameters.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub graph: Arc<Graph>,
    pub scheme: Option<BatchScheme>,
    pub horizon: f64,
    pub steps: Vec<f64>,
    pub max_dx: f64,
    pub control: ControlMode,
    pub target: Option<TargetField>,
    pub alpha: f64,
    pub optimizer: OptimizerConfig,
    pub initial: InitialData,
    pub realizations: usize,
    pub study_seed: u64,
}

fn parse_target(text: &str) -> Result<TargetField, ValidationError> {
    let trimmed = text.trim();
    if trimmed == "zero" {
        return Ok(TargetField::Constant(0.0));
    }
    trimmed
        .parse::<f64>()
        .map(TargetField::Constant)
        .map_err(|_| {
            config_error(
                "target expression",
                format!("expected \"zero\" or a constant, got {trimmed:?}"),
            )
        })
}

fn initial_from_doc(doc: InitialDoc, edge_count: usize) -> Result<InitialData, ValidationError> {
    for (list, what) in [(&doc.displacement, "displacement"), (&doc.velocity, "velocity")] {
        if list.len() != edge_count {
            return Err(config_error(
                "initial data",
                format!(
                    "{what} lists {} profiles for {edge_count} edges",
                    list.len()
                ),
            ));
        }
    }
    Ok(InitialData {
        displacement: doc
            .displacement
            .iter()
            .map(|s| Profile::parse(s))
            .collect::<Result<_, _>>()?,
        velocity: doc
            .velocity
            .iter()
            .map(|s| Profile::parse(s))
            .collect::<Result<_, _>>()?,
    })
}

/// Parse a study configuration. `base` anchors a relative `network` file
/// reference (pass the directory containing the document).
pub fn parse_config(text: &str, base: &Path) -> Result<ExperimentConfig, ValidationError> {
    let doc: ConfigDoc =
        toml::from_str(text).map_err(|e| config_error("study configuration", e.to_string()))?;

    let (graph, network_scheme) = match doc.network {
        NetworkRef::Inline(net) => network_from_doc(net)?,
        NetworkRef::Path(path) => {
            let full = base.join(&path);
            let content = std::fs::read_to_string(&full).map_err(|e| {
                config_error(
                    "network reference",
                    format!("cannot read {}: {e}", full.display()),
                )
            })?;
            parse_network(&content)?
        }
    };
    let edge_count = graph.edge_count();
    let channel_count = graph.controlled().len();

    // A scheme in the study document overrides one from the network file.
    let scheme = match doc.scheme {
        Some(s) => Some(scheme_from_doc(s, edge_count)?),
        None => network_scheme,
    };

    if doc.steps.is_empty() {
        return Err(config_error("study configuration", "the steps list is empty"));
    }
    let realizations = doc.realizations.unwrap_or(20);
    if realizations == 0 {
        return Err(config_error(
            "study configuration",
            "realizations must be at least 1",
        ));
    }

    let control = if doc.control.trim() == "optimize" {
        ControlMode::Optimize
    } else {
        let signal = Signal::parse(&doc.control)?;
        ControlMode::Signals(vec![signal; channel_count])
    };
    let target = doc.target.as_deref().map(parse_target).transpose()?;
    if matches!(control, ControlMode::Optimize) && target.is_none() {
        return Err(config_error(
            "study configuration",
            "control = \"optimize\" requires a target",
        ));
    }

    let initial = match doc.initial {
        Some(init) => initial_from_doc(init, edge_count)?,
        None => InitialData::zero(edge_count),
    };
    let optimizer = match doc.optimizer {
        Some(opt) => OptimizerConfig {
            max_iters: opt.max_iters.unwrap_or(0),
            grad_tol: opt.grad_tol,
            start: None,
        },
        None => OptimizerConfig::default(),
    };

    Ok(ExperimentConfig {
        graph: Arc::new(graph),
        scheme,
        horizon: doc.horizon,
        steps: doc.steps,
        max_dx: doc.max_dx,
        control,
        target,
        alpha: doc.alpha.unwrap_or(1.0),
        optimizer,
        initial,
        realizations,
        study_seed: doc.study_seed.unwrap_or(0),
    })
}

impl ExperimentConfig {
    /// The randomization scheme, or a descriptive error when the documents
    /// define none.
    pub fn scheme(&self) -> Result<&BatchScheme, ValidationError> {
        self.scheme.as_ref().ok_or_else(|| {
            config_error(
                "study configuration",
                "no randomization scheme: add a [scheme] table to the network or study document",
            )
        })
    }

    /// Assemble the forward-study inputs; the control mode must be fixed
    /// signals.
    pub fn forward_study(&self) -> Result<ForwardStudyConfig, ValidationError> {
        let ControlMode::Signals(signals) = &self.control else {
            return Err(config_error(
                "forward study",
                "this configuration optimizes its control; run the control study instead",
            ));
        };
        Ok(ForwardStudyConfig {
            graph: Arc::clone(&self.graph),
            scheme: self.scheme()?.clone(),
            horizon: self.horizon,
            steps: self.steps.clone(),
            max_dx: self.max_dx,
            initial: self.initial.clone(),
            controls: signals.clone(),
            realizations: self.realizations,
            study_seed: self.study_seed,
        })
    }

    /// Assemble the control-study inputs; the control mode must be
    /// `optimize`.
    pub fn control_study(&self) -> Result<ControlStudyConfig, ValidationError> {
        if !matches!(self.control, ControlMode::Optimize) {
            return Err(config_error(
                "control study",
                "this configuration fixes its control; run the forward study instead",
            ));
        }
        let target = self.target.clone().ok_or_else(|| {
            config_error("control study", "no target field configured")
        })?;
        Ok(ControlStudyConfig {
            graph: Arc::clone(&self.graph),
            scheme: self.scheme()?.clone(),
            horizon: self.horizon,
            steps: self.steps.clone(),
            max_dx: self.max_dx,
            initial: self.initial.clone(),
            target,
            alpha: self.alpha,
            optimizer: self.optimizer.clone(),
            realizations: self.realizations,
            study_seed: self.study_seed,
        })
    }
}
