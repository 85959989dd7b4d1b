//! Error types shared across the crate.
//!
//! Errors split into two families so callers (notably the CLI) can
//! distinguish bad input from numerical failure:
//!
//! - [`ValidationError`]: the input data (network, scheme, grid, config)
//!   violates a documented precondition. Nothing was computed.
//! - [`SolverError`]: inputs were well-formed but a numerical step failed
//!   (singular system, non-finite values, ...).

use thiserror::Error;

/// Input data violates a documented precondition.
#[derive(Debug, Clone, Error)]
pub enum ValidationError {
    #[error("network must have at least one edge")]
    EmptyNetwork,
    #[error("edge {edge} references vertex {vertex}, but the network has {vertices} vertices")]
    VertexOutOfRange {
        edge: usize,
        vertex: usize,
        vertices: usize,
    },
    #[error("edge {edge} is a self-loop at vertex {vertex}; self-loops are not supported")]
    SelfLoop { edge: usize, vertex: usize },
    #[error("edge {edge} has non-positive length {length}")]
    NonPositiveLength { edge: usize, length: f64 },
    #[error("edge {edge} has non-positive wave speed {speed}")]
    NonPositiveSpeed { edge: usize, speed: f64 },
    #[error("network is not connected: vertex {vertex} is unreachable from vertex 0")]
    Disconnected { vertex: usize },
    #[error("controlled vertex {vertex} is out of range (network has {vertices} vertices)")]
    ControlledVertexOutOfRange { vertex: usize, vertices: usize },
    #[error("controlled vertex {vertex} listed more than once")]
    DuplicateControlledVertex { vertex: usize },

    #[error("batch scheme must contain at least one subset")]
    EmptyScheme,
    #[error("subset {subset} references edge {edge}, but the network has {edges} edges")]
    SubsetEdgeOutOfRange {
        subset: usize,
        edge: usize,
        edges: usize,
    },
    #[error("subset {subset} lists edge {edge} more than once")]
    DuplicateSubsetEdge { subset: usize, edge: usize },
    #[error("scheme has {subsets} subsets but {probabilities} probabilities")]
    ProbabilityCountMismatch { subsets: usize, probabilities: usize },
    #[error("subset probability {value} at index {subset} is not in [0, 1]")]
    ProbabilityOutOfRange { subset: usize, value: f64 },
    #[error("subset probabilities sum to {sum}, expected 1")]
    ProbabilitySum { sum: f64 },
    #[error(
        "edge {edge} has activation probability 0; every edge must lie in some \
         positive-probability subset"
    )]
    EdgeNeverActive { edge: usize },

    #[error("time horizon {horizon} is not positive")]
    NonPositiveHorizon { horizon: f64 },
    #[error("time step {step} is not positive")]
    NonPositiveStep { step: f64 },
    #[error("time horizon {horizon} is not an integer multiple of the step {step}")]
    StepDoesNotDivideHorizon { horizon: f64, step: f64 },
    #[error("maximum grid spacing {max_dx} is not positive")]
    NonPositiveMaxDx { max_dx: f64 },

    #[error("unrecognized signal expression `{text}`")]
    BadSignalExpression { text: String },
    #[error("sampled signal has {got} values, expected {expected}")]
    SampleCountMismatch { expected: usize, got: usize },
    #[error("{context}: {message}")]
    Config { context: String, message: String },

    #[error("trajectories live on different discretizations ({left} vs {right})")]
    DiscretizationMismatch { left: String, right: String },
    #[error("relative error is undefined: reference trajectory has zero norm")]
    ZeroReferenceNorm,
}

/// A numerical procedure failed on well-formed input.
#[derive(Debug, Clone, Error)]
pub enum SolverError {
    #[error("coupling system is singular for {context} (pivot {pivot:.3e} at row {row})")]
    SingularSystem {
        context: String,
        pivot: f64,
        row: usize,
    },
    #[error("non-finite value produced at step {step} ({context})")]
    NonFinite { step: usize, context: String },
    #[error("line search failed to find a descent step after {tries} halvings")]
    LineSearchStalled { tries: usize },
}

/// Top-level error type: validation failure or solver failure.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Crate-wide result alias.
pub type Result<T, E = Error> = std::result::Result<T, E>;
