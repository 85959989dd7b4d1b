//! Wave propagation, random batch simulation, and optimal boundary
//! control on metric graphs.
//!
//! A network of one-dimensional wave equations is rewritten in Riemann
//! invariants, discretized with an implicit upwind scheme, and stepped
//! either deterministically or with a randomized batch method that
//! activates only a random subset of edges per step (at speeds reweighted
//! so the random dynamics are unbiased). On top of the solver sit
//! characteristics-based closed-form checks, a discrete-adjoint
//! linear-quadratic boundary control solver, and Monte Carlo study drivers
//! that measure how fast the randomized dynamics approach the
//! deterministic ones as the time step shrinks.
//!
//! Entry points:
//!
//! - [`Graph`], [`BatchScheme`]: network and randomization setup.
//! - [`Discretization`], [`Simulator`]: grids and time stepping.
//! - [`fixtures`]: the built-in benchmark networks.

pub mod characteristics;
pub mod config;
pub mod control;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod grid;
pub mod linalg;
pub mod operator;
mod par;
pub mod randomization;
pub mod riemann;
pub mod solver;
pub mod study;

pub use characteristics::{
    dalembert_invariants, exit_time_deterministic, exit_time_randomized, interior_lattice,
    speed_deviation_bound, validate_lemma41, validate_lemma42, xi_deterministic, xi_randomized,
    CharacteristicQuery, ExitTime, Family, Lemma41Outcome, LemmaReport,
};
pub use config::{parse_config, parse_network, ControlMode, ExperimentConfig};
pub use control::{
    compare_controls, ControlDifference, ControlVector, CostBreakdown, OcpSolution,
    OptimizerConfig, TrackingProblem,
};
pub use error::{Error, Result, SolverError, ValidationError};
pub use graph::{Edge, EdgeEnd, EdgeId, Graph, VertexId};
pub use grid::{build_grids, Discretization, EdgeGrid, TimeGrid};
pub use randomization::{realization_rng, BatchScheme, Realization};
pub use riemann::{
    couple_node, from_riemann, to_riemann, verify_node_conditions, NodeResiduals, Profile,
    Signal, TargetField,
};
pub use solver::{
    error_norms, initial_displacement, initial_state, state_energy, Dynamics, ErrorNorms,
    InitialData, Simulator, Trajectory,
};
pub use study::{
    estimate_rate, from_json, run_control_study, run_forward_study, to_csv, to_json,
    ControlStudyConfig, ForwardStudyConfig, StudyOutput, StudyRow,
};
