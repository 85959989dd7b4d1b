//! Space and time grids and the flat unknown layout shared by the solver,
//! the adjoint sweep, and the error norms.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::ValidationError;
use crate::graph::Graph;

/// Uniform time grid on `[0, horizon]` with `steps` intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    step: f64,
    steps: usize,
}

impl TimeGrid {
    /// Build a uniform grid; the horizon must be a whole number of steps
    /// (up to rounding slack of one part in 10^9).
    pub fn new(horizon: f64, step: f64) -> Result<Self, ValidationError> {
        if !(horizon > 0.0) {
            return Err(ValidationError::NonPositiveHorizon { horizon });
        }
        if !(step > 0.0) {
            return Err(ValidationError::NonPositiveStep { step });
        }
        let ratio = horizon / step;
        let steps = ratio.round();
        if steps < 1.0 || (ratio - steps).abs() > 1e-9 * steps.max(1.0) {
            return Err(ValidationError::StepDoesNotDivideHorizon { horizon, step });
        }
        Ok(Self {
            horizon,
            step,
            steps: steps as usize,
        })
    }

    /// Final time.
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Step length.
    pub fn step(&self) -> f64 {
        self.step
    }

    /// Number of steps (intervals); the grid has `steps() + 1` points.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Time of grid point `n`.
    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.step
    }
}

/// Uniform spatial grid on one edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeGrid {
    /// Number of grid points, at least 2 (both endpoints included).
    pub points: usize,
    /// Spacing; `points - 1` cells of this length cover the edge exactly.
    pub dx: f64,
}

/// Per-edge grids with spacing at most `max_dx`: the cell count is the
/// length divided by `max_dx`, rounded up.
pub fn build_grids(graph: &Graph, max_dx: f64) -> Result<Vec<EdgeGrid>, ValidationError> {
    if !(max_dx > 0.0) {
        return Err(ValidationError::NonPositiveMaxDx { max_dx });
    }
    Ok(graph
        .edges()
        .iter()
        .map(|edge| {
            let ratio = edge.length / max_dx;
            // Shave one part in 10^12 so that ratios which are whole
            // numbers up to rounding do not gain a spurious extra cell.
            let cells = ((ratio * (1.0 - 1e-12)).ceil() as usize).max(1);
            EdgeGrid {
                points: cells + 1,
                dx: edge.length / cells as f64,
            }
        })
        .collect())
}

/// A graph with its spatial and temporal grids and the flat layout of the
/// solver unknowns.
///
/// The state vector stores, for each edge in order, first the left-moving
/// invariant at all grid points, then the right-moving invariant:
/// `[w_minus(0..points), w_plus(0..points)]`. Displacement fields use one
/// value per grid point with the matching per-edge blocks.
#[derive(Debug)]
pub struct Discretization {
    graph: Arc<Graph>,
    tgrid: TimeGrid,
    grids: Vec<EdgeGrid>,
    /// Start of each edge's block in the state vector.
    state_offsets: Vec<usize>,
    state_len: usize,
    /// Start of each edge's block in a displacement (per-node) vector.
    node_offsets: Vec<usize>,
    node_len: usize,
    /// Trapezoid quadrature weight of each grid point (`dx` scaled by 1/2
    /// at edge endpoints), laid out like a displacement vector.
    node_weights: Vec<f64>,
}

impl Discretization {
    /// Assemble the layout for a graph, target spacing, and time grid.
    pub fn new(graph: Arc<Graph>, tgrid: TimeGrid, max_dx: f64) -> Result<Self, ValidationError> {
        let grids = build_grids(&graph, max_dx)?;
        let mut state_offsets = Vec::with_capacity(grids.len());
        let mut node_offsets = Vec::with_capacity(grids.len());
        let mut state_len = 0;
        let mut node_len = 0;
        for grid in &grids {
            state_offsets.push(state_len);
            node_offsets.push(node_len);
            state_len += 2 * grid.points;
            node_len += grid.points;
        }
        let mut node_weights = vec![0.0; node_len];
        for (e, grid) in grids.iter().enumerate() {
            for j in 0..grid.points {
                let tau = if j == 0 || j == grid.points - 1 { 0.5 } else { 1.0 };
                node_weights[node_offsets[e] + j] = tau * grid.dx;
            }
        }
        Ok(Self {
            graph,
            tgrid,
            grids,
            state_offsets,
            state_len,
            node_offsets,
            node_len,
            node_weights,
        })
    }

    /// The underlying graph.
    pub fn graph(&self) -> &Arc<Graph> {
        &self.graph
    }

    /// The time grid.
    pub fn tgrid(&self) -> &TimeGrid {
        &self.tgrid
    }

    /// Per-edge spatial grids.
    pub fn grids(&self) -> &[EdgeGrid] {
        &self.grids
    }

    /// Length of a state vector (both invariants at all grid points).
    pub fn state_len(&self) -> usize {
        self.state_len
    }

    /// Length of a displacement vector (one value per grid point).
    pub fn node_len(&self) -> usize {
        self.node_len
    }

    /// Index of the left-moving invariant at grid point `j` of edge `e`.
    #[inline]
    pub fn minus(&self, e: usize, j: usize) -> usize {
        self.state_offsets[e] + j
    }

    /// Index of the right-moving invariant at grid point `j` of edge `e`.
    #[inline]
    pub fn plus(&self, e: usize, j: usize) -> usize {
        self.state_offsets[e] + self.grids[e].points + j
    }

    /// Start of edge `e`'s block in the state vector.
    pub fn state_offset(&self, e: usize) -> usize {
        self.state_offsets[e]
    }

    /// Index of grid point `j` of edge `e` in a displacement vector.
    #[inline]
    pub fn node(&self, e: usize, j: usize) -> usize {
        self.node_offsets[e] + j
    }

    /// Trapezoid weights (`dx`, halved at edge endpoints) per grid point.
    pub fn node_weights(&self) -> &[f64] {
        &self.node_weights
    }

    /// Position of grid point `j` along edge `e`.
    pub fn position(&self, e: usize, j: usize) -> f64 {
        self.grids[e].dx * j as f64
    }

    /// Whether two discretizations index the same unknowns (same time grid
    /// and identical per-edge spatial grids).
    pub fn shape_matches(&self, other: &Self) -> bool {
        self.tgrid == other.tgrid && self.grids == other.grids
    }

    /// One-line shape summary for error messages.
    pub fn shape_summary(&self) -> String {
        format!(
            "{} edges, {} unknowns, {} steps of {}",
            self.grids.len(),
            self.state_len,
            self.tgrid.steps(),
            self.tgrid.step()
        )
    }
}
