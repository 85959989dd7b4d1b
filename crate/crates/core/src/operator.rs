//! The implicit time-step operator, factored once per edge-activation
//! pattern.
//!
//! One backward-Euler upwind step couples, for every edge, two bidiagonal
//! transport chains (one per invariant, each fed by an unknown inflow value
//! at its head) with the node conditions that tie all inflows to all
//! outflows. Eliminating the chain interiors condenses the step to a small
//! dense system over the inflow heads of the active edges — two unknowns
//! per active edge, independent of the spatial resolution. The
//! factorization of that condensed system is computed once per pattern and
//! reused for every step, every right-hand side, and (transposed) for the
//! reverse sweeps of gradient computations.
//!
//! Edges with effective speed zero are frozen: their values are carried
//! over unchanged, but their boundary values still enter the node
//! conditions of neighbouring active edges as held outflows.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use crate::error::SolverError;
use crate::graph::EdgeEnd;
use crate::grid::Discretization;
use crate::linalg::{DenseMatrix, LuFactors};

static FACTORIZATIONS: AtomicUsize = AtomicUsize::new(0);

/// Total number of pattern factorizations performed by this process.
/// Stepping reuses factored operators, so the count stays at one per
/// distinct pattern actually built.
pub fn factorization_count() -> usize {
    FACTORIZATIONS.load(Ordering::Relaxed)
}

/// Per-edge data of one pattern: chain coefficients and block offsets.
#[derive(Debug, Clone, Copy)]
struct EdgeOp {
    active: bool,
    points: usize,
    lambda: f64,
    /// `1 / (1 + lambda)`.
    inv: f64,
    /// `lambda / (1 + lambda)`; one chain node's response to its neighbour.
    ratio: f64,
    /// `ratio^(points-1)`; the tail's response to the head.
    beta: f64,
    /// Flat index of the left-moving invariant at grid point 0; the edge's
    /// state block is `minus0 .. minus0 + 2 * points` with the right-moving
    /// invariant starting at `plus0 = minus0 + points`.
    minus0: usize,
    plus0: usize,
}

/// One condensed node-condition row: the inflow it determines plus the
/// outflow terms that feed it.
#[derive(Debug, Clone, Default)]
struct CouplingRow {
    /// Control channel of the row's vertex, if controlled.
    channel: Option<usize>,
    /// `2 / c_tot` at the vertex (original speeds).
    control_weight: f64,
    /// `(coefficient, flat index of the outflow grid point)` for every
    /// incident edge, frozen ones included.
    terms: Vec<(f64, usize)>,
}

/// A factored one-step operator for a fixed edge-activation pattern.
#[derive(Debug)]
pub struct SystemOperator {
    state_len: usize,
    edges: Vec<EdgeOp>,
    /// Condensed-system unknown index per edge and end, for active edges.
    head_slot: Vec<[Option<usize>; 2]>,
    /// Flat state index of each condensed unknown (an inflow head).
    head_flat: Vec<usize>,
    rows: Vec<CouplingRow>,
    lu: LuFactors,
    /// Per control channel: `(flat head index, 2 / c_tot)` of every
    /// condensed row driven by that channel.
    taps: Vec<Vec<(usize, f64)>>,
}

impl SystemOperator {
    /// Factor the step operator for the given effective edge speeds
    /// (`0` marks a frozen edge). Node conditions always use the graph's
    /// original speeds.
    pub fn new(disc: &Discretization, speeds: &[f64]) -> Result<Self, SolverError> {
        let graph = disc.graph();
        let h = disc.tgrid().step();
        let edge_count = graph.edge_count();
        assert_eq!(speeds.len(), edge_count);

        let mut edges = Vec::with_capacity(edge_count);
        let mut head_slot: Vec<[Option<usize>; 2]> = vec![[None; 2]; edge_count];
        let mut head_flat = Vec::new();
        for e in 0..edge_count {
            let grid = disc.grids()[e];
            let n = grid.points;
            let c = speeds[e];
            let active = c > 0.0;
            let (lambda, inv, ratio, beta) = if active {
                let lambda = c * h / grid.dx;
                let inv = 1.0 / (1.0 + lambda);
                let ratio = lambda * inv;
                // Repeated multiplication, matching the propagation loop in
                // `step` so the condensed matrix and the reconstructed tail
                // values agree exactly.
                let mut beta = 1.0;
                for _ in 0..n - 1 {
                    beta *= ratio;
                }
                (lambda, inv, ratio, beta)
            } else {
                (0.0, 0.0, 0.0, 0.0)
            };
            if active {
                head_slot[e][EdgeEnd::Start.index()] = Some(head_flat.len());
                head_flat.push(disc.plus(e, 0));
                head_slot[e][EdgeEnd::End.index()] = Some(head_flat.len());
                head_flat.push(disc.minus(e, n - 1));
            }
            edges.push(EdgeOp {
                active,
                points: n,
                lambda,
                inv,
                ratio,
                beta,
                minus0: disc.minus(e, 0),
                plus0: disc.plus(e, 0),
            });
        }

        let size = head_flat.len();
        let mut matrix = DenseMatrix::zeros(size);
        let mut rows: Vec<CouplingRow> = vec![CouplingRow::default(); size];
        for v in 0..graph.vertex_count() {
            let c_tot = graph.total_speed_at(v);
            let weight = 2.0 / c_tot;
            let channel = graph.control_channel(v);
            for &(e, end) in graph.edges_at(v) {
                let Some(row) = head_slot[e][end.index()] else {
                    continue;
                };
                matrix.add(row, row, 1.0);
                let mut terms = Vec::with_capacity(graph.edges_at(v).len());
                for &(k, kend) in graph.edges_at(v) {
                    let delta = if k == e && kend == end { 1.0 } else { 0.0 };
                    let coeff = delta - weight * graph.edge(k).speed;
                    let points_k = disc.grids()[k].points;
                    let out_flat = match kend {
                        EdgeEnd::Start => disc.minus(k, 0),
                        EdgeEnd::End => disc.plus(k, points_k - 1),
                    };
                    terms.push((coeff, out_flat));
                    // An active outflow responds to the inflow head at the
                    // edge's other end; that dependence lands in the matrix.
                    if let Some(col) = head_slot[k][kend.opposite().index()] {
                        matrix.add(row, col, coeff * edges[k].beta);
                    }
                }
                rows[row] = CouplingRow {
                    channel,
                    control_weight: weight,
                    terms,
                };
            }
        }

        let lu = LuFactors::factor(matrix, "node coupling system")?;
        FACTORIZATIONS.fetch_add(1, Ordering::Relaxed);

        let mut taps = vec![Vec::new(); graph.controlled().len()];
        for (i, row) in rows.iter().enumerate() {
            if let Some(channel) = row.channel {
                taps[channel].push((head_flat[i], row.control_weight));
            }
        }

        Ok(Self {
            state_len: disc.state_len(),
            edges,
            head_slot,
            head_flat,
            rows,
            lu,
            taps,
        })
    }

    /// Number of condensed unknowns (two per active edge).
    pub fn condensed_size(&self) -> usize {
        self.head_flat.len()
    }

    /// Advance one step: `new` receives the state at the next time given
    /// the state `old` and the control values (one per channel) at the new
    /// time. `rhs` is scratch for the condensed solve.
    pub fn step(&self, old: &[f64], new: &mut [f64], controls: &[f64], rhs: &mut Vec<f64>) {
        debug_assert_eq!(old.len(), self.state_len);
        debug_assert_eq!(new.len(), self.state_len);

        // Particular chain solutions with zero inflow heads; frozen edges
        // carry their block over unchanged.
        for op in &self.edges {
            let n = op.points;
            if !op.active {
                new[op.minus0..op.minus0 + 2 * n]
                    .copy_from_slice(&old[op.minus0..op.minus0 + 2 * n]);
                continue;
            }
            new[op.plus0] = 0.0;
            for j in 1..n {
                new[op.plus0 + j] = op.inv * (old[op.plus0 + j] + op.lambda * new[op.plus0 + j - 1]);
            }
            new[op.minus0 + n - 1] = 0.0;
            for j in (0..n - 1).rev() {
                new[op.minus0 + j] =
                    op.inv * (old[op.minus0 + j] + op.lambda * new[op.minus0 + j + 1]);
            }
        }

        // Condensed right-hand side: control forcing minus the outflow
        // terms evaluated at the particular solutions (and held frozen
        // outflows).
        rhs.clear();
        rhs.resize(self.rows.len(), 0.0);
        for (i, row) in self.rows.iter().enumerate() {
            let mut g = match row.channel {
                Some(channel) => row.control_weight * controls[channel],
                None => 0.0,
            };
            for &(coeff, flat) in &row.terms {
                g -= coeff * new[flat];
            }
            rhs[i] = g;
        }
        self.lu.solve(rhs);

        // Write the solved heads and add each head's geometric response
        // along its chain.
        for (e, op) in self.edges.iter().enumerate() {
            if !op.active {
                continue;
            }
            let n = op.points;
            let head_plus = rhs[self.head_slot[e][0].unwrap()];
            new[op.plus0] = head_plus;
            if head_plus != 0.0 {
                let mut pw = 1.0;
                for j in 1..n {
                    pw *= op.ratio;
                    if pw == 0.0 {
                        break;
                    }
                    new[op.plus0 + j] += head_plus * pw;
                }
            }
            let head_minus = rhs[self.head_slot[e][1].unwrap()];
            new[op.minus0 + n - 1] = head_minus;
            if head_minus != 0.0 {
                let mut pw = 1.0;
                for j in (0..n - 1).rev() {
                    pw *= op.ratio;
                    if pw == 0.0 {
                        break;
                    }
                    new[op.minus0 + j] += head_minus * pw;
                }
            }
        }
    }

    /// Solve the transposed step system: `out` receives `A^T \ rho`.
    ///
    /// Reverse sweeps of gradient computations need this with the same
    /// factorization the forward steps use. `rhs` and `scratch` are
    /// scratch buffers (condensed size and state size).
    pub fn solve_transpose(
        &self,
        rho: &[f64],
        out: &mut [f64],
        rhs: &mut Vec<f64>,
        scratch: &mut Vec<f64>,
    ) {
        debug_assert_eq!(rho.len(), self.state_len);
        debug_assert_eq!(out.len(), self.state_len);

        // First transposed chain solve, ignoring the coupling rows' action
        // on chain unknowns.
        self.transpose_chain_sweep(rho, out);

        // Condensed transposed system for the head components.
        rhs.clear();
        rhs.resize(self.rows.len(), 0.0);
        for (i, &flat) in self.head_flat.iter().enumerate() {
            rhs[i] = rho[flat];
        }
        for (e, op) in self.edges.iter().enumerate() {
            if !op.active {
                continue;
            }
            let n = op.points;
            if let Some(row) = self.head_slot[e][0] {
                rhs[row] += op.lambda * out[op.plus0 + 1];
            }
            if let Some(row) = self.head_slot[e][1] {
                rhs[row] += op.lambda * out[op.minus0 + n - 2];
            }
        }
        self.lu.solve_transpose(rhs);

        // Push the head components back through the coupling rows' outflow
        // terms and redo the chain solve with the adjusted source.
        scratch.clear();
        scratch.extend_from_slice(rho);
        for (i, row) in self.rows.iter().enumerate() {
            let value = rhs[i];
            if value != 0.0 {
                for &(coeff, flat) in &row.terms {
                    scratch[flat] -= coeff * value;
                }
            }
        }
        self.transpose_chain_sweep(scratch, out);
        for (i, &flat) in self.head_flat.iter().enumerate() {
            out[flat] = rhs[i];
        }
    }

    /// Transposed bidiagonal solves on all chain unknowns (head slots of
    /// active edges are left zero; frozen blocks are copied unchanged).
    fn transpose_chain_sweep(&self, rho: &[f64], out: &mut [f64]) {
        for op in &self.edges {
            let n = op.points;
            if !op.active {
                out[op.minus0..op.minus0 + 2 * n]
                    .copy_from_slice(&rho[op.minus0..op.minus0 + 2 * n]);
                continue;
            }
            out[op.plus0 + n - 1] = op.inv * rho[op.plus0 + n - 1];
            for j in (1..n - 1).rev() {
                out[op.plus0 + j] = op.inv * (rho[op.plus0 + j] + op.lambda * out[op.plus0 + j + 1]);
            }
            out[op.plus0] = 0.0;
            out[op.minus0] = op.inv * rho[op.minus0];
            for j in 1..n - 1 {
                out[op.minus0 + j] =
                    op.inv * (rho[op.minus0 + j] + op.lambda * out[op.minus0 + j - 1]);
            }
            out[op.minus0 + n - 1] = 0.0;
        }
    }

    /// Zero the inflow-head slots of this pattern's active edges: the
    /// components of the previous state that do not enter a step through
    /// this operator.
    pub fn mask_head_rows(&self, state: &mut [f64]) {
        for &flat in &self.head_flat {
            state[flat] = 0.0;
        }
    }

    /// `(flat head index, 2 / c_tot)` of every condensed row driven by the
    /// given control channel under this pattern.
    pub fn control_taps(&self, channel: usize) -> &[(usize, f64)] {
        &self.taps[channel]
    }
}

/// All step operators a simulation can need, factored up front: the
/// deterministic pattern plus one per subset of the batch scheme. Stepping
/// only ever borrows from here, so the number of factorizations per
/// simulation study is bounded by the number of patterns.
#[derive(Debug)]
pub struct OperatorCache {
    deterministic: Arc<SystemOperator>,
    randomized: Vec<Arc<SystemOperator>>,
    builds: usize,
}

impl OperatorCache {
    /// Factor the deterministic operator and, if a scheme is given, the
    /// operator of every subset pattern.
    pub fn new(
        disc: &Discretization,
        scheme: Option<&crate::randomization::BatchScheme>,
    ) -> Result<Self, SolverError> {
        let base: Vec<f64> = disc.graph().edges().iter().map(|e| e.speed).collect();
        let deterministic = Arc::new(SystemOperator::new(disc, &base)?);
        let mut randomized = Vec::new();
        if let Some(scheme) = scheme {
            for s in 0..scheme.subset_count() {
                let speeds = scheme.subset_speeds(&base, s);
                randomized.push(Arc::new(SystemOperator::new(disc, &speeds)?));
            }
        }
        let builds = 1 + randomized.len();
        Ok(Self {
            deterministic,
            randomized,
            builds,
        })
    }

    /// The operator of the deterministic dynamics (all edges active at
    /// their original speeds).
    pub fn deterministic(&self) -> &Arc<SystemOperator> {
        &self.deterministic
    }

    /// The operator of one subset pattern.
    pub fn randomized(&self, subset: usize) -> &Arc<SystemOperator> {
        &self.randomized[subset]
    }

    /// Number of subset operators held.
    pub fn randomized_count(&self) -> usize {
        self.randomized.len()
    }

    /// Number of factorizations this cache performed (patterns built).
    pub fn build_count(&self) -> usize {
        self.builds
    }
}
