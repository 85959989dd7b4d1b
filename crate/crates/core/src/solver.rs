//! Time integration of the networked wave system in invariant form:
//! deterministic and randomized-batch dynamics, stored trajectories,
//! displacement reconstruction, and relative error norms.

use std::sync::{Arc, OnceLock};

use crate::error::{Result, SolverError, ValidationError};
use crate::grid::Discretization;
use crate::operator::{OperatorCache, SystemOperator};
use crate::randomization::{BatchScheme, Realization};
use crate::riemann::{to_riemann, Profile, Signal};

/// Initial displacement and velocity, one profile of each per edge.
#[derive(Debug, Clone)]
pub struct InitialData {
    /// Displacement along each edge at time zero.
    pub displacement: Vec<Profile>,
    /// Velocity along each edge at time zero.
    pub velocity: Vec<Profile>,
}

impl InitialData {
    /// Rest state: zero displacement and velocity everywhere.
    pub fn zero(edge_count: usize) -> Self {
        Self {
            displacement: vec![Profile::Zero; edge_count],
            velocity: vec![Profile::Zero; edge_count],
        }
    }

    fn validate(&self, edge_count: usize) -> Result<(), ValidationError> {
        if self.displacement.len() != edge_count || self.velocity.len() != edge_count {
            return Err(ValidationError::SampleCountMismatch {
                expected: edge_count,
                got: self.displacement.len().min(self.velocity.len()),
            });
        }
        Ok(())
    }
}

/// Which dynamics to integrate.
#[derive(Debug, Clone, Copy)]
pub enum Dynamics<'a> {
    /// All edges active at their original speeds, every step.
    Deterministic,
    /// One pre-sampled edge subset per step, at reweighted speeds.
    Randomized(&'a Realization),
}

/// A solver bound to one discretization, with every step operator it can
/// need factored up front.
#[derive(Debug)]
pub struct Simulator {
    disc: Arc<Discretization>,
    cache: OperatorCache,
}

impl Simulator {
    /// Factor the operators for the deterministic dynamics and, if a
    /// scheme is given, for each of its subsets.
    pub fn new(disc: Arc<Discretization>, scheme: Option<&BatchScheme>) -> Result<Self> {
        if let Some(scheme) = scheme {
            if scheme.edge_count() != disc.graph().edge_count() {
                return Err(ValidationError::SampleCountMismatch {
                    expected: disc.graph().edge_count(),
                    got: scheme.edge_count(),
                }
                .into());
            }
        }
        let cache = OperatorCache::new(&disc, scheme)?;
        Ok(Self { disc, cache })
    }

    /// The discretization this solver steps on.
    pub fn disc(&self) -> &Arc<Discretization> {
        &self.disc
    }

    /// The factored step operators.
    pub fn cache(&self) -> &OperatorCache {
        &self.cache
    }

    /// The operator applied at step `n` (stepping from time `n*h` to
    /// `(n+1)*h`) under the given dynamics.
    pub fn operator_at(&self, dynamics: Dynamics, n: usize) -> &Arc<SystemOperator> {
        match dynamics {
            Dynamics::Deterministic => self.cache.deterministic(),
            Dynamics::Randomized(realization) => {
                self.cache.randomized(realization.subset_at(n))
            }
        }
    }

    /// Integrate over the whole time grid from the given initial data,
    /// with one boundary control signal per controlled vertex.
    pub fn simulate(
        &self,
        dynamics: Dynamics,
        init: &InitialData,
        controls: &[Signal],
    ) -> Result<Trajectory> {
        let disc = &self.disc;
        let graph = disc.graph();
        init.validate(graph.edge_count())?;
        if controls.len() != graph.controlled().len() {
            return Err(ValidationError::SampleCountMismatch {
                expected: graph.controlled().len(),
                got: controls.len(),
            }
            .into());
        }
        let steps = disc.tgrid().steps();
        if let Dynamics::Randomized(realization) = dynamics {
            if realization.len() != steps {
                return Err(ValidationError::SampleCountMismatch {
                    expected: steps,
                    got: realization.len(),
                }
                .into());
            }
        }

        let len = disc.state_len();
        let h = disc.tgrid().step();
        let mut states = Vec::with_capacity((steps + 1) * len);
        states.extend_from_slice(&initial_state(disc, init));
        let y0_nodes = initial_displacement(disc, init);

        let mut rhs = Vec::new();
        let mut control_values = vec![0.0; controls.len()];
        let start = now();
        for n in 0..steps {
            let op = self.operator_at(dynamics, n);
            for (value, signal) in control_values.iter_mut().zip(controls) {
                *value = signal.value_at_step(n + 1, h);
            }
            states.resize((n + 2) * len, 0.0);
            let (old_part, new_part) = states.split_at_mut((n + 1) * len);
            op.step(
                &old_part[n * len..],
                new_part,
                &control_values,
                &mut rhs,
            );
            if !new_part.iter().all(|x| x.is_finite()) {
                return Err(SolverError::NonFinite {
                    step: n + 1,
                    context: "time step left non-finite state values".into(),
                }
                .into());
            }
        }
        let wall_time = start.elapsed_seconds();

        Ok(Trajectory {
            disc: Arc::clone(disc),
            states,
            y0_nodes,
            wall_time,
            displacement: OnceLock::new(),
        })
    }
}

/// Sample initial profiles into an invariant-form state vector.
pub fn initial_state(disc: &Discretization, init: &InitialData) -> Vec<f64> {
    let graph = disc.graph();
    let mut state = vec![0.0; disc.state_len()];
    for e in 0..graph.edge_count() {
        let c = graph.edge(e).speed;
        for j in 0..disc.grids()[e].points {
            let x = disc.position(e, j);
            let slope = init.displacement[e].derivative(x);
            let speed = init.velocity[e].value(x);
            let (minus, plus) = to_riemann(speed, slope, c);
            state[disc.minus(e, j)] = minus;
            state[disc.plus(e, j)] = plus;
        }
    }
    state
}

/// Sample the initial displacement at every grid point.
pub fn initial_displacement(disc: &Discretization, init: &InitialData) -> Vec<f64> {
    let graph = disc.graph();
    let mut nodes = vec![0.0; disc.node_len()];
    for e in 0..graph.edge_count() {
        for j in 0..disc.grids()[e].points {
            nodes[disc.node(e, j)] = init.displacement[e].value(disc.position(e, j));
        }
    }
    nodes
}

/// A full time history of the invariant state, one state per grid time.
#[derive(Debug)]
pub struct Trajectory {
    disc: Arc<Discretization>,
    /// `(steps + 1) * state_len` values, step-major.
    states: Vec<f64>,
    /// Initial displacement at every grid point, the anchor for
    /// reconstruction.
    y0_nodes: Vec<f64>,
    /// Seconds spent in the stepping loop (0 where no monotonic clock is
    /// available).
    wall_time: f64,
    displacement: OnceLock<Vec<f64>>,
}

impl Trajectory {
    /// The discretization the trajectory lives on.
    pub fn disc(&self) -> &Arc<Discretization> {
        &self.disc
    }

    /// Number of time steps taken (`states` holds one more state).
    pub fn steps(&self) -> usize {
        self.disc.tgrid().steps()
    }

    /// The invariant state at time grid point `n`.
    pub fn state(&self, n: usize) -> &[f64] {
        let len = self.disc.state_len();
        &self.states[n * len..(n + 1) * len]
    }

    /// Seconds spent stepping.
    pub fn wall_time(&self) -> f64 {
        self.wall_time
    }

    /// Displacement at time grid point `n`, reconstructed by integrating
    /// the mean of the two invariants in time (computed once, then
    /// cached).
    pub fn displacement_at(&self, n: usize) -> &[f64] {
        let nodes = self.disc.node_len();
        let field = self.displacement.get_or_init(|| self.reconstruct());
        &field[n * nodes..(n + 1) * nodes]
    }

    fn reconstruct(&self) -> Vec<f64> {
        let disc = &self.disc;
        let steps = self.steps();
        let nodes = disc.node_len();
        let h = disc.tgrid().step();
        let mut field = vec![0.0; (steps + 1) * nodes];
        field[..nodes].copy_from_slice(&self.y0_nodes);
        for n in 1..=steps {
            let state = self.state(n);
            let (prev, cur) = field.split_at_mut(n * nodes);
            let prev = &prev[(n - 1) * nodes..];
            for e in 0..disc.graph().edge_count() {
                for j in 0..disc.grids()[e].points {
                    let rate =
                        state[disc.minus(e, j)] + state[disc.plus(e, j)];
                    cur[disc.node(e, j)] = prev[disc.node(e, j)] + 0.5 * h * rate;
                }
            }
        }
        field
    }

    /// Lattice energy of the state at time grid point `n`.
    pub fn energy(&self, n: usize) -> f64 {
        state_energy(&self.disc, self.state(n))
    }
}

/// Lattice energy `sum_e sum_x dx (w_plus^2 + w_minus^2) / 4` of a state.
pub fn state_energy(disc: &Discretization, state: &[f64]) -> f64 {
    let mut energy = 0.0;
    for e in 0..disc.graph().edge_count() {
        let grid = disc.grids()[e];
        let mut sum = 0.0;
        for j in 0..grid.points {
            let minus = state[disc.minus(e, j)];
            let plus = state[disc.plus(e, j)];
            sum += minus * minus + plus * plus;
        }
        energy += 0.25 * grid.dx * sum;
    }
    energy
}

/// Relative errors of one trajectory against a reference on the same
/// discretization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    /// Invariant error: largest-over-time spatial L2 norm of the
    /// difference of both invariant components, relative to the same
    /// functional of the reference.
    pub rel_w: f64,
    /// Displacement error, measured the same way on the reconstructed
    /// fields.
    pub rel_y: f64,
}

/// Compare a trajectory against a reference computed on the same grids.
pub fn error_norms(trial: &Trajectory, reference: &Trajectory) -> Result<ErrorNorms> {
    let disc = &trial.disc;
    if !disc.shape_matches(&reference.disc) {
        return Err(ValidationError::DiscretizationMismatch {
            left: disc.shape_summary(),
            right: reference.disc.shape_summary(),
        }
        .into());
    }
    let steps = trial.steps();
    let weights = disc.node_weights();

    let mut max_diff_w = 0.0_f64;
    let mut max_ref_w = 0.0_f64;
    for n in 0..=steps {
        let a = trial.state(n);
        let b = reference.state(n);
        let mut diff = 0.0;
        let mut reference_sq = 0.0;
        for e in 0..disc.graph().edge_count() {
            for j in 0..disc.grids()[e].points {
                let w = weights[disc.node(e, j)];
                for idx in [disc.minus(e, j), disc.plus(e, j)] {
                    let d = a[idx] - b[idx];
                    diff += w * d * d;
                    reference_sq += w * b[idx] * b[idx];
                }
            }
        }
        max_diff_w = max_diff_w.max(diff);
        max_ref_w = max_ref_w.max(reference_sq);
    }
    if max_ref_w == 0.0 {
        return Err(ValidationError::ZeroReferenceNorm.into());
    }

    let mut max_diff_y = 0.0_f64;
    let mut max_ref_y = 0.0_f64;
    for n in 0..=steps {
        let a = trial.displacement_at(n);
        let b = reference.displacement_at(n);
        let mut diff = 0.0;
        let mut reference_sq = 0.0;
        for (i, &w) in weights.iter().enumerate() {
            let d = a[i] - b[i];
            diff += w * d * d;
            reference_sq += w * b[i] * b[i];
        }
        max_diff_y = max_diff_y.max(diff);
        max_ref_y = max_ref_y.max(reference_sq);
    }
    if max_ref_y == 0.0 {
        return Err(ValidationError::ZeroReferenceNorm.into());
    }

    Ok(ErrorNorms {
        rel_w: (max_diff_w / max_ref_w).sqrt(),
        rel_y: (max_diff_y / max_ref_y).sqrt(),
    })
}

#[cfg(not(target_arch = "wasm32"))]
pub(crate) fn now() -> Clock {
    Clock(std::time::Instant::now())
}

#[cfg(not(target_arch = "wasm32"))]
pub(crate) struct Clock(std::time::Instant);

#[cfg(not(target_arch = "wasm32"))]
impl Clock {
    pub(crate) fn elapsed_seconds(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

#[cfg(target_arch = "wasm32")]
pub(crate) fn now() -> Clock {
    Clock
}

#[cfg(target_arch = "wasm32")]
pub(crate) struct Clock;

#[cfg(target_arch = "wasm32")]
impl Clock {
    pub(crate) fn elapsed_seconds(&self) -> f64 {
        0.0
    }
}
