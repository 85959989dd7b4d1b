//! Random batch schemes: randomized edge activation for wave dynamics on
//! metric graphs.
//!
//! A [`BatchScheme`] is a finite family of edge subsets with probabilities
//! summing to one. On each time interval of a simulation one subset is
//! drawn independently; edges in the subset propagate with their speed
//! rescaled by the reciprocal of their activation probability, all other
//! edges are frozen (speed zero). The rescaling makes the randomized speed
//! unbiased: its expectation equals the original speed on every edge.
//!
//! Sampling is fully deterministic given a 64-bit seed: draws come from a
//! ChaCha12 stream cipher RNG (`rand_chacha`), whose output is specified
//! by the ChaCha algorithm and therefore stable across platforms and
//! library versions. Realization `r` of a study with seed `s` uses the
//! seed `s.wrapping_add(r)`; subsets are drawn by inverting the cumulative
//! distribution with one uniform draw per time step.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::ValidationError;
use crate::graph::EdgeId;

/// Tolerance for "probabilities sum to one".
const PROBABILITY_SUM_TOL: f64 = 1e-12;

/// A family of edge subsets with selection probabilities.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchScheme {
    /// Edge ids per subset, each sorted ascending.
    subsets: Vec<Vec<EdgeId>>,
    /// Selection probability per subset; sums to one.
    probabilities: Vec<f64>,
    /// Number of edges in the underlying graph.
    edge_count: usize,
    /// `membership[s][e]`: does subset `s` contain edge `e`?
    membership: Vec<Vec<bool>>,
    /// Activation probability per edge: sum of the probabilities of the
    /// subsets containing it. Strictly positive for every edge.
    activation: Vec<f64>,
    /// Cumulative probabilities for inverse-CDF sampling.
    cumulative: Vec<f64>,
}

impl BatchScheme {
    /// Build and validate a scheme over a graph with `edge_count` edges.
    ///
    /// Requirements: at least one subset; every subset lists distinct edge
    /// ids below `edge_count`; one probability per subset, each in
    /// `[0, 1]`, summing to one within `1e-12`; and every edge must belong
    /// to at least one subset of positive probability (otherwise its
    /// randomized speed could not be unbiased).
    pub fn new(
        mut subsets: Vec<Vec<EdgeId>>,
        probabilities: Vec<f64>,
        edge_count: usize,
    ) -> Result<Self, ValidationError> {
        if subsets.is_empty() {
            return Err(ValidationError::EmptyScheme);
        }
        if subsets.len() != probabilities.len() {
            return Err(ValidationError::ProbabilityCountMismatch {
                subsets: subsets.len(),
                probabilities: probabilities.len(),
            });
        }
        for (s, subset) in subsets.iter_mut().enumerate() {
            subset.sort_unstable();
            for pair in subset.windows(2) {
                if pair[0] == pair[1] {
                    return Err(ValidationError::DuplicateSubsetEdge {
                        subset: s,
                        edge: pair[0],
                    });
                }
            }
            if let Some(&e) = subset.iter().find(|&&e| e >= edge_count) {
                return Err(ValidationError::SubsetEdgeOutOfRange {
                    subset: s,
                    edge: e,
                    edges: edge_count,
                });
            }
        }
        for (s, &p) in probabilities.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                return Err(ValidationError::ProbabilityOutOfRange { subset: s, value: p });
            }
        }
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > PROBABILITY_SUM_TOL {
            return Err(ValidationError::ProbabilitySum { sum });
        }

        let membership: Vec<Vec<bool>> = subsets
            .iter()
            .map(|subset| {
                let mut row = vec![false; edge_count];
                for &e in subset {
                    row[e] = true;
                }
                row
            })
            .collect();
        let mut activation = vec![0.0; edge_count];
        for (row, &p) in membership.iter().zip(&probabilities) {
            for (a, &m) in activation.iter_mut().zip(row) {
                if m {
                    *a += p;
                }
            }
        }
        if let Some(e) = activation.iter().position(|&a| a <= 0.0) {
            return Err(ValidationError::EdgeNeverActive { edge: e });
        }

        let mut cumulative = Vec::with_capacity(probabilities.len());
        let mut acc = 0.0;
        for &p in &probabilities {
            acc += p;
            cumulative.push(acc);
        }

        Ok(Self {
            subsets,
            probabilities,
            edge_count,
            membership,
            activation,
            cumulative,
        })
    }

    /// The trivial scheme with a single subset containing every edge. Its
    /// randomized dynamics coincide with the deterministic dynamics.
    pub fn single_subset(edge_count: usize) -> Self {
        Self::new(vec![(0..edge_count).collect()], vec![1.0], edge_count)
            .expect("single-subset scheme is valid")
    }

    /// Number of subsets.
    pub fn subset_count(&self) -> usize {
        self.subsets.len()
    }

    /// Edge ids per subset, sorted ascending.
    pub fn subsets(&self) -> &[Vec<EdgeId>] {
        &self.subsets
    }

    /// Selection probabilities, parallel to [`Self::subsets`].
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// Number of edges of the underlying graph.
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Whether subset `s` contains edge `e`.
    pub fn is_active(&self, s: usize, e: EdgeId) -> bool {
        self.membership[s][e]
    }

    /// Activation probability of an edge: total probability of the subsets
    /// containing it.
    pub fn activation_probability(&self, e: EdgeId) -> f64 {
        self.activation[e]
    }

    /// The randomized speed of edge `e` under subset `s`: the base speed
    /// divided by the activation probability if the edge is active, zero
    /// otherwise. Averaging over subsets recovers the base speed exactly.
    pub fn randomized_speed(&self, e: EdgeId, base_speed: f64, s: usize) -> f64 {
        if self.membership[s][e] {
            base_speed / self.activation[e]
        } else {
            0.0
        }
    }

    /// Randomized speeds of every edge under subset `s`.
    pub fn subset_speeds(&self, base_speeds: &[f64], s: usize) -> Vec<f64> {
        base_speeds
            .iter()
            .enumerate()
            .map(|(e, &c)| self.randomized_speed(e, c, s))
            .collect()
    }

    /// Absolute deviation of the mean randomized speed from the base
    /// speed, `|sum_s p_s c_s(e) - c|`. Zero up to rounding (~1e-12 ..
    /// 1e-16) by the unbiasedness of the rescaling.
    pub fn mean_speed_deviation(&self, e: EdgeId, base_speed: f64) -> f64 {
        let mean: f64 = (0..self.subsets.len())
            .map(|s| self.probabilities[s] * self.randomized_speed(e, base_speed, s))
            .sum();
        (mean - base_speed).abs()
    }

    /// Variance of the randomized speed of edge `e`, computed by direct
    /// enumeration over subsets: `sum_s p_s (c_s(e) - c)^2`.
    pub fn speed_variance(&self, e: EdgeId, base_speed: f64) -> f64 {
        (0..self.subsets.len())
            .map(|s| {
                let d = self.randomized_speed(e, base_speed, s) - base_speed;
                self.probabilities[s] * d * d
            })
            .sum()
    }

    /// The same variance in closed form, `c^2 (1/pi - 1)` with `pi` the
    /// activation probability. Agrees with [`Self::speed_variance`] to
    /// rounding; both are exposed so tests can cross-check them.
    pub fn speed_variance_closed_form(&self, e: EdgeId, base_speed: f64) -> f64 {
        base_speed * base_speed * (1.0 / self.activation[e] - 1.0)
    }

    /// Draw one subset index by inverse-CDF on a single uniform draw.
    pub fn sample_subset(&self, rng: &mut ChaCha12Rng) -> usize {
        let u: f64 = rng.random();
        // First subset whose cumulative probability exceeds u; the last
        // subset catches u landing beyond the final partial sum.
        self.cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.subsets.len() - 1)
    }

    /// Draw a full realization: one subset index per time step.
    pub fn sample_realization(&self, steps: usize, rng: &mut ChaCha12Rng) -> Realization {
        Realization {
            indices: (0..steps).map(|_| self.sample_subset(rng) as u32).collect(),
        }
    }
}

/// One sampled batch realization: the subset active on each time step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Realization {
    indices: Vec<u32>,
}

impl Realization {
    /// Build from explicit subset indices (mostly for tests).
    pub fn from_indices(indices: Vec<u32>) -> Self {
        Self { indices }
    }

    /// Number of time steps covered.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    /// Whether the realization covers zero steps.
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Subset index active on step `k` (the interval from `t_k` to
    /// `t_{k+1}`).
    pub fn subset_at(&self, k: usize) -> usize {
        self.indices[k] as usize
    }

    /// All subset indices.
    pub fn indices(&self) -> &[u32] {
        &self.indices
    }
}

/// Deterministic RNG for a single realization of a seeded study.
pub fn realization_rng(study_seed: u64, realization: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(study_seed.wrapping_add(realization))
}
