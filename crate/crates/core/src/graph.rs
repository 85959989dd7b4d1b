//! Metric graphs: finite directed graphs whose edges carry a length and a
//! wave speed.
//!
//! Each edge is an oriented interval `[0, length]`; the orientation fixes
//! which endpoint is the edge's start (`x = 0`) and which its end
//! (`x = length`). The incidence matrix follows the usual convention:
//! `-1` where an edge starts, `+1` where it ends. A subset of vertices is
//! marked as controlled; boundary forcing acts there.

use serde::{Deserialize, Serialize};

use crate::error::ValidationError;

/// Vertex index, `0..graph.vertex_count()`.
pub type VertexId = usize;
/// Edge index, `0..graph.edge_count()`.
pub type EdgeId = usize;

/// Which endpoint of an edge touches a vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeEnd {
    /// The `x = 0` endpoint (incidence -1).
    Start,
    /// The `x = length` endpoint (incidence +1).
    End,
}

impl EdgeEnd {
    /// Incidence sign: -1 at the start of an edge, +1 at its end.
    pub fn sign(self) -> i8 {
        match self {
            EdgeEnd::Start => -1,
            EdgeEnd::End => 1,
        }
    }

    /// The other end of the edge.
    pub fn opposite(self) -> EdgeEnd {
        match self {
            EdgeEnd::Start => EdgeEnd::End,
            EdgeEnd::End => EdgeEnd::Start,
        }
    }

    /// 0 for the start, 1 for the end; indexes per-end tables.
    pub fn index(self) -> usize {
        match self {
            EdgeEnd::Start => 0,
            EdgeEnd::End => 1,
        }
    }
}

/// One oriented edge of a metric graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    /// Vertex at `x = 0`.
    pub start: VertexId,
    /// Vertex at `x = length`.
    pub end: VertexId,
    /// Length of the interval the edge represents (> 0).
    pub length: f64,
    /// Wave speed on the edge (> 0).
    pub speed: f64,
}

impl Edge {
    /// The vertex at the given end.
    pub fn vertex_at(&self, end: EdgeEnd) -> VertexId {
        match end {
            EdgeEnd::Start => self.start,
            EdgeEnd::End => self.end,
        }
    }
}

/// A connected metric graph with a distinguished set of controlled vertices.
///
/// Construction validates the data (see [`Graph::new`]); a value of this
/// type is always structurally sound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Graph {
    vertex_count: usize,
    edges: Vec<Edge>,
    controlled: Vec<VertexId>,
    /// Per vertex: incident edges in edge-index order.
    incident: Vec<Vec<(EdgeId, EdgeEnd)>>,
}

impl Graph {
    /// Build and validate a metric graph.
    ///
    /// Rejects empty edge lists, endpoint indices out of range, self-loops,
    /// non-positive lengths or speeds, disconnected graphs, and controlled
    /// vertices that are out of range or repeated. Parallel edges are
    /// allowed. `controlled` is stored sorted.
    pub fn new(
        vertex_count: usize,
        edges: Vec<Edge>,
        mut controlled: Vec<VertexId>,
    ) -> Result<Self, ValidationError> {
        if edges.is_empty() {
            return Err(ValidationError::EmptyNetwork);
        }
        for (id, edge) in edges.iter().enumerate() {
            for v in [edge.start, edge.end] {
                if v >= vertex_count {
                    return Err(ValidationError::VertexOutOfRange {
                        edge: id,
                        vertex: v,
                        vertices: vertex_count,
                    });
                }
            }
            if edge.start == edge.end {
                return Err(ValidationError::SelfLoop {
                    edge: id,
                    vertex: edge.start,
                });
            }
            if !(edge.length > 0.0) {
                return Err(ValidationError::NonPositiveLength {
                    edge: id,
                    length: edge.length,
                });
            }
            if !(edge.speed > 0.0) {
                return Err(ValidationError::NonPositiveSpeed {
                    edge: id,
                    speed: edge.speed,
                });
            }
        }

        let mut incident: Vec<Vec<(EdgeId, EdgeEnd)>> = vec![Vec::new(); vertex_count];
        for (id, edge) in edges.iter().enumerate() {
            incident[edge.start].push((id, EdgeEnd::Start));
            incident[edge.end].push((id, EdgeEnd::End));
        }

        // Connectivity: breadth-first search from vertex 0.
        let mut seen = vec![false; vertex_count];
        let mut queue = vec![0];
        seen[0] = true;
        while let Some(v) = queue.pop() {
            for &(e, end) in &incident[v] {
                let other = match end {
                    EdgeEnd::Start => edges[e].end,
                    EdgeEnd::End => edges[e].start,
                };
                if !seen[other] {
                    seen[other] = true;
                    queue.push(other);
                }
            }
        }
        if let Some(v) = seen.iter().position(|s| !s) {
            return Err(ValidationError::Disconnected { vertex: v });
        }

        controlled.sort_unstable();
        for pair in controlled.windows(2) {
            if pair[0] == pair[1] {
                return Err(ValidationError::DuplicateControlledVertex { vertex: pair[0] });
            }
        }
        if let Some(&v) = controlled.iter().find(|&&v| v >= vertex_count) {
            return Err(ValidationError::ControlledVertexOutOfRange {
                vertex: v,
                vertices: vertex_count,
            });
        }

        Ok(Self {
            vertex_count,
            edges,
            controlled,
            incident,
        })
    }

    /// Number of vertices.
    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    /// Number of edges.
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// All edges, indexed by [`EdgeId`].
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// One edge.
    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id]
    }

    /// Controlled vertices, sorted ascending.
    pub fn controlled(&self) -> &[VertexId] {
        &self.controlled
    }

    /// Whether a vertex is controlled.
    pub fn is_controlled(&self, v: VertexId) -> bool {
        self.controlled.binary_search(&v).is_ok()
    }

    /// Position of a vertex in the controlled list (its control channel).
    pub fn control_channel(&self, v: VertexId) -> Option<usize> {
        self.controlled.binary_search(&v).ok()
    }

    /// Edges incident to a vertex with the end that touches it, in
    /// edge-index order.
    pub fn edges_at(&self, v: VertexId) -> &[(EdgeId, EdgeEnd)] {
        &self.incident[v]
    }

    /// Vertex degree (parallel edges counted separately).
    pub fn degree(&self, v: VertexId) -> usize {
        self.incident[v].len()
    }

    /// Sum of the wave speeds of all edges incident to `v`.
    pub fn total_speed_at(&self, v: VertexId) -> f64 {
        self.incident[v].iter().map(|&(e, _)| self.edges[e].speed).sum()
    }

    /// Dense incidence matrix, `vertex_count` rows by `edge_count` columns;
    /// entry `(v, e)` is -1 if edge `e` starts at `v`, +1 if it ends there.
    pub fn incidence_matrix(&self) -> Vec<Vec<i8>> {
        let mut m = vec![vec![0i8; self.edges.len()]; self.vertex_count];
        for (id, edge) in self.edges.iter().enumerate() {
            m[edge.start][id] = -1;
            m[edge.end][id] = 1;
        }
        m
    }
}
