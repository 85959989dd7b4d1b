//! Built-in benchmark networks and their batch schemes.
//!
//! These mirror the TOML fixture files shipped in `fixtures/` at the
//! repository root; the parser tests cross-check that file and code agree.
//! All tables below use 1-based vertex and edge ids (as in the files) and
//! convert on construction.

use crate::graph::{Edge, Graph};
use crate::randomization::BatchScheme;

/// The diamond network: six vertices joined by seven edges forming two
/// stacked rhombi between an inflow edge and an outflow edge. All speeds
/// are one; the three "diagonal" edges (1, 4, 7) have length sqrt(2), the
/// four rhombus sides have length 1. Vertex 1 is controlled.
pub fn diamond() -> Graph {
    let sqrt2 = 2.0_f64.sqrt();
    let table: [(usize, usize, f64); 7] = [
        (1, 2, sqrt2),
        (2, 3, 1.0),
        (2, 4, 1.0),
        (3, 4, sqrt2),
        (3, 5, 1.0),
        (4, 5, 1.0),
        (5, 6, sqrt2),
    ];
    let edges = table
        .iter()
        .map(|&(a, b, length)| Edge {
            start: a - 1,
            end: b - 1,
            length,
            speed: 1.0,
        })
        .collect();
    Graph::new(6, edges, vec![0]).expect("diamond fixture is valid")
}

/// The four-subset batch scheme for [`diamond`]: each subset keeps three
/// edges and induces a tree, probabilities are uniform. Edges 1 and 7
/// appear in one subset each (activation probability 1/4), the interior
/// edges in two (probability 1/2).
pub fn diamond_scheme() -> BatchScheme {
    let subsets: Vec<Vec<usize>> = [vec![1, 2, 3], vec![2, 4, 5], vec![3, 4, 6], vec![5, 6, 7]]
        .into_iter()
        .map(|s| s.into_iter().map(|e| e - 1).collect())
        .collect();
    BatchScheme::new(subsets, vec![0.25; 4], 7).expect("diamond scheme is valid")
}

/// Endpoints (1-based) of the 45 edges of [`pipeline40`]. Edge id is the
/// position in this table plus one.
const PIPELINE40_ENDPOINTS: [(usize, usize); 45] = [
    (1, 2),   // e1
    (2, 3),   // e2
    (3, 6),   // e3
    (6, 7),   // e4
    (7, 4),   // e5
    (8, 9),   // e6
    (14, 11), // e7
    (12, 17), // e8
    (18, 19), // e9
    (9, 11),  // e10
    (17, 18), // e11
    (12, 10), // e12
    (13, 14), // e13
    (20, 21), // e14
    (14, 22), // e15
    (26, 27), // e16
    (29, 26), // e17
    (22, 23), // e18
    (23, 24), // e19
    (24, 25), // e20
    (7, 8),   // e21
    (11, 12), // e22
    (12, 13), // e23
    (19, 20), // e24
    (27, 28), // e25
    (28, 29), // e26
    (15, 26), // e27
    (25, 30), // e28
    (30, 31), // e29
    (31, 32), // e30
    (14, 16), // e31
    (16, 15), // e32
    (27, 36), // e33
    (15, 11), // e34
    (21, 15), // e35
    (32, 33), // e36
    (33, 34), // e37
    (8, 6),   // e38
    (33, 37), // e39
    (37, 38), // e40
    (38, 39), // e41
    (35, 32), // e42
    (34, 35), // e43
    (39, 40), // e44
    (21, 5),  // e45
];

/// Edge lengths of [`pipeline40`], indexed by edge id minus one.
const PIPELINE40_LENGTHS: [f64; 45] = [
    0.310, 0.429, 0.157, 0.276, 0.395, 0.514, 0.242, 0.361, 0.480, 0.208, 0.327, 0.446, 0.174,
    0.293, 0.412, 0.140, 0.259, 0.378, 0.497, 0.225, 0.344, 0.463, 0.191, 0.310, 0.429, 0.157,
    0.276, 0.395, 0.514, 0.242, 0.361, 0.480, 0.208, 0.327, 0.446, 0.174, 0.293, 0.412, 0.140,
    0.259, 0.378, 0.497, 0.225, 0.344, 0.463,
];

/// A 40-vertex, 45-edge pipeline-style benchmark network with uniform wave
/// speed 5 and a single controlled entry vertex of degree one.
///
/// Its cycle space has dimension six and contains exactly ten simple
/// cycles: one triangle (edges 4, 21, 38), two quadrilaterals
/// (16-25-26-17 and 36-37-43-42), and seven cycles through the central
/// double-loop cluster (edges 7, 8, 9, 11, 13, 14, 22, 23, 24, 31, 32, 34,
/// 35). Every subset of [`pipeline40_scheme`] induces a forest, so each
/// randomized step propagates on a cycle-free subnetwork.
pub fn pipeline40() -> Graph {
    let edges = PIPELINE40_ENDPOINTS
        .iter()
        .zip(PIPELINE40_LENGTHS)
        .map(|(&(a, b), length)| Edge {
            start: a - 1,
            end: b - 1,
            length,
            speed: 5.0,
        })
        .collect();
    Graph::new(40, edges, vec![0]).expect("pipeline fixture is valid")
}

/// The ten-subset batch scheme for [`pipeline40`]: each subset keeps 26 of
/// the 45 edges, breaks all ten cycles, and carries probability 1/10.
pub fn pipeline40_scheme() -> BatchScheme {
    let table: [&[usize]; 10] = [
        &[
            1, 2, 5, 6, 10, 11, 14, 15, 18, 19, 21, 22, 24, 25, 27, 28, 30, 31, 33, 34, 37, 38,
            40, 41, 43, 44,
        ],
        &[
            2, 3, 6, 8, 10, 11, 13, 14, 16, 18, 20, 21, 23, 25, 27, 28, 30, 31, 34, 35, 37, 38,
            40, 41, 44, 45,
        ],
        &[
            1, 3, 5, 7, 8, 10, 12, 14, 15, 17, 18, 20, 21, 24, 25, 28, 29, 32, 33, 35, 37, 39, 40,
            42, 43, 45,
        ],
        &[
            1, 2, 5, 6, 8, 9, 11, 12, 14, 15, 17, 18, 20, 21, 25, 27, 29, 30, 33, 34, 36, 37, 39,
            40, 43, 44,
        ],
        &[
            2, 3, 5, 6, 9, 10, 13, 14, 17, 18, 20, 21, 24, 25, 27, 28, 30, 31, 33, 34, 37, 39, 41,
            42, 44, 45,
        ],
        &[
            1, 3, 4, 6, 8, 10, 11, 13, 14, 17, 18, 20, 21, 24, 25, 27, 28, 30, 31, 33, 34, 37, 39,
            41, 43, 45,
        ],
        &[
            1, 2, 4, 5, 7, 9, 11, 12, 14, 15, 18, 19, 21, 22, 25, 26, 28, 29, 32, 33, 35, 37, 40,
            41, 43, 44,
        ],
        &[
            2, 3, 5, 6, 8, 9, 12, 13, 15, 17, 19, 20, 24, 25, 27, 28, 30, 31, 33, 35, 37, 38, 40,
            41, 44, 45,
        ],
        &[
            1, 3, 4, 6, 7, 9, 10, 12, 14, 16, 17, 19, 20, 23, 24, 27, 28, 30, 31, 33, 35, 39, 40,
            42, 43, 45,
        ],
        &[
            1, 2, 4, 5, 7, 8, 10, 11, 13, 14, 16, 18, 20, 21, 25, 26, 28, 29, 31, 33, 35, 36, 39,
            40, 43, 44,
        ],
    ];
    let subsets = table
        .iter()
        .map(|s| s.iter().map(|&e| e - 1).collect())
        .collect();
    BatchScheme::new(subsets, vec![0.1; 10], 45).expect("pipeline scheme is valid")
}

/// A single edge between two degree-one vertices, controlled at the start
/// vertex. The simplest network; its dynamics have a closed-form solution.
pub fn single_edge(length: f64, speed: f64) -> Graph {
    let edges = vec![Edge {
        start: 0,
        end: 1,
        length,
        speed,
    }];
    Graph::new(2, edges, vec![0]).expect("single edge fixture is valid")
}
