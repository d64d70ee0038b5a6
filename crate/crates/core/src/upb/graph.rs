//! Orthogonality graphs on five vertices and the twelve Hamiltonian cycles.

use std::collections::BTreeSet;

use serde::{Serialize, Serializer};

use crate::linalg::{ComplexMatrix, HermitianOperator};
use crate::nondisturb::Side;

/// Unordered vertex pair, stored with the smaller vertex first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge(pub usize, pub usize);

impl Edge {
    pub fn new(i: usize, j: usize) -> Edge {
        if i < j {
            Edge(i, j)
        } else {
            Edge(j, i)
        }
    }
}

impl Serialize for Edge {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{}{}", self.0, self.1))
    }
}

/// Vertex orders of O_1 .. O_12, read off the layout with vertices at the
/// top, left, bottom-left, bottom-right and right.
pub const CYCLES: [[usize; 5]; 12] = [
    [0, 1, 2, 3, 4],
    [0, 1, 2, 4, 3],
    [0, 1, 3, 2, 4],
    [0, 1, 3, 4, 2],
    [0, 1, 4, 2, 3],
    [0, 1, 4, 3, 2],
    [0, 2, 4, 1, 3],
    [0, 2, 3, 1, 4],
    [0, 3, 4, 1, 2],
    [0, 3, 2, 1, 4],
    [0, 4, 3, 1, 2],
    [0, 4, 2, 1, 3],
];

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Cycle {
    /// 1-based position in the fixed table.
    pub id: usize,
    pub order: [usize; 5],
    pub edges: BTreeSet<Edge>,
}

impl Cycle {
    fn from_order(id: usize, order: [usize; 5]) -> Cycle {
        let edges = (0..5).map(|k| Edge::new(order[k], order[(k + 1) % 5])).collect();
        Cycle { id, order, edges }
    }

    /// The two neighbours of `v`.
    pub fn neighbours(&self, v: usize) -> [usize; 2] {
        let k = self.order.iter().position(|&x| x == v).expect("vertex in 0..5");
        [self.order[(k + 4) % 5], self.order[(k + 1) % 5]]
    }

    /// The 5 pairs not in this cycle.
    pub fn complement_edges(&self) -> BTreeSet<Edge> {
        all_pairs().difference(&self.edges).copied().collect()
    }

    /// Id of the cycle whose edges are the complement of this one.
    pub fn complement_id(&self) -> usize {
        cycle_id_of(&self.complement_edges()).expect("the complement of a 5-cycle on K5 is a 5-cycle")
    }

    /// Edge set after renaming every vertex `v` to `map[v]`.
    pub fn relabeled(&self, map: &[usize; 5]) -> BTreeSet<Edge> {
        self.edges.iter().map(|e| Edge::new(map[e.0], map[e.1])).collect()
    }
}

fn all_pairs() -> BTreeSet<Edge> {
    (0..5).flat_map(|i| (i + 1..5).map(move |j| Edge(i, j))).collect()
}

pub fn enumerate_cycles() -> Vec<Cycle> {
    CYCLES.iter().enumerate().map(|(k, &o)| Cycle::from_order(k + 1, o)).collect()
}

/// Cycle `O_id`, 1-based.
pub fn cycle(id: usize) -> Option<Cycle> {
    (1..=12).contains(&id).then(|| Cycle::from_order(id, CYCLES[id - 1]))
}

pub fn cycle_id_of(edges: &BTreeSet<Edge>) -> Option<usize> {
    enumerate_cycles().into_iter().find(|c| &c.edges == edges).map(|c| c.id)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrthGraph {
    pub side: Side,
    pub edges: BTreeSet<Edge>,
}

impl OrthGraph {
    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.0 == v || e.1 == v).count()
    }

    pub fn max_degree(&self) -> usize {
        (0..5).map(|v| self.degree(v)).max().unwrap_or(0)
    }
}

/// Edge `(i, j)` whenever `|<v_i|a|v_j>| <= tol`.
pub fn orth_graph(side: Side, vectors: &[ComplexMatrix; 5], a: &HermitianOperator, tol: f64) -> OrthGraph {
    let mut edges = BTreeSet::new();
    for i in 0..5 {
        let av = a.matrix() * &vectors[i];
        for j in 0..i {
            if (vectors[j].adjoint() * &av)[(0, 0)].norm() <= tol {
                edges.insert(Edge(j, i));
            }
        }
    }
    OrthGraph { side, edges }
}
