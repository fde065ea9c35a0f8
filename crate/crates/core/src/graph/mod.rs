//! Network topologies and the matrices built from them.
//!
//! Edges are kept in canonical form `(i, j)` with `i < j`, sorted
//! lexicographically, so every derived matrix has a reproducible row order.

mod incidence;
mod mixing;

pub use incidence::{
    apply_incidence, apply_incidence_transpose, apply_laplacian, apply_signless_laplacian,
    constraint_violation, IncidencePair,
};
pub use mixing::MixingMatrix;

use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, VecDeque};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("graph needs at least {min} nodes, got {got}")]
    TooFewNodes { min: usize, got: usize },
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("edge ({0}, {1}) references a node outside 0..{2}")]
    NodeOutOfRange(usize, usize, usize),
    #[error("graph is disconnected: node {0} unreachable from node 0")]
    DisconnectedGraph(usize),
}

/// Topology descriptor, as it appears in experiment configs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Topology {
    Circle { nodes: usize },
    Path { nodes: usize },
    Complete { nodes: usize },
    EdgeList { nodes: usize, edges: Vec<(usize, usize)> },
}

impl Topology {
    pub fn nodes(&self) -> usize {
        match self {
            Topology::Circle { nodes }
            | Topology::Path { nodes }
            | Topology::Complete { nodes }
            | Topology::EdgeList { nodes, .. } => *nodes,
        }
    }
}

/// Undirected, connected, simple graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    nodes: usize,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

impl Graph {
    /// Build a graph from a topology descriptor.
    ///
    /// A single isolated node is accepted (`N = 1`, no edges); it is the
    /// degenerate "network" used to check that the distributed method
    /// collapses to a centralized one. Every other graph needs `N ≥ 2`
    /// and must be connected.
    pub fn build(spec: &Topology) -> Result<Self, GraphError> {
        let n = spec.nodes();
        let raw: Vec<(usize, usize)> = match spec {
            Topology::Circle { nodes } => {
                require_nodes(*nodes, 2)?;
                match nodes {
                    2 => vec![(0, 1)],
                    _ => (0..*nodes).map(|i| (i, (i + 1) % nodes)).collect(),
                }
            }
            Topology::Path { nodes } => {
                require_nodes(*nodes, 2)?;
                (0..nodes - 1).map(|i| (i, i + 1)).collect()
            }
            Topology::Complete { nodes } => {
                require_nodes(*nodes, 2)?;
                (0..*nodes)
                    .flat_map(|i| (i + 1..*nodes).map(move |j| (i, j)))
                    .collect()
            }
            Topology::EdgeList { nodes, edges } => {
                require_nodes(*nodes, 1)?;
                edges.clone()
            }
        };
        Self::from_edges(n, &raw)
    }

    pub fn circle(nodes: usize) -> Result<Self, GraphError> {
        Self::build(&Topology::Circle { nodes })
    }

    pub fn path(nodes: usize) -> Result<Self, GraphError> {
        Self::build(&Topology::Path { nodes })
    }

    pub fn complete(nodes: usize) -> Result<Self, GraphError> {
        Self::build(&Topology::Complete { nodes })
    }

    /// A single agent with no links.
    pub fn singleton() -> Self {
        Self {
            nodes: 1,
            edges: Vec::new(),
            neighbors: vec![Vec::new()],
        }
    }

    pub fn from_edges(nodes: usize, raw: &[(usize, usize)]) -> Result<Self, GraphError> {
        if nodes == 1 && raw.is_empty() {
            return Ok(Self::singleton());
        }
        require_nodes(nodes, 2)?;
        let mut set = BTreeSet::new();
        for &(a, b) in raw {
            if a >= nodes || b >= nodes {
                return Err(GraphError::NodeOutOfRange(a, b, nodes));
            }
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            let e = (a.min(b), a.max(b));
            if !set.insert(e) {
                return Err(GraphError::DuplicateEdge(e.0, e.1));
            }
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut neighbors = vec![Vec::new(); nodes];
        for &(i, j) in &edges {
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        for nb in &mut neighbors {
            nb.sort_unstable();
        }
        let g = Self {
            nodes,
            edges,
            neighbors,
        };
        g.check_connected()?;
        Ok(g)
    }

    fn check_connected(&self) -> Result<(), GraphError> {
        let mut seen = vec![false; self.nodes];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &self.neighbors[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(missing) => Err(GraphError::DisconnectedGraph(missing)),
            None => Ok(()),
        }
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.nodes
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Canonical edge list; row `ℓ` of the incidence matrix is `edges()[ℓ]`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Sorted neighbor ids of node `i`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.nodes).map(|i| self.degree(i)).collect()
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().into_iter().max().unwrap_or(0)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&j).is_ok()
    }

    /// Graph Laplacian `D - Adj` as a dense matrix.
    pub fn laplacian(&self) -> crate::linalg::DenseMatrix {
        let mut l = crate::linalg::DenseMatrix::zeros(self.nodes, self.nodes);
        for i in 0..self.nodes {
            l[(i, i)] = self.degree(i) as f64;
        }
        for &(i, j) in &self.edges {
            l[(i, j)] = -1.0;
            l[(j, i)] = -1.0;
        }
        l
    }
}

fn require_nodes(got: usize, min: usize) -> Result<(), GraphError> {
    if got < min {
        Err(GraphError::TooFewNodes { min, got })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_of_three_is_triangle() {
        let g = Graph::circle(3).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (0, 2), (1, 2)]);
        assert_eq!(g.degrees(), vec![2, 2, 2]);
    }

    #[test]
    fn path_of_two() {
        let g = Graph::path(2).unwrap();
        assert_eq!(g.edges(), &[(0, 1)]);
        assert_eq!(g.degrees(), vec![1, 1]);
    }

    #[test]
    fn circle_twenty() {
        let g = Graph::circle(20).unwrap();
        assert_eq!(g.edge_count(), 20);
        assert!(g.degrees().iter().all(|&d| d == 2));
    }

    #[test]
    fn complete_graph_edges() {
        let g = Graph::complete(5).unwrap();
        assert_eq!(g.edge_count(), 10);
        assert_eq!(g.max_degree(), 4);
    }

    #[test]
    fn rejects_bad_edge_lists() {
        assert_eq!(
            Graph::from_edges(3, &[(0, 1), (1, 1)]),
            Err(GraphError::SelfLoop(1))
        );
        assert_eq!(
            Graph::from_edges(3, &[(0, 1), (1, 0), (1, 2)]),
            Err(GraphError::DuplicateEdge(0, 1))
        );
        assert_eq!(
            Graph::from_edges(4, &[(0, 1), (2, 3)]),
            Err(GraphError::DisconnectedGraph(2))
        );
        assert!(matches!(
            Graph::build(&Topology::Circle { nodes: 1 }),
            Err(GraphError::TooFewNodes { .. })
        ));
    }

    #[test]
    fn edge_list_is_canonicalised() {
        let g = Graph::from_edges(4, &[(3, 2), (1, 0), (2, 0)]).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (0, 2), (2, 3)]);
        assert_eq!(g.neighbors(0), &[1, 2]);
    }

    #[test]
    fn singleton_has_no_edges() {
        let g = Graph::from_edges(1, &[]).unwrap();
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.degree(0), 0);
    }
}
