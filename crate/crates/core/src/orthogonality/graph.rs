use std::fmt::Write as _;

use crate::linalg::LinearSystem;

/// Default relative orthogonality threshold: rows `i` and `j` are adjacent
/// when `|a_i . a_j| > tau * ||a_i|| ||a_j||`.
pub const DEFAULT_ORTHOGONALITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphMode {
    /// Edge iff the rows are numerically non-orthogonal.
    Exact,
    /// Edge iff the rows share a nonzero column.
    SupportOverlap,
}

/// Undirected graph on the rows of `A` with an edge between every pair of
/// rows that are not orthogonal. Projecting onto a row can only change the
/// residuals of its neighbours.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalityGraph {
    adj: Vec<Vec<usize>>,
    mode: GraphMode,
}

impl OrthogonalityGraph {
    /// Builds a graph from an explicit undirected edge list. Self-loops are
    /// dropped and duplicates merged.
    pub fn from_edges(m: usize, edges: &[(usize, usize)], mode: GraphMode) -> Self {
        let mut adj = vec![Vec::new(); m];
        for &(i, j) in edges {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Self { adj, mode }
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn mode(&self) -> GraphMode {
        self.mode
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    /// Largest degree `g`.
    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i].binary_search(&j).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (i, list) in self.adj.iter().enumerate() {
            for &j in list {
                if i < j {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Whether every edge of `self` is also an edge of `other`.
    pub fn is_subgraph_of(&self, other: &OrthogonalityGraph) -> bool {
        self.len() == other.len() && self.edges().iter().all(|&(i, j)| other.has_edge(i, j))
    }

    /// Same graph with nodes renamed by `perm` (node `i` becomes `perm[i]`).
    pub fn relabeled(&self, perm: &[usize]) -> Self {
        let edges: Vec<_> = self
            .edges()
            .into_iter()
            .map(|(i, j)| (perm[i], perm[j]))
            .collect();
        Self::from_edges(self.len(), &edges, self.mode)
    }

    /// One `i j` pair per line, `i < j`, preceded by a `# m edges` comment.
    pub fn to_edge_list(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# {} {}", self.len(), self.edge_count());
        for (i, j) in self.edges() {
            let _ = writeln!(s, "{i} {j}");
        }
        s
    }
}

/// Pairs of distinct rows sharing at least one column, each listed once with
/// `i < j`.
fn support_pairs(sys: &LinearSystem) -> Vec<(usize, usize)> {
    let a = sys.matrix();
    let mut pairs = Vec::new();
    let mut seen = vec![usize::MAX; a.nrows()];
    for i in 0..a.nrows() {
        for &c in a.row(i).indices {
            for &j in a.col(c).indices {
                if j > i && seen[j] != i {
                    seen[j] = i;
                    pairs.push((i, j));
                }
            }
        }
    }
    pairs
}

/// Graph with an edge between rows sharing a nonzero column. Contains the
/// exact orthogonality graph.
pub fn build_support_graph(sys: &LinearSystem) -> OrthogonalityGraph {
    OrthogonalityGraph::from_edges(sys.nrows(), &support_pairs(sys), GraphMode::SupportOverlap)
}

/// Graph with an edge between rows with `|a_i . a_j| > tau ||a_i|| ||a_j||`.
///
/// Only pairs with overlapping support can be non-orthogonal, so candidate
/// pairs come from the column adjacency.
pub fn build_exact_graph(sys: &LinearSystem, tau: f64) -> OrthogonalityGraph {
    let a = sys.matrix();
    let norms = sys.norms();
    let edges: Vec<_> = support_pairs(sys)
        .into_iter()
        .filter(|&(i, j)| {
            a.row(i).dot_sparse(&a.row(j)).abs() > tau * norms.norm(i) * norms.norm(j)
        })
        .collect();
    OrthogonalityGraph::from_edges(sys.nrows(), &edges, GraphMode::Exact)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SparseMatrix;

    fn system(rows: &[Vec<f64>]) -> LinearSystem {
        let a = SparseMatrix::from_dense_rows(rows).unwrap();
        let m = a.nrows();
        LinearSystem::new(a, vec![0.0; m]).unwrap()
    }

    #[test]
    fn identity_is_edgeless() {
        let sys = LinearSystem::new(SparseMatrix::identity(4), vec![1.0; 4]).unwrap();
        assert_eq!(
            build_exact_graph(&sys, DEFAULT_ORTHOGONALITY_TOL).edge_count(),
            0
        );
        assert_eq!(build_support_graph(&sys).edge_count(), 0);
    }

    #[test]
    fn exact_graph_from_dot_products() {
        let sys = system(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![1.0, 1.0, 0.0],
        ]);
        let g = build_exact_graph(&sys, DEFAULT_ORTHOGONALITY_TOL);
        assert_eq!(g.edges(), vec![(0, 2), (1, 2)]);
        assert_eq!(g.max_degree(), 2);
    }

    #[test]
    fn orthogonal_overlapping_rows() {
        let sys = system(&[vec![1.0, 1.0], vec![1.0, -1.0]]);
        assert_eq!(
            build_exact_graph(&sys, DEFAULT_ORTHOGONALITY_TOL).edge_count(),
            0
        );
        assert_eq!(build_support_graph(&sys).edges(), vec![(0, 1)]);
    }

    #[test]
    fn chain_support_is_a_path() {
        // row i touches columns i and i + 1
        let rows: Vec<Vec<f64>> = (0..4)
            .map(|i| {
                let mut r = vec![0.0; 5];
                r[i] = 1.0;
                r[i + 1] = 2.0;
                r
            })
            .collect();
        let g = build_support_graph(&system(&rows));
        assert_eq!(g.edges(), vec![(0, 1), (1, 2), (2, 3)]);
    }

    #[test]
    fn edge_list_export() {
        let g = OrthogonalityGraph::from_edges(3, &[(2, 0), (0, 2), (1, 1)], GraphMode::Exact);
        assert_eq!(g.to_edge_list(), "# 3 1\n0 2\n");
    }
}
