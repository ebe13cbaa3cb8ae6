//! Star subgraphs and the weighted selection problem behind the multi-step
//! maximum-residual bound.
//!
//! Once a row is selected by the maximum-residual rule its residual is zero
//! until a neighbour is selected, so the sequence of selected rows obeys the
//! constraint of [`problem1_bruteforce`]. The best long-run per-step product
//! of node weights under that constraint is attained by cycling through the
//! star subgraph with the largest geometric mean of weights.

use serde::Serialize;

use super::graph::OrthogonalityGraph;
use crate::error::{Error, Result};

/// Largest graph accepted by [`problem1_bruteforce`].
pub const PROBLEM1_MAX_NODES: usize = 12;
/// Longest sequence accepted by [`problem1_bruteforce`].
pub const PROBLEM1_MAX_STEPS: usize = 64;

/// The star subgraph with the largest weight geometric mean.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StarBoundResult {
    pub best_center: usize,
    /// Leaves of the best star, sorted.
    pub best_leaf_set: Vec<usize>,
    /// `(prod_{j in star} w_j)^(1 / |star|)`
    pub geometric_mean: f64,
    pub weights: Vec<f64>,
}

impl StarBoundResult {
    /// Center and leaves, sorted.
    pub fn nodes(&self) -> Vec<usize> {
        let mut n = self.best_leaf_set.clone();
        n.push(self.best_center);
        n.sort_unstable();
        n
    }

    /// Length of one pass through the star: every leaf once, then the center.
    pub fn cycle_length(&self) -> usize {
        self.best_leaf_set.len() + 1
    }
}

/// Geometric mean of `weights[j]` over `nodes`, accumulated in sorted node
/// order so equal sets always give bitwise-equal results.
pub fn geometric_mean(weights: &[f64], nodes: &[usize]) -> f64 {
    let mut sorted = nodes.to_vec();
    sorted.sort_unstable();
    let log_sum: f64 = sorted.iter().map(|&j| weights[j].ln()).sum();
    (log_sum / sorted.len() as f64).exp()
}

fn check_weights(graph: &OrthogonalityGraph, weights: &[f64]) -> Result<()> {
    if weights.len() != graph.len() {
        return Err(Error::DimensionMismatch {
            what: "node weights",
            expected: graph.len(),
            got: weights.len(),
        });
    }
    if let Some(w) = weights.iter().find(|&&w| !(w > 0.0 && w <= 1.0)) {
        return Err(Error::InvalidParameter(format!(
            "node weight {w} outside (0, 1]"
        )));
    }
    Ok(())
}

/// Best star subgraph (center plus a nonempty subset of its neighbours) by
/// weight geometric mean.
///
/// For a fixed center the optimal leaves are a prefix of the neighbours
/// sorted by decreasing weight: a leaf raises the mean of logs exactly when
/// its log exceeds the current mean, and once one does not, none of the
/// smaller ones can.
pub fn star_bound(graph: &OrthogonalityGraph, weights: &[f64]) -> Result<StarBoundResult> {
    check_weights(graph, weights)?;
    if graph.edge_count() == 0 {
        return Err(Error::EdgelessGraph);
    }
    let mut best: Option<(f64, usize, Vec<usize>)> = None;
    for center in 0..graph.len() {
        let mut nbrs = graph.neighbors(center).to_vec();
        if nbrs.is_empty() {
            continue;
        }
        nbrs.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
        let mut leaves = vec![nbrs[0]];
        let mut log_sum = weights[center].ln() + weights[nbrs[0]].ln();
        for &j in &nbrs[1..] {
            let mean = log_sum / (leaves.len() + 1) as f64;
            if weights[j].ln() > mean {
                leaves.push(j);
                log_sum += weights[j].ln();
            } else {
                break;
            }
        }
        leaves.sort_unstable();
        let mut nodes = leaves.clone();
        nodes.push(center);
        let gm = geometric_mean(weights, &nodes);
        if best.as_ref().is_none_or(|(g, _, _)| gm > *g) {
            best = Some((gm, center, leaves));
        }
    }
    let (geometric_mean, best_center, best_leaf_set) = best.expect("graph has an edge");
    Ok(StarBoundResult {
        best_center,
        best_leaf_set,
        geometric_mean,
        weights: weights.to_vec(),
    })
}

/// Maximum of `prod_t weights[i_t]` over length-`k` sequences in which a
/// node, once chosen, cannot be chosen again until one of its neighbours has
/// been chosen. All nodes start choosable.
///
/// Dynamic program over the set of choosable nodes.
pub fn problem1_bruteforce(graph: &OrthogonalityGraph, weights: &[f64], k: usize) -> Result<f64> {
    check_weights(graph, weights)?;
    if graph.edge_count() == 0 {
        return Err(Error::EdgelessGraph);
    }
    let m = graph.len();
    if m > PROBLEM1_MAX_NODES {
        return Err(Error::SizeGuard {
            what: "problem 1 nodes",
            size: m,
            limit: PROBLEM1_MAX_NODES,
        });
    }
    if k > PROBLEM1_MAX_STEPS {
        return Err(Error::SizeGuard {
            what: "problem 1 steps",
            size: k,
            limit: PROBLEM1_MAX_STEPS,
        });
    }
    let nbr_mask: Vec<usize> = (0..m)
        .map(|i| {
            graph
                .neighbors(i)
                .iter()
                .fold(0usize, |acc, &j| acc | (1 << j))
        })
        .collect();
    const UNREACHED: f64 = -1.0;
    let full = (1usize << m) - 1;
    let mut dp = vec![UNREACHED; 1 << m];
    dp[full] = 1.0;
    for _ in 0..k {
        let mut next = vec![UNREACHED; 1 << m];
        for (mask, &value) in dp.iter().enumerate() {
            if value == UNREACHED {
                continue;
            }
            for i in 0..m {
                if mask & (1 << i) != 0 {
                    let to = (mask & !(1 << i)) | nbr_mask[i];
                    let v = value * weights[i];
                    if v > next[to] {
                        next[to] = v;
                    }
                }
            }
        }
        dp = next;
    }
    Ok(dp.into_iter().fold(0.0, f64::max))
}
