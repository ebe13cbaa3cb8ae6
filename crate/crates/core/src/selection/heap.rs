//! Addressable binary max-heap over residual scores.
//!
//! Starting from `x0 = 0` the residuals are just `-b`, so the heap can be
//! built in `O(m)`. After a projection only residuals of rows that share a
//! column with the selected row (or are its neighbours in the orthogonality
//! graph) change; each such change is a keyed `O(log m)` update.

use crate::linalg::{ConstraintKind, LinearSystem};
use crate::orthogonality::OrthogonalityGraph;

/// One coordinate of `x` changed by a projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordinateDelta {
    pub index: usize,
    pub old: f64,
    pub new: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreMode {
    /// `|r_i|`
    Residual,
    /// `|r_i| / ||a_i||`
    Distance,
}

#[derive(Debug, Clone)]
pub struct ResidualHeap {
    mode: ScoreMode,
    residuals: Vec<f64>,
    clip: Vec<bool>,
    inv_norms: Vec<f64>,
    scores: Vec<f64>,
    heap: Vec<usize>,
    pos: Vec<usize>,
}

impl ResidualHeap {
    /// Heap over equality residuals `r` with entry norms `norms`. A zero norm
    /// gives a zero distance score.
    pub fn build(r: &[f64], norms: &[f64], mode: ScoreMode) -> Self {
        assert_eq!(
            r.len(),
            norms.len(),
            "residuals and norms must have equal length"
        );
        Self::build_clipped(r, norms, vec![false; r.len()], mode)
    }

    /// Heap for a system: `<=` rows score by the positive part of their
    /// residual.
    pub fn for_system(sys: &LinearSystem, r: &[f64], mode: ScoreMode) -> Self {
        let clip = sys
            .kinds()
            .iter()
            .map(|&k| k == ConstraintKind::LessEqual)
            .collect();
        Self::build_clipped(r, sys.norms().norms(), clip, mode)
    }

    fn build_clipped(r: &[f64], norms: &[f64], clip: Vec<bool>, mode: ScoreMode) -> Self {
        let m = r.len();
        let inv_norms = norms
            .iter()
            .map(|&n| if n > 0.0 { 1.0 / n } else { 0.0 })
            .collect();
        let mut h = Self {
            mode,
            residuals: r.to_vec(),
            clip,
            inv_norms,
            scores: vec![0.0; m],
            heap: (0..m).collect(),
            pos: (0..m).collect(),
        };
        for i in 0..m {
            h.scores[i] = h.score_of(i);
        }
        for slot in (0..m / 2).rev() {
            h.sift_down(slot);
        }
        h
    }

    fn score_of(&self, i: usize) -> f64 {
        let r = self.residuals[i];
        let v = if self.clip[i] { r.max(0.0) } else { r.abs() };
        match self.mode {
            ScoreMode::Residual => v,
            ScoreMode::Distance => v * self.inv_norms[i],
        }
    }

    /// Heap order: larger score first, lower index on ties.
    fn above(&self, a: usize, b: usize) -> bool {
        let (sa, sb) = (self.scores[a], self.scores[b]);
        sa > sb || (sa == sb && a < b)
    }

    fn swap_slots(&mut self, s: usize, t: usize) {
        self.heap.swap(s, t);
        self.pos[self.heap[s]] = s;
        self.pos[self.heap[t]] = t;
    }

    fn sift_up(&mut self, mut slot: usize) {
        while slot > 0 {
            let parent = (slot - 1) / 2;
            if self.above(self.heap[slot], self.heap[parent]) {
                self.swap_slots(slot, parent);
                slot = parent;
            } else {
                break;
            }
        }
    }

    fn sift_down(&mut self, mut slot: usize) {
        let n = self.heap.len();
        loop {
            let (l, r) = (2 * slot + 1, 2 * slot + 2);
            let mut top = slot;
            if l < n && self.above(self.heap[l], self.heap[top]) {
                top = l;
            }
            if r < n && self.above(self.heap[r], self.heap[top]) {
                top = r;
            }
            if top == slot {
                break;
            }
            self.swap_slots(slot, top);
            slot = top;
        }
    }

    fn resift(&mut self, i: usize) {
        let new_score = self.score_of(i);
        let old_score = self.scores[i];
        self.scores[i] = new_score;
        let slot = self.pos[i];
        if new_score > old_score {
            self.sift_up(slot);
        } else if new_score < old_score {
            self.sift_down(slot);
        }
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn mode(&self) -> ScoreMode {
        self.mode
    }

    /// Row with the largest score (lowest index among ties) and its score.
    pub fn peek(&self) -> Option<(usize, f64)> {
        self.heap.first().map(|&i| (i, self.scores[i]))
    }

    pub fn residual(&self, i: usize) -> f64 {
        self.residuals[i]
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn score(&self, i: usize) -> f64 {
        self.scores[i]
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    /// Overwrites one stored residual.
    pub fn set_residual(&mut self, i: usize, r: f64) {
        self.residuals[i] = r;
        self.resift(i);
    }

    pub fn add_to_residual(&mut self, i: usize, delta: f64) {
        self.residuals[i] += delta;
        self.resift(i);
    }

    /// Incremental update after a step that changed the given coordinates:
    /// for each changed `x_j` and each row `i` with `a_ij != 0`,
    /// `r_i += a_ij (x_j_new - x_j_old)`.
    pub fn update_sparse(&mut self, sys: &LinearSystem, deltas: &[CoordinateDelta]) {
        let a = sys.matrix();
        let mut touched = Vec::new();
        for d in deltas {
            let change = d.new - d.old;
            if change == 0.0 {
                continue;
            }
            for (i, v) in a.col(d.index).iter() {
                self.residuals[i] += v * change;
                touched.push(i);
            }
        }
        touched.sort_unstable();
        touched.dedup();
        for i in touched {
            self.resift(i);
        }
    }

    /// Update after projecting onto `selected`: its residual is set to zero
    /// and each neighbour's residual is recomputed from `x`.
    pub fn update_graph(
        &mut self,
        sys: &LinearSystem,
        graph: &OrthogonalityGraph,
        selected: usize,
        x: &[f64],
    ) {
        let r_sel = sys.row_residual(selected, x);
        let new_sel = if self.clip[selected] && r_sel <= 0.0 {
            r_sel
        } else {
            0.0
        };
        self.set_residual(selected, new_sel);
        for &j in graph.neighbors(selected) {
            let r = sys.row_residual(j, x);
            self.set_residual(j, r);
        }
    }

    /// Recomputes every residual from `x` and rebuilds the heap.
    pub fn refresh(&mut self, sys: &LinearSystem, x: &[f64]) {
        let r = sys.residual_vector(x).expect("x has n entries");
        self.residuals = r;
        for i in 0..self.residuals.len() {
            self.scores[i] = self.score_of(i);
        }
        for slot in (0..self.heap.len() / 2).rev() {
            self.sift_down(slot);
        }
    }

    /// Heap property and position map consistency.
    pub fn is_valid(&self) -> bool {
        let n = self.heap.len();
        (0..n).all(|s| self.pos[self.heap[s]] == s)
            && (1..n).all(|s| !self.above(self.heap[s], self.heap[(s - 1) / 2]))
            && (0..n).all(|i| self.scores[i] == self.score_of(i))
    }
}
