use super::graph::OrthogonalityGraph;
use crate::error::{Error, Result};
use crate::linalg::LinearSystem;

/// Rows whose equation may currently be violated.
///
/// A row is selectable if it has never been selected, or if one of its
/// neighbours in the orthogonality graph was selected after it. Rows that are
/// not selectable are known to be satisfied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectableSet {
    flags: Vec<bool>,
    count: usize,
}

impl SelectableSet {
    pub fn all(m: usize) -> Self {
        Self {
            flags: vec![true; m],
            count: m,
        }
    }

    pub fn from_flags(flags: Vec<bool>) -> Self {
        let count = flags.iter().filter(|&&f| f).count();
        Self { flags, count }
    }

    pub fn is_selectable(&self, i: usize) -> bool {
        self.flags[i]
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    /// Number of selectable rows `m_k`.
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn selectable_rows(&self) -> impl Iterator<Item = usize> + '_ {
        self.flags
            .iter()
            .enumerate()
            .filter(|(_, &f)| f)
            .map(|(i, _)| i)
    }

    fn set(&mut self, i: usize, value: bool) {
        if self.flags[i] != value {
            self.flags[i] = value;
            if value {
                self.count += 1;
            } else {
                self.count -= 1;
            }
        }
    }

    /// Records that row `i` was projected onto: it becomes unselectable and
    /// every neighbour becomes selectable. Returns the rows whose flag changed.
    pub fn mark_selected(&mut self, graph: &OrthogonalityGraph, i: usize) -> Result<Vec<usize>> {
        if i >= self.flags.len() {
            return Err(Error::IndexOutOfBounds {
                index: i,
                len: self.flags.len(),
            });
        }
        let mut changed = Vec::new();
        if self.flags[i] {
            changed.push(i);
        }
        self.set(i, false);
        for &j in graph.neighbors(i) {
            if !self.flags[j] {
                changed.push(j);
            }
            self.set(j, true);
        }
        Ok(changed)
    }
}

/// Initial selectable set. Starting from `x0 = 0`, rows with `b_i = 0` are
/// already satisfied and start unselectable.
pub fn init_selectable(sys: &LinearSystem, x0_is_zero: bool) -> SelectableSet {
    if x0_is_zero {
        SelectableSet::from_flags(sys.rhs().iter().map(|&b| b != 0.0).collect())
    } else {
        SelectableSet::all(sys.nrows())
    }
}
