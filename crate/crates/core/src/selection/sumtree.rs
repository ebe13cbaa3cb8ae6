//! Sum tree for sampling from a changing discrete distribution.
//!
//! Leaves hold unnormalized nonnegative weights and every internal node holds
//! the sum of its two children, so the root is the normalizing constant.
//! Sampling walks from the root in `O(log m)`; changing one weight rewrites
//! one node per level.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SumTree {
    len: usize,
    capacity: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    pub fn new(len: usize) -> Self {
        let capacity = len.max(1).next_power_of_two();
        Self {
            len,
            capacity,
            nodes: vec![0.0; 2 * capacity],
        }
    }

    pub fn from_weights(weights: &[f64]) -> Self {
        let mut t = Self::new(weights.len());
        for (i, &w) in weights.iter().enumerate() {
            assert!(
                w >= 0.0 && w.is_finite(),
                "sum tree weights must be finite and nonnegative"
            );
            t.nodes[t.capacity + i] = w;
        }
        for p in (1..t.capacity).rev() {
            t.nodes[p] = t.nodes[2 * p] + t.nodes[2 * p + 1];
        }
        t
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.nodes[self.capacity + i]
    }

    pub fn update(&mut self, i: usize, w: f64) -> Result<()> {
        if i >= self.len {
            return Err(Error::IndexOutOfBounds {
                index: i,
                len: self.len,
            });
        }
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::InvalidParameter(format!("sum tree weight {w}")));
        }
        let mut p = self.capacity + i;
        self.nodes[p] = w;
        p /= 2;
        while p >= 1 {
            self.nodes[p] = self.nodes[2 * p] + self.nodes[2 * p + 1];
            p /= 2;
        }
        Ok(())
    }

    /// Index `i` whose cumulative interval `[c_{i-1}, c_i)` contains
    /// `u * total`, for `u` in `[0, 1)`.
    pub fn sample(&self, u: f64) -> Result<usize> {
        if self.total() <= 0.0 {
            return Err(Error::ZeroTotalWeight);
        }
        let mut target = u * self.total();
        let mut p = 1;
        while p < self.capacity {
            let (l, r) = (2 * p, 2 * p + 1);
            // never descend into an empty subtree, even under rounding
            let go_left = if self.nodes[r] == 0.0 {
                true
            } else if self.nodes[l] == 0.0 {
                false
            } else {
                target < self.nodes[l]
            };
            if go_left {
                p = l;
            } else {
                target -= self.nodes[l];
                p = r;
            }
        }
        Ok(p - self.capacity)
    }

    /// Every internal node equals the sum of its children.
    pub fn is_consistent(&self) -> bool {
        (1..self.capacity).all(|p| {
            let s = self.nodes[2 * p] + self.nodes[2 * p + 1];
            (self.nodes[p] - s).abs() <= 1e-12 * s.abs().max(f64::MIN_POSITIVE)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_by_cumulative_interval() {
        let t = SumTree::from_weights(&[1.0, 3.0]);
        assert_eq!(t.sample(0.2).unwrap(), 0);
        assert_eq!(t.sample(0.5).unwrap(), 1);
        assert_eq!(t.sample(0.25).unwrap(), 1);
    }

    #[test]
    fn zero_weights_are_never_sampled() {
        let t = SumTree::from_weights(&[0.0, 5.0]);
        for k in 0..100 {
            assert_eq!(t.sample(k as f64 / 100.0).unwrap(), 1);
        }
    }

    #[test]
    fn zero_total_is_an_error() {
        let t = SumTree::from_weights(&[0.0, 0.0, 0.0]);
        assert_eq!(t.sample(0.3).unwrap_err(), Error::ZeroTotalWeight);
    }

    #[test]
    fn update_moves_the_root() {
        let mut t = SumTree::from_weights(&[1.0, 2.0, 4.0]);
        assert_eq!(t.total(), 7.0);
        t.update(1, 0.0).unwrap();
        assert_eq!(t.total(), 5.0);
        t.update(2, 0.5).unwrap();
        assert_eq!(t.weight(2), 0.5);
        assert!(t.is_consistent());
    }

    #[test]
    fn incremental_updates_match_rebuild() {
        let w: Vec<f64> = (0..13).map(|i| (i * 7 % 5) as f64 + 0.25).collect();
        let mut t = SumTree::new(w.len());
        for (i, &v) in w.iter().enumerate() {
            t.update(i, v).unwrap();
        }
        assert_eq!(t, SumTree::from_weights(&w));
    }

    #[test]
    fn update_out_of_range() {
        let mut t = SumTree::new(2);
        assert!(t.update(2, 1.0).is_err());
        assert!(t.update(0, -1.0).is_err());
    }
}
