//! Kaczmarz row-action solvers for consistent linear systems of equalities
//! and inequalities.
//!
//! The crate provides the classic cyclic and randomized selection rules, the
//! greedy maximum-residual and maximum-distance rules (tracked exactly with an
//! addressable max-heap), adaptive sampling restricted to rows that can still
//! be violated, and tools that compute the convergence-rate constants of each
//! rule and check recorded traces against them.
//!
//! ```
//! use kaczmarz::linalg::{LinearSystem, SparseMatrix};
//! use kaczmarz::selection::RuleConfig;
//! use kaczmarz::solver::{solve, StoppingCriteria};
//!
//! let a = SparseMatrix::from_dense_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
//! let sys = LinearSystem::new(a, vec![3.0, 4.0]).unwrap();
//! let stop = StoppingCriteria::max_iters(200).with_tolerance(1e-12);
//! let (x, _trace) = solve(&sys, &RuleConfig::max_distance(), None, &stop, None).unwrap();
//! assert!((x[0] - 1.0).abs() < 1e-10 && (x[1] - 1.0).abs() < 1e-10);
//! ```

pub mod error;
pub mod io;
pub mod linalg;
pub mod orthogonality;
pub mod problems;
pub mod rates;
pub mod selection;
pub mod solver;

pub use error::{Error, Result};
