//! Orthogonality graph of the rows, the selectable-row set used by the
//! adaptive rules, and the star-subgraph quantity of the multi-step bound.

mod graph;
mod selectable;
mod star;

pub use graph::{
    build_exact_graph, build_support_graph, GraphMode, OrthogonalityGraph,
    DEFAULT_ORTHOGONALITY_TOL,
};
pub use selectable::{init_selectable, SelectableSet};
pub use star::{
    geometric_mean, problem1_bruteforce, star_bound, StarBoundResult, PROBLEM1_MAX_NODES,
    PROBLEM1_MAX_STEPS,
};
