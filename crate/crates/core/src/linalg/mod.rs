//! Sparse storage, linear systems, and Hoffman-type constants.

mod hoffman;
mod sparse;
mod system;

pub use hoffman::{
    rank_tolerance, restricted_sigma_two, sigma_infinity_oracle, sigma_two,
    smallest_nonzero_singular_value, SigmaInfMethod, DENSE_SIZE_GUARD, SIGMA_INF_MAX_COLS,
    VERTEX_CANDIDATE_GUARD,
};
pub use sparse::{SparseMatrix, SparseVecView};
pub use system::{
    augment_least_squares, dist_sq, inf_norm, norm_sq, residual_vector, ConstraintKind,
    LinearSystem, RowNormCache, CONSISTENCY_TOL,
};
