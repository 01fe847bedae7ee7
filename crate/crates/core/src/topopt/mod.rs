//! Similarity-regularized SIMP topology optimization: compliance plus a
//! weighted L1 distance to a reference design, under an equality volume
//! constraint, solved with optimality-criteria updates and sensitivity
//! filtering. Also owns the 11x11 (c1, c2) parameter grid and the
//! 121-design-per-reference precomputation.

mod filter;
mod grid;
mod optimize;

pub use filter::{filter_sensitivities, SensitivityFilter};
pub use grid::ParameterGrid;
pub use optimize::{
    objective, oc_update, total_sensitivity, CellResult, GridResults, IterTrace, OptimizeResult,
    Optimizer, TopOptConfig,
};
