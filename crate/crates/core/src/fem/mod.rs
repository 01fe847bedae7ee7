//! Plane-stress linear elasticity on the regular pixel grid: one bilinear
//! quadrilateral element per active (designable or fixed) pixel. Provides
//! the stiffness assembly, load construction, the banded direct solver, and
//! compliance/sensitivity evaluation used by the topology optimizer.

mod element;
mod mesh;
mod solver;

pub use element::element_stiffness;
pub use mesh::{LoadCase, Material, Mesh};
pub use solver::{
    active_densities, assemble_and_solve, compliance_and_sensitivity, dump_stiffness_triplets,
    sensitivity_active, solve_active, SolveStats,
};
