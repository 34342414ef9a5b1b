//! Lagrange finite elements of order 1 and 2 on triangles.

mod assembly;
mod coefficient;
mod function;
mod space;

pub use assembly::{
    apply_dirichlet, assemble_load, assemble_load_with, assemble_mass, assemble_stiffness, boundary_flux,
    boundary_flux_facets, l2_project, l2_project_constrained,
};
pub use coefficient::{first_eigenfunction, layer_rhs, surrogate_rhs, Coefficient, Profile, Term};
pub use function::FeFunction;
pub use space::{CellGeometry, FeSpace, Order};
