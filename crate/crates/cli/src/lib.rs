//! Configuration-driven experiment runner for the `fracell` solver.

pub mod config;
pub mod run;

use fracell::mesh::Mesh;

pub use config::{ConfigError, ExperimentConfig, Pipeline, Preset, Rhs};
pub use run::{run, RunError, RunSummary};

/// Process exit status for malformed configuration or input files.
pub const EXIT_PARSE: i32 = 2;
/// Process exit status for failed numerical steps.
pub const EXIT_NUMERICAL: i32 = 3;
/// Process exit status for I/O failures.
pub const EXIT_IO: i32 = 1;

/// Human readable description of a mesh.
pub fn mesh_info(mesh: &Mesh<f64>) -> String {
    let areas: Vec<f64> = (0..mesh.cell_count()).map(|c| mesh.area(c)).collect();
    let diam: Vec<f64> = (0..mesh.cell_count()).map(|c| mesh.diameter(c)).collect();
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    let gen = mesh.generation();
    let status = match mesh.check_invariants() {
        Ok(()) => "ok".to_string(),
        Err(e) => format!("violated: {e}"),
    };
    format!(
        "vertices = {}\ncells = {}\nedges = {}\nboundary_facets = {}\narea = {}\ncell_area = {:e} .. {:e}\ndiameter = {:e} .. {:e}\ngeneration = {} .. {}\ninvariants = {}\n",
        mesh.vertex_count(),
        mesh.cell_count(),
        mesh.edge_count(),
        mesh.boundary_facets().len(),
        mesh.total_area(),
        min(&areas),
        max(&areas),
        min(&diam),
        max(&diam),
        gen.iter().min().copied().unwrap_or(0),
        gen.iter().max().copied().unwrap_or(0),
        status,
    )
}
