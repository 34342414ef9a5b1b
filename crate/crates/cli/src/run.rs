//! Experiment pipelines and their artifacts.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use fracell::adapt::{adapt_loop_observed, AdaptConfig, AdaptRecord, AdaptReport, GoalEstimate};
use fracell::fem::{boundary_flux, l2_project_constrained, Coefficient, FeFunction, FeSpace};
use fracell::mesh::Mesh;
use fracell::oracle::discrete_fractional_solve;
use fracell::pseudotime::{solve_fractional_observed, Operators, TimeTrace};
use fracell::rd::ReactionDiffusion;
use fracell::Error;

use crate::config::{ExperimentConfig, Pipeline};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Numerical(#[from] Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.to_path_buf(), source }
}

/// Outcome of a run, also written to `summary.txt`.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub adapt: AdaptRecord<f64>,
    pub converged: bool,
    pub adapt_steps: usize,
    /// Goal of the fractional solution at `t = 1`.
    pub final_goal: Option<f64>,
    /// Relative M-norm distance to the eigen-decomposition solve.
    pub oracle_error: Option<f64>,
    pub oracle_note: Option<String>,
}

fn create(path: &Path) -> Result<BufWriter<File>, RunError> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> fracell::Result<()>) -> Result<(), RunError> {
    let mut out = create(path)?;
    f(&mut out)?;
    out.flush().map_err(io_err(path))
}

/// Runs the configured pipeline, writing artifacts into `out` and calling
/// `progress` after every adaptation step.
pub fn run(
    cfg: &ExperimentConfig,
    out: &Path,
    mut progress: impl FnMut(&AdaptRecord<f64>, &GoalEstimate<f64>),
) -> Result<RunSummary, RunError> {
    fs::create_dir_all(out.join("meshes")).map_err(io_err(out))?;
    let k = Coefficient::constant(cfg.k);
    let f = cfg.rhs_coefficient();
    let initial = Arc::new(Mesh::unit_square_with(cfg.n, cfg.diagonal));
    let adapt = AdaptConfig {
        eta: cfg.eta,
        max_steps: cfg.max_steps,
        marking_fraction: cfg.marking_fraction,
        bisections: cfg.bisections,
    };

    let problem = match cfg.pipeline {
        Pipeline::Surrogate => ReactionDiffusion::surrogate(cfg.eps, k.clone(), f.clone(), cfg.order)?,
        Pipeline::Fractional => {
            ReactionDiffusion::first_pseudo_time_step(&cfg.scheme_params()?, k.clone(), f.clone(), cfg.order)?
        }
    };
    let (u, report) = adapt_loop_observed(&problem, &adapt, initial, &mut progress)?;
    write_report(&report, out)?;

    let mut summary = RunSummary {
        adapt: *report.last(),
        converged: report.converged,
        adapt_steps: report.records.len() - 1,
        final_goal: None,
        oracle_error: None,
        oracle_note: None,
    };
    let solution = match cfg.pipeline {
        Pipeline::Surrogate => u,
        Pipeline::Fractional => {
            let params = cfg.scheme_params()?;
            let space = Arc::new(FeSpace::new(report.final_mesh().clone(), cfg.order));
            let ops = Operators::assemble(&space, &k)?;
            let psi = l2_project_constrained(&space, &f)?;
            let (w, trace) = solve_fractional_observed(&psi, &ops, &params, |y| Some(boundary_flux(y, &k, 1.0)))?;
            write_trace(&trace, out)?;
            summary.final_goal = trace.records.last().and_then(|r| r.goal);
            if cfg.oracle {
                match discrete_fractional_solve(&ops, cfg.eps, &psi) {
                    Ok(reference) => {
                        let diff: Vec<f64> = w.coeffs().iter().zip(reference.coeffs()).map(|(a, b)| a - b).collect();
                        summary.oracle_error = Some(ops.m_norm(&diff) / ops.m_norm(reference.coeffs()));
                    }
                    Err(e @ Error::OracleCap { .. }) => summary.oracle_note = Some(format!("oracle skipped: {e}")),
                    Err(e) => return Err(e.into()),
                }
            }
            w
        }
    };
    write_solution(&solution, out)?;
    write_summary(cfg, &summary, out)?;
    Ok(summary)
}

fn write_report(report: &AdaptReport<f64>, out: &Path) -> Result<(), RunError> {
    write_with(&out.join("adapt_report.csv"), |w| report.write_csv(w))?;
    for (s, mesh) in report.meshes.iter().enumerate() {
        write_with(&out.join("meshes").join(format!("mesh_{s:03}.txt")), |w| mesh.write_text(w))?;
    }
    Ok(())
}

fn write_trace(trace: &TimeTrace<f64>, out: &Path) -> Result<(), RunError> {
    write_with(&out.join("trace.csv"), |w| trace.write_csv(w))
}

fn write_solution(u: &FeFunction<f64>, out: &Path) -> Result<(), RunError> {
    write_with(&out.join("solution.csv"), |w| u.write_csv(w))?;
    write_with(&out.join("solution.vtk"), |w| u.write_vtk(w))
}

fn write_summary(cfg: &ExperimentConfig, s: &RunSummary, out: &Path) -> Result<(), RunError> {
    let path = out.join("summary.txt");
    let mut w = create(&path)?;
    let mut text = cfg.to_string();
    text.push_str(&format!(
        "adapt_steps = {}\nconverged = {}\ngoal = {:e}\nestimate = {:e}\nM_h = {}\nvertices = {}\ncells = {}\n",
        s.adapt_steps, s.converged, s.adapt.goal, s.adapt.estimate, s.adapt.dofs, s.adapt.vertices, s.adapt.cells
    ));
    if let Some(g) = s.final_goal {
        text.push_str(&format!("final_goal = {g:e}\n"));
    }
    if let Some(e) = s.oracle_error {
        text.push_str(&format!("oracle_error = {e:e}\n"));
    }
    if let Some(note) = &s.oracle_note {
        text.push_str(&format!("# {note}\n"));
    }
    w.write_all(text.as_bytes()).and_then(|_| w.flush()).map_err(io_err(&path))
}
