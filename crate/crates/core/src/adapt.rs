//! Goal-oriented mesh adaptation for the boundary flux functional.
//!
//! The error `J(u) - J_h(u_h)` is estimated by the dual weighted residual
//! with an adjoint computed in an enriched space: quadratic elements on the
//! same mesh for a linear primal, quadratic elements on the red refinement
//! for a quadratic primal. The goal is localised through the identity
//!
//! `J(u) = scale/alpha * (l(g) - B(u, g) - int q.n)` for any `g` with unit
//! trace, where `q` is the flux part of the load. Taking `g = 1` turns the
//! goal into the volume functional `-scale beta/alpha (1, u)` whose adjoint
//! is `z`. Taking `g = g_h`, the discrete function equal to one at the
//! boundary dofs, gives a computable value `J_h(u_h)` whose difference to
//! the facet quadrature is added cell by cell.

use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::{
    apply_dirichlet, assemble_mass, assemble_stiffness, boundary_flux_facets, Coefficient, FeFunction, FeSpace, Order,
};
use crate::linalg::{default_rel_tol, solve_spd};
use crate::mesh::Mesh;
use crate::pseudotime::SchemeParams;
use crate::quadrature::{LineRule, TriangleRule};
use crate::rd::ReactionDiffusion;
use crate::scalar::Real;

pub const DEFAULT_MARKING_FRACTION: f64 = 0.3;
pub const DEFAULT_MAX_STEPS: usize = 40;
pub const DEFAULT_BISECTIONS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptConfig<T> {
    /// Stop once the estimated goal error is at most this.
    pub eta: T,
    pub max_steps: usize,
    /// Dörfler bulk parameter.
    pub marking_fraction: T,
    /// Newest-vertex bisections applied to each marked cell.
    pub bisections: usize,
}

impl<T: Real> AdaptConfig<T> {
    pub fn new(eta: T) -> Self {
        Self {
            eta,
            max_steps: DEFAULT_MAX_STEPS,
            marking_fraction: T::of(DEFAULT_MARKING_FRACTION),
            bisections: DEFAULT_BISECTIONS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= T::zero()) {
            return Err(Error::InvalidArgument(format!("eta = {} must be non-negative", self.eta)));
        }
        if !(self.marking_fraction > T::zero() && self.marking_fraction <= T::one()) {
            return Err(Error::InvalidArgument(format!(
                "marking fraction {} must lie in (0, 1]",
                self.marking_fraction
            )));
        }
        Ok(())
    }
}

/// Estimated goal error and its cell indicators.
#[derive(Debug, Clone)]
pub struct GoalEstimate<T> {
    /// Goal by facet quadrature.
    pub goal: T,
    /// Signed estimate of `J(u) - goal`.
    pub estimate: T,
    /// Weighted residual part.
    pub residual: T,
    /// Part due to replacing the data by its projection.
    pub data: T,
    /// Difference between the consistent and the facet goal.
    pub correction: T,
    pub indicators: Vec<T>,
}

impl<T: Real> GoalEstimate<T> {
    /// Goal with the estimated error added.
    pub fn corrected_goal(&self) -> T {
        self.goal + self.estimate
    }
}

/// Enriched space for the adjoint and the primal cell containing each of
/// its cells.
fn enriched_space<T: Real>(primal: &FeSpace<T>) -> (Arc<FeSpace<T>>, Vec<usize>) {
    let mesh = primal.mesh();
    match primal.order() {
        Order::Linear => {
            let parent = (0..mesh.cell_count()).collect();
            (Arc::new(FeSpace::new(mesh.clone(), Order::Quadratic)), parent)
        }
        Order::Quadratic => {
            let (fine, parent) = mesh.red_refine();
            (Arc::new(FeSpace::new(Arc::new(fine), Order::Quadratic)), parent)
        }
    }
}

fn solve_adjoint<T: Real>(problem: &ReactionDiffusion<T>, space: &Arc<FeSpace<T>>) -> Result<FeFunction<T>> {
    let k = assemble_stiffness(space, &problem.k)?;
    let m = assemble_mass(space);
    let a = k.combine(problem.diffusion, &m, problem.reaction);
    let c = -problem.goal_scale * problem.reaction / problem.diffusion;
    let b: Vec<T> = m.mul_vec(&vec![T::one(); space.dof_count()]).into_iter().map(|v| c * v).collect();
    let (a0, b0) = apply_dirichlet(&a, &b, space);
    let (x, _) = solve_spd(&a0, &b0, default_rel_tol::<T>())?;
    FeFunction::new(space.clone(), x)
}

fn dot2<T: Real>(a: [T; 2], b: [T; 2]) -> T {
    a[0] * b[0] + a[1] * b[1]
}

/// Adjoint function on the enriched space, evaluated through primal cells.
struct Adjoint<T: Real> {
    z: FeFunction<T>,
    /// Enriched cells inside each primal cell.
    children: usize,
}

impl<T: Real> Adjoint<T> {
    /// Value at `x`, a point of primal cell `c`.
    fn value(&self, c: usize, x: [T; 2]) -> T {
        let space = self.z.space();
        let mut best = (c * self.children, [T::zero(); 3], -T::one());
        for ca in c * self.children..(c + 1) * self.children {
            let geo = space.geometry(ca);
            let l = geo.barycentric(x);
            let m = l[0].min(l[1]).min(l[2]);
            if m > best.2 {
                best = (ca, l, m);
            }
        }
        self.z.value_grad(best.0, best.1, &space.geometry(best.0)).0
    }
}

/// Dual weighted residual estimate for the Galerkin solution `u` of
/// `problem`.
///
/// The residual is written cell by cell in strong form, with the flux jump
/// across each interior edge shared equally by its two cells. Tested with
/// `z - I_h z` it gives the weighted residual, tested with
/// `scale/alpha g_h` the gap between the consistent and the facet goal.
/// Both vanish locally as the mesh resolves `u`, so the indicators do not
/// carry the cancelling boundary terms of the weak form.
pub fn estimate_goal_error<T: Real>(problem: &ReactionDiffusion<T>, u: &FeFunction<T>) -> Result<GoalEstimate<T>> {
    let space = u.space().clone();
    let mesh = space.mesh().clone();
    let (alpha, beta) = (problem.diffusion, problem.reaction);
    let ratio = problem.goal_scale / alpha;
    let rule = TriangleRule::<T>::data();
    let nc = mesh.cell_count();
    let n = space.dof_count();

    let (adjoint_space, parent) = enriched_space(&space);
    let z = solve_adjoint(problem, &adjoint_space)?;
    // the first primal dof count adjoint dofs sit at the primal dof points
    let iz = FeFunction::new(space.clone(), z.coeffs()[..n].to_vec())?;
    let mask = space.dirichlet_mask();
    let g_h = FeFunction::new(space.clone(), mask.iter().map(|&b| if b { T::one() } else { T::zero() }).collect())?;
    let psi = problem.discrete_data(&space)?;
    let adjoint = Adjoint { children: parent.len() / nc, z };

    let mut residual = vec![T::zero(); nc];
    let mut correction = vec![T::zero(); nc];
    let lap: Vec<T> = (0..nc).map(|c| u.laplacian_in_cell(c, &space.geometry(c))).collect();
    for (ca, &c) in parent.iter().enumerate() {
        let ga = adjoint_space.geometry(ca);
        let gp = space.geometry(c);
        let (mut racc, mut cacc) = (T::zero(), T::zero());
        for (l, &w) in rule.points.iter().zip(&rule.weights) {
            let x = ga.point(*l);
            let lp = gp.barycentric(x);
            let (uv, ug) = u.value_grad(c, lp, &gp);
            let (s, _) = problem.load_density(x);
            let kx = problem.k.eval(x);
            let div_flux = kx * lap[c] + dot2(problem.k.gradient(x), ug);
            let r = s - problem.load_divergence(x) - beta * uv + alpha * div_flux;
            let zv = adjoint.z.value_grad(ca, *l, &ga).0;
            let (iv, _) = iz.value_grad(c, lp, &gp);
            let (gv, _) = g_h.value_grad(c, lp, &gp);
            racc += w * r * (zv - iv);
            cacc += w * r * gv;
        }
        residual[c] += racc * ga.area;
        correction[c] += ratio * cacc * ga.area;
    }

    let topo = mesh.topology();
    let line = LineRule::<T>::gauss(3);
    let half = T::of(0.5);
    for (e, cells) in topo.edge_cells.iter().enumerate() {
        if topo.is_boundary(e) {
            continue;
        }
        let (t, o) = (cells[0], cells[1]);
        let local = topo.cell_edges[t].iter().position(|&x| x == e).expect("edge belongs to its cell");
        let (a, b) = mesh.facet_points(t, local);
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let (gt, go) = (space.geometry(t), space.geometry(o));
        let (mut racc, mut cacc) = (T::zero(), T::zero());
        for part in 0..2 {
            for (&s, &w) in line.points.iter().zip(&line.weights) {
                let r = (T::of_usize(part) + s) * half;
                let x = [a[0] + r * dx, a[1] + r * dy];
                let ut = u.value_grad(t, gt.barycentric(x), &gt).1;
                let uo = u.value_grad(o, go.barycentric(x), &go).1;
                // jump of k du/dn, normal outward from t and scaled by the length
                let jump = problem.k.eval(x) * ((ut[0] - uo[0]) * dy - (ut[1] - uo[1]) * dx);
                let lt = gt.barycentric(x);
                let wz = adjoint.value(t, x) - iz.value_grad(t, lt, &gt).0;
                let wg = g_h.value_grad(t, lt, &gt).0;
                racc += w * half * jump * wz;
                cacc += w * half * jump * wg;
            }
        }
        let (rj, cj) = (-alpha * half * racc, -alpha * half * ratio * cacc);
        for c in [t, o] {
            residual[c] += rj;
            correction[c] += cj;
        }
    }

    // data approximation, weighted by I_h z + scale/alpha (1 - g_h)
    let mut data = vec![T::zero(); nc];
    if let Some(psi) = &psi {
        for (c, dc) in data.iter_mut().enumerate() {
            let geo = space.geometry(c);
            let mut acc = T::zero();
            for (l, &w) in rule.points.iter().zip(&rule.weights) {
                let x = geo.point(*l);
                let (s, q) = problem.load_density(x);
                let (pv, pg) = psi.value_grad(c, *l, &geo);
                let sk = problem.data_stiffness * problem.k.eval(x);
                let (sh, qh) = (problem.data_mass * pv, [sk * pg[0], sk * pg[1]]);
                let (gv, gg) = g_h.value_grad(c, *l, &geo);
                let (iv, ig) = iz.value_grad(c, *l, &geo);
                let vv = iv + ratio * (T::one() - gv);
                let vg = [ig[0] - ratio * gg[0], ig[1] - ratio * gg[1]];
                acc += w * ((s - sh) * vv + dot2([q[0] - qh[0], q[1] - qh[1]], vg));
            }
            *dc = acc * geo.area;
        }
    }

    let goal = boundary_flux_facets(u, &problem.k, problem.goal_scale).into_iter().fold(T::zero(), |a, b| a + b);
    let sum = |v: &[T]| v.iter().fold(T::zero(), |a, &b| a + b);
    let (r, d, cr) = (sum(&residual), sum(&data), sum(&correction));
    let indicators = (0..nc).map(|c| (residual[c] + correction[c]).abs() + data[c].abs()).collect();
    Ok(GoalEstimate { goal, estimate: r + d + cr, residual: r, data: d, correction: cr, indicators })
}

/// Smallest set of cells, taken by decreasing indicator, whose indicators
/// sum to at least `fraction` of the total.
pub fn dorfler_mark<T: Real>(indicators: &[T], fraction: T) -> Vec<usize> {
    let total = indicators.iter().fold(T::zero(), |a, &b| a + b);
    if !(total > T::zero()) {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..indicators.len()).collect();
    order.sort_by(|&a, &b| indicators[b].partial_cmp(&indicators[a]).unwrap_or(std::cmp::Ordering::Equal));
    let target = fraction * total;
    let mut acc = T::zero();
    let mut marked = Vec::new();
    for c in order {
        if acc >= target {
            break;
        }
        acc += indicators[c];
        marked.push(c);
    }
    marked
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptRecord<T> {
    pub step: usize,
    pub goal: T,
    pub dofs: usize,
    pub vertices: usize,
    pub cells: usize,
    pub estimate: T,
}

#[derive(Debug, Clone)]
pub struct AdaptReport<T: Real> {
    pub records: Vec<AdaptRecord<T>>,
    pub converged: bool,
    /// Mesh of every step, the last being the final mesh.
    pub meshes: Vec<Arc<Mesh<T>>>,
}

impl<T: Real> AdaptReport<T> {
    pub fn final_mesh(&self) -> &Arc<Mesh<T>> {
        self.meshes.last().expect("a report holds at least one mesh")
    }

    pub fn last(&self) -> &AdaptRecord<T> {
        self.records.last().expect("a report holds at least one record")
    }

    /// One row per step: `s,G,M_h,cells,estimate,converged`, with `M_h` the
    /// number of degrees of freedom.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "s,G,M_h,cells,estimate,converged")?;
        let last = self.records.len().saturating_sub(1);
        for (i, r) in self.records.iter().enumerate() {
            let done = i == last && self.converged;
            writeln!(out, "{},{:e},{},{},{:e},{}", r.step, r.goal, r.dofs, r.cells, r.estimate, done)?;
        }
        Ok(())
    }
}

/// Solve, estimate, mark and refine until the estimate drops to `eta` or
/// the step budget runs out. Running out is reported, not an error.
pub fn adapt_loop<T: Real>(
    problem: &ReactionDiffusion<T>,
    config: &AdaptConfig<T>,
    initial: Arc<Mesh<T>>,
) -> Result<(FeFunction<T>, AdaptReport<T>)> {
    adapt_loop_observed(problem, config, initial, |_, _| {})
}

/// As `adapt_loop`, calling `observe` after each step.
pub fn adapt_loop_observed<T: Real>(
    problem: &ReactionDiffusion<T>,
    config: &AdaptConfig<T>,
    initial: Arc<Mesh<T>>,
    mut observe: impl FnMut(&AdaptRecord<T>, &GoalEstimate<T>),
) -> Result<(FeFunction<T>, AdaptReport<T>)> {
    config.validate()?;
    problem.k.check_positive(&initial)?;
    let mut mesh = initial;
    let mut report = AdaptReport { records: Vec::new(), converged: false, meshes: Vec::new() };
    for step in 0.. {
        let space = problem.space(mesh.clone());
        let u = problem.solve(&space)?;
        let est = estimate_goal_error(problem, &u)?;
        let record = AdaptRecord {
            step,
            goal: est.goal,
            dofs: space.dof_count(),
            vertices: mesh.vertex_count(),
            cells: mesh.cell_count(),
            estimate: est.estimate,
        };
        observe(&record, &est);
        report.records.push(record);
        report.meshes.push(mesh.clone());
        if est.estimate.abs() <= config.eta {
            report.converged = true;
            return Ok((u, report));
        }
        if step >= config.max_steps {
            return Ok((u, report));
        }
        let marked = dorfler_mark(&est.indicators, config.marking_fraction);
        mesh = Arc::new(mesh.refine_repeated(&marked, config.bisections.max(1))?);
    }
    unreachable!()
}

/// Adapts the mesh on the first step of the pseudo-time scheme for
/// `A^eps w = f`, with the unscaled boundary flux of `y^1` as goal.
/// Returns `y^1` on the final mesh and the report; the final mesh is meant
/// for the full time integration.
pub fn starting_adaptation<T: Real>(
    params: &SchemeParams<T>,
    k: Coefficient<T>,
    f: Coefficient<T>,
    order: Order,
    config: &AdaptConfig<T>,
    initial: Arc<Mesh<T>>,
) -> Result<(FeFunction<T>, AdaptReport<T>)> {
    let problem = ReactionDiffusion::first_pseudo_time_step(params, k, f, order)?;
    adapt_loop(&problem, config, initial)
}
