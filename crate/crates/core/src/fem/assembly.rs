use crate::error::Result;
use crate::fem::space::FeSpace;
use crate::fem::{Coefficient, FeFunction};
use crate::linalg::{default_rel_tol, solve_spd};
use crate::quadrature::{LineRule, TriangleRule};
use crate::scalar::Real;
use crate::sparse::SparseSym;

use std::sync::Arc;

/// Stiffness matrix of `a(u, v) = int k grad u . grad v`, before any
/// boundary elimination.
pub fn assemble_stiffness<T: Real>(space: &FeSpace<T>, k: &Coefficient<T>) -> Result<SparseSym<T>> {
    k.check_positive(space.mesh())?;
    let rule = TriangleRule::degree4();
    let order = space.order();
    let n = order.local_dofs();
    let mut a = SparseSym::zeros(space.pattern().clone());
    for c in 0..space.mesh().cell_count() {
        let geo = space.geometry(c);
        let dofs = space.cell_dofs(c);
        let mut local = [[T::zero(); 6]; 6];
        for (l, &w) in rule.points.iter().zip(&rule.weights) {
            let g = order.gradients(*l, &geo.grad_lambda);
            let wk = w * geo.area * k.eval(geo.point(*l));
            for i in 0..n {
                for j in 0..n {
                    local[i][j] += wk * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                a.add(dofs[i], dofs[j], local[i][j]);
            }
        }
    }
    Ok(a)
}

/// Gram matrix of the basis in the L2 inner product.
pub fn assemble_mass<T: Real>(space: &FeSpace<T>) -> SparseSym<T> {
    let rule = TriangleRule::<T>::degree4();
    let order = space.order();
    let n = order.local_dofs();
    let mut m = SparseSym::zeros(space.pattern().clone());
    for c in 0..space.mesh().cell_count() {
        let geo = space.geometry(c);
        let dofs = space.cell_dofs(c);
        for (l, &w) in rule.points.iter().zip(&rule.weights) {
            let phi = order.values(*l);
            let wa = w * geo.area;
            for i in 0..n {
                for j in 0..n {
                    m.add(dofs[i], dofs[j], wa * phi[i] * phi[j]);
                }
            }
        }
    }
    m
}

/// Load vector `b_i = int f chi_i` with the given cell rule.
pub fn assemble_load_with<T: Real>(space: &FeSpace<T>, f: &Coefficient<T>, rule: &TriangleRule<T>) -> Vec<T> {
    let order = space.order();
    let mut b = vec![T::zero(); space.dof_count()];
    for c in 0..space.mesh().cell_count() {
        let geo = space.geometry(c);
        let dofs = space.cell_dofs(c);
        for (l, &w) in rule.points.iter().zip(&rule.weights) {
            let phi = order.values(*l);
            let wf = w * geo.area * f.eval(geo.point(*l));
            for (&d, p) in dofs.iter().zip(phi) {
                b[d] += wf * p;
            }
        }
    }
    b
}

pub fn assemble_load<T: Real>(space: &FeSpace<T>, f: &Coefficient<T>) -> Vec<T> {
    assemble_load_with(space, f, &TriangleRule::data())
}

/// Symmetric elimination of the Dirichlet dofs of `space`.
pub fn apply_dirichlet<T: Real>(matrix: &SparseSym<T>, rhs: &[T], space: &FeSpace<T>) -> (SparseSym<T>, Vec<T>) {
    let mask = space.dirichlet_mask();
    let eliminated = matrix.eliminate(mask);
    let rhs = rhs.iter().zip(mask).map(|(&b, &fixed)| if fixed { T::zero() } else { b }).collect();
    (eliminated, rhs)
}

/// L2 projection onto the whole space (boundary dofs free).
pub fn l2_project<T: Real>(space: &Arc<FeSpace<T>>, f: &Coefficient<T>) -> Result<FeFunction<T>> {
    let m = assemble_mass(space);
    let b = assemble_load(space, f);
    let (x, _) = solve_spd(&m, &b, default_rel_tol::<T>())?;
    FeFunction::new(space.clone(), x)
}

/// L2 projection onto the subspace vanishing on the boundary.
pub fn l2_project_constrained<T: Real>(space: &Arc<FeSpace<T>>, f: &Coefficient<T>) -> Result<FeFunction<T>> {
    let m = assemble_mass(space);
    let b = assemble_load(space, f);
    let (m0, b0) = apply_dirichlet(&m, &b, space);
    let (x, _) = solve_spd(&m0, &b0, default_rel_tol::<T>())?;
    FeFunction::new(space.clone(), x)
}

/// Per-facet contributions `-scale * int_F k grad u . n ds` over the
/// boundary facets, in the order of `Mesh::boundary_facets`.
pub fn boundary_flux_facets<T: Real>(u: &FeFunction<T>, k: &Coefficient<T>, scale: T) -> Vec<T> {
    let space = u.space();
    let mesh = space.mesh();
    let line = LineRule::<T>::gauss(3);
    mesh.boundary_facets()
        .iter()
        .map(|f| {
            let geo = space.geometry(f.cell);
            let (a, b) = mesh.facet_points(f.cell, f.local_edge);
            let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
            // counter-clockwise traversal: outward normal times length is (dy, -dx)
            let mut acc = T::zero();
            for (&s, &w) in line.points.iter().zip(&line.weights) {
                let p = [a[0] + s * dx, a[1] + s * dy];
                let g = u.grad_in_cell(f.cell, geo.barycentric(p));
                acc += w * k.eval(p) * (g[0] * dy - g[1] * dx);
            }
            -scale * acc
        })
        .collect()
}

/// Goal functional `-scale * int_{boundary} k grad u . n ds` by facet
/// quadrature of the discrete gradient.
pub fn boundary_flux<T: Real>(u: &FeFunction<T>, k: &Coefficient<T>, scale: T) -> T {
    boundary_flux_facets(u, k, scale).into_iter().fold(T::zero(), |a, b| a + b)
}
