use std::fmt::Write as _;
use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::space::{CellGeometry, FeSpace};
use crate::fem::Coefficient;
use crate::quadrature::TriangleRule;
use crate::scalar::Real;
use crate::sparse::SparseSym;

/// Finite-element function: a coefficient vector over the dofs of a space.
#[derive(Debug, Clone)]
pub struct FeFunction<T: Real> {
    space: Arc<FeSpace<T>>,
    coeffs: Vec<T>,
}

impl<T: Real> FeFunction<T> {
    pub fn new(space: Arc<FeSpace<T>>, coeffs: Vec<T>) -> Result<Self> {
        if coeffs.len() != space.dof_count() {
            return Err(Error::DimensionMismatch { expected: space.dof_count(), actual: coeffs.len() });
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coefficient".into()));
        }
        Ok(Self { space, coeffs })
    }

    pub fn zeros(space: Arc<FeSpace<T>>) -> Self {
        let n = space.dof_count();
        Self { space, coeffs: vec![T::zero(); n] }
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(space: Arc<FeSpace<T>>, f: &Coefficient<T>) -> Self {
        let coeffs = space.dof_points().iter().map(|&p| f.eval(p)).collect();
        Self { space, coeffs }
    }

    pub fn space(&self) -> &Arc<FeSpace<T>> {
        &self.space
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    pub fn with_coeffs(&self, coeffs: Vec<T>) -> Self {
        debug_assert_eq!(coeffs.len(), self.coeffs.len());
        Self { space: self.space.clone(), coeffs }
    }

    pub fn scaled(&self, a: T) -> Self {
        self.with_coeffs(self.coeffs.iter().map(|&c| a * c).collect())
    }

    pub fn eval_in_cell(&self, cell: usize, lambda: [T; 3]) -> T {
        let phi = self.space.order().values(lambda);
        self.space.cell_dofs(cell).iter().zip(phi).fold(T::zero(), |acc, (&d, v)| acc + self.coeffs[d] * v)
    }

    pub fn grad_in_cell(&self, cell: usize, lambda: [T; 3]) -> [T; 2] {
        self.value_grad(cell, lambda, &self.space.geometry(cell)).1
    }

    /// Value and gradient at barycentric `lambda` of `cell`, whose geometry
    /// the caller already has.
    pub fn value_grad(&self, cell: usize, lambda: [T; 3], geo: &CellGeometry<T>) -> (T, [T; 2]) {
        let order = self.space.order();
        let phi = order.values(lambda);
        let g = order.gradients(lambda, &geo.grad_lambda);
        let mut v = T::zero();
        let mut out = [T::zero(); 2];
        for (i, &d) in self.space.cell_dofs(cell).iter().enumerate() {
            v += self.coeffs[d] * phi[i];
            out[0] += self.coeffs[d] * g[i][0];
            out[1] += self.coeffs[d] * g[i][1];
        }
        (v, out)
    }

    /// Laplacian inside `cell`, constant for the spaces provided.
    pub fn laplacian_in_cell(&self, cell: usize, geo: &CellGeometry<T>) -> T {
        let d = self.space.order().laplacians(&geo.grad_lambda);
        self.space.cell_dofs(cell).iter().zip(d).fold(T::zero(), |a, (&i, di)| a + self.coeffs[i] * di)
    }

    /// Cell containing `p` and its barycentric coordinates, by linear search.
    pub fn locate(&self, p: [T; 2]) -> Option<(usize, [T; 3])> {
        let tol = T::of(-1e-12);
        (0..self.space.mesh().cell_count()).find_map(|c| {
            let l = self.space.geometry(c).barycentric(p);
            (l.iter().all(|&x| x >= tol)).then_some((c, l))
        })
    }

    pub fn eval_at(&self, p: [T; 2]) -> Option<T> {
        self.locate(p).map(|(c, l)| self.eval_in_cell(c, l))
    }

    /// Discrete L2 norm `sqrt(M u . u)`.
    pub fn m_norm(&self, mass: &SparseSym<T>) -> T {
        mass.inner(&self.coeffs, &self.coeffs).max(T::zero()).sqrt()
    }

    /// `|u - exact|_{L2}` by per-cell quadrature.
    pub fn l2_error(&self, exact: &Coefficient<T>, rule: &TriangleRule<T>) -> T {
        let mesh = self.space.mesh();
        let mut acc = T::zero();
        for c in 0..mesh.cell_count() {
            let geo = self.space.geometry(c);
            for (l, &w) in rule.points.iter().zip(&rule.weights) {
                let e = self.eval_in_cell(c, *l) - exact.eval(geo.point(*l));
                acc += w * geo.area * e * e;
            }
        }
        acc.sqrt()
    }

    /// CSV with header `dof,x,y,value`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut s = String::from("dof,x,y,value\n");
        for (i, (p, v)) in self.space.dof_points().iter().zip(&self.coeffs).enumerate() {
            writeln!(s, "{i},{:.17e},{:.17e},{:.17e}", p[0].to_f64_lossy(), p[1].to_f64_lossy(), v.to_f64_lossy()).ok();
        }
        out.write_all(s.as_bytes())?;
        Ok(())
    }

    /// Legacy VTK unstructured grid with vertex values.
    pub fn write_vtk<W: Write>(&self, mut out: W) -> Result<()> {
        let mesh = self.space.mesh();
        let mut s = String::from("# vtk DataFile Version 3.0\nfracell solution\nASCII\nDATASET UNSTRUCTURED_GRID\n");
        writeln!(s, "POINTS {} double", mesh.vertex_count()).ok();
        for p in mesh.vertices() {
            writeln!(s, "{} {} 0", p[0].to_f64_lossy(), p[1].to_f64_lossy()).ok();
        }
        writeln!(s, "CELLS {} {}", mesh.cell_count(), 4 * mesh.cell_count()).ok();
        for c in mesh.cells() {
            writeln!(s, "3 {} {} {}", c[0], c[1], c[2]).ok();
        }
        writeln!(s, "CELL_TYPES {}", mesh.cell_count()).ok();
        for _ in 0..mesh.cell_count() {
            s.push_str("5\n");
        }
        writeln!(s, "POINT_DATA {}\nSCALARS u double 1\nLOOKUP_TABLE default", mesh.vertex_count()).ok();
        // vertex dofs come first in both orders
        for v in &self.coeffs[..mesh.vertex_count()] {
            writeln!(s, "{}", v.to_f64_lossy()).ok();
        }
        out.write_all(s.as_bytes())?;
        Ok(())
    }
}
