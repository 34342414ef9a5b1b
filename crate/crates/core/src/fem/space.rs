use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::scalar::Real;
use crate::sparse::Pattern;

/// Affine geometry of one cell.
#[derive(Debug, Clone, Copy)]
pub struct CellGeometry<T> {
    pub points: [[T; 2]; 3],
    pub area: T,
    /// Gradients of the barycentric coordinates.
    pub grad_lambda: [[T; 2]; 3],
}

impl<T: Real> CellGeometry<T> {
    pub fn new(points: [[T; 2]; 3]) -> Self {
        let [p0, p1, p2] = points;
        let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        let inv = T::one() / det;
        let grad_lambda = [
            [(p1[1] - p2[1]) * inv, (p2[0] - p1[0]) * inv],
            [(p2[1] - p0[1]) * inv, (p0[0] - p2[0]) * inv],
            [(p0[1] - p1[1]) * inv, (p1[0] - p0[0]) * inv],
        ];
        Self { points, area: det * T::of(0.5), grad_lambda }
    }

    pub fn point(&self, lambda: [T; 3]) -> [T; 2] {
        let [p0, p1, p2] = self.points;
        [
            lambda[0] * p0[0] + lambda[1] * p1[0] + lambda[2] * p2[0],
            lambda[0] * p0[1] + lambda[1] * p1[1] + lambda[2] * p2[1],
        ]
    }

    pub fn barycentric(&self, p: [T; 2]) -> [T; 3] {
        let p0 = self.points[0];
        let d = [p[0] - p0[0], p[1] - p0[1]];
        let l1 = self.grad_lambda[1][0] * d[0] + self.grad_lambda[1][1] * d[1];
        let l2 = self.grad_lambda[2][0] * d[0] + self.grad_lambda[2][1] * d[1];
        [T::one() - l1 - l2, l1, l2]
    }
}

/// Lagrange basis of order 1 or 2 in barycentric form. Order-2 local dofs
/// are the three vertices followed by the midpoints of the edges opposite
/// vertices 0, 1, 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Linear,
    Quadratic,
}

impl Order {
    pub fn from_degree(degree: usize) -> Result<Self> {
        match degree {
            1 => Ok(Self::Linear),
            2 => Ok(Self::Quadratic),
            d => Err(Error::InvalidArgument(format!("element order must be 1 or 2, got {d}"))),
        }
    }

    pub fn degree(self) -> usize {
        match self {
            Self::Linear => 1,
            Self::Quadratic => 2,
        }
    }

    pub fn local_dofs(self) -> usize {
        match self {
            Self::Linear => 3,
            Self::Quadratic => 6,
        }
    }

    pub fn values<T: Real>(self, l: [T; 3]) -> [T; 6] {
        let mut v = [T::zero(); 6];
        match self {
            Self::Linear => v[..3].copy_from_slice(&l),
            Self::Quadratic => {
                let (two, four) = (T::of(2.0), T::of(4.0));
                for i in 0..3 {
                    v[i] = l[i] * (two * l[i] - T::one());
                    v[3 + i] = four * l[(i + 1) % 3] * l[(i + 2) % 3];
                }
            }
        }
        v
    }

    pub fn gradients<T: Real>(self, l: [T; 3], gl: &[[T; 2]; 3]) -> [[T; 2]; 6] {
        let mut g = [[T::zero(); 2]; 6];
        match self {
            Self::Linear => g[..3].copy_from_slice(gl),
            Self::Quadratic => {
                let four = T::of(4.0);
                for i in 0..3 {
                    let s = four * l[i] - T::one();
                    g[i] = [s * gl[i][0], s * gl[i][1]];
                    let (j, k) = ((i + 1) % 3, (i + 2) % 3);
                    g[3 + i] = [four * (l[j] * gl[k][0] + l[k] * gl[j][0]), four * (l[j] * gl[k][1] + l[k] * gl[j][1])];
                }
            }
        }
        g
    }

    /// Laplacians of the basis functions, constant on a cell.
    pub fn laplacians<T: Real>(self, gl: &[[T; 2]; 3]) -> [T; 6] {
        let mut d = [T::zero(); 6];
        if self == Self::Quadratic {
            let dot = |a: [T; 2], b: [T; 2]| a[0] * b[0] + a[1] * b[1];
            let (four, eight) = (T::of(4.0), T::of(8.0));
            for i in 0..3 {
                d[i] = four * dot(gl[i], gl[i]);
                d[3 + i] = eight * dot(gl[(i + 1) % 3], gl[(i + 2) % 3]);
            }
        }
        d
    }
}

/// Continuous Lagrange space over a mesh with homogeneous Dirichlet dofs
/// flagged on the boundary.
#[derive(Debug, Clone)]
pub struct FeSpace<T: Real> {
    mesh: Arc<Mesh<T>>,
    order: Order,
    cell_dofs: Vec<[usize; 6]>,
    dof_points: Vec<[T; 2]>,
    dirichlet: Vec<bool>,
    pattern: Arc<Pattern>,
}

impl<T: Real> FeSpace<T> {
    pub fn new(mesh: Arc<Mesh<T>>, order: Order) -> Self {
        let nv = mesh.vertex_count();
        let topo = mesh.topology();
        let mut dof_points = mesh.vertices().to_vec();
        let mut dirichlet = mesh.boundary_vertex_mask();
        if order == Order::Quadratic {
            let half = T::of(0.5);
            for (e, &[a, b]) in topo.edges.iter().enumerate() {
                let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[b]);
                dof_points.push([(pa[0] + pb[0]) * half, (pa[1] + pb[1]) * half]);
                dirichlet.push(topo.is_boundary(e));
            }
        }
        let cell_dofs: Vec<[usize; 6]> = mesh
            .cells()
            .iter()
            .zip(&topo.cell_edges)
            .map(|(c, ce)| [c[0], c[1], c[2], nv + ce[0], nv + ce[1], nv + ce[2]])
            .collect();
        let k = order.local_dofs();
        let pattern = Arc::new(Pattern::from_cells(dof_points.len(), cell_dofs.iter().map(|d| &d[..k])));
        Self { mesh, order, cell_dofs, dof_points, dirichlet, pattern }
    }

    pub fn mesh(&self) -> &Arc<Mesh<T>> {
        &self.mesh
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn dof_count(&self) -> usize {
        self.dof_points.len()
    }

    /// Global dofs of `cell`, in local order.
    pub fn cell_dofs(&self, cell: usize) -> &[usize] {
        &self.cell_dofs[cell][..self.order.local_dofs()]
    }

    pub fn dof_points(&self) -> &[[T; 2]] {
        &self.dof_points
    }

    pub fn dirichlet_mask(&self) -> &[bool] {
        &self.dirichlet
    }

    pub fn dirichlet_dofs(&self) -> Vec<usize> {
        (0..self.dof_count()).filter(|&i| self.dirichlet[i]).collect()
    }

    pub fn free_dofs(&self) -> Vec<usize> {
        (0..self.dof_count()).filter(|&i| !self.dirichlet[i]).collect()
    }

    pub fn pattern(&self) -> &Arc<Pattern> {
        &self.pattern
    }

    pub fn geometry(&self, cell: usize) -> CellGeometry<T> {
        CellGeometry::new(self.mesh.cell_points(cell))
    }
}
