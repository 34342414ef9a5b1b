//! Diffusion-reaction problems `-alpha div(k grad u) + beta u = data`
//! with homogeneous Dirichlet conditions.
//!
//! The singularly perturbed surrogate `eps A u + u = psi`, i.e.
//! `-eps div(k grad u) + u = f`, is the first-order expansion of the
//! fractional problem in `eps`. The same operator form also describes one
//! step of the pseudo-time scheme, so both share this type.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::{
    apply_dirichlet, assemble_mass, assemble_stiffness, boundary_flux, l2_project_constrained, Coefficient, FeFunction,
    FeSpace, Order,
};
use crate::linalg::{default_rel_tol, solve_spd};
use crate::mesh::Mesh;
use crate::pseudotime::SchemeParams;
use crate::quadrature::TriangleRule;
use crate::scalar::Real;

/// Find `u` in `V_0` with `alpha a(u, v) + beta (u, v) = l(v)` for all `v`,
/// where `l(v) = data_mass (f, v) + data_stiffness a(f, v)`.
#[derive(Debug, Clone)]
pub struct ReactionDiffusion<T: Real> {
    pub diffusion: T,
    pub reaction: T,
    pub k: Coefficient<T>,
    pub data: Coefficient<T>,
    pub data_mass: T,
    pub data_stiffness: T,
    /// Factor in front of the boundary flux goal `-scale int k grad u . n`.
    pub goal_scale: T,
    pub order: Order,
    /// Replace `f` in the discrete load by its L2 projection onto the
    /// discrete space vanishing on the boundary.
    pub project_data: bool,
}

impl<T: Real> ReactionDiffusion<T> {
    /// `-eps div(k grad u) + u = f` with goal `-eps int k grad u . n`.
    pub fn surrogate(eps: T, k: Coefficient<T>, f: Coefficient<T>, order: Order) -> Result<Self> {
        if !(eps > T::zero()) {
            return Err(Error::InvalidArgument(format!("eps = {eps} must be positive")));
        }
        Ok(Self {
            diffusion: eps,
            reaction: T::one(),
            k,
            data: f,
            data_mass: T::one(),
            data_stiffness: T::zero(),
            goal_scale: eps,
            order,
            project_data: false,
        })
    }

    /// The first step `n = 0 -> 1` of the pseudo-time scheme for
    /// `A^eps w = f`, started from `y0 = delta^-eps P_h f`, as a problem in
    /// its own right. Its goal is the unscaled boundary flux.
    pub fn first_pseudo_time_step(
        params: &SchemeParams<T>,
        k: Coefficient<T>,
        f: Coefficient<T>,
        order: Order,
    ) -> Result<Self> {
        params.validate()?;
        let SchemeParams { eps, delta, sigma, tau, .. } = *params;
        let c1 = sigma * tau * (T::one() + eps);
        let c0 = sigma * tau - (T::one() - sigma) * tau * eps;
        let y0 = delta.powf(-eps);
        Ok(Self {
            diffusion: c1,
            reaction: delta * (T::one() - c1),
            k,
            data: f,
            data_mass: y0 * delta * (T::one() - c0),
            data_stiffness: y0 * c0,
            goal_scale: T::one(),
            order,
            project_data: true,
        })
    }

    /// Integrand of `l(v)` at a point: the value multiplying `v` and the
    /// vector multiplying `grad v`.
    pub fn load_density(&self, p: [T; 2]) -> (T, [T; 2]) {
        let s = self.data_mass * self.data.eval(p);
        if self.data_stiffness == T::zero() {
            return (s, [T::zero(); 2]);
        }
        let g = self.data.gradient(p);
        let c = self.data_stiffness * self.k.eval(p);
        (s, [c * g[0], c * g[1]])
    }

    /// Divergence of the flux part of the load, by central differences.
    pub fn load_divergence(&self, p: [T; 2]) -> T {
        if self.data_stiffness == T::zero() {
            return T::zero();
        }
        let h = T::default_epsilon().powf(T::of(0.25));
        let q = |x: T, y: T| self.load_density([x, y]).1;
        let dx = q(p[0] + h, p[1])[0] - q(p[0] - h, p[1])[0];
        let dy = q(p[0], p[1] + h)[1] - q(p[0], p[1] - h)[1];
        (dx + dy) / (h + h)
    }

    /// Load vector of `l` itself, always integrating the given data.
    pub fn load_vector(&self, space: &FeSpace<T>) -> Vec<T> {
        let rule = TriangleRule::data();
        let order = space.order();
        let mut b = vec![T::zero(); space.dof_count()];
        for c in 0..space.mesh().cell_count() {
            let geo = space.geometry(c);
            let dofs = space.cell_dofs(c);
            for (l, &w) in rule.points.iter().zip(&rule.weights) {
                let (s, q) = self.load_density(geo.point(*l));
                let phi = order.values(*l);
                let g = order.gradients(*l, &geo.grad_lambda);
                let wa = w * geo.area;
                for (i, &d) in dofs.iter().enumerate() {
                    b[d] += wa * (s * phi[i] + q[0] * g[i][0] + q[1] * g[i][1]);
                }
            }
        }
        b
    }

    pub fn space(&self, mesh: Arc<Mesh<T>>) -> Arc<FeSpace<T>> {
        Arc::new(FeSpace::new(mesh, self.order))
    }

    /// Projected data on `space` when `project_data` is set.
    pub fn discrete_data(&self, space: &Arc<FeSpace<T>>) -> Result<Option<FeFunction<T>>> {
        if self.project_data {
            l2_project_constrained(space, &self.data).map(Some)
        } else {
            Ok(None)
        }
    }

    /// Galerkin solution on `space`.
    pub fn solve(&self, space: &Arc<FeSpace<T>>) -> Result<FeFunction<T>> {
        let k = assemble_stiffness(space, &self.k)?;
        let m = assemble_mass(space);
        let a = k.combine(self.diffusion, &m, self.reaction);
        let b = match self.discrete_data(space)? {
            Some(psi) => k.combine(self.data_stiffness, &m, self.data_mass).mul_vec(psi.coeffs()),
            None => self.load_vector(space),
        };
        let (a0, b0) = apply_dirichlet(&a, &b, space);
        let (x, _) = solve_spd(&a0, &b0, default_rel_tol::<T>())?;
        FeFunction::new(space.clone(), x)
    }

    /// Goal functional evaluated by facet quadrature.
    pub fn goal(&self, u: &FeFunction<T>) -> T {
        boundary_flux(u, &self.k, self.goal_scale)
    }
}

/// Solves `-eps div(k grad u) + u = f` on `space`.
pub fn solve_reaction_diffusion<T: Real>(
    eps: T,
    k: &Coefficient<T>,
    f: &Coefficient<T>,
    space: &Arc<FeSpace<T>>,
) -> Result<FeFunction<T>> {
    ReactionDiffusion::surrogate(eps, k.clone(), f.clone(), space.order())?.solve(space)
}
