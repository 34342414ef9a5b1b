//! Fractional solve `A^eps w = psi` by pseudo-time integration.
//!
//! With `D = A - delta I`, the function `y(t)` solving
//!
//! ```text
//! (t D + delta I) y' + eps D y = 0,   y(0) = delta^-eps psi
//! ```
//!
//! satisfies `y(1) = A^-eps psi`. The evolution is discretized on a uniform
//! grid `t_n = n tau`, `N tau = 1`, by the weighted two-level scheme
//!
//! ```text
//! (t_s D + delta I)(y_{n+1} - y_n)/tau + eps D (s y_{n+1} + (1 - s) y_n) = 0
//! ```
//!
//! with `t_s = s t_{n+1} + (1 - s) t_n` and weight `s = sigma`. In the
//! Galerkin setting the identity becomes the mass matrix, so `D = K - delta M`.
//! For `sigma >= 1/2` the M-norm of the iterates never grows.

use std::fmt::Write as _;
use std::io::Write;

use crate::error::{Error, Result};
use crate::fem::{assemble_mass, assemble_stiffness, Coefficient, FeFunction, FeSpace};
use crate::linalg::{default_rel_tol, solve_spd_from, CgOptions};
use crate::scalar::Real;
use crate::sparse::SparseSym;

/// Parameters of the two-level scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeParams<T> {
    /// Fractional power, in `(0, 1)`.
    pub eps: T,
    /// Lower bound of the spectrum of `A`.
    pub delta: T,
    /// Scheme weight: 0.5 is Crank-Nicolson, 1 fully implicit.
    pub sigma: T,
    pub tau: T,
    pub steps: usize,
}

impl<T: Real> SchemeParams<T> {
    /// Parameters with `tau = 1 / steps`.
    pub fn new(eps: T, delta: T, sigma: T, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidArgument("number of time steps must be positive".into()));
        }
        let p = Self { eps, delta, sigma, tau: T::one() / T::of_usize(steps), steps };
        p.validate()?;
        Ok(p)
    }

    /// Parameters from a time step; `1 / tau` must be an integer.
    pub fn from_tau(eps: T, delta: T, sigma: T, tau: T) -> Result<Self> {
        if !(tau > T::zero()) || tau > T::one() {
            return Err(Error::InvalidArgument(format!("time step {tau} must lie in (0, 1]")));
        }
        let steps = (T::one() / tau).round().to_usize().unwrap_or(0).max(1);
        let p = Self { eps, delta, sigma, tau, steps };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > T::zero() && self.eps < T::one()) {
            return Err(Error::InvalidArgument(format!("eps = {} must lie in (0, 1)", self.eps)));
        }
        if !(self.delta > T::zero()) {
            return Err(Error::InvalidArgument(format!("delta = {} must be positive", self.delta)));
        }
        if !(self.sigma >= T::zero()) {
            return Err(Error::InvalidArgument(format!("sigma = {} must be non-negative", self.sigma)));
        }
        let end = T::of_usize(self.steps) * self.tau;
        if (end - T::one()).abs() > T::of(1e-12).max(T::of(4.0) * T::default_epsilon()) {
            return Err(Error::InvalidArgument(format!(
                "steps * tau = {} * {} = {end} differs from 1",
                self.steps, self.tau
            )));
        }
        Ok(())
    }

    /// Warning when the weight is below the unconditional stability bound.
    pub fn stability_warning(&self) -> Option<String> {
        (self.sigma < T::of(0.5))
            .then(|| format!("sigma = {} < 0.5: the scheme is not unconditionally stable", self.sigma))
    }

    /// `t_n`.
    pub fn time(&self, n: usize) -> T {
        T::of_usize(n) * self.tau
    }

    /// `sigma t_{n+1} + (1 - sigma) t_n`.
    pub fn weighted_time(&self, n: usize) -> T {
        self.sigma * self.time(n + 1) + (T::one() - self.sigma) * self.time(n)
    }
}

/// Stiffness and mass matrices of one space, unconstrained, plus the mask
/// of Dirichlet dofs.
#[derive(Debug, Clone)]
pub struct Operators<T: Real> {
    pub stiffness: SparseSym<T>,
    pub mass: SparseSym<T>,
    pub constrained: Vec<bool>,
}

impl<T: Real> Operators<T> {
    pub fn assemble(space: &FeSpace<T>, k: &Coefficient<T>) -> Result<Self> {
        Ok(Self {
            stiffness: assemble_stiffness(space, k)?,
            mass: assemble_mass(space),
            constrained: space.dirichlet_mask().to_vec(),
        })
    }

    pub fn m_norm(&self, y: &[T]) -> T {
        self.mass.inner(y, y).max(T::zero()).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord<T> {
    pub n: usize,
    pub t: T,
    pub norm: T,
    pub goal: Option<T>,
}

/// Per-step history of a pseudo-time solve.
#[derive(Debug, Clone)]
pub struct TimeTrace<T> {
    pub records: Vec<TraceRecord<T>>,
}

impl<T: Real> TimeTrace<T> {
    /// CSV with header `n,t,norm,goal`; the goal column is empty when absent.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut s = String::from("n,t,norm,goal\n");
        for r in &self.records {
            let goal = r.goal.map(|g| format!("{:.17e}", g.to_f64_lossy())).unwrap_or_default();
            writeln!(s, "{},{:.17e},{:.17e},{goal}", r.n, r.t.to_f64_lossy(), r.norm.to_f64_lossy()).ok();
        }
        out.write_all(s.as_bytes())?;
        Ok(())
    }

    pub fn norms(&self) -> Vec<T> {
        self.records.iter().map(|r| r.norm).collect()
    }
}

/// `y_0 = delta^-eps psi`.
pub fn initial_state<T: Real>(psi: &FeFunction<T>, params: &SchemeParams<T>) -> FeFunction<T> {
    psi.scaled(params.delta.powf(-params.eps))
}

/// Two-level stepper with the shifted operator `D = K - delta M` cached.
#[derive(Debug, Clone)]
pub struct Stepper<'a, T: Real> {
    ops: &'a Operators<T>,
    params: SchemeParams<T>,
    shifted: SparseSym<T>,
    cg: CgOptions,
}

impl<'a, T: Real> Stepper<'a, T> {
    pub fn new(ops: &'a Operators<T>, params: SchemeParams<T>) -> Result<Self> {
        params.validate()?;
        let shifted = ops.stiffness.combine(T::one(), &ops.mass, -params.delta);
        Ok(Self { ops, params, shifted, cg: CgOptions { rel_tol: default_rel_tol::<T>(), ..CgOptions::default() } })
    }

    pub fn params(&self) -> &SchemeParams<T> {
        &self.params
    }

    /// Advances `y_n` to `y_{n+1}` by solving
    /// `[t_s D + delta M + sigma tau eps D] y_{n+1} = [t_s D + delta M - (1 - sigma) tau eps D] y_n`.
    pub fn step(&self, y: &[T], n: usize) -> Result<Vec<T>> {
        let p = &self.params;
        if n >= p.steps {
            return Err(Error::InvalidArgument(format!("step index {n} out of range 0..{}", p.steps)));
        }
        let ts = p.weighted_time(n);
        let lhs = self.shifted.combine(ts + p.sigma * p.tau * p.eps, &self.ops.mass, p.delta);
        let rhs_op = self.shifted.combine(ts - (T::one() - p.sigma) * p.tau * p.eps, &self.ops.mass, p.delta);
        let mut rhs = rhs_op.mul_vec(y);
        for (b, &fixed) in rhs.iter_mut().zip(&self.ops.constrained) {
            if fixed {
                *b = T::zero();
            }
        }
        let lhs = lhs.eliminate(&self.ops.constrained);
        match solve_spd_from(&lhs, &rhs, y, &self.cg) {
            Ok((x, _)) => Ok(x),
            Err(Error::NotPositiveDefinite { iteration, .. }) => Err(Error::NotPositiveDefinite {
                iteration,
                hint: format!(" (delta = {} may exceed the smallest eigenvalue)", p.delta),
            }),
            Err(e) => Err(e),
        }
    }
}

/// One scheme step from `y_n`; see [`Stepper::step`].
pub fn step<T: Real>(
    y: &FeFunction<T>,
    n: usize,
    ops: &Operators<T>,
    params: &SchemeParams<T>,
) -> Result<FeFunction<T>> {
    let next = Stepper::new(ops, *params)?.step(y.coeffs(), n)?;
    FeFunction::new(y.space().clone(), next)
}

/// Integrates from `y_0 = delta^-eps psi` to `t = 1` and returns `y_N`
/// together with the M-norm trace.
pub fn solve_fractional<T: Real>(
    psi: &FeFunction<T>,
    ops: &Operators<T>,
    params: &SchemeParams<T>,
) -> Result<(FeFunction<T>, TimeTrace<T>)> {
    solve_fractional_observed(psi, ops, params, |_| None)
}

/// Like [`solve_fractional`], recording `goal(y_n)` in the trace.
pub fn solve_fractional_observed<T: Real>(
    psi: &FeFunction<T>,
    ops: &Operators<T>,
    params: &SchemeParams<T>,
    mut goal: impl FnMut(&FeFunction<T>) -> Option<T>,
) -> Result<(FeFunction<T>, TimeTrace<T>)> {
    let stepper = Stepper::new(ops, *params)?;
    let mut y = initial_state(psi, params);
    let mut trace = TimeTrace { records: Vec::with_capacity(params.steps + 1) };
    trace.records.push(TraceRecord { n: 0, t: T::zero(), norm: ops.m_norm(y.coeffs()), goal: goal(&y) });
    for n in 0..params.steps {
        y = y.with_coeffs(stepper.step(y.coeffs(), n)?);
        trace.records.push(TraceRecord {
            n: n + 1,
            t: params.time(n + 1),
            norm: ops.m_norm(y.coeffs()),
            goal: goal(&y),
        });
    }
    Ok((y, trace))
}
