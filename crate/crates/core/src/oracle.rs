//! Reference solutions: the discrete fractional power through a dense
//! eigendecomposition, and sine-series solutions on the unit square.

use crate::error::{Error, Result};
use crate::fem::{Coefficient, FeFunction};
use crate::linalg::{dense_generalized_eig_capped, oracle_cap, EigenPairs};
use crate::pseudotime::Operators;
use crate::scalar::Real;

/// Eigendecomposition of the discrete operator on the free dofs.
#[derive(Debug, Clone)]
pub struct DiscreteSpectrum<T: Real> {
    pub pairs: EigenPairs<T>,
}

impl<T: Real> DiscreteSpectrum<T> {
    pub fn new(ops: &Operators<T>) -> Result<Self> {
        Self::with_cap(ops, oracle_cap())
    }

    pub fn with_cap(ops: &Operators<T>, cap: usize) -> Result<Self> {
        let free: Vec<usize> = (0..ops.constrained.len()).filter(|&i| !ops.constrained[i]).collect();
        Ok(Self { pairs: dense_generalized_eig_capped(&ops.stiffness, &ops.mass, &free, cap)? })
    }

    /// Smallest discrete eigenvalue.
    pub fn lambda_min(&self) -> T {
        self.pairs.values[0]
    }

    /// `sum_k (psi, phi_k) lambda_k^p phi_k`.
    pub fn power(&self, ops: &Operators<T>, psi: &[T], p: T) -> Vec<T> {
        let c = self.pairs.coefficients(&ops.mass, psi);
        let scaled: Vec<T> = c.iter().zip(&self.pairs.values).map(|(&ck, &lk)| ck * lk.powf(p)).collect();
        self.pairs.synthesize(&scaled)
    }

    /// Eigen-coefficients of the exact pseudo-time solution,
    /// `a_k(t) = (psi, phi_k) (delta + (lambda_k - delta) t)^-eps`.
    pub fn pseudo_time_coefficients(&self, ops: &Operators<T>, psi: &[T], delta: T, eps: T, t: T) -> Vec<T> {
        let c = self.pairs.coefficients(&ops.mass, psi);
        c.iter().zip(&self.pairs.values).map(|(&ck, &lk)| ck * (delta + (lk - delta) * t).powf(-eps)).collect()
    }
}

/// `w = A^-eps psi` computed exactly from the discrete spectrum.
pub fn discrete_fractional_solve<T: Real>(ops: &Operators<T>, eps: T, psi: &FeFunction<T>) -> Result<FeFunction<T>> {
    if !(eps > T::zero() && eps < T::one()) {
        return Err(Error::InvalidArgument(format!("eps = {eps} must lie in (0, 1)")));
    }
    let spectrum = DiscreteSpectrum::new(ops)?;
    Ok(psi.with_coeffs(spectrum.power(ops, psi.coeffs(), -eps)))
}

/// Double sine expansion of a separable right-hand side on the unit square
/// in the orthonormal eigenbasis `2 sin(m pi x) sin(n pi y)`.
#[derive(Debug, Clone)]
pub struct SineSeries<T> {
    pub max_mode: usize,
    /// `coeffs[(m - 1) * max_mode + (n - 1)] = (f, phi_mn)`.
    pub coeffs: Vec<T>,
}

impl<T: Real> SineSeries<T> {
    pub fn new(f: &Coefficient<T>, max_mode: usize) -> Result<Self> {
        if max_mode < 1 {
            return Err(Error::InvalidArgument("max_mode must be at least 1".into()));
        }
        let (px, py) = f.separable_factors().ok_or(Error::UnsupportedRhs)?;
        let a: Vec<T> = (1..=max_mode as u32).map(|m| px.sine_coefficient(m)).collect();
        let b: Vec<T> = (1..=max_mode as u32).map(|n| py.sine_coefficient(n)).collect();
        let mut coeffs = Vec::with_capacity(max_mode * max_mode);
        for &am in &a {
            for &bn in &b {
                coeffs.push(am * bn);
            }
        }
        Ok(Self { max_mode, coeffs })
    }

    pub fn eigenvalue(m: usize, n: usize) -> T {
        T::pi() * T::pi() * T::of_usize(m * m + n * n)
    }

    /// Evaluates `sum f_mn lambda_mn^-eps phi_mn` at each point.
    pub fn evaluate(&self, eps: T, points: &[[T; 2]]) -> Vec<T> {
        let mm = self.max_mode;
        let weighted: Vec<T> =
            (0..mm * mm).map(|i| self.coeffs[i] * Self::eigenvalue(i / mm + 1, i % mm + 1).powf(-eps)).collect();
        points
            .iter()
            .map(|p| {
                let sx: Vec<T> = (1..=mm).map(|m| (T::of_usize(m) * T::pi() * p[0]).sin()).collect();
                let sy: Vec<T> = (1..=mm).map(|n| (T::of_usize(n) * T::pi() * p[1]).sin()).collect();
                let mut acc = T::zero();
                for (m, &x) in sx.iter().enumerate() {
                    let row = &weighted[m * mm..(m + 1) * mm];
                    acc += x * row.iter().zip(&sy).fold(T::zero(), |a, (&w, &y)| a + w * y);
                }
                acc * T::of(2.0)
            })
            .collect()
    }

    /// `sum f_mn g(lambda_mn) int phi_mn` over the retained modes.
    pub fn integral_with(&self, g: impl Fn(T) -> T) -> T {
        let mm = self.max_mode;
        // int_0^1 sin(m pi x) dx vanishes for even m
        let s = |m: usize| if m % 2 == 1 { T::of(2.0) / (T::of_usize(m) * T::pi()) } else { T::zero() };
        let mut acc = T::zero();
        for m in (1..=mm).step_by(2) {
            for n in (1..=mm).step_by(2) {
                acc += self.coeffs[(m - 1) * mm + n - 1] * g(Self::eigenvalue(m, n)) * s(m) * s(n);
            }
        }
        acc * T::of(2.0)
    }

    /// Estimate of the truncation error: the absolute sum of the modes with
    /// `max_mode < max(m, n) <= 2 max_mode`, times the sup norm `2` of the
    /// eigenfunctions.
    pub fn tail_estimate(f: &Coefficient<T>, max_mode: usize, eps: T) -> Result<T> {
        let (px, py) = f.separable_factors().ok_or(Error::UnsupportedRhs)?;
        let top = 2 * max_mode as u32;
        let a: Vec<T> = (1..=top).map(|m| px.sine_coefficient(m)).collect();
        let b: Vec<T> = (1..=top).map(|n| py.sine_coefficient(n)).collect();
        let mut acc = T::zero();
        for m in 1..=top as usize {
            for n in 1..=top as usize {
                if m.max(n) > max_mode {
                    acc += (a[m - 1] * b[n - 1]).abs() * Self::eigenvalue(m, n).powf(-eps);
                }
            }
        }
        Ok(acc * T::of(2.0))
    }
}

/// Continuous solution of `(-Laplace)^eps u = f` on the unit square with
/// zero Dirichlet data, evaluated at `points` from a truncated sine series.
pub fn continuous_series_solution<T: Real>(
    f: &Coefficient<T>,
    eps: T,
    max_mode: usize,
    points: &[[T; 2]],
) -> Result<Vec<T>> {
    Ok(SineSeries::new(f, max_mode)?.evaluate(eps, points))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{first_eigenfunction, l2_project_constrained, surrogate_rhs, FeSpace, Order};
    use crate::mesh::Mesh;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn setup(n: usize) -> (Arc<FeSpace<f64>>, Operators<f64>) {
        let space = Arc::new(FeSpace::new(Arc::new(Mesh::unit_square(n)), Order::Linear));
        let ops = Operators::assemble(&space, &Coefficient::constant(1.0)).unwrap();
        (space, ops)
    }

    #[test]
    fn single_mode_input() {
        let (space, ops) = setup(6);
        let spec = DiscreteSpectrum::new(&ops).unwrap();
        let phi = FeFunction::new(space, spec.pairs.mode(0)).unwrap();
        let w = discrete_fractional_solve(&ops, 0.3, &phi).unwrap();
        let factor = spec.lambda_min().powf(-0.3);
        for (a, b) in w.coeffs().iter().zip(phi.coeffs()) {
            assert!((a - factor * b).abs() < 1e-10);
        }
    }

    #[test]
    fn small_eps_limit_and_a_priori_bound() {
        let (space, ops) = setup(8);
        let psi = l2_project_constrained(&space, &surrogate_rhs()).unwrap();
        let spec = DiscreteSpectrum::new(&ops).unwrap();
        let w = discrete_fractional_solve(&ops, 1e-6, &psi).unwrap();
        let diff: Vec<f64> = w.coeffs().iter().zip(psi.coeffs()).map(|(a, b)| a - b).collect();
        let rel = ops.m_norm(&diff) / ops.m_norm(psi.coeffs());
        let max_log = spec.pairs.values.iter().map(|l| l.ln().abs()).fold(0.0, f64::max);
        assert!(rel <= 1e-5 * max_log, "{rel}");
        for eps in [0.1, 0.5, 0.9] {
            let w = discrete_fractional_solve(&ops, eps, &psi).unwrap();
            let bound = spec.lambda_min().powf(-eps) * ops.m_norm(psi.coeffs());
            assert!(ops.m_norm(w.coeffs()) <= bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn eigen_invariants_and_reconstruction() {
        let (_, ops) = setup(5);
        let spec = DiscreteSpectrum::new(&ops).unwrap();
        let p = &spec.pairs;
        assert!(p.values.windows(2).all(|w| w[0] <= w[1]));
        let free = &p.free;
        let k = ops.stiffness.dense_submatrix(free);
        let m = ops.mass.dense_submatrix(free);
        let phi = &p.vectors;
        let gram = phi.transpose() * &m * phi;
        let eye = nalgebra::DMatrix::<f64>::identity(free.len(), free.len());
        assert!((gram - &eye).amax() < 1e-8);
        for j in 0..p.len() {
            let r = &k * phi.column(j) - (&m * phi.column(j)) * p.values[j];
            assert!(r.norm() <= 1e-8 * p.values[j].max(1.0));
        }
        let lambda = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(p.values.clone()));
        let recon = &m * phi * lambda * phi.transpose() * &m;
        assert!((recon - &k).norm() / k.norm() < 1e-8);
    }

    #[test]
    fn semigroup_composition() {
        let (space, ops) = setup(6);
        let spec = DiscreteSpectrum::new(&ops).unwrap();
        let y = l2_project_constrained(&space, &surrogate_rhs()).unwrap();
        for eps in [0.2, 0.5, 0.7] {
            let inner = spec.power(&ops, y.coeffs(), 1.0 - eps);
            let composed = spec.power(&ops, &inner, eps);
            let direct = spec.power(&ops, y.coeffs(), 1.0);
            let diff: Vec<f64> = composed.iter().zip(&direct).map(|(a, b)| a - b).collect();
            assert!(ops.m_norm(&diff) <= 1e-6 * ops.m_norm(&direct));
        }
    }

    #[test]
    fn pseudo_time_coefficients_at_endpoint_and_monotone() {
        let (space, ops) = setup(6);
        let spec = DiscreteSpectrum::new(&ops).unwrap();
        let psi = l2_project_constrained(&space, &surrogate_rhs()).unwrap();
        let delta = 2.0 * PI * PI;
        let eps = 0.4;
        let at_one = spec.pseudo_time_coefficients(&ops, psi.coeffs(), delta, eps, 1.0);
        let w = discrete_fractional_solve(&ops, eps, &psi).unwrap();
        let direct = spec.pairs.coefficients(&ops.mass, w.coeffs());
        for (a, b) in at_one.iter().zip(&direct) {
            assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()));
        }
        let mut prev = spec.pseudo_time_coefficients(&ops, psi.coeffs(), delta, eps, 0.0);
        for i in 1..=10 {
            let cur = spec.pseudo_time_coefficients(&ops, psi.coeffs(), delta, eps, i as f64 / 10.0);
            assert!(cur.iter().zip(&prev).all(|(c, p)| c.abs() <= p.abs()));
            prev = cur;
        }
    }

    #[test]
    fn series_of_eigenfunction_is_exact() {
        let f = first_eigenfunction::<f64>();
        let pts = [[0.3, 0.7], [0.5, 0.5], [0.1, 0.2]];
        for eps in [0.1, 0.5, 0.9] {
            let u = continuous_series_solution(&f, eps, 10, &pts).unwrap();
            for (p, v) in pts.iter().zip(&u) {
                let exact = (2.0 * PI * PI).powf(-eps) * f.eval(*p);
                assert!((v - exact).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn series_at_unit_power_matches_fine_poisson_series() {
        // eps = 1 is the Poisson problem; compare against a much longer series
        let f = surrogate_rhs::<f64>();
        let u = continuous_series_solution(&f, 1.0, 200, &[[0.5, 0.5]]).unwrap()[0];
        let fine = continuous_series_solution(&f, 1.0, 800, &[[0.5, 0.5]]).unwrap()[0];
        assert!((u - fine).abs() < 1e-6, "{u} vs {fine}");
        let tail = SineSeries::tail_estimate(&f, 200, 1.0).unwrap();
        assert!((u - fine).abs() <= tail);
    }

    #[test]
    fn series_rejects_non_separable_and_zero_modes() {
        let f = Coefficient::new(|p: [f64; 2]| p[0] * p[1] + 1.0);
        assert!(matches!(continuous_series_solution(&f, 0.5, 10, &[[0.5, 0.5]]), Err(Error::UnsupportedRhs)));
        assert!(continuous_series_solution(&surrogate_rhs::<f64>(), 0.5, 0, &[]).is_err());
    }

    #[test]
    fn oracle_cap_is_enforced() {
        let (_, ops) = setup(4);
        let r = DiscreteSpectrum::with_cap(&ops, 3);
        assert!(matches!(r, Err(Error::OracleCap { dofs: 9, cap: 3 })));
    }
}
