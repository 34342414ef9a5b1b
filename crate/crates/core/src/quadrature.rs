//! Quadrature rules on the reference triangle and the unit interval.

use crate::scalar::Real;

/// Rule on the reference triangle in barycentric coordinates. Weights sum
/// to one, so an integral is `area * sum(w_q * g(x_q))`.
#[derive(Debug, Clone)]
pub struct TriangleRule<T> {
    pub points: Vec<[T; 3]>,
    pub weights: Vec<T>,
}

impl<T: Real> TriangleRule<T> {
    /// Rule for integrals of non-polynomial data, which may carry layers
    /// that the element rule does not resolve on coarse cells.
    pub fn data() -> Self {
        Self::collapsed_gauss(6)
    }

    /// Six-point symmetric rule, exact for polynomials of degree 4.
    pub fn degree4() -> Self {
        let (a1, b1, w1) = (0.445_948_490_915_965, 0.108_103_018_168_070, 0.223_381_589_678_011);
        let (a2, b2, w2) = (0.091_576_213_509_771, 0.816_847_572_980_459, 0.109_951_743_655_322);
        let mut points = Vec::with_capacity(6);
        let mut weights = Vec::with_capacity(6);
        for (a, b, w) in [(a1, b1, w1), (a2, b2, w2)] {
            for p in [[b, a, a], [a, b, a], [a, a, b]] {
                points.push(p.map(T::of));
                weights.push(T::of(w));
            }
        }
        Self { points, weights }
    }

    /// Collapsed Gauss product rule with `n * n` points, exact for degree
    /// `2n - 2`. Used where the integrand is not polynomial.
    pub fn collapsed_gauss(n: usize) -> Self {
        let line = LineRule::<T>::gauss(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for (&s, &ws) in line.points.iter().zip(&line.weights) {
            for (&t, &wt) in line.points.iter().zip(&line.weights) {
                // Duffy map of the unit square onto the triangle
                let l1 = s;
                let l2 = (T::one() - s) * t;
                points.push([T::one() - l1 - l2, l1, l2]);
                weights.push(ws * wt * (T::one() - s) * T::of(2.0));
            }
        }
        Self { points, weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Rule on `[0, 1]`; weights sum to one.
#[derive(Debug, Clone)]
pub struct LineRule<T> {
    pub points: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> LineRule<T> {
    /// `n`-point Gauss-Legendre rule mapped to `[0, 1]`.
    pub fn gauss(n: usize) -> Self {
        assert!(n >= 1);
        let mut points = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for i in 0..n {
            // Newton iteration on P_n from the Chebyshev-like initial guess
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0f64, x);
                for k in 2..=n {
                    let k = k as f64;
                    let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            points.push(T::of(0.5 * (1.0 - x)));
            weights.push(T::of(0.5 * w));
        }
        Self { points, weights }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exact integral of x^a y^b over the reference triangle (0,0),(1,0),(0,1)
    /// divided by its area: 2 * a! b! / (a + b + 2)!.
    fn monomial_mean(a: u32, b: u32) -> f64 {
        let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
        2.0 * fact(a) * fact(b) / fact(a + b + 2)
    }

    fn check_rule(rule: &TriangleRule<f64>, degree: u32) {
        for a in 0..=degree {
            for b in 0..=(degree - a) {
                let q: f64 = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(p, w)| w * p[1].powi(a as i32) * p[2].powi(b as i32))
                    .sum();
                assert!((q - monomial_mean(a, b)).abs() < 1e-13, "x^{a} y^{b}: {q}");
            }
        }
    }

    #[test]
    fn degree4_rule_is_exact_for_quartics() {
        check_rule(&TriangleRule::degree4(), 4);
    }

    #[test]
    fn collapsed_rule_exactness() {
        check_rule(&TriangleRule::collapsed_gauss(5), 8);
    }

    #[test]
    fn gauss_line_rule() {
        let r = LineRule::<f64>::gauss(3);
        assert!((r.points[1] - 0.5).abs() < 1e-15);
        assert!((r.weights[0] - 5.0 / 18.0).abs() < 1e-15);
        for p in 0..6 {
            let q: f64 = r.points.iter().zip(&r.weights).map(|(x, w)| w * x.powi(p)).sum();
            assert!((q - 1.0 / (p as f64 + 1.0)).abs() < 1e-14);
        }
        let one = LineRule::<f64>::gauss(1);
        assert_eq!(one.points, vec![0.5]);
    }
}
