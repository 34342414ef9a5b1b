//! Scalar fields on the domain: diffusion coefficients and right-hand sides.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::scalar::Real;

/// One term of a one-dimensional profile on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Term<T> {
    /// `coef * x^power`
    Monomial { coef: T, power: u32 },
    /// `coef * exp(rate * (x - shift))`
    Exp { coef: T, rate: T, shift: T },
    /// `coef * sin(mode * pi * x)`
    Sine { coef: T, mode: u32 },
}

/// Sum of [`Term`]s; the building block of separable fields whose sine
/// coefficients have closed forms.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Profile<T> {
    pub terms: Vec<Term<T>>,
}

impl<T: Real> Profile<T> {
    pub fn new(terms: Vec<Term<T>>) -> Self {
        Self { terms }
    }

    pub fn eval(&self, x: T) -> T {
        self.terms.iter().fold(T::zero(), |acc, t| {
            acc + match *t {
                Term::Monomial { coef, power } => coef * x.powi(power as i32),
                Term::Exp { coef, rate, shift } => coef * (rate * (x - shift)).exp(),
                Term::Sine { coef, mode } => coef * (T::of_usize(mode as usize) * T::pi() * x).sin(),
            }
        })
    }

    pub fn derivative(&self, x: T) -> T {
        self.terms.iter().fold(T::zero(), |acc, t| {
            acc + match *t {
                Term::Monomial { power: 0, .. } => T::zero(),
                Term::Monomial { coef, power } => coef * T::of_usize(power as usize) * x.powi(power as i32 - 1),
                Term::Exp { coef, rate, shift } => coef * rate * (rate * (x - shift)).exp(),
                Term::Sine { coef, mode } => {
                    let k = T::of_usize(mode as usize) * T::pi();
                    coef * k * (k * x).cos()
                }
            }
        })
    }

    /// `int_0^1 p(x) sqrt(2) sin(m pi x) dx`, in closed form.
    pub fn sine_coefficient(&self, m: u32) -> T {
        let k = T::of_usize(m as usize) * T::pi();
        let parity = if m.is_multiple_of(2) { T::one() } else { -T::one() };
        let sum = self.terms.iter().fold(T::zero(), |acc, t| {
            acc + match *t {
                Term::Monomial { coef, power } => coef * sine_moment(power, k, parity),
                Term::Exp { coef, rate, shift } => {
                    let a = rate;
                    // int_0^1 e^{a(x-s)} sin(kx) dx = k (e^{-as} - (-1)^m e^{a(1-s)}) / (a^2 + k^2)
                    coef * k * ((-a * shift).exp() - parity * (a * (T::one() - shift)).exp()) / (a * a + k * k)
                }
                Term::Sine { coef, mode } => {
                    if mode == m {
                        coef * T::of(0.5)
                    } else {
                        T::zero()
                    }
                }
            }
        });
        sum * T::of(2.0).sqrt()
    }
}

/// `int_0^1 x^p sin(kx) dx` with `k = m pi` and `parity = cos(k)`.
fn sine_moment<T: Real>(p: u32, k: T, parity: T) -> T {
    // S_p = -cos(k)/k + (p/k) C_{p-1},  C_p = sin(k)/k - (p/k) S_{p-1} = -(p/k) S_{p-1}
    let mut s = (T::one() - parity) / k;
    let mut c = T::zero();
    for q in 1..=p {
        let qk = T::of_usize(q as usize) / k;
        let s_next = -parity / k + qk * c;
        let c_next = -qk * s;
        s = s_next;
        c = c_next;
    }
    s
}

type FieldFn<T> = dyn Fn([T; 2]) -> T + Send + Sync;
type GradFn<T> = dyn Fn([T; 2]) -> [T; 2] + Send + Sync;

/// A scalar field `k(x)` or `f(x)` on the domain.
#[derive(Clone)]
pub struct Coefficient<T: Real> {
    eval: Arc<FieldFn<T>>,
    grad: Option<Arc<GradFn<T>>>,
    separable: Option<(Profile<T>, Profile<T>)>,
}

impl<T: Real> fmt::Debug for Coefficient<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Coefficient").field("separable", &self.separable).finish_non_exhaustive()
    }
}

impl<T: Real> Coefficient<T> {
    pub fn new(f: impl Fn([T; 2]) -> T + Send + Sync + 'static) -> Self {
        Self { eval: Arc::new(f), grad: None, separable: None }
    }

    /// Field with an analytic gradient.
    pub fn with_gradient(
        f: impl Fn([T; 2]) -> T + Send + Sync + 'static,
        grad: impl Fn([T; 2]) -> [T; 2] + Send + Sync + 'static,
    ) -> Self {
        Self { eval: Arc::new(f), grad: Some(Arc::new(grad)), separable: None }
    }

    pub fn constant(c: T) -> Self {
        Self {
            eval: Arc::new(move |_| c),
            grad: Some(Arc::new(|_| [T::zero(); 2])),
            separable: Some((
                Profile::new(vec![Term::Monomial { coef: c, power: 0 }]),
                Profile::new(vec![Term::Monomial { coef: T::one(), power: 0 }]),
            )),
        }
    }

    /// `f(x, y) = px(x) * py(y)`.
    pub fn separable(px: Profile<T>, py: Profile<T>) -> Self {
        let (ex, ey) = (px.clone(), py.clone());
        let (gx, gy) = (px.clone(), py.clone());
        Self {
            eval: Arc::new(move |p: [T; 2]| ex.eval(p[0]) * ey.eval(p[1])),
            grad: Some(Arc::new(move |p: [T; 2]| {
                [gx.derivative(p[0]) * gy.eval(p[1]), gx.eval(p[0]) * gy.derivative(p[1])]
            })),
            separable: Some((px, py)),
        }
    }

    #[inline]
    pub fn eval(&self, p: [T; 2]) -> T {
        (self.eval)(p)
    }

    /// Gradient of the field; central differences when no analytic form
    /// was supplied.
    pub fn gradient(&self, p: [T; 2]) -> [T; 2] {
        if let Some(g) = &self.grad {
            return g(p);
        }
        let h = T::default_epsilon().cbrt();
        let two_h = h + h;
        [
            (self.eval([p[0] + h, p[1]]) - self.eval([p[0] - h, p[1]])) / two_h,
            (self.eval([p[0], p[1] + h]) - self.eval([p[0], p[1] - h])) / two_h,
        ]
    }

    pub fn separable_factors(&self) -> Option<&(Profile<T>, Profile<T>)> {
        self.separable.as_ref()
    }

    /// Checks `k > 0` at every vertex and cell centroid.
    pub fn check_positive(&self, mesh: &Mesh<T>) -> Result<()> {
        let centroids = (0..mesh.cell_count()).map(|c| mesh.centroid(c));
        for p in mesh.vertices().iter().copied().chain(centroids) {
            let v = self.eval(p);
            if !(v > T::zero()) {
                return Err(Error::NonPositiveCoefficient {
                    x: p[0].to_f64_lossy(),
                    y: p[1].to_f64_lossy(),
                    value: v.to_f64_lossy(),
                });
            }
        }
        Ok(())
    }
}

/// Right-hand side `(1 - x1) x2^2` of the diffusion-reaction study.
pub fn surrogate_rhs<T: Real>() -> Coefficient<T> {
    Coefficient::separable(
        Profile::new(vec![Term::Monomial { coef: T::one(), power: 0 }, Term::Monomial { coef: -T::one(), power: 1 }]),
        Profile::new(vec![Term::Monomial { coef: T::one(), power: 2 }]),
    )
}

/// Right-hand side with exponential layers of width `mu` at `x1 = 0` and
/// `x2 = 1`: `(1 - x1 - exp(-x1/mu)) (x2^2 - exp(-(1 - x2)/mu))`.
pub fn layer_rhs<T: Real>(mu: T) -> Coefficient<T> {
    let rate = T::one() / mu;
    Coefficient::separable(
        Profile::new(vec![
            Term::Monomial { coef: T::one(), power: 0 },
            Term::Monomial { coef: -T::one(), power: 1 },
            Term::Exp { coef: -T::one(), rate: -rate, shift: T::zero() },
        ]),
        Profile::new(vec![
            Term::Monomial { coef: T::one(), power: 2 },
            Term::Exp { coef: -T::one(), rate, shift: T::one() },
        ]),
    )
}

/// `2 sin(pi x1) sin(pi x2)`, the first Dirichlet eigenfunction of the unit
/// square normalized in L2.
pub fn first_eigenfunction<T: Real>() -> Coefficient<T> {
    let sine = || Profile::new(vec![Term::Sine { coef: T::of(2.0).sqrt(), mode: 1 }]);
    Coefficient::separable(sine(), sine())
}
