//! Sparse SPD solves and dense generalized eigendecomposition.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};

use faer::linalg::solvers::SolveCore;
use faer::sparse::linalg::solvers::Llt;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Col, Conj, Side};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sparse::{dot, norm2, SparseSym};

/// Relative residual tolerance used for every inner solve.
pub const DEFAULT_REL_TOL: f64 = 1e-10;

/// Inner-solve tolerance for scalar type `T`: [`DEFAULT_REL_TOL`], or a
/// small multiple of machine epsilon when that is coarser.
pub fn default_rel_tol<T: Real>() -> f64 {
    DEFAULT_REL_TOL.max(64.0 * T::default_epsilon().to_f64_lossy())
}

/// Largest number of free dofs accepted by the dense oracle.
pub const DEFAULT_ORACLE_CAP: usize = 2500;

/// Environment variable overriding [`DEFAULT_ORACLE_CAP`].
pub const ORACLE_CAP_ENV: &str = "FRACELL_ORACLE_CAP";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    /// Relative residual `|b - Ax| / |b|` of the returned iterate.
    pub final_residual: f64,
    pub converged: bool,
}

/// Number of threads used inside factorizations. One gives bitwise
/// reproducible results.
pub fn set_threads(n: usize) {
    faer::set_global_parallelism(if n <= 1 { faer::Par::Seq } else { faer::Par::rayon(n) });
}

/// Preconditioner of the conjugate gradient iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preconditioner {
    /// Inverse of the diagonal.
    Jacobi,
    /// Sparse Cholesky factorization, computed in double precision.
    #[default]
    Cholesky,
}

#[derive(Debug, Clone, Copy)]
pub struct CgOptions {
    pub rel_tol: f64,
    pub max_iterations: usize,
    pub preconditioner: Preconditioner,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self { rel_tol: DEFAULT_REL_TOL, max_iterations: 20_000, preconditioner: Preconditioner::default() }
    }
}

enum Factor<T> {
    Jacobi(Vec<T>),
    Cholesky(Llt<usize, f64>, Col<f64>),
}

impl<T: Real> Factor<T> {
    fn new(a: &SparseSym<T>, kind: Preconditioner) -> Result<Self> {
        match kind {
            Preconditioner::Jacobi => Ok(Self::Jacobi(
                a.diagonal().into_iter().map(|d| if d > T::zero() { T::one() / d } else { T::one() }).collect(),
            )),
            Preconditioner::Cholesky => {
                let n = a.dim();
                let pattern = a.pattern();
                let mut lower = Vec::with_capacity(a.values().len() / 2 + n);
                for i in 0..n {
                    for k in pattern.row_ptr[i]..pattern.row_ptr[i + 1] {
                        let j = pattern.col_idx[k];
                        if j <= i {
                            lower.push(Triplet::new(i, j, a.values()[k].to_f64_lossy()));
                        }
                    }
                }
                let not_spd =
                    || Error::NotPositiveDefinite { iteration: 0, hint: "Cholesky factorization failed".into() };
                let m = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &lower).map_err(|_| not_spd())?;
                let llt = m.sp_cholesky(Side::Lower).map_err(|_| not_spd())?;
                Ok(Self::Cholesky(llt, Col::zeros(n)))
            }
        }
    }

    fn apply(&mut self, r: &[T], z: &mut [T]) {
        match self {
            Self::Jacobi(inv) => z.iter_mut().zip(r.iter().zip(inv.iter())).for_each(|(zi, (&ri, &d))| *zi = ri * d),
            Self::Cholesky(llt, work) => {
                for (w, &ri) in work.iter_mut().zip(r) {
                    *w = ri.to_f64_lossy();
                }
                llt.solve_in_place_with_conj(Conj::No, work.as_mat_mut());
                for (zi, &w) in z.iter_mut().zip(work.iter()) {
                    *zi = T::of(w);
                }
            }
        }
    }
}

/// Solves `a x = b` for SPD `a` by preconditioned conjugate gradients.
pub fn solve_spd<T: Real>(a: &SparseSym<T>, b: &[T], rel_tol: f64) -> Result<(Vec<T>, SolveStats)> {
    let opts = CgOptions { rel_tol, ..CgOptions::default() };
    pcg(a, b, None, &opts, &mut |_, _| {})
}

/// Like [`solve_spd`] but starts from `guess`.
pub fn solve_spd_from<T: Real>(
    a: &SparseSym<T>,
    b: &[T],
    guess: &[T],
    opts: &CgOptions,
) -> Result<(Vec<T>, SolveStats)> {
    pcg(a, b, Some(guess), opts, &mut |_, _| {})
}

/// Preconditioned CG reporting every iterate to `observe`.
pub fn pcg<T: Real>(
    a: &SparseSym<T>,
    b: &[T],
    guess: Option<&[T]>,
    opts: &CgOptions,
    observe: &mut dyn FnMut(usize, &[T]),
) -> Result<(Vec<T>, SolveStats)> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: b.len() });
    }
    let b_norm = norm2(b);
    if b_norm == T::zero() {
        let stats = SolveStats { iterations: 0, final_residual: 0.0, converged: true };
        return Ok((vec![T::zero(); n], stats));
    }
    let tol = T::of(opts.rel_tol) * b_norm;
    let mut precond = Factor::new(a, opts.preconditioner)?;

    let mut x = guess.map_or_else(|| vec![T::zero(); n], <[T]>::to_vec);
    let mut r = b.to_vec();
    if guess.is_some() {
        let ax = a.mul_vec(&x);
        r.iter_mut().zip(&ax).for_each(|(ri, &v)| *ri -= v);
    }
    let mut z = vec![T::zero(); n];
    precond.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![T::zero(); n];
    let mut res = norm2(&r);
    let mut it = 0;
    while res > tol {
        if it >= opts.max_iterations {
            return Err(Error::NotConverged(SolveStats {
                iterations: it,
                final_residual: (res / b_norm).to_f64_lossy(),
                converged: false,
            }));
        }
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= T::zero() {
            return Err(Error::NotPositiveDefinite { iteration: it, hint: String::new() });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        it += 1;
        observe(it, &x);
        res = norm2(&r);
        if res <= tol {
            // guard against drift of the recursive residual
            let ax = a.mul_vec(&x);
            for i in 0..n {
                r[i] = b[i] - ax[i];
            }
            res = norm2(&r);
            if res <= tol {
                break;
            }
        }
        precond.apply(&r, &mut z);
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let stats = SolveStats { iterations: it, final_residual: (res / b_norm).to_f64_lossy(), converged: true };
    Ok((x, stats))
}

/// Generalized eigenpairs `K phi = lambda M phi` on a subset of dofs.
#[derive(Debug, Clone)]
pub struct EigenPairs<T: Real> {
    /// Ascending eigenvalues.
    pub values: Vec<T>,
    /// M-orthonormal eigenvectors over the free dofs, one per column.
    pub vectors: DMatrix<T>,
    /// Global index of each row of `vectors`.
    pub free: Vec<usize>,
    /// Total number of dofs of the underlying space.
    pub dim: usize,
}

impl<T: Real> EigenPairs<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Eigenvector `k` as a full-length vector, zero on excluded dofs.
    pub fn mode(&self, k: usize) -> Vec<T> {
        let mut v = vec![T::zero(); self.dim];
        for (a, &i) in self.free.iter().enumerate() {
            v[i] = self.vectors[(a, k)];
        }
        v
    }

    /// Coefficients `(M y, phi_k)` of a full-length vector.
    pub fn coefficients(&self, mass: &SparseSym<T>, y: &[T]) -> Vec<T> {
        let my = mass.mul_vec(y);
        (0..self.len())
            .map(|k| self.free.iter().enumerate().fold(T::zero(), |acc, (a, &i)| acc + self.vectors[(a, k)] * my[i]))
            .collect()
    }

    /// Synthesizes `sum_k c_k phi_k` as a full-length vector.
    pub fn synthesize(&self, coeffs: &[T]) -> Vec<T> {
        let mut v = vec![T::zero(); self.dim];
        for (a, &i) in self.free.iter().enumerate() {
            let mut acc = T::zero();
            for (k, &c) in coeffs.iter().enumerate() {
                acc += c * self.vectors[(a, k)];
            }
            v[i] = acc;
        }
        v
    }
}

/// Oracle cap, honouring the environment override.
pub fn oracle_cap() -> usize {
    std::env::var(ORACLE_CAP_ENV).ok().and_then(|s| s.trim().parse().ok()).unwrap_or(DEFAULT_ORACLE_CAP)
}

/// Full spectrum of `K x = lambda M x` restricted to `free` dofs, via a
/// Cholesky reduction of `M` to a standard symmetric problem.
pub fn dense_generalized_eig<T: Real>(
    stiffness: &SparseSym<T>,
    mass: &SparseSym<T>,
    free: &[usize],
) -> Result<EigenPairs<T>> {
    dense_generalized_eig_capped(stiffness, mass, free, oracle_cap())
}

pub fn dense_generalized_eig_capped<T: Real>(
    stiffness: &SparseSym<T>,
    mass: &SparseSym<T>,
    free: &[usize],
    cap: usize,
) -> Result<EigenPairs<T>> {
    if free.len() > cap {
        return Err(Error::OracleCap { dofs: free.len(), cap });
    }
    let k = stiffness.dense_submatrix(free);
    let m = mass.dense_submatrix(free);
    let chol = Cholesky::new(m).ok_or(Error::NotPositiveDefinite { iteration: 0, hint: " (mass matrix)".into() })?;
    let l = chol.l();
    let lk = l.solve_lower_triangular(&k).expect("Cholesky factor is invertible");
    let c = l.solve_lower_triangular(&lk.transpose()).expect("Cholesky factor is invertible");
    let c = (&c + c.transpose()) * T::of(0.5);
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..free.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut sorted = DMatrix::zeros(free.len(), free.len());
    for (col, &i) in order.iter().enumerate() {
        sorted.set_column(col, &eig.eigenvectors.column(i));
    }
    let vectors = l.tr_solve_lower_triangular(&sorted).expect("Cholesky factor is invertible");
    Ok(EigenPairs { values, vectors, free: free.to_vec(), dim: stiffness.dim() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::Pattern;
    use std::sync::Arc;

    fn tridiag(n: usize, d: f64, off: f64) -> SparseSym<f64> {
        let cells: Vec<[usize; 2]> = (0..n - 1).map(|i| [i, i + 1]).collect();
        let mut a = SparseSym::zeros(Arc::new(Pattern::from_cells(n, &cells)));
        for i in 0..n {
            a.add(i, i, d);
        }
        for [i, j] in cells {
            a.add(i, j, off);
            a.add(j, i, off);
        }
        a
    }

    #[test]
    fn identity_solve_returns_rhs() {
        let a = SparseSym::<f64>::identity(5);
        let b = vec![1.0, -2.0, 3.0, 0.5, 7.0];
        let (x, stats) = solve_spd(&a, &b, 1e-12).unwrap();
        assert_eq!(x, b);
        assert!(stats.converged && stats.iterations == 1);
    }

    #[test]
    fn zero_rhs_takes_no_iterations() {
        let a = tridiag(6, 2.0, -1.0);
        let (x, stats) = solve_spd(&a, &[0.0; 6], 1e-10).unwrap();
        assert_eq!(x, vec![0.0; 6]);
        assert_eq!(stats.iterations, 0);
    }

    #[test]
    fn matches_dense_solve_and_energy_error_decreases() {
        let a = tridiag(30, 2.5, -1.0);
        let b: Vec<f64> = (0..30).map(|i| ((i * 7 % 11) as f64) - 5.0).collect();
        let dense = a.to_dense().lu().solve(&nalgebra::DVector::from_vec(b.clone())).unwrap();
        let mut energies = Vec::new();
        let mut observe = |_: usize, x: &[f64]| {
            let e: Vec<f64> = x.iter().zip(dense.iter()).map(|(a, b)| a - b).collect();
            energies.push(a.inner(&e, &e));
        };
        let (x, stats) = pcg(&a, &b, None, &CgOptions::default(), &mut observe).unwrap();
        assert!(stats.final_residual <= 1e-10);
        for (xi, di) in x.iter().zip(dense.iter()) {
            assert!((xi - di).abs() < 1e-9);
        }
        assert!(energies.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    }

    #[test]
    fn indefinite_matrix_breaks_down() {
        let a = tridiag(4, -1.0, 0.1);
        assert!(matches!(solve_spd(&a, &[1.0; 4], 1e-10), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn iteration_cap_reports_stats() {
        let a = tridiag(50, 2.0, -1.0);
        let opts = CgOptions { rel_tol: 1e-14, max_iterations: 3, preconditioner: Preconditioner::Jacobi };
        match pcg(&a, &[1.0; 50], None, &opts, &mut |_, _| {}) {
            Err(Error::NotConverged(s)) => assert_eq!(s.iterations, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn interval_two_dof_eigenproblem_by_hand() {
        // P1 on (0,1) with h = 1/3: interior dofs 1 and 2 of four nodes.
        // K = (1/h) [2 -1; -1 2], M = (h/6) [4 1; 1 4] on the interior.
        // Symmetric mode: (1/h) / (5h/6) = 6/(5h^2) = 54/5.
        // Antisymmetric mode: (3/h) / (3h/6) = 6/h^2 = 54.
        let h = 1.0 / 3.0;
        let mut k = tridiag(4, 2.0 / h, -1.0 / h);
        let mut m = tridiag(4, 4.0 * h / 6.0, h / 6.0);
        k.add(0, 0, -1.0 / h);
        k.add(3, 3, -1.0 / h);
        m.add(0, 0, -2.0 * h / 6.0);
        m.add(3, 3, -2.0 * h / 6.0);
        let eig = dense_generalized_eig(&k, &m, &[1, 2]).unwrap();
        assert!((eig.values[0] - 54.0 / 5.0).abs() < 1e-12);
        assert!((eig.values[1] - 54.0).abs() < 1e-12);
        let phi = eig.mode(0);
        assert!((m.inner(&phi, &phi) - 1.0).abs() < 1e-12);
        assert_eq!(phi[0], 0.0);
        assert!((phi[1] - phi[2]).abs() < 1e-12);
    }
}
