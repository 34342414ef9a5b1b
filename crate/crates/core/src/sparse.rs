//! Symmetric sparse matrices in compressed-row layout.

use std::collections::BTreeSet;

use nalgebra::DMatrix;

use crate::scalar::Real;

/// Shared sparsity pattern. Matrices assembled on the same space share one
/// pattern, which makes linear combinations entry-wise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
}

impl Pattern {
    /// Pattern coupling every pair of dofs that share a cell.
    pub fn from_cells<I, C>(dim: usize, cells: I) -> Self
    where
        I: IntoIterator<Item = C>,
        C: AsRef<[usize]>,
    {
        let mut rows: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); dim];
        for cell in cells {
            let dofs = cell.as_ref();
            for &i in dofs {
                rows[i].extend(dofs.iter().copied());
            }
        }
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for row in rows {
            col_idx.extend(row);
            row_ptr.push(col_idx.len());
        }
        Self { row_ptr, col_idx }
    }

    pub fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Position of entry `(i, j)` in the value array.
    #[inline]
    pub fn find(&self, i: usize, j: usize) -> Option<usize> {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[lo..hi].binary_search(&j).ok().map(|k| lo + k)
    }
}

/// Symmetric sparse matrix; both triangles are stored.
#[derive(Debug, Clone)]
pub struct SparseSym<T> {
    pattern: std::sync::Arc<Pattern>,
    values: Vec<T>,
}

impl<T: Real> SparseSym<T> {
    pub fn zeros(pattern: std::sync::Arc<Pattern>) -> Self {
        let values = vec![T::zero(); pattern.nnz()];
        Self { pattern, values }
    }

    pub fn identity(dim: usize) -> Self {
        let pattern = Pattern { row_ptr: (0..=dim).collect(), col_idx: (0..dim).collect() };
        Self { pattern: std::sync::Arc::new(pattern), values: vec![T::one(); dim] }
    }

    /// Builds a matrix from dense storage, keeping only non-zero entries.
    pub fn from_dense(dense: &DMatrix<T>) -> Self {
        let n = dense.nrows();
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if dense[(i, j)] != T::zero() || i == j {
                    col_idx.push(j);
                    values.push(dense[(i, j)]);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self { pattern: std::sync::Arc::new(Pattern { row_ptr, col_idx }), values }
    }

    pub fn pattern(&self) -> &std::sync::Arc<Pattern> {
        &self.pattern
    }

    pub fn dim(&self) -> usize {
        self.pattern.dim()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Adds `value` to entry `(i, j)`; the entry must be in the pattern.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, value: T) {
        let k = self.pattern.find(i, j).expect("entry outside sparsity pattern");
        self.values[k] += value;
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.pattern.find(i, j).map_or_else(T::zero, |k| self.values[k])
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.dim()).map(|i| self.get(i, i)).collect()
    }

    /// Iterates `(column, value)` over row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let (lo, hi) = (self.pattern.row_ptr[i], self.pattern.row_ptr[i + 1]);
        self.pattern.col_idx[lo..hi].iter().copied().zip(self.values[lo..hi].iter().copied())
    }

    pub fn mul_vec_into(&self, x: &[T], y: &mut [T]) {
        let p = &*self.pattern;
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = T::zero();
            for k in p.row_ptr[i]..p.row_ptr[i + 1] {
                acc += self.values[k] * x[p.col_idx[k]];
            }
            *yi = acc;
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.dim()];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// The quadratic form `x^T A y`.
    pub fn inner(&self, x: &[T], y: &[T]) -> T {
        let ay = self.mul_vec(y);
        dot(x, &ay)
    }

    /// `a * self + b * other`; both matrices must share a pattern.
    pub fn combine(&self, a: T, other: &Self, b: T) -> Self {
        assert!(
            std::sync::Arc::ptr_eq(&self.pattern, &other.pattern) || self.pattern == other.pattern,
            "linear combination of matrices with different patterns"
        );
        let values = self.values.iter().zip(&other.values).map(|(&x, &y)| a * x + b * y).collect();
        Self { pattern: self.pattern.clone(), values }
    }

    pub fn scale(&self, a: T) -> Self {
        Self { pattern: self.pattern.clone(), values: self.values.iter().map(|&v| a * v).collect() }
    }

    /// Largest `|A_ij - A_ji|` relative to the largest entry.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        let mut scale = T::zero();
        for i in 0..self.dim() {
            for (j, v) in self.row(i) {
                scale = scale.max(v.abs());
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        if scale > T::zero() {
            worst / scale
        } else {
            worst
        }
    }

    /// Zeroes rows and columns flagged in `constrained` and puts one on
    /// their diagonal.
    pub fn eliminate(&self, constrained: &[bool]) -> Self {
        let p = &*self.pattern;
        let mut values = self.values.clone();
        for i in 0..self.dim() {
            let row = p.row_ptr[i]..p.row_ptr[i + 1];
            for (v, &j) in values[row.clone()].iter_mut().zip(&p.col_idx[row]) {
                if constrained[i] || constrained[j] {
                    *v = if i == j { T::one() } else { T::zero() };
                }
            }
        }
        Self { pattern: self.pattern.clone(), values }
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        let n = self.dim();
        let mut d = DMatrix::zeros(n, n);
        for i in 0..n {
            for (j, v) in self.row(i) {
                d[(i, j)] = v;
            }
        }
        d
    }

    /// Dense copy of the rows and columns listed in `keep`.
    pub fn dense_submatrix(&self, keep: &[usize]) -> DMatrix<T> {
        let mut local = vec![usize::MAX; self.dim()];
        for (a, &i) in keep.iter().enumerate() {
            local[i] = a;
        }
        let mut d = DMatrix::zeros(keep.len(), keep.len());
        for (a, &i) in keep.iter().enumerate() {
            for (j, v) in self.row(i) {
                if local[j] != usize::MAX {
                    d[(a, local[j])] = v;
                }
            }
        }
        d
    }
}

pub fn dot<T: Real>(x: &[T], y: &[T]) -> T {
    x.iter().zip(y).fold(T::zero(), |acc, (&a, &b)| acc + a * b)
}

pub fn norm2<T: Real>(x: &[T]) -> T {
    dot(x, x).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> SparseSym<f64> {
        let cells: Vec<[usize; 2]> = (0..n - 1).map(|i| [i, i + 1]).collect();
        let mut a = SparseSym::zeros(std::sync::Arc::new(Pattern::from_cells(n, &cells)));
        for [i, j] in cells {
            a.add(i, i, 1.0);
            a.add(j, j, 1.0);
            a.add(i, j, -1.0);
            a.add(j, i, -1.0);
        }
        a
    }

    #[test]
    fn pattern_and_matvec() {
        let a = laplace_1d(4);
        assert_eq!(a.pattern().nnz(), 10);
        assert_eq!(a.mul_vec(&[1.0; 4]), vec![0.0; 4]);
        assert_eq!(a.mul_vec(&[0.0, 1.0, 0.0, 0.0]), vec![-1.0, 2.0, -1.0, 0.0]);
        assert_eq!(a.asymmetry(), 0.0);
        assert_eq!(a.get(0, 3), 0.0);
    }

    #[test]
    fn elimination_is_idempotent_and_symmetric() {
        let a = laplace_1d(5);
        let mask = [true, false, false, false, true];
        let once = a.eliminate(&mask);
        let twice = once.eliminate(&mask);
        assert_eq!(once.values(), twice.values());
        assert_eq!(once.asymmetry(), 0.0);
        assert_eq!(once.get(0, 0), 1.0);
        assert_eq!(once.get(1, 0), 0.0);
    }

    #[test]
    fn dense_round_trip() {
        let a = laplace_1d(3);
        let d = a.to_dense();
        let b = SparseSym::from_dense(&d);
        assert_eq!(b.to_dense(), d);
        let sub = a.dense_submatrix(&[1, 2]);
        assert_eq!(sub[(0, 0)], 2.0);
        assert_eq!(sub[(0, 1)], -1.0);
    }
}
