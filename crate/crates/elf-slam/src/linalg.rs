//! Fixed-size matrices for edge information and residual algebra, plus the
//! symmetric solvers used by the pose-graph back end.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Symmetric-friendly 2x2 matrix, row major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2<T>(pub [[T; 2]; 2]);

impl<T: Scalar> Mat2<T> {
    pub fn identity() -> Self {
        Self([[T::one(), T::zero()], [T::zero(), T::one()]])
    }

    pub fn diag(a: T, b: T) -> Self {
        Self([[a, T::zero()], [T::zero(), b]])
    }

    pub fn scaled_identity(s: T) -> Self {
        Self::diag(s, s)
    }

    pub fn mul_vec(&self, v: [T; 2]) -> [T; 2] {
        [
            self.0[0][0] * v[0] + self.0[0][1] * v[1],
            self.0[1][0] * v[0] + self.0[1][1] * v[1],
        ]
    }
}

/// 3x3 matrix, row major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3<T>(pub [[T; 3]; 3]);

impl<T: Scalar> Mat3<T> {
    pub fn zeros() -> Self {
        Self([[T::zero(); 3]; 3])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..3 {
            m.0[i][i] = T::one();
        }
        m
    }

    pub fn diag(a: T, b: T, c: T) -> Self {
        let mut m = Self::zeros();
        m.0[0][0] = a;
        m.0[1][1] = b;
        m.0[2][2] = c;
        m
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros();
        for i in 0..3 {
            for j in 0..3 {
                t.0[i][j] = self.0[j][i];
            }
        }
        t
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut r = Self::zeros();
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = T::zero();
                for k in 0..3 {
                    acc += self.0[i][k] * o.0[k][j];
                }
                r.0[i][j] = acc;
            }
        }
        r
    }

    pub fn mul_vec(&self, v: [T; 3]) -> [T; 3] {
        let mut r = [T::zero(); 3];
        for i in 0..3 {
            for j in 0..3 {
                r[i] += self.0[i][j] * v[j];
            }
        }
        r
    }

    /// Checks symmetry and positive definiteness via a 3x3 Cholesky attempt.
    pub fn is_spd(&self, sym_tol: T) -> bool {
        for i in 0..3 {
            for j in (i + 1)..3 {
                if (self.0[i][j] - self.0[j][i]).abs() > sym_tol {
                    return false;
                }
            }
        }
        let mut l = [[T::zero(); 3]; 3];
        for i in 0..3 {
            for j in 0..=i {
                let mut s = self.0[i][j];
                for k in 0..j {
                    s -= l[i][k] * l[j][k];
                }
                if i == j {
                    if s <= T::zero() {
                        return false;
                    }
                    l[i][i] = s.sqrt();
                } else {
                    l[i][j] = s / l[j][j];
                }
            }
        }
        true
    }
}

pub fn dot3<T: Scalar>(a: [T; 3], b: [T; 3]) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Dense symmetric positive-definite solve via Cholesky, for the normal
/// equations of small graphs. `a` is row-major `n x n`.
pub fn solve_spd_dense<T: Scalar>(a: &[T], b: &[T], n: usize) -> Result<Vec<T>> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    let mut l = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= T::zero() || !s.is_finite() {
                    return Err(Error::Solver(format!(
                        "dense cholesky failed at pivot {i}"
                    )));
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    // Forward then back substitution.
    let mut y = vec![T::zero(); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    Ok(x)
}

/// Sparse symmetric matrix assembled from scattered updates, stored as the
/// lower triangle in column-major order.
#[derive(Debug, Clone)]
pub struct SparseSym<T> {
    pub n: usize,
    /// Per column: sorted (row, value) entries with row >= column.
    cols: Vec<Vec<(usize, T)>>,
}

impl<T: Scalar> SparseSym<T> {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            cols: vec![Vec::new(); n],
        }
    }

    /// Adds `v` at (i, j); only the lower triangle is stored.
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let col = &mut self.cols[c];
        match col.binary_search_by_key(&r, |e| e.0) {
            Ok(pos) => col[pos].1 += v,
            Err(pos) => col.insert(pos, (r, v)),
        }
    }

    pub fn diagonal(&self) -> Vec<T> {
        let mut d = vec![T::zero(); self.n];
        for (c, col) in self.cols.iter().enumerate() {
            if let Some(&(r, v)) = col.first() {
                if r == c {
                    d[c] = v;
                }
            }
        }
        d
    }

    /// Solves `(self + damping) x = b` by up-looking sparse Cholesky in
    /// natural order. `damping[i]` is added to the i-th diagonal entry.
    pub fn solve_damped(&self, b: &[T], damping: &[T]) -> Result<Vec<T>> {
        let n = self.n;
        // Column-lists of the factor L (lower triangle, sorted rows).
        let mut l_cols: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
        // Dense scatter workspace for the current column.
        let mut work = vec![T::zero(); n];
        let mut touched = Vec::new();
        for j in 0..n {
            for &(r, v) in &self.cols[j] {
                if work[r] == T::zero() {
                    touched.push(r);
                }
                work[r] += v;
            }
            if work[j] == T::zero() {
                touched.push(j);
            }
            work[j] += damping[j];
            // Subtract contributions of previous columns k < j with L[j,k] != 0.
            for k in 0..j {
                let ljk = match l_cols[k].binary_search_by_key(&j, |e| e.0) {
                    Ok(pos) => l_cols[k][pos].1,
                    Err(_) => continue,
                };
                let start = l_cols[k].partition_point(|e| e.0 < j);
                for &(r, lrk) in &l_cols[k][start..] {
                    if work[r] == T::zero() && r != j {
                        touched.push(r);
                    }
                    work[r] -= lrk * ljk;
                }
            }
            let pivot = work[j];
            if pivot <= T::zero() || !pivot.is_finite() {
                return Err(Error::Solver(format!(
                    "sparse cholesky failed at pivot {j}"
                )));
            }
            let d = pivot.sqrt();
            let mut col = Vec::with_capacity(touched.len());
            col.push((j, d));
            touched.sort_unstable();
            touched.dedup();
            for &r in touched.iter().filter(|&&r| r > j) {
                if work[r] != T::zero() {
                    col.push((r, work[r] / d));
                }
            }
            for &r in &touched {
                work[r] = T::zero();
            }
            touched.clear();
            l_cols[j] = col;
        }
        // L y = b
        let mut y = b.to_vec();
        for j in 0..n {
            let d = l_cols[j][0].1;
            y[j] /= d;
            let yj = y[j];
            for &(r, v) in &l_cols[j][1..] {
                y[r] -= v * yj;
            }
        }
        // L^T x = y
        let mut x = y;
        for j in (0..n).rev() {
            let mut s = x[j];
            for &(r, v) in &l_cols[j][1..] {
                s -= v * x[r];
            }
            x[j] = s / l_cols[j][0].1;
        }
        Ok(x)
    }
}
