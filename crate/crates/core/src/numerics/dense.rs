//! Row-major dense matrices and LU with partial pivoting.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::math::{abs, dot, norm2, scale};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                what: "matrix data",
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        let mut m = Matrix::zeros(rows, cols);
        for (j, c) in columns.iter().enumerate() {
            m.set_column(j, c)?;
        }
        Ok(m)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.data[i * self.cols + j]).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[f64]) -> Result<()> {
        if values.len() != self.rows {
            return Err(Error::DimensionMismatch {
                what: "matrix column",
                expected: self.rows,
                found: values.len(),
            });
        }
        for (i, &v) in values.iter().enumerate() {
            self.data[i * self.cols + j] = v;
        }
        Ok(())
    }

    /// `out = A x`
    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        for (i, o) in out.iter_mut().enumerate().take(self.rows) {
            *o = dot(self.row(i), x);
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        self.matvec(x, &mut out);
        out
    }

    /// `out = Aᵀ x`
    pub fn transpose_matvec(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, &xi) in x.iter().enumerate().take(self.rows) {
            if xi != 0.0 {
                for (o, a) in out.iter_mut().zip(self.row(i)) {
                    *o += xi * a;
                }
            }
        }
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                what: "matrix product",
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let (a_row, o_row) = (self.row(i), &mut out.data[i * other.cols..(i + 1) * other.cols]);
            for (k, &a) in a_row.iter().enumerate() {
                if a != 0.0 {
                    for (o, b) in o_row.iter_mut().zip(other.row(k)) {
                        *o += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|x| abs(*x)).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(abs(*x)))
    }

    pub fn lu(&self) -> Result<LuFactor> {
        LuFactor::new(self.clone())
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// `PA = LU` with unit lower `L`, stored in place.
#[derive(Debug, Clone)]
pub struct LuFactor {
    n: usize,
    lu: Matrix,
    pivots: Vec<usize>,
}

impl LuFactor {
    pub fn new(mut a: Matrix) -> Result<Self> {
        if a.rows != a.cols {
            return Err(Error::DimensionMismatch {
                what: "LU of non-square matrix",
                expected: a.rows,
                found: a.cols,
            });
        }
        let n = a.rows;
        let threshold = (n.max(1) as f64) * f64::EPSILON * a.max_abs();
        let mut pivots = vec![0; n];
        let data = &mut a.data;
        for k in 0..n {
            let mut p = k;
            let mut best = abs(data[k * n + k]);
            for i in k + 1..n {
                let v = abs(data[i * n + k]);
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || best <= threshold || !best.is_finite() {
                return Err(Error::Singular {
                    index: k,
                    value: data[p * n + k],
                });
            }
            pivots[k] = p;
            if p != k {
                for j in 0..n {
                    data.swap(k * n + j, p * n + j);
                }
            }
            let (top, bottom) = data.split_at_mut((k + 1) * n);
            let pivot_row = &top[k * n..];
            let inv = 1.0 / pivot_row[k];
            for row in bottom.chunks_exact_mut(n) {
                let l = row[k] * inv;
                row[k] = l;
                if l != 0.0 {
                    for (r, u) in row[k + 1..].iter_mut().zip(&pivot_row[k + 1..]) {
                        *r -= l * u;
                    }
                }
            }
        }
        Ok(LuFactor { n, lu: a, pivots })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        let lu = &self.lu.data;
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
        }
        for i in 0..n {
            let s = dot(&lu[i * n..i * n + i], &b[..i]);
            b[i] -= s;
        }
        for i in (0..n).rev() {
            let s = dot(&lu[i * n + i + 1..(i + 1) * n], &b[i + 1..]);
            b[i] = (b[i] - s) / lu[i * n + i];
        }
    }

    /// Solves `Aᵀ x = b` in place.
    pub fn solve_transpose_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        let lu = &self.lu.data;
        // Uᵀ y = b
        for k in 0..n {
            b[k] /= lu[k * n + k];
            let yk = b[k];
            if yk != 0.0 {
                for (bi, u) in b[k + 1..].iter_mut().zip(&lu[k * n + k + 1..(k + 1) * n]) {
                    *bi -= yk * u;
                }
            }
        }
        // Lᵀ z = y
        for k in (0..n).rev() {
            let zk = b[k];
            if zk != 0.0 {
                for (bi, l) in b[..k].iter_mut().zip(&lu[k * n..k * n + k]) {
                    *bi -= zk * l;
                }
            }
        }
        for k in (0..n).rev() {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_matrix(&self, b: &Matrix) -> Result<Matrix> {
        if b.rows != self.n {
            return Err(Error::DimensionMismatch {
                what: "right-hand side rows",
                expected: self.n,
                found: b.rows,
            });
        }
        let mut out = Matrix::zeros(b.rows, b.cols);
        for j in 0..b.cols {
            let x = self.solve(&b.column(j));
            out.set_column(j, &x)?;
        }
        Ok(out)
    }
}

/// Solves `A X = B` by LU with partial pivoting.
pub fn direct_solve(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    a.lu()?.solve_matrix(b)
}

/// Spectral condition number `σ_max / σ_min`, estimated by power iteration on
/// `AᵀA` and inverse power iteration through the factorization.
pub fn condition_number_2(a: &Matrix, lu: &LuFactor) -> f64 {
    let n = a.rows;
    if n == 0 {
        return 1.0;
    }
    let start: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * libm::sin(i as f64 * 1.618)).collect();
    let mut tmp = vec![0.0; n];

    let mut x = start.clone();
    let n0 = norm2(&x);
    scale(&mut x, 1.0 / n0);
    let mut sigma_max_sq = 0.0;
    for _ in 0..1000 {
        a.matvec(&x, &mut tmp);
        a.transpose_matvec(&tmp, &mut x);
        let lambda = norm2(&x);
        scale(&mut x, 1.0 / lambda);
        let done = abs(lambda - sigma_max_sq) <= 1e-13 * lambda;
        sigma_max_sq = lambda;
        if done {
            break;
        }
    }

    let mut x = start;
    let n0 = norm2(&x);
    scale(&mut x, 1.0 / n0);
    let mut inv_sigma_min_sq = 0.0;
    for _ in 0..1000 {
        lu.solve_transpose_in_place(&mut x);
        lu.solve_in_place(&mut x);
        let lambda = norm2(&x);
        scale(&mut x, 1.0 / lambda);
        let done = abs(lambda - inv_sigma_min_sq) <= 1e-13 * lambda;
        inv_sigma_min_sq = lambda;
        if done {
            break;
        }
    }
    crate::math::sqrt(sigma_max_sq * inv_sigma_min_sq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Matrix {
        Matrix::from_fn(n, m, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn identity_solve_returns_rhs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = random_matrix(&mut rng, 4, 3);
        let x = direct_solve(&Matrix::identity(4), &b).unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn scaled_identity_halves() {
        let mut a = Matrix::identity(3);
        scale(a.as_mut_slice(), 2.0);
        let x = direct_solve(&a, &Matrix::identity(3)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(x[(i, j)], if i == j { 0.5 } else { 0.0 });
            }
        }
    }

    #[test]
    fn random_residual_is_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let a = random_matrix(&mut rng, 10, 10);
            let b = random_matrix(&mut rng, 10, 3);
            let x = direct_solve(&a, &b).unwrap();
            let ax = a.matmul(&x).unwrap();
            let resid = ax
                .as_slice()
                .iter()
                .zip(b.as_slice())
                .fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
            assert!(resid <= 1e-10 * b.max_abs(), "residual {resid}");
        }
    }

    #[test]
    fn transpose_solve_matches_explicit_transpose() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_matrix(&mut rng, 12, 12);
        let at = Matrix::from_fn(12, 12, |i, j| a[(j, i)]);
        let b: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut x = b.clone();
        a.lu().unwrap().solve_transpose_in_place(&mut x);
        let y = at.lu().unwrap().solve(&b);
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).abs() < 1e-10);
        }
    }

    #[test]
    fn singular_matrix_reports_pivot() {
        let a = Matrix::from_row_major(2, 2, vec![1.0, 2.0, 2.0, 4.0]).unwrap();
        match a.lu() {
            Err(Error::Singular { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected singular error, got {other:?}"),
        }
    }

    #[test]
    fn condition_number_of_diagonal() {
        let a = Matrix::from_fn(4, 4, |i, j| if i == j { [1.0, 2.0, 5.0, 10.0][i] } else { 0.0 });
        let cond = condition_number_2(&a, &a.lu().unwrap());
        assert!((cond - 10.0).abs() < 1e-8, "cond {cond}");
    }
}
