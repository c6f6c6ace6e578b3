use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use crate::{Error, Result};

/// Dense real `rows × cols` matrix stored column-major.
///
/// Columns are samples, so each sample is a contiguous slice (see
/// [`DataMatrix::col`]).
#[derive(Clone, PartialEq)]
pub struct DataMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DataMatrix {
    /// Builds a matrix from column-major values, checking the shape and that
    /// every entry is finite.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("matrix dimensions must be at least 1"));
        }
        if data.len() != rows * cols {
            return Err(Error::invalid(alloc::format!(
                "expected {} values for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        let m = DataMatrix { rows, cols, data };
        m.check_finite()?;
        Ok(m)
    }

    /// Builds a matrix from row-major values.
    pub fn from_row_major(rows: usize, cols: usize, values: &[f64]) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::invalid(alloc::format!(
                "expected {} values for a {rows}x{cols} matrix, got {}",
                rows * cols,
                values.len()
            )));
        }
        let mut data = vec![0.0; rows * cols];
        for i in 0..rows {
            for j in 0..cols {
                data[j * rows + i] = values[i * cols + j];
            }
        }
        Self::new(rows, cols, data)
    }

    /// Builds a matrix from a slice of rows. Panics on ragged input.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self::from_fn(r, c, |i, j| rows[i][j])
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DataMatrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        DataMatrix { rows, cols, data: vec![value; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(&vec![1.0; n])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        DataMatrix { rows, cols, data }
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
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Column-major values.
    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        let r = self.rows;
        &mut self.data[j * r..(j + 1) * r]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.cols).map(|j| self[(i, j)]).collect()
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(k) => Err(Error::invalid(alloc::format!(
                "non-finite entry at ({}, {})",
                k % self.rows,
                k / self.rows
            ))),
        }
    }

    pub fn check_same_shape(&self, other: &DataMatrix, what: &str) -> Result<()> {
        if self.shape() == other.shape() {
            Ok(())
        } else {
            Err(Error::invalid(alloc::format!(
                "{what}: shape {}x{} does not match {}x{}",
                other.rows,
                other.cols,
                self.rows,
                self.cols
            )))
        }
    }

    pub fn transpose(&self) -> DataMatrix {
        DataMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// `self · other`. Panics on inner-dimension mismatch.
    pub fn matmul(&self, other: &DataMatrix) -> DataMatrix {
        assert_eq!(self.cols, other.rows, "matmul inner dimension mismatch");
        let mut out = DataMatrix::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let out_col = &mut out.data[j * self.rows..(j + 1) * self.rows];
            for k in 0..self.cols {
                let b = other.data[j * other.rows + k];
                if b == 0.0 {
                    continue;
                }
                let a_col = &self.data[k * self.rows..(k + 1) * self.rows];
                for (o, &a) in out_col.iter_mut().zip(a_col) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `selfᵀ · other`, computed with column dot products.
    pub fn t_matmul(&self, other: &DataMatrix) -> DataMatrix {
        assert_eq!(self.rows, other.rows, "t_matmul row mismatch");
        DataMatrix::from_fn(self.cols, other.cols, |i, j| dot(self.col(i), other.col(j)))
    }

    pub fn hadamard(&self, other: &DataMatrix) -> DataMatrix {
        assert_eq!(self.shape(), other.shape(), "hadamard shape mismatch");
        self.zip_map(other, |a, b| a * b)
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> DataMatrix {
        DataMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &DataMatrix, mut f: impl FnMut(f64, f64) -> f64) -> DataMatrix {
        assert_eq!(self.shape(), other.shape(), "shape mismatch");
        DataMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// `self += alpha · other`.
    pub fn axpy(&mut self, alpha: f64, other: &DataMatrix) {
        assert_eq!(self.shape(), other.shape(), "axpy shape mismatch");
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|v| v * v).sum())
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// Entrywise ℓ₁ norm, `Σ|a_ij|`.
    pub fn l1_norm(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn min_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn count_nonzero(&self) -> usize {
        self.data.iter().filter(|v| **v != 0.0).count()
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    /// Largest `|a_ij − a_ji|` relative to the largest entry magnitude.
    pub fn relative_asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for j in 0..self.cols {
            for i in (j + 1)..self.rows {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst / scale
    }

    /// Replaces the matrix by `(A + Aᵀ)/2`. Panics if not square.
    pub fn symmetrize(&mut self) {
        assert!(self.is_square(), "symmetrize needs a square matrix");
        let n = self.rows;
        for j in 0..n {
            for i in (j + 1)..n {
                let v = 0.5 * (self.data[j * n + i] + self.data[i * n + j]);
                self.data[j * n + i] = v;
                self.data[i * n + j] = v;
            }
        }
    }

    /// Columns `idx` in the given order.
    pub fn select_cols(&self, idx: &[usize]) -> DataMatrix {
        let mut data = Vec::with_capacity(self.rows * idx.len());
        for &j in idx {
            data.extend_from_slice(self.col(j));
        }
        DataMatrix { rows: self.rows, cols: idx.len(), data }
    }

    /// Concatenates matrices with equal row counts side by side.
    pub fn hstack(blocks: &[DataMatrix]) -> Result<DataMatrix> {
        let first = blocks.first().ok_or_else(|| Error::invalid("hstack of nothing"))?;
        let rows = first.rows;
        if blocks.iter().any(|b| b.rows != rows) {
            return Err(Error::invalid("hstack: row counts differ"));
        }
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for b in blocks {
            data.extend_from_slice(&b.data);
        }
        Ok(DataMatrix { rows, cols, data })
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Index<(usize, usize)> for DataMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[j * self.rows + i]
    }
}

impl IndexMut<(usize, usize)> for DataMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }
}

impl Add for &DataMatrix {
    type Output = DataMatrix;

    fn add(self, rhs: &DataMatrix) -> DataMatrix {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &DataMatrix {
    type Output = DataMatrix;

    fn sub(self, rhs: &DataMatrix) -> DataMatrix {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &DataMatrix {
    type Output = DataMatrix;

    fn mul(self, rhs: f64) -> DataMatrix {
        self.map(|a| a * rhs)
    }
}

impl Neg for &DataMatrix {
    type Output = DataMatrix;

    fn neg(self) -> DataMatrix {
        self.map(|a| -a)
    }
}

impl fmt::Debug for DataMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DataMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            write!(f, "  ")?;
            for j in 0..self.cols.min(8) {
                write!(f, "{:>12.5e} ", self[(i, j)])?;
            }
            if self.cols > 8 {
                write!(f, "...")?;
            }
            writeln!(f)?;
        }
        if self.rows > 8 {
            writeln!(f, "  ...")?;
        }
        write!(f, "]")
    }
}
