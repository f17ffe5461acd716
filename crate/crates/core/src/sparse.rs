//! Compressed sparse row storage for complex matrices.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::C64;

/// A complex CSR matrix. Column indices are sorted within each row and
/// duplicates are summed at construction; exact zeros are not stored.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![C64::new(1.0, 0.0); n])
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let n = diag.len();
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n);
        indptr.push(0);
        for (i, &v) in diag.iter().enumerate() {
            if !v.is_zero() {
                indices.push(i);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        Self {
            nrows: n,
            ncols: n,
            indptr,
            indices,
            values,
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets<I>(nrows: usize, ncols: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, C64)>,
    {
        let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); nrows];
        for (i, j, v) in triplets {
            assert!(i < nrows && j < ncols, "triplet ({i}, {j}) out of bounds");
            rows[i].push((j, v));
        }
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for row in rows.iter_mut() {
            row.sort_by_key(|&(j, _)| j);
            let mut k = 0;
            while k < row.len() {
                let j = row[k].0;
                let mut acc = C64::zero();
                while k < row.len() && row[k].0 == j {
                    acc += row[k].1;
                    k += 1;
                }
                if !acc.is_zero() {
                    indices.push(j);
                    values.push(acc);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    /// Keeps entries with `|value| > drop_tol`.
    pub fn from_dense(m: &DMatrix<C64>, drop_tol: f64) -> Self {
        let (nr, nc) = m.shape();
        let trips = (0..nr).flat_map(move |i| (0..nc).map(move |j| (i, j)));
        Self::from_triplets(
            nr,
            nc,
            trips.filter_map(|(i, j)| {
                let v = m[(i, j)];
                (v.norm() > drop_tol).then_some((i, j, v))
            }),
        )
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    /// Entries of row `i` as `(column, value)` pairs in increasing column order.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        self.indices[a..b]
            .iter()
            .copied()
            .zip(self.values[a..b].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        match self.indices[a..b].binary_search(&j) {
            Ok(pos) => self.values[a + pos],
            Err(_) => C64::zero(),
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(
            self.ncols,
            self.nrows,
            self.triplets().map(|(i, j, v)| (j, i, v.conj())),
        )
    }

    pub fn scale(&self, c: C64) -> Self {
        if c.is_zero() {
            return Self::zeros(self.nrows, self.ncols);
        }
        let mut out = self.clone();
        for v in out.values.iter_mut() {
            *v *= c;
        }
        out
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(C64::new(c, 0.0))
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, other: &Self, alpha: C64) -> Result<Self> {
        self.check_same_shape(other)?;
        let mut indptr = Vec::with_capacity(self.nrows + 1);
        let mut indices = Vec::with_capacity(self.nnz() + other.nnz());
        let mut values = Vec::with_capacity(self.nnz() + other.nnz());
        indptr.push(0);
        for i in 0..self.nrows {
            let mut a = self.row(i).peekable();
            let mut b = other.row(i).map(|(j, v)| (j, v * alpha)).peekable();
            loop {
                let next = match (a.peek(), b.peek()) {
                    (None, None) => break,
                    (Some(_), None) => a.next().unwrap(),
                    (None, Some(_)) => b.next().unwrap(),
                    (Some(&(ja, va)), Some(&(jb, vb))) => {
                        if ja < jb {
                            a.next();
                            (ja, va)
                        } else if jb < ja {
                            b.next();
                            (jb, vb)
                        } else {
                            a.next();
                            b.next();
                            (ja, va + vb)
                        }
                    }
                };
                if !next.1.is_zero() {
                    indices.push(next.0);
                    values.push(next.1);
                }
            }
            indptr.push(indices.len());
        }
        Ok(Self {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr,
            indices,
            values,
        })
    }

    /// Sparse product by row-wise accumulation.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.ncols != other.nrows {
            return Err(Error::DimensionMismatch {
                left: self.ncols,
                right: other.nrows,
            });
        }
        let mut acc = vec![C64::zero(); other.ncols];
        let mut touched = vec![false; other.ncols];
        let mut cols: Vec<usize> = Vec::new();
        let mut indptr = Vec::with_capacity(self.nrows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for i in 0..self.nrows {
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    if !touched[j] {
                        touched[j] = true;
                        cols.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            cols.sort_unstable();
            for &j in &cols {
                if !acc[j].is_zero() {
                    indices.push(j);
                    values.push(acc[j]);
                }
                acc[j] = C64::zero();
                touched[j] = false;
            }
            cols.clear();
            indptr.push(indices.len());
        }
        Ok(Self {
            nrows: self.nrows,
            ncols: other.ncols,
            indptr,
            indices,
            values,
        })
    }

    /// `y = self * x`.
    pub fn matvec_into(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let (a, b) = (self.indptr[i], self.indptr[i + 1]);
            let mut s = C64::zero();
            for k in a..b {
                s += self.values[k] * x[self.indices[k]];
            }
            *yi = s;
        }
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::zero(); self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    /// `y = self^* x`.
    pub fn adjoint_matvec_into(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.nrows);
        assert_eq!(y.len(), self.ncols);
        y.iter_mut().for_each(|v| *v = C64::zero());
        for (i, &xi) in x.iter().enumerate() {
            for (j, v) in self.row(i) {
                y[j] += v.conj() * xi;
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise `|a_ij - b_ij|`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        Ok(self.add_scaled(other, C64::new(-1.0, 0.0))?.max_abs())
    }

    /// Largest entrywise `|a_ij - conj(a_ji)|`; zero for exactly Hermitian storage.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut dev: f64 = 0.0;
        for (i, j, v) in self.triplets() {
            dev = dev.max((v - self.get(j, i).conj()).norm());
        }
        dev
    }

    /// Submatrix on the rows and columns listed in `keep` (in that order).
    pub fn principal_submatrix(&self, keep: &[usize]) -> Self {
        let mut map = vec![usize::MAX; self.ncols];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let n = keep.len();
        Self::from_triplets(
            n,
            n,
            keep.iter().enumerate().flat_map(|(new_i, &old_i)| {
                let map = &map;
                self.row(old_i).filter_map(move |(j, v)| {
                    let nj = map[j];
                    (nj != usize::MAX).then_some((new_i, nj, v))
                })
            }),
        )
    }

    /// `self - shift * I`.
    pub fn shifted(&self, shift: f64) -> Self {
        if shift == 0.0 {
            return self.clone();
        }
        let id = Self::identity(self.nrows);
        self.add_scaled(&id, C64::new(-shift, 0.0))
            .expect("square matrix")
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch {
                left: self.nrows * self.ncols,
                right: other.nrows * other.ncols,
            });
        }
        Ok(())
    }
}

impl Add for &SparseMatrix {
    type Output = SparseMatrix;
    fn add(self, rhs: Self) -> SparseMatrix {
        self.add_scaled(rhs, C64::new(1.0, 0.0))
            .expect("shape mismatch in sparse addition")
    }
}

impl Sub for &SparseMatrix {
    type Output = SparseMatrix;
    fn sub(self, rhs: Self) -> SparseMatrix {
        self.add_scaled(rhs, C64::new(-1.0, 0.0))
            .expect("shape mismatch in sparse subtraction")
    }
}

impl Mul for &SparseMatrix {
    type Output = SparseMatrix;
    fn mul(self, rhs: Self) -> SparseMatrix {
        self.matmul(rhs).expect("shape mismatch in sparse product")
    }
}
