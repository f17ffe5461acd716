//! Dense Hermitian eigenvalue helpers and a Lanczos iteration for extreme
//! eigenvalues of implicitly given Hermitian operators.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;
use crate::C64;

/// Above this dimension dense eigensolves are avoided in favour of
/// factorization-based or Krylov methods.
pub const DENSE_EIGEN_LIMIT: usize = 1000;

/// Hard ceiling for explicit dense eigencounts.
pub const DENSE_EIGENCOUNT_MAX: usize = 4000;

/// Below this dimension operator norms are computed from a dense eigensolve.
pub const DENSE_NORM_LIMIT: usize = 400;

/// `(A + A^*)/2`, which is what the eigen routines actually see.
pub fn hermitian_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()).scale(0.5)
}

/// Largest `|m_ij - conj(m_ji)|`.
pub fn hermitian_deviation(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for j in 0..n {
        for i in 0..=j {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Eigenvalues in ascending order.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let mut vals: Vec<f64> = hermitian_part(m).symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// Eigenvalues in ascending order with matching eigenvector columns.
pub fn hermitian_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (vals, vecs)
}

/// Spectral norm of a dense matrix.
pub fn dense_operator_norm(m: &DMatrix<C64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// Extreme Ritz values of a Lanczos run, with residual bounds
/// `|lambda - theta| <= residual` for some eigenvalue `lambda`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Extremes {
    pub min: f64,
    pub max: f64,
    pub min_residual: f64,
    pub max_residual: f64,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct LanczosOptions {
    pub max_iter: usize,
    /// Relative residual target for both extreme Ritz values.
    pub tol: f64,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            max_iter: 300,
            tol: 1e-10,
            seed: 0x51_6c_6f_63,
        }
    }
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Lanczos with full reorthogonalization. `apply(x, y)` must write `A x`
/// into `y` for a Hermitian `A` of dimension `dim`.
///
/// The start vector is drawn from a fixed-seed generator, so repeated calls
/// give identical results.
pub fn lanczos_extremes<F>(dim: usize, mut apply: F, opts: LanczosOptions) -> Result<Extremes>
where
    F: FnMut(&[C64], &mut [C64]),
{
    if dim == 0 {
        return Err(Error::InvalidParameter("empty operator".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut q: Vec<C64> = (0..dim)
        .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let nq = norm(&q);
    q.iter_mut().for_each(|v| *v /= nq);

    let max_iter = opts.max_iter.min(dim).max(1);
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(max_iter);
    let mut alphas: Vec<f64> = Vec::with_capacity(max_iter);
    let mut betas: Vec<f64> = Vec::with_capacity(max_iter);
    let mut w = vec![C64::zero(); dim];
    let mut last = None;

    for _ in 0..max_iter {
        apply(&q, &mut w);
        let alpha = dot(&q, &w).re;
        for (wi, qi) in w.iter_mut().zip(&q) {
            *wi -= *qi * alpha;
        }
        if let (Some(prev), Some(&beta)) = (basis.last(), betas.last()) {
            for (wi, pi) in w.iter_mut().zip(prev.iter()) {
                *wi -= *pi * beta;
            }
        }
        basis.push(q.clone());
        alphas.push(alpha);
        // Two passes of classical Gram-Schmidt against the whole basis.
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= *bi * c;
                }
            }
        }
        let beta = norm(&w);
        let m = alphas.len();
        let done = beta <= 1e-14 * alphas.iter().map(|a| a.abs()).fold(1e-300, f64::max)
            || m == max_iter;
        if done || m % 5 == 0 {
            let ext = ritz_extremes(&alphas, &betas, beta, m);
            let scale = ext.min.abs().max(ext.max.abs()).max(1e-300);
            let converged = ext.min_residual <= opts.tol * scale && ext.max_residual <= opts.tol * scale;
            last = Some(ext);
            if converged || done {
                break;
            }
        }
        betas.push(beta);
        for (qi, wi) in q.iter_mut().zip(&w) {
            *qi = *wi / beta;
        }
    }
    last.ok_or_else(|| Error::NoConvergence("lanczos produced no Ritz values".into()))
}

fn ritz_extremes(alphas: &[f64], betas: &[f64], beta_next: f64, m: usize) -> Extremes {
    let t = DMatrix::<f64>::from_fn(m, m, |i, j| {
        if i == j {
            alphas[i]
        } else if i + 1 == j {
            betas[i]
        } else if j + 1 == i {
            betas[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let (mut imin, mut imax) = (0, 0);
    for k in 0..m {
        if eig.eigenvalues[k] < eig.eigenvalues[imin] {
            imin = k;
        }
        if eig.eigenvalues[k] > eig.eigenvalues[imax] {
            imax = k;
        }
    }
    Extremes {
        min: eig.eigenvalues[imin],
        max: eig.eigenvalues[imax],
        min_residual: beta_next * eig.eigenvectors[(m - 1, imin)].abs(),
        max_residual: beta_next * eig.eigenvectors[(m - 1, imax)].abs(),
        iterations: m,
    }
}

/// Largest singular value of a sparse matrix: dense below
/// [`DENSE_NORM_LIMIT`], otherwise Lanczos on `A^* A`.
pub fn sparse_operator_norm(a: &SparseMatrix) -> Result<f64> {
    if a.nnz() == 0 {
        return Ok(0.0);
    }
    if a.nrows().max(a.ncols()) <= DENSE_NORM_LIMIT {
        return Ok(dense_operator_norm(&a.to_dense()));
    }
    let mut tmp = vec![C64::zero(); a.nrows()];
    let ext = lanczos_extremes(
        a.ncols(),
        |x, y| {
            a.matvec_into(x, &mut tmp);
            a.adjoint_matvec_into(&tmp, y);
        },
        LanczosOptions {
            tol: 1e-12,
            ..Default::default()
        },
    )?;
    Ok(ext.max.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lanczos_finds_extremes_of_diagonal() {
        let n = 600;
        let diag: Vec<f64> = (0..n).map(|i| -3.0 + 6.0 * (i as f64) / (n as f64 - 1.0)).collect();
        let ext = lanczos_extremes(
            n,
            |x, y| {
                for i in 0..n {
                    y[i] = x[i] * diag[i];
                }
            },
            LanczosOptions::default(),
        )
        .unwrap();
        assert!((ext.min + 3.0).abs() < 1e-8, "{ext:?}");
        assert!((ext.max - 3.0).abs() < 1e-8, "{ext:?}");
    }

    #[test]
    fn sparse_norm_matches_dense_above_threshold() {
        let n = 500;
        let trips = (0..n).flat_map(|i| {
            [
                (i, (i + 1) % n, C64::new(1.0, 0.5)),
                (i, i, C64::new((i % 7) as f64 * 0.1, 0.0)),
            ]
        });
        let a = SparseMatrix::from_triplets(n, n, trips);
        let dense = dense_operator_norm(&a.to_dense());
        let sparse = sparse_operator_norm(&a).unwrap();
        assert!((dense - sparse).abs() <= 1e-10 * dense, "{dense} vs {sparse}");
    }
}
