#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sigloc_core::C64;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn unitary(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<C64> {
    DMatrix::from_fn(n, n, |_, _| gaussian(rng)).qr().q()
}

pub fn diag(vals: &[f64]) -> DMatrix<C64> {
    DMatrix::from_fn(vals.len(), vals.len(), |i, j| if i == j { c(vals[i]) } else { c(0.0) })
}

pub fn symmetrize(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()) * c(0.5)
}

/// Hermitian with eigenvalues of magnitude in `[gap, gap + 2]` and random signs.
pub fn gapped(rng: &mut ChaCha8Rng, n: usize, gap: f64) -> DMatrix<C64> {
    let vals: Vec<f64> = (0..n)
        .map(|_| {
            let v = gap + 2.0 * rng.random::<f64>();
            if rng.random::<bool>() {
                v
            } else {
                -v
            }
        })
        .collect();
    let u = unitary(rng, n);
    symmetrize(&(&u * diag(&vals) * u.adjoint()))
}

pub fn hermitian(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<C64> {
    symmetrize(&DMatrix::from_fn(n, n, |_, _| gaussian(rng)))
}

/// Orthogonal projection onto a random `r`-dimensional subspace.
pub fn projection(rng: &mut ChaCha8Rng, n: usize, r: usize) -> DMatrix<C64> {
    if r == 0 {
        return DMatrix::zeros(n, n);
    }
    let q = unitary(rng, n).columns(0, r).into_owned();
    symmetrize(&(&q * q.adjoint()))
}
