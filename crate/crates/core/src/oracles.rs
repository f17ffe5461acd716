//! Momentum-space invariants of clean translation-invariant models: the
//! link-variable Chern number and the winding number of `det a(k)`.
//!
//! Chern numbers follow the Chern character convention
//! `(i / 2 pi) ∫ Tr P [∂₁P, ∂₂P] dk`, which is minus the `1 / (2 pi i)`
//! plaquette sum of the usual link-variable formula.
//!
//! Every oracle is evaluated at `N_k` and `2 N_k` and fails if the two
//! integers differ.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DMatrix;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::hermitian_eigen;
use crate::models::{Family, ModelSpec};
use crate::C64;

/// Default momentum grid.
pub const DEFAULT_NK: usize = 40;

/// Minimum gap (Hermitian) or `|det|` (chiral) accepted on the grid.
pub const ORACLE_GAP_TOL: f64 = 1e-6;

type Symbol = Box<dyn Fn(&[f64]) -> DMatrix<C64> + Send + Sync>;

/// A Bloch symbol on the `dim`-torus: Hermitian `h(k)` or invertible `a(k)`.
pub struct BlochMap {
    dim: usize,
    fiber: usize,
    symbol: Symbol,
}

impl BlochMap {
    pub fn new<F>(dim: usize, fiber: usize, symbol: F) -> Self
    where
        F: Fn(&[f64]) -> DMatrix<C64> + Send + Sync + 'static,
    {
        Self { dim, fiber, symbol: Box::new(symbol) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn fiber(&self) -> usize {
        self.fiber
    }

    pub fn eval(&self, k: &[f64]) -> DMatrix<C64> {
        (self.symbol)(k)
    }

    /// `h(k)` of a clean model.
    pub fn hamiltonian(spec: &ModelSpec) -> Self {
        let s = spec.clean();
        Self::new(s.family.dim(), 2, move |k| s.bloch_symbol(k))
    }

    /// `a(k)` of a clean chiral model, as a 1×1 matrix.
    pub fn chiral(spec: &ModelSpec) -> Self {
        let s = spec.clean();
        Self::new(s.family.dim(), 1, move |k| DMatrix::from_element(1, 1, s.chiral_symbol(k)))
    }

    /// Restrict to two or one momentum components, holding the others at
    /// `fixed` (indexed by the remaining axes in order).
    pub fn slice(self, free: usize, fixed: Vec<f64>) -> Self {
        let fiber = self.fiber;
        let sym = self.symbol;
        Self::new(free, fiber, move |k| {
            let mut full = k.to_vec();
            full.extend_from_slice(&fixed);
            sym(&full)
        })
    }
}

fn grid_point(i: usize, n: usize) -> f64 {
    2.0 * PI * i as f64 / n as f64
}

/// Which bands define the projector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bands {
    Negative,
    Positive,
}

/// Link-variable Chern number on an `n x n` grid, without the refinement
/// check. Sign as in the module docs.
pub fn fhs_chern_on_grid(bloch: &BlochMap, n: usize, bands: Bands) -> Result<i64> {
    if bloch.dim() != 2 {
        return Err(Error::InvalidParameter("Chern number needs a 2-torus symbol".into()));
    }
    let mut frames: Vec<DMatrix<C64>> = Vec::with_capacity(n * n);
    let mut occ = None;
    for i in 0..n {
        for j in 0..n {
            let k = [grid_point(i, n), grid_point(j, n)];
            let (vals, vecs) = hermitian_eigen(&bloch.eval(&k));
            let gap = vals.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
            if gap < ORACLE_GAP_TOL {
                return Err(Error::GapClosed { k: k.to_vec(), gap });
            }
            let cols: Vec<usize> = (0..vals.len())
                .filter(|&c| match bands {
                    Bands::Negative => vals[c] < 0.0,
                    Bands::Positive => vals[c] > 0.0,
                })
                .collect();
            if *occ.get_or_insert(cols.len()) != cols.len() {
                return Err(Error::GapClosed { k: k.to_vec(), gap });
            }
            frames.push(DMatrix::from_fn(vecs.nrows(), cols.len(), |r, c| vecs[(r, cols[c])]));
        }
    }
    if occ == Some(0) {
        return Ok(0);
    }
    let at = |i: usize, j: usize| &frames[(i % n) * n + (j % n)];
    let link = |a: &DMatrix<C64>, b: &DMatrix<C64>| {
        let d = (a.adjoint() * b).determinant();
        d / d.norm()
    };
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let u1 = link(at(i, j), at(i + 1, j));
            let u2 = link(at(i + 1, j), at(i + 1, j + 1));
            let u3 = link(at(i, j + 1), at(i + 1, j + 1));
            let u4 = link(at(i, j), at(i, j + 1));
            total += (u1 * u2 / (u3 * u4)).arg();
        }
    }
    Ok(-Float::round(total / (2.0 * PI)) as i64)
}

/// Chern number of the negative-energy bands, refinement-checked at `2 n`.
pub fn fhs_chern(bloch: &BlochMap, n: usize) -> Result<i64> {
    let coarse = fhs_chern_on_grid(bloch, n, Bands::Negative)?;
    let fine = fhs_chern_on_grid(bloch, 2 * n, Bands::Negative)?;
    if coarse != fine {
        return Err(Error::RefinementUnstable { coarse, fine, n });
    }
    Ok(coarse)
}

/// Winding of `det a(k)` around the circle on an `n`-point grid.
pub fn winding_on_grid(bloch: &BlochMap, n: usize) -> Result<i64> {
    if bloch.dim() != 1 {
        return Err(Error::InvalidParameter("winding number needs a circle symbol".into()));
    }
    let dets: Vec<C64> = (0..n).map(|i| bloch.eval(&[grid_point(i, n)]).determinant()).collect();
    for (i, d) in dets.iter().enumerate() {
        if d.norm() < ORACLE_GAP_TOL {
            return Err(Error::GapClosed { k: vec![grid_point(i, n)], gap: d.norm() });
        }
    }
    let total: f64 = (0..n).map(|i| (dets[(i + 1) % n] / dets[i]).arg()).sum();
    Ok(Float::round(total / (2.0 * PI)) as i64)
}

/// Winding number, refinement-checked at `2 n`.
pub fn winding_number(bloch: &BlochMap, n: usize) -> Result<i64> {
    let coarse = winding_on_grid(bloch, n)?;
    let fine = winding_on_grid(bloch, 2 * n)?;
    if coarse != fine {
        return Err(Error::RefinementUnstable { coarse, fine, n });
    }
    Ok(coarse)
}

/// The strong invariant of a `qwz2d` or `chiral1d` model.
pub fn strong_invariant(spec: &ModelSpec, n: usize) -> Result<i64> {
    match spec.family {
        Family::Qwz2d => fhs_chern(&BlochMap::hamiltonian(spec), n),
        Family::Chiral1d => winding_number(&BlochMap::chiral(spec), n),
        f => Err(Error::InvalidParameter(alloc::format!("{} has no strong invariant oracle", f.name()))),
    }
}

/// Weak invariant of a clean stacked model: the layer invariant of the
/// symbol at each transverse momentum on an `n`-point grid, which must not
/// depend on the transverse momentum.
pub fn weak_invariant_oracle(spec: &ModelSpec, n: usize) -> Result<i64> {
    if spec.disorder != 0.0 {
        return Err(Error::InvalidParameter("weak invariant oracle needs a clean model".into()));
    }
    let (values, _) = transverse_values(spec, n)?;
    if values.iter().any(|&v| v != values[0]) {
        return Err(Error::TransverseDependence(values));
    }
    Ok(values[0])
}

fn transverse_values(spec: &ModelSpec, n: usize) -> Result<(Vec<i64>, Vec<f64>)> {
    let ks: Vec<f64> = (0..n).map(|i| grid_point(i, n)).collect();
    let mut values = Vec::with_capacity(n);
    for &kt in &ks {
        let v = match spec.family {
            Family::StackedChiral2d => winding_number(&BlochMap::chiral(spec).slice(1, vec![kt]), n)?,
            Family::StackedQwz3d => fhs_chern(&BlochMap::hamiltonian(spec).slice(2, vec![kt]), n)?,
            f => return Err(Error::InvalidParameter(alloc::format!("{} is not a stacked family", f.name()))),
        };
        values.push(v);
    }
    Ok((values, ks))
}
