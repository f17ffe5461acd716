//! Tight-binding model families.
//!
//! Hopping convention: `T_j` is the translation `(T_j psi)(x) = psi(x + e_j)`,
//! which has Bloch symbol `e^{i k_j}`; a hopping matrix `t_j` enters as
//! `<x|h|x + e_j> = t_j` plus its adjoint. With magnetic flux `phi` per
//! plaquette (Landau gauge) the axis-1 hop from `x` picks up
//! `e^{2 pi i phi x_0}`.
//!
//! Chiral families are stored as `h = ((0, a*), (a, 0))` in the orbital
//! grading, orbital 0 first.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DMatrix;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{self, Boundary, LatticeGeometry, OperatorMatrix};
use crate::sparse::SparseMatrix;
use crate::C64;

/// Spectral gaps below this are treated as critical.
pub const CRITICAL_GAP: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `sin k1 s1 + sin k2 s2 + (m + cos k1 + cos k2) s3`.
    Qwz2d,
    /// QWZ layers on axes 0, 1 coupled by `t_perp s3` hops along axis 2.
    StackedQwz3d,
    /// `a(k) = m + e^{ik}`.
    Chiral1d,
    /// `a(k) = m + e^{i k1} + t_perp e^{i k2}`.
    StackedChiral2d,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Qwz2d => "qwz2d",
            Family::StackedQwz3d => "stacked_qwz3d",
            Family::Chiral1d => "chiral1d",
            Family::StackedChiral2d => "stacked_chiral2d",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Family::Qwz2d, Family::StackedQwz3d, Family::Chiral1d, Family::StackedChiral2d]
            .into_iter()
            .find(|f| f.name() == s)
    }

    pub fn dim(self) -> usize {
        match self {
            Family::Chiral1d => 1,
            Family::Qwz2d | Family::StackedChiral2d => 2,
            Family::StackedQwz3d => 3,
        }
    }

    /// Orbitals per site of `h`.
    pub fn fiber(self) -> usize {
        2
    }

    pub fn is_chiral(self) -> bool {
        matches!(self, Family::Chiral1d | Family::StackedChiral2d)
    }

    /// Number of pairing directions of the strong invariant (1 for chiral,
    /// 2 for Chern families).
    pub fn pairing_directions(self) -> usize {
        if self.is_chiral() {
            1
        } else {
            2
        }
    }
}

/// Rational flux `p / q` per plaquette.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flux {
    pub p: i64,
    pub q: u64,
}

impl Flux {
    pub const ZERO: Flux = Flux { p: 0, q: 1 };

    pub fn value(self) -> f64 {
        self.p as f64 / self.q as f64
    }

    pub fn is_zero(self) -> bool {
        self.p == 0
    }
}

impl Default for Flux {
    fn default() -> Self {
        Flux::ZERO
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    pub mass: f64,
    #[serde(default)]
    pub t_perp: f64,
    #[serde(default)]
    pub disorder: f64,
    #[serde(default)]
    pub flux: Flux,
}

impl ModelSpec {
    pub fn new(family: Family, mass: f64) -> Self {
        Self { family, mass, t_perp: 0.0, disorder: 0.0, flux: Flux::ZERO }
    }

    pub fn with_t_perp(mut self, t: f64) -> Self {
        self.t_perp = t;
        self
    }

    pub fn with_disorder(mut self, w: f64) -> Self {
        self.disorder = w;
        self
    }

    pub fn with_flux(mut self, flux: Flux) -> Self {
        self.flux = flux;
        self
    }

    /// Same model without disorder.
    pub fn clean(&self) -> Self {
        Self { disorder: 0.0, ..self.clone() }
    }

    /// Parameter checks, including the refusal of critical parameters.
    pub fn validate(&self) -> Result<()> {
        let mut problems: Vec<String> = Vec::new();
        if !self.mass.is_finite() || !self.t_perp.is_finite() {
            problems.push("parameters must be finite".into());
        }
        if !(self.disorder >= 0.0) || !self.disorder.is_finite() {
            problems.push(format!("disorder strength {} must be finite and nonnegative", self.disorder));
        }
        if self.family.is_chiral() && self.disorder >= 2.0 {
            problems.push(format!("chiral disorder {} must be below 2 so that 1 + eps stays positive", self.disorder));
        }
        if self.flux.q == 0 {
            problems.push("flux denominator must be positive".into());
        }
        if matches!(self.family, Family::Qwz2d | Family::Chiral1d) && self.t_perp != 0.0 {
            problems.push(format!("t_perp is only used by stacked families, got {}", self.t_perp));
        }
        if !self.flux.is_zero() && self.family == Family::Chiral1d {
            problems.push("flux needs at least two axes".into());
        }
        if !problems.is_empty() {
            return Err(Error::InvalidParameter(problems.join("; ")));
        }
        if self.flux.is_zero() {
            let gap = self.symbol_gap();
            if gap < CRITICAL_GAP {
                return Err(Error::CriticalParameters(format!(
                    "{} at m = {}, t_perp = {} has bulk gap {gap:e}; move off {}",
                    self.family.name(),
                    self.mass,
                    self.t_perp,
                    self.critical_hint()
                )));
            }
        }
        Ok(())
    }

    fn critical_hint(&self) -> &'static str {
        match self.family {
            Family::Qwz2d => "m in {-2, 0, 2}",
            Family::StackedQwz3d => "m + 2 t_perp cos k3 in {-2, 0, 2}",
            Family::Chiral1d => "|m| = 1",
            Family::StackedChiral2d => "| |m| - 1 | <= |t_perp|",
        }
    }

    /// Exact gap of the clean Bloch symbol, `min_k |spec h(k)|`.
    pub fn symbol_gap(&self) -> f64 {
        let m = self.mass;
        let t = self.t_perp.abs();
        let qwz = |m: f64| (m + 2.0).abs().min(m.abs()).min((m - 2.0).abs());
        match self.family {
            Family::Qwz2d => qwz(m),
            Family::StackedQwz3d => {
                let (lo, hi) = (m - 2.0 * t, m + 2.0 * t);
                let mut gap = qwz(lo).min(qwz(hi));
                if [-2.0, 0.0, 2.0].iter().any(|&c| lo <= c && c <= hi) {
                    gap = 0.0;
                }
                gap
            }
            Family::Chiral1d => (m.abs() - 1.0).abs(),
            Family::StackedChiral2d => {
                let (inner, outer) = ((1.0 - t).abs(), 1.0 + t);
                let r = m.abs();
                if r < inner {
                    inner - r
                } else if r > outer {
                    r - outer
                } else {
                    0.0
                }
            }
        }
    }

    /// Bloch symbol of the clean model with zero flux. For chiral families
    /// this is the full `h(k)`, built from [`ModelSpec::chiral_symbol`].
    pub fn bloch_symbol(&self, k: &[f64]) -> DMatrix<C64> {
        let m = self.mass;
        match self.family {
            Family::Qwz2d => qwz_symbol(m, k[0], k[1]),
            Family::StackedQwz3d => qwz_symbol(m + 2.0 * self.t_perp * k[2].cos(), k[0], k[1]),
            Family::Chiral1d | Family::StackedChiral2d => {
                let a = self.chiral_symbol(k);
                let z = C64::zero();
                DMatrix::from_row_slice(2, 2, &[z, a.conj(), a, z])
            }
        }
    }

    /// `a(k)` of a chiral family.
    pub fn chiral_symbol(&self, k: &[f64]) -> C64 {
        let e = |x: f64| C64::new(x.cos(), x.sin());
        match self.family {
            Family::Chiral1d => C64::new(self.mass, 0.0) + e(k[0]),
            Family::StackedChiral2d => C64::new(self.mass, 0.0) + e(k[0]) + e(k[1]) * self.t_perp,
            _ => C64::zero(),
        }
    }
}

/// `sin k1 s1 + sin k2 s2 + (m + cos k1 + cos k2) s3`.
pub fn qwz_symbol(m: f64, k1: f64, k2: f64) -> DMatrix<C64> {
    let dz = m + k1.cos() + k2.cos();
    DMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(dz, 0.0),
            C64::new(k1.sin(), -k2.sin()),
            C64::new(k1.sin(), k2.sin()),
            C64::new(-dz, 0.0),
        ],
    )
}

fn check_geometry(spec: &ModelSpec, geometry: &LatticeGeometry, fiber: usize) -> Result<()> {
    if geometry.dim() != spec.family.dim() {
        return Err(Error::GeometryMismatch(format!(
            "{} needs a {}-dimensional geometry, got {}",
            spec.family.name(),
            spec.family.dim(),
            geometry.dim()
        )));
    }
    if geometry.fiber() != fiber {
        return Err(Error::GeometryMismatch(format!("expected fiber {fiber}, got {}", geometry.fiber())));
    }
    if !spec.flux.is_zero() && geometry.boundary()[0] == Boundary::Periodic {
        let side = match geometry.site_set() {
            lattice::SiteSet::Cube(c) => c.sides[0] as u64,
            lattice::SiteSet::Product(_, c) if geometry.ball_axes() == 0 => c.sides[0] as u64,
            _ => 0,
        };
        if side == 0 || (spec.flux.p.unsigned_abs() * side) % spec.flux.q != 0 {
            return Err(Error::GeometryMismatch(format!(
                "flux {}/{} is incompatible with a periodic axis 0 of length {side}",
                spec.flux.p, spec.flux.q
            )));
        }
    }
    Ok(())
}

/// Translation phase for the hop `x -> x + e_axis`.
fn peierls(spec: &ModelSpec, site: &lattice::Site, axis: usize) -> C64 {
    if axis != 1 || spec.flux.is_zero() {
        return C64::new(1.0, 0.0);
    }
    let theta = 2.0 * PI * (((spec.flux.p * site[0]).rem_euclid(spec.flux.q as i64)) as f64) / spec.flux.q as f64;
    C64::new(theta.cos(), theta.sin())
}

/// Add `<x|h|x+e_axis> = t` and its adjoint for every in-volume pair.
fn push_hops(trips: &mut Vec<(usize, usize, C64)>, g: &LatticeGeometry, spec: &ModelSpec, axis: usize, t: &DMatrix<C64>) {
    let f = t.nrows();
    for s in 0..g.num_sites() {
        let Some(nb) = g.neighbor(s, axis, 1, g.boundary()[axis]) else {
            continue;
        };
        let ph = peierls(spec, &g.sites()[s], axis);
        for a in 0..f {
            for b in 0..f {
                let v = t[(a, b)] * ph;
                if !v.is_zero() {
                    trips.push((s * f + a, nb * f + b, v));
                    trips.push((nb * f + b, s * f + a, v.conj()));
                }
            }
        }
    }
}

fn qwz_hop(axis: usize) -> DMatrix<C64> {
    // s3 / 2 - (i / 2) s_axis
    let h = 0.5;
    match axis {
        0 => DMatrix::from_row_slice(2, 2, &[C64::new(h, 0.0), C64::new(0.0, -h), C64::new(0.0, -h), C64::new(-h, 0.0)]),
        _ => DMatrix::from_row_slice(2, 2, &[C64::new(h, 0.0), C64::new(-h, 0.0), C64::new(h, 0.0), C64::new(-h, 0.0)]),
    }
}

/// The Hamiltonian on `geometry` (fiber 2). Hops follow the geometry's
/// per-axis boundary conditions. Disorder is drawn from
/// `(seed, sample)`: chiral families get `a (1 + diag eps)`, the others an
/// on-site potential.
pub fn build_hamiltonian(spec: &ModelSpec, geometry: &Arc<LatticeGeometry>, seed: u64, sample: u64) -> Result<OperatorMatrix> {
    spec.validate()?;
    check_geometry(spec, geometry, spec.family.fiber())?;
    if spec.family.is_chiral() {
        let ag = Arc::new(geometry.with_fiber(1));
        let a = build_chiral_block(spec, &ag, seed, sample)?;
        return assemble_chiral(&a, geometry);
    }
    let n = geometry.size();
    let mut trips = Vec::new();
    for s in 0..geometry.num_sites() {
        trips.push((2 * s, 2 * s, C64::new(spec.mass, 0.0)));
        trips.push((2 * s + 1, 2 * s + 1, C64::new(-spec.mass, 0.0)));
    }
    push_hops(&mut trips, geometry, spec, 0, &qwz_hop(0));
    push_hops(&mut trips, geometry, spec, 1, &qwz_hop(1));
    if spec.family == Family::StackedQwz3d && spec.t_perp != 0.0 {
        let t = spec.t_perp;
        let hop = DMatrix::from_row_slice(2, 2, &[C64::new(t, 0.0), C64::zero(), C64::zero(), C64::new(-t, 0.0)]);
        push_hops(&mut trips, geometry, spec, 2, &hop);
    }
    if spec.disorder > 0.0 {
        for (i, v) in lattice::disorder_values(n, spec.disorder, seed, sample).into_iter().enumerate() {
            trips.push((i, i, C64::new(v, 0.0)));
        }
    }
    OperatorMatrix::new_hermitian(geometry.clone(), SparseMatrix::from_triplets(n, n, trips))
}

/// The chiral block `a` directly, on a fiber-1 geometry.
pub fn build_chiral_block(spec: &ModelSpec, geometry: &Arc<LatticeGeometry>, seed: u64, sample: u64) -> Result<OperatorMatrix> {
    spec.validate()?;
    if !spec.family.is_chiral() {
        return Err(Error::NotChiral(format!("{} has no chiral block", spec.family.name())));
    }
    check_geometry(spec, geometry, 1)?;
    let n = geometry.size();
    let mut trips = Vec::new();
    for s in 0..n {
        trips.push((s, s, C64::new(spec.mass, 0.0)));
        if let Some(t) = geometry.neighbor(s, 0, 1, geometry.boundary()[0]) {
            trips.push((s, t, C64::new(1.0, 0.0)));
        }
        if spec.family == Family::StackedChiral2d && spec.t_perp != 0.0 {
            if let Some(t) = geometry.neighbor(s, 1, 1, geometry.boundary()[1]) {
                trips.push((s, t, peierls(spec, &geometry.sites()[s], 1) * spec.t_perp));
            }
        }
    }
    let mut a = SparseMatrix::from_triplets(n, n, trips);
    if spec.disorder > 0.0 {
        let eps = lattice::disorder_values(n, spec.disorder, seed, sample);
        let scale: Vec<C64> = eps.iter().map(|e| C64::new(1.0 + e, 0.0)).collect();
        a = a.matmul(&SparseMatrix::from_diagonal(&scale))?;
    }
    OperatorMatrix::new(geometry.clone(), a)
}

/// `h = ((0, a*), (a, 0))` on `geometry` (fiber `2 N_a`), with the chiral
/// index as the more significant part of the fiber.
pub fn assemble_chiral(a: &OperatorMatrix, geometry: &Arc<LatticeGeometry>) -> Result<OperatorMatrix> {
    let na = a.geometry().fiber();
    if geometry.fiber() != 2 * na || geometry.num_sites() != a.geometry().num_sites() {
        return Err(Error::GeometryMismatch("chiral block and target geometry disagree".into()));
    }
    let adj = a.matrix().adjoint();
    let m = lattice::block_operator(&[alloc::vec![None, Some(&adj)], alloc::vec![Some(a.matrix()), None]], na)?;
    OperatorMatrix::new_hermitian(geometry.clone(), m)
}

/// Split a chiral `h` into `a`, failing if the diagonal blocks are not
/// exactly zero, the off-diagonal blocks are not adjoint, or `a` is
/// singular below `zero_tol`.
pub fn chiral_block(h: &OperatorMatrix, zero_tol: f64) -> Result<OperatorMatrix> {
    let f = h.geometry().fiber();
    if f % 2 != 0 {
        return Err(Error::NotChiral(format!("odd fiber {f}")));
    }
    let na = f / 2;
    let ns = h.geometry().num_sites();
    let split = |i: usize| (i / f, (i % f) / na, i % na);
    let mut trips = Vec::new();
    let mut upper = Vec::new();
    for (i, j, v) in h.matrix().triplets() {
        let (si, bi, oi) = split(i);
        let (sj, bj, oj) = split(j);
        match (bi, bj) {
            (1, 0) => trips.push((si * na + oi, sj * na + oj, v)),
            (0, 1) => upper.push((sj * na + oj, si * na + oi, v.conj())),
            _ => return Err(Error::NotChiral(format!("nonzero diagonal-block entry at ({i}, {j})"))),
        }
    }
    let a = SparseMatrix::from_triplets(ns * na, ns * na, trips);
    let b = SparseMatrix::from_triplets(ns * na, ns * na, upper);
    let dev = a.max_abs_diff(&b)?;
    if dev > 0.0 {
        return Err(Error::NotChiral(format!("off-diagonal blocks are not adjoint (deviation {dev:e})")));
    }
    let smin = crate::inertia::min_abs_eigenvalue(h.matrix())?;
    if smin <= zero_tol {
        return Err(Error::NotInvertible { gap: smin, tol: zero_tol });
    }
    OperatorMatrix::new(Arc::new(h.geometry().with_fiber(na)), a)
}

/// `diag(1, -1)` in the chiral grading, per site.
pub fn chiral_grading(geometry: &LatticeGeometry) -> SparseMatrix {
    let f = geometry.fiber();
    let na = f / 2;
    let diag: Vec<C64> = (0..geometry.size())
        .map(|i| C64::new(if (i % f) < na { 1.0 } else { -1.0 }, 0.0))
        .collect();
    SparseMatrix::from_diagonal(&diag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::shift_operator;

    fn cube(d: usize, side: usize, fiber: usize) -> Arc<LatticeGeometry> {
        Arc::new(LatticeGeometry::cube(d, side, Boundary::Periodic, fiber).unwrap())
    }

    #[test]
    fn refuses_critical_masses() {
        for m in [-2.0, 0.0, 2.0] {
            assert!(matches!(ModelSpec::new(Family::Qwz2d, m).validate(), Err(Error::CriticalParameters(_))));
        }
        assert!(matches!(ModelSpec::new(Family::Chiral1d, -1.0).validate(), Err(Error::CriticalParameters(_))));
        assert!(ModelSpec::new(Family::StackedChiral2d, 0.5).with_t_perp(0.2).validate().is_ok());
        assert!(ModelSpec::new(Family::StackedChiral2d, 0.9).with_t_perp(0.2).validate().is_err());
    }

    #[test]
    fn qwz_real_space_matches_symbol() {
        // On a periodic cube, plane waves diagonalize h with the Bloch symbol.
        let side = 6;
        let g = cube(2, side, 2);
        let spec = ModelSpec::new(Family::Qwz2d, 1.3);
        let h = build_hamiltonian(&spec, &g, 0, 0).unwrap().matrix().to_dense();
        let k = [2.0 * PI * 1.0 / side as f64, 2.0 * PI * 4.0 / side as f64];
        let sym = spec.bloch_symbol(&k);
        for a in 0..2 {
            // psi(x) = e^{i k.x} u_a
            let psi: Vec<C64> = g
                .sites()
                .iter()
                .flat_map(|s| {
                    let ph = k[0] * s[0] as f64 + k[1] * s[1] as f64;
                    let e = C64::new(ph.cos(), ph.sin());
                    (0..2).map(move |b| if b == a { e } else { C64::zero() })
                })
                .collect();
            let hp = &h * nalgebra::DVector::from_vec(psi.clone());
            for (s, site) in g.sites().iter().enumerate() {
                let ph = k[0] * site[0] as f64 + k[1] * site[1] as f64;
                let e = C64::new(ph.cos(), ph.sin());
                for b in 0..2 {
                    assert!((hp[2 * s + b] - sym[(b, a)] * e).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn chiral_round_trip_and_grading() {
        let g = cube(1, 8, 2);
        let spec = ModelSpec::new(Family::Chiral1d, 0.0 + 0.3).with_disorder(0.4);
        let h = build_hamiltonian(&spec, &g, 11, 2).unwrap();
        let a = chiral_block(&h, 1e-10).unwrap();
        let back = assemble_chiral(&a, &g).unwrap();
        assert_eq!(back.matrix().max_abs_diff(h.matrix()).unwrap(), 0.0);
        let gam = chiral_grading(&g);
        let ghg = gam.matmul(h.matrix()).unwrap().matmul(&gam).unwrap();
        assert_eq!(ghg.add_scaled(h.matrix(), C64::new(1.0, 0.0)).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn chiral_zero_mass_is_shift_adjoint() {
        let g = cube(1, 5, 1);
        let spec = ModelSpec { mass: 0.0, ..ModelSpec::new(Family::Chiral1d, 0.5) };
        // m = 0 is gapped (|m| != 1); a is the translation T = S*.
        let a = build_chiral_block(&spec, &g, 0, 0).unwrap();
        let s = shift_operator(&g, 0, Boundary::Periodic).unwrap();
        assert_eq!(a.matrix().max_abs_diff(&s.matrix().adjoint()).unwrap(), 0.0);
    }

    #[test]
    fn clean_periodic_models_are_translation_invariant() {
        for (spec, d) in [
            (ModelSpec::new(Family::Qwz2d, 1.0), 2),
            (ModelSpec::new(Family::StackedQwz3d, 1.0).with_t_perp(0.2), 3),
            (ModelSpec::new(Family::StackedChiral2d, 0.5).with_t_perp(0.2), 2),
        ] {
            let g = cube(d, 4, 2);
            let h = build_hamiltonian(&spec, &g, 0, 0).unwrap();
            for axis in 0..d {
                let s = shift_operator(&g, axis, Boundary::Periodic).unwrap();
                let c = lattice::commutator(&h, &s).unwrap();
                assert_eq!(c.matrix().max_abs(), 0.0, "{:?} axis {axis}", spec.family);
            }
        }
    }

    #[test]
    fn flux_requires_commensurate_periodic_axis() {
        let spec = ModelSpec::new(Family::Qwz2d, 1.0).with_flux(Flux { p: 1, q: 4 });
        assert!(build_hamiltonian(&spec, &cube(2, 6, 2), 0, 0).is_err());
        let h = build_hamiltonian(&spec, &cube(2, 8, 2), 0, 0).unwrap();
        assert!(h.is_hermitian());
    }
}
