//! Finite lattice geometries and the operator algebra over them.
//!
//! Basis ordering is frozen: sites are sorted lexicographically on their
//! coordinates with axis 0 most significant, and the basis index of
//! `(site, orbital)` is `site * fiber + orbital`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_traits::{Float, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;
use crate::C64;

/// Largest supported number of lattice axes.
pub const MAX_AXES: usize = 4;

/// Integer coordinates padded with zeros beyond the geometry's dimension.
pub type Site = [i64; MAX_AXES];

/// Ordering descriptor written into matrix files.
pub const ORDERING: &str = "lex-axis0-major/site-major/orbital-minor";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Dirichlet,
}

/// Where the ball is centered. `HalfShifted` balls contain `x` with
/// `sum (x_i + 1/2)^2 <= rho^2`; `Integer` balls use `sum x_i^2 <= rho^2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BallCenter {
    HalfShifted,
    Integer,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub n: usize,
    pub radius: f64,
    pub center: BallCenter,
}

impl Ball {
    /// `floor(4 rho^2)`, snapped to the nearest integer when within rounding
    /// of it so that radii like `10.5` give exactly `441`.
    fn bound4(&self) -> i64 {
        let r4 = 4.0 * self.radius * self.radius;
        let nearest = Float::round(r4);
        if (r4 - nearest).abs() <= 1e-9 * nearest.max(1.0) {
            nearest as i64
        } else {
            Float::floor(r4) as i64
        }
    }

    /// Four times the squared shifted norm, an exact integer.
    pub fn norm4(&self, coords: &[i64]) -> i64 {
        coords
            .iter()
            .map(|&x| match self.center {
                BallCenter::HalfShifted => (2 * x + 1) * (2 * x + 1),
                BallCenter::Integer => 4 * x * x,
            })
            .sum()
    }

    pub fn contains(&self, coords: &[i64]) -> bool {
        self.norm4(coords) <= self.bound4()
    }

    fn sites(&self) -> Vec<Vec<i64>> {
        let reach = Float::ceil(self.radius) as i64 + 1;
        let mut out: Vec<Vec<i64>> = vec![Vec::new()];
        for _ in 0..self.n {
            let mut next = Vec::new();
            for prefix in &out {
                for x in -reach..=reach {
                    let mut p = prefix.clone();
                    p.push(x);
                    next.push(p);
                }
            }
            out = next;
        }
        out.retain(|c| self.contains(c));
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub sides: Vec<usize>,
    pub origin: Vec<i64>,
    pub boundary: Vec<Boundary>,
}

impl Cube {
    fn sites(&self) -> Vec<Vec<i64>> {
        let mut out: Vec<Vec<i64>> = vec![Vec::new()];
        for (&side, &o) in self.sides.iter().zip(&self.origin) {
            let mut next = Vec::new();
            for prefix in &out {
                for x in 0..side as i64 {
                    let mut p = prefix.clone();
                    p.push(o + x);
                    next.push(p);
                }
            }
            out = next;
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SiteSet {
    Ball(Ball),
    Cube(Cube),
    /// Ball axes first, then cube axes.
    Product(Ball, Cube),
    /// A subset of a parent site set, in the parent's order.
    Subset(alloc::boxed::Box<SiteSet>),
}

/// A finite set of lattice sites with a per-site fiber of orbitals.
#[derive(Clone, Debug)]
pub struct LatticeGeometry {
    site_set: SiteSet,
    dim: usize,
    boundary: Vec<Boundary>,
    fiber: usize,
    sites: Vec<Site>,
    index: BTreeMap<Site, usize>,
}

impl PartialEq for LatticeGeometry {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.fiber == other.fiber
            && self.boundary == other.boundary
            && self.sites == other.sites
    }
}

fn pad(coords: &[i64]) -> Site {
    let mut s = [0; MAX_AXES];
    s[..coords.len()].copy_from_slice(coords);
    s
}

impl LatticeGeometry {
    fn from_parts(site_set: SiteSet, dim: usize, boundary: Vec<Boundary>, fiber: usize, coords: Vec<Vec<i64>>) -> Result<Self> {
        if dim == 0 || dim > MAX_AXES {
            return Err(Error::InvalidGeometry(format!("dimension {dim} not in 1..={MAX_AXES}")));
        }
        if fiber == 0 {
            return Err(Error::InvalidGeometry("fiber must be positive".into()));
        }
        let mut sites: Vec<Site> = coords.iter().map(|c| pad(c)).collect();
        sites.sort_unstable();
        sites.dedup();
        if sites.is_empty() {
            return Err(Error::InvalidGeometry("empty site set".into()));
        }
        let index = sites.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        Ok(Self {
            site_set,
            dim,
            boundary,
            fiber,
            sites,
            index,
        })
    }

    /// Ball of lattice sites; every ball axis is dirichlet.
    pub fn ball(n: usize, radius: f64, center: BallCenter, fiber: usize) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidGeometry(format!("ball radius {radius} must be positive")));
        }
        let ball = Ball { n, radius, center };
        let coords = ball.sites();
        Self::from_parts(SiteSet::Ball(ball), n, vec![Boundary::Dirichlet; n], fiber, coords)
    }

    /// Cube of side `side` along each of `d` axes, origin at `-(side / 2)`.
    pub fn cube(d: usize, side: usize, boundary: Boundary, fiber: usize) -> Result<Self> {
        Self::cube_with(vec![side; d], vec![-((side / 2) as i64); d], vec![boundary; d], fiber)
    }

    pub fn cube_with(sides: Vec<usize>, origin: Vec<i64>, boundary: Vec<Boundary>, fiber: usize) -> Result<Self> {
        let d = sides.len();
        if origin.len() != d || boundary.len() != d {
            return Err(Error::InvalidGeometry("cube sides, origin and boundary lengths differ".into()));
        }
        if sides.iter().any(|&s| s == 0) {
            return Err(Error::InvalidGeometry("cube sides must be positive".into()));
        }
        let cube = Cube { sides, origin, boundary: boundary.clone() };
        let coords = cube.sites();
        Self::from_parts(SiteSet::Cube(cube), d, boundary, fiber, coords)
    }

    /// `B_rho^n x V` with the ball on the leading axes (dirichlet) and a
    /// cube with the given sides and boundaries on the remaining axes.
    pub fn product(ball_n: usize, radius: f64, center: BallCenter, sides: Vec<usize>, boundary: Vec<Boundary>, fiber: usize) -> Result<Self> {
        if sides.len() != boundary.len() {
            return Err(Error::InvalidGeometry("cube sides and boundary lengths differ".into()));
        }
        if !(radius > 0.0) || sides.iter().any(|&s| s == 0) {
            return Err(Error::InvalidGeometry("ball radius and cube sides must be positive".into()));
        }
        let ball = Ball { n: ball_n, radius, center };
        let origin: Vec<i64> = sides.iter().map(|&s| -((s / 2) as i64)).collect();
        let cube = Cube { sides, origin, boundary: boundary.clone() };
        let mut coords = Vec::new();
        let cube_sites = cube.sites();
        for b in ball.sites() {
            for c in &cube_sites {
                let mut p = b.clone();
                p.extend_from_slice(c);
                coords.push(p);
            }
        }
        let mut bnd = vec![Boundary::Dirichlet; ball_n];
        bnd.extend(boundary);
        let dim = ball_n + cube.sides.len();
        Self::from_parts(SiteSet::Product(ball, cube), dim, bnd, fiber, coords)
    }

    /// Same sites, different fiber.
    pub fn with_fiber(&self, fiber: usize) -> Self {
        let mut g = self.clone();
        g.fiber = fiber;
        g
    }

    /// Keep the sites for which `keep` is true, in order.
    pub fn restrict(&self, keep: &[bool]) -> Result<Self> {
        if keep.len() != self.num_sites() {
            return Err(Error::DimensionMismatch { left: keep.len(), right: self.num_sites() });
        }
        let coords = self
            .sites
            .iter()
            .zip(keep)
            .filter(|(_, &k)| k)
            .map(|(s, _)| s[..self.dim].to_vec())
            .collect();
        let boundary = vec![Boundary::Dirichlet; self.dim];
        Self::from_parts(SiteSet::Subset(alloc::boxed::Box::new(self.site_set.clone())), self.dim, boundary, self.fiber, coords)
    }

    pub fn site_set(&self) -> &SiteSet {
        &self.site_set
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn fiber(&self) -> usize {
        self.fiber
    }

    pub fn boundary(&self) -> &[Boundary] {
        &self.boundary
    }

    pub fn num_sites(&self) -> usize {
        self.sites.len()
    }

    /// Hilbert space dimension, `num_sites * fiber`.
    pub fn size(&self) -> usize {
        self.sites.len() * self.fiber
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn site_index(&self, site: &Site) -> Option<usize> {
        self.index.get(site).copied()
    }

    pub fn basis_index(&self, site: usize, orbital: usize) -> usize {
        site * self.fiber + orbital
    }

    /// Number of leading ball axes (0 for a plain cube).
    pub fn ball_axes(&self) -> usize {
        match &self.site_set {
            SiteSet::Ball(b) | SiteSet::Product(b, _) => b.n,
            _ => 0,
        }
    }

    fn axis_extent(&self, axis: usize) -> Option<(i64, usize)> {
        let cube = match &self.site_set {
            SiteSet::Cube(c) => return Some((c.origin[axis], c.sides[axis])),
            SiteSet::Product(b, c) if axis >= b.n => c,
            _ => return None,
        };
        let nb = self.ball_axes();
        Some((cube.origin[axis - nb], cube.sides[axis - nb]))
    }

    fn check_axis(&self, axis: usize) -> Result<()> {
        if axis >= self.dim {
            return Err(Error::AxisOutOfRange { axis, available: self.dim });
        }
        Ok(())
    }

    /// Index of the site `x + step * e_axis`, or `None` if it leaves the
    /// volume under the given boundary condition.
    pub fn neighbor(&self, site: usize, axis: usize, step: i64, boundary: Boundary) -> Option<usize> {
        let mut s = self.sites[site];
        s[axis] += step;
        if let (Boundary::Periodic, Some((o, side))) = (boundary, self.axis_extent(axis)) {
            s[axis] = o + (s[axis] - o).rem_euclid(side as i64);
        }
        self.site_index(&s)
    }
}

/// A complex matrix over a geometry's basis.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    geometry: Arc<LatticeGeometry>,
    matrix: SparseMatrix,
    hermitian: bool,
}

impl OperatorMatrix {
    pub fn new(geometry: Arc<LatticeGeometry>, matrix: SparseMatrix) -> Result<Self> {
        let n = geometry.size();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch { left: matrix.nrows().max(matrix.ncols()), right: n });
        }
        Ok(Self { geometry, matrix, hermitian: false })
    }

    /// Hermitian operator. Entries are made exactly symmetric from the upper
    /// triangle after checking that the input is Hermitian to `1e-12` relative.
    pub fn new_hermitian(geometry: Arc<LatticeGeometry>, matrix: SparseMatrix) -> Result<Self> {
        let mut op = Self::new(geometry, matrix)?;
        let dev = op.matrix.hermitian_deviation();
        if dev > 1e-12 * op.matrix.max_abs().max(1.0) {
            return Err(Error::NotHermitian(dev));
        }
        op.matrix = symmetrize(&op.matrix);
        op.hermitian = true;
        Ok(op)
    }

    pub fn geometry(&self) -> &Arc<LatticeGeometry> {
        &self.geometry
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> SparseMatrix {
        self.matrix
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn adjoint(&self) -> Self {
        Self { geometry: self.geometry.clone(), matrix: self.matrix.adjoint(), hermitian: self.hermitian }
    }

    pub fn scale_real(&self, c: f64) -> Self {
        Self { geometry: self.geometry.clone(), matrix: self.matrix.scale_real(c), hermitian: self.hermitian }
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { left: self.dim(), right: other.dim() });
        }
        if !Arc::ptr_eq(&self.geometry, &other.geometry) && *self.geometry != *other.geometry {
            return Err(Error::InvalidGeometry("operators live on different geometries".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let matrix = self.matrix.add_scaled(&other.matrix, C64::new(1.0, 0.0))?;
        Ok(Self { geometry: self.geometry.clone(), matrix, hermitian: self.hermitian && other.hermitian })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(Self { geometry: self.geometry.clone(), matrix: self.matrix.matmul(&other.matrix)?, hermitian: false })
    }
}

fn symmetrize(m: &SparseMatrix) -> SparseMatrix {
    let n = m.nrows();
    let mut trips = Vec::with_capacity(m.nnz());
    for (i, j, v) in m.triplets() {
        if i < j {
            trips.push((i, j, v));
            trips.push((j, i, v.conj()));
        } else if i == j && v.re != 0.0 {
            trips.push((i, i, C64::new(v.re, 0.0)));
        }
    }
    SparseMatrix::from_triplets(n, n, trips)
}

/// `1/2 + X_axis` tensored with the fiber identity. Axes are 0-based.
pub fn position_operator(geometry: &Arc<LatticeGeometry>, axis: usize) -> Result<OperatorMatrix> {
    position_operator_with_offset(geometry, axis, 0.5)
}

/// `offset + X_axis` tensored with the fiber identity.
pub fn position_operator_with_offset(geometry: &Arc<LatticeGeometry>, axis: usize, offset: f64) -> Result<OperatorMatrix> {
    geometry.check_axis(axis)?;
    let f = geometry.fiber();
    let diag: Vec<C64> = geometry
        .sites()
        .iter()
        .flat_map(|s| core::iter::repeat_n(C64::new(s[axis] as f64 + offset, 0.0), f))
        .collect();
    OperatorMatrix::new_hermitian(geometry.clone(), SparseMatrix::from_diagonal(&diag))
}

/// The shift `|x> -> |x + e_axis>` on sites, identity on the fiber.
pub fn shift_operator(geometry: &Arc<LatticeGeometry>, axis: usize, boundary: Boundary) -> Result<OperatorMatrix> {
    geometry.check_axis(axis)?;
    if boundary == Boundary::Periodic && axis < geometry.ball_axes() {
        return Err(Error::PeriodicOnBall(axis));
    }
    if boundary == Boundary::Periodic && matches!(geometry.site_set(), SiteSet::Subset(_)) {
        return Err(Error::InvalidGeometry("periodic shifts are undefined on a site subset".into()));
    }
    let f = geometry.fiber();
    let mut trips = Vec::new();
    for s in 0..geometry.num_sites() {
        if let Some(t) = geometry.neighbor(s, axis, 1, boundary) {
            for o in 0..f {
                trips.push((t * f + o, s * f + o, C64::new(1.0, 0.0)));
            }
        }
    }
    let n = geometry.size();
    OperatorMatrix::new(geometry.clone(), SparseMatrix::from_triplets(n, n, trips))
}

/// `count` reproducible values, i.i.d. uniform on `[-W/2, W/2]`. Entry `i`
/// is a function of `(seed, sample, i)` only.
pub fn disorder_values(count: usize, strength: f64, seed: u64, sample: u64) -> Vec<f64> {
    if strength == 0.0 {
        return vec![0.0; count];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(sample);
    (0..count).map(|_| strength * (rng.random::<f64>() - 0.5)).collect()
}

/// Diagonal on-site disorder over every basis entry of the geometry.
pub fn disorder_potential(geometry: &Arc<LatticeGeometry>, strength: f64, seed: u64, sample: u64) -> Result<OperatorMatrix> {
    if !(strength >= 0.0) {
        return Err(Error::InvalidParameter(format!("disorder strength {strength} must be nonnegative")));
    }
    let diag: Vec<C64> = disorder_values(geometry.size(), strength, seed, sample).into_iter().map(|v| C64::new(v, 0.0)).collect();
    OperatorMatrix::new_hermitian(geometry.clone(), SparseMatrix::from_diagonal(&diag))
}

/// `AB - BA`.
pub fn commutator(a: &OperatorMatrix, b: &OperatorMatrix) -> Result<OperatorMatrix> {
    a.check_compatible(b)?;
    let ab = a.matrix.matmul(&b.matrix)?;
    let ba = b.matrix.matmul(&a.matrix)?;
    Ok(OperatorMatrix { geometry: a.geometry.clone(), matrix: &ab - &ba, hermitian: false })
}

/// Largest singular value.
pub fn operator_norm(a: &OperatorMatrix) -> Result<f64> {
    crate::linalg::sparse_operator_norm(&a.matrix)
}

/// `g = min |spec(h)|`. Fails if `g` is below the default zero tolerance.
pub fn spectral_gap(h: &OperatorMatrix) -> Result<f64> {
    if !h.hermitian {
        let dev = h.matrix.hermitian_deviation();
        if dev > 1e-12 * h.matrix.max_abs().max(1.0) {
            return Err(Error::NotHermitian(dev));
        }
    }
    let norm = operator_norm(h)?;
    let tol = crate::inertia::default_zero_tol(h.dim(), norm);
    let gap = crate::inertia::min_abs_eigenvalue(&h.matrix)?;
    if gap <= tol {
        return Err(Error::NotInvertible { gap, tol });
    }
    Ok(gap)
}

/// `small (x) m` on a fiber of size `small.nrows() * fiber`, placing the new
/// index to the left of (more significant than) the old fiber index.
pub fn lift_left(small: &DMatrix<C64>, m: &SparseMatrix, fiber: usize) -> SparseMatrix {
    let k = small.nrows();
    let nsites = m.nrows() / fiber;
    let new_fiber = k * fiber;
    let mut trips = Vec::new();
    for (i, j, v) in m.triplets() {
        let (si, oi) = (i / fiber, i % fiber);
        let (sj, oj) = (j / fiber, j % fiber);
        for a in 0..k {
            for b in 0..small.ncols() {
                let c = small[(a, b)];
                if !c.is_zero() {
                    trips.push((si * new_fiber + a * fiber + oi, sj * new_fiber + b * fiber + oj, c * v));
                }
            }
        }
    }
    let n = nsites * new_fiber;
    SparseMatrix::from_triplets(n, n, trips)
}

/// Block operator `sum_{ab} E_ab (x) blocks[a][b]` with the block index to
/// the left of the old fiber index. `None` entries are zero blocks.
pub fn block_operator(blocks: &[Vec<Option<&SparseMatrix>>], fiber: usize) -> Result<SparseMatrix> {
    let k = blocks.len();
    let mut out: Option<SparseMatrix> = None;
    for (a, row) in blocks.iter().enumerate() {
        if row.len() != k {
            return Err(Error::DimensionMismatch { left: row.len(), right: k });
        }
        for (b, blk) in row.iter().enumerate() {
            if let Some(m) = blk {
                let mut e = DMatrix::<C64>::zeros(k, k);
                e[(a, b)] = C64::new(1.0, 0.0);
                let lifted = lift_left(&e, m, fiber);
                out = Some(match out {
                    None => lifted,
                    Some(acc) => &acc + &lifted,
                });
            }
        }
    }
    out.ok_or_else(|| Error::InvalidParameter("block operator with no blocks".into()))
}

/// `site_op (x) fiber_mat` with site-major ordering. `site_op` acts on sites
/// only (fiber 1).
pub fn kron_site_fiber(site_op: &SparseMatrix, fiber_mat: &DMatrix<C64>) -> SparseMatrix {
    let f = fiber_mat.nrows();
    let mut trips = Vec::new();
    for (i, j, v) in site_op.triplets() {
        for a in 0..f {
            for b in 0..f {
                let c = fiber_mat[(a, b)];
                if !c.is_zero() {
                    trips.push((i * f + a, j * f + b, v * c));
                }
            }
        }
    }
    SparseMatrix::from_triplets(site_op.nrows() * f, site_op.ncols() * f, trips)
}

/// Basis indices of the sites selected by `keep`, expanded over `fiber`.
pub fn expand_mask(keep: &[bool], fiber: usize) -> Vec<usize> {
    keep.iter()
        .enumerate()
        .filter(|(_, &k)| k)
        .flat_map(|(s, _)| (0..fiber).map(move |o| s * fiber + o))
        .collect()
}

/// Human-readable one-line description of a geometry.
pub fn describe(geometry: &LatticeGeometry) -> String {
    match geometry.site_set() {
        SiteSet::Ball(b) => format!("ball(n={}, rho={})", b.n, b.radius),
        SiteSet::Cube(c) => format!("cube(sides={:?})", c.sides),
        SiteSet::Product(b, c) => format!("ball(n={}, rho={}) x cube(sides={:?})", b.n, b.radius, c.sides),
        SiteSet::Subset(_) => format!("subset({} sites)", geometry.num_sites()),
    }
}
