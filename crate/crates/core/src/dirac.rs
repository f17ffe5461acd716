//! Clifford generators, position-space Dirac operators and the ball
//! projection.
//!
//! The Dirac operator is `D = sum_k sigma_k (x) (offset + X_k) (x) 1_N` on the
//! first `n` axes of a geometry. The Clifford index sits to the left of the
//! model orbital index, and the doubling index (if any) to the left of both,
//! so a lifted basis index reads `site * fiber + ((dbl * cl) + c) * N + o`.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{self, BallCenter, LatticeGeometry, OperatorMatrix, SiteSet};
use crate::sparse::SparseMatrix;
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(n: usize) -> Self {
        if n % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

/// Irreducible generators of the complex Clifford algebra on `n` generators.
#[derive(Clone, Debug, PartialEq)]
pub struct Clifford {
    pub generators: Vec<DMatrix<C64>>,
    /// Present for even `n`: anticommutes with every generator.
    pub grading: Option<DMatrix<C64>>,
}

impl Clifford {
    pub fn size(&self) -> usize {
        self.generators[0].nrows()
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn pauli() -> [DMatrix<C64>; 3] {
    let z = C64::zero();
    [
        DMatrix::from_row_slice(2, 2, &[z, c(1.0, 0.0), c(1.0, 0.0), z]),
        DMatrix::from_row_slice(2, 2, &[z, c(0.0, -1.0), c(0.0, 1.0), z]),
        DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), z, z, c(-1.0, 0.0)]),
    ]
}

/// Kronecker product with `a` as the more significant factor.
pub fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    DMatrix::from_fn(ra * rb, ca * cb, |i, j| a[(i / rb, j / cb)] * b[(i % rb, j % cb)])
}

/// Generators of size `2^floor(n/2)`, built recursively: an even algebra on
/// `n` generators comes from the one on `n - 2` as
/// `{sx (x) e_j, sx (x) g, sy (x) 1}` with grading `sz (x) 1`; an odd algebra
/// appends the grading of the even one below it as a generator.
pub fn clifford(n: usize) -> Result<Clifford> {
    if !(1..=4).contains(&n) {
        return Err(Error::InvalidParameter(format!("Clifford generator count {n} not in 1..=4")));
    }
    let [sx, sy, sz] = pauli();
    let mut gens: Vec<DMatrix<C64>> = Vec::new();
    let mut grading = DMatrix::<C64>::identity(1, 1);
    for _ in 0..n / 2 {
        let id = DMatrix::<C64>::identity(grading.nrows(), grading.nrows());
        let mut next: Vec<DMatrix<C64>> = gens.iter().map(|e| kron(&sx, e)).collect();
        next.push(kron(&sx, &grading));
        next.push(kron(&sy, &id));
        gens = next;
        grading = kron(&sz, &id);
    }
    if n % 2 == 1 {
        gens.push(grading);
        Ok(Clifford { generators: gens, grading: None })
    } else {
        Ok(Clifford { generators: gens, grading: Some(grading) })
    }
}

/// Dirac operator data on a geometry.
#[derive(Clone, Debug)]
pub struct DiracBundle {
    n: usize,
    clifford: Clifford,
    radius: f64,
    offset: f64,
    mu: Option<f64>,
    model: Arc<LatticeGeometry>,
    lifted: Arc<LatticeGeometry>,
    d: OperatorMatrix,
    /// `sum_k (x_k + offset)^2` per site.
    d_squared: Vec<f64>,
    support: Vec<bool>,
}

impl DiracBundle {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn parity(&self) -> Parity {
        Parity::of(self.n)
    }

    pub fn clifford(&self) -> &Clifford {
        &self.clifford
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Position offset: `1/2` for the shifted construction, 0 otherwise.
    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn mu(&self) -> Option<f64> {
        self.mu
    }

    pub fn is_doubled(&self) -> bool {
        self.mu.is_some()
    }

    /// Geometry of the model Hamiltonian (fiber `N`).
    pub fn model_geometry(&self) -> &Arc<LatticeGeometry> {
        &self.model
    }

    /// Geometry carrying `D` (fiber `[2] * cl * N`).
    pub fn geometry(&self) -> &Arc<LatticeGeometry> {
        &self.lifted
    }

    pub fn d(&self) -> &OperatorMatrix {
        &self.d
    }

    /// Multiplicity of the lifted fiber over the model fiber.
    pub fn multiplicity(&self) -> usize {
        self.lifted.fiber() / self.model.fiber()
    }

    pub fn d_squared(&self) -> &[f64] {
        &self.d_squared
    }

    /// Per-site membership in `P_rho`.
    pub fn support(&self) -> &[bool] {
        &self.support
    }

    pub fn support_size(&self) -> usize {
        self.support.iter().filter(|&&s| s).count()
    }

    /// `P_rho` as a diagonal 0/1 matrix on the lifted geometry.
    pub fn projection(&self) -> SparseMatrix {
        let f = self.lifted.fiber();
        let diag: Vec<C64> = self
            .support
            .iter()
            .flat_map(|&s| core::iter::repeat_n(C64::new(if s { 1.0 } else { 0.0 }, 0.0), f))
            .collect();
        SparseMatrix::from_diagonal(&diag)
    }

    /// Lifted basis indices in the range of `P_rho`, with `copies` copies of
    /// the lifted fiber per site (2 for the odd duplication).
    pub fn kept_indices(&self, copies: usize) -> Vec<usize> {
        lattice::expand_mask(&self.support, self.lifted.fiber() * copies)
    }

    /// Grading on the lifted geometry: `gamma (x) 1_N`, or
    /// `gamma (+) (-gamma)` for a doubled bundle. `None` for odd `n`.
    pub fn grading(&self) -> Option<SparseMatrix> {
        let g = self.clifford.grading.as_ref()?;
        let g = match self.mu {
            None => g.clone(),
            Some(_) => {
                let [_, _, sz] = pauli();
                kron(&sz, g)
            }
        };
        let nf = self.model.fiber();
        let gn = kron(&g, &DMatrix::identity(nf, nf));
        let site_id = SparseMatrix::identity(self.lifted.num_sites());
        Some(lattice::kron_site_fiber(&site_id, &gn))
    }

    /// Lift a model operator (fiber `N`) to `1 (x) A` on the lifted fiber.
    /// A doubled bundle embeds `A (+) fill` with `fill` on the second copy.
    pub fn lift(&self, a: &SparseMatrix, fill: Option<C64>) -> Result<SparseMatrix> {
        if a.nrows() != self.model.size() || a.ncols() != self.model.size() {
            return Err(Error::DimensionMismatch { left: a.nrows(), right: self.model.size() });
        }
        let nf = self.model.fiber();
        let cl = self.clifford.size();
        let one = lattice::lift_left(&DMatrix::identity(cl, cl), a, nf);
        match self.mu {
            None => Ok(one),
            Some(_) => {
                let fill = fill.unwrap_or(C64::new(1.0, 0.0));
                let filler = SparseMatrix::identity(one.nrows()).scale(fill);
                lattice::block_operator(&[vec![Some(&one), None], vec![None, Some(&filler)]], cl * nf)
            }
        }
    }
}

fn check_geometry(n: usize, geometry: &LatticeGeometry, radius: f64, center: BallCenter) -> Result<()> {
    if geometry.dim() < n {
        return Err(Error::GeometryMismatch(format!(
            "Dirac operator on {n} axes needs at least {n} position axes, geometry has {}",
            geometry.dim()
        )));
    }
    let ball = match geometry.site_set() {
        SiteSet::Ball(b) | SiteSet::Product(b, _) => Some(b),
        _ => None,
    };
    if let Some(b) = ball {
        if b.n != n {
            return Err(Error::GeometryMismatch(format!("ball has {} axes, Dirac operator {n}", b.n)));
        }
        if (b.radius - radius).abs() > 1e-12 * radius.max(1.0) || b.center != center {
            return Err(Error::GeometryMismatch(format!(
                "ball radius {} ({:?}) does not match rho = {radius} ({center:?})",
                b.radius, b.center
            )));
        }
    }
    Ok(())
}

fn assemble(n: usize, geometry: &Arc<LatticeGeometry>, radius: f64, offset: f64, center: BallCenter) -> Result<DiracBundle> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!("rho = {radius} must be positive")));
    }
    let clifford = clifford(n)?;
    check_geometry(n, geometry, radius, center)?;
    let cl = clifford.size();
    let nf = geometry.fiber();
    let fiber = cl * nf;
    let lifted = Arc::new(geometry.with_fiber(fiber));
    let mut trips = Vec::new();
    let mut d_squared = Vec::with_capacity(geometry.num_sites());
    let mut support = Vec::with_capacity(geometry.num_sites());
    let ball = lattice::Ball { n, radius, center };
    for (s, site) in geometry.sites().iter().enumerate() {
        let mut d2 = 0.0;
        for (k, sigma) in clifford.generators.iter().enumerate() {
            let x = site[k] as f64 + offset;
            d2 += x * x;
            for a in 0..cl {
                for b in 0..cl {
                    let v = sigma[(a, b)];
                    if !v.is_zero() {
                        for o in 0..nf {
                            trips.push((s * fiber + a * nf + o, s * fiber + b * nf + o, v * x));
                        }
                    }
                }
            }
        }
        d_squared.push(d2);
        support.push(ball.contains(&site[..n]));
    }
    let dim = lifted.size();
    let d = OperatorMatrix::new_hermitian(lifted.clone(), SparseMatrix::from_triplets(dim, dim, trips))?;
    Ok(DiracBundle {
        n,
        clifford,
        radius,
        offset,
        mu: None,
        model: geometry.clone(),
        lifted,
        d,
        d_squared,
        support,
    })
}

/// Shifted Dirac operator `sum_k sigma_k (x) (1/2 + X_k)` on the first `n`
/// axes; `P_rho` is the closed ball `sum (x_k + 1/2)^2 <= rho^2`.
pub fn build_dirac(n: usize, geometry: &Arc<LatticeGeometry>, radius: f64) -> Result<DiracBundle> {
    assemble(n, geometry, radius, 0.5, BallCenter::HalfShifted)
}

/// Unshifted `sum_k sigma_k (x) X_k`, singular at the origin; `P_rho` is the
/// ball `sum x_k^2 <= rho^2`. Use [`double`] before building a localizer.
pub fn build_dirac_unshifted(n: usize, geometry: &Arc<LatticeGeometry>, radius: f64) -> Result<DiracBundle> {
    assemble(n, geometry, radius, 0.0, BallCenter::Integer)
}

/// Doubling `D_mu = [[D, mu], [mu, -D]]`, which squares to
/// `(D^2 + mu^2) (+) (D^2 + mu^2)`. The grading becomes `gamma (+) (-gamma)`
/// and `P_rho` becomes `chi(D^2 + mu^2 <= rho^2)` on both copies.
pub fn double(bundle: &DiracBundle, mu: f64) -> Result<DiracBundle> {
    if !(mu > 0.0) {
        return Err(Error::InvalidParameter(format!("doubling mass mu = {mu} must be positive")));
    }
    if bundle.mu.is_some() {
        return Err(Error::InvalidParameter("bundle is already doubled".into()));
    }
    let f = bundle.lifted.fiber();
    let lifted = Arc::new(bundle.lifted.with_fiber(2 * f));
    let d = bundle.d.matrix();
    let mass = SparseMatrix::identity(d.nrows()).scale_real(mu);
    let neg = d.scale_real(-1.0);
    let dm = lattice::block_operator(&[vec![Some(d), Some(&mass)], vec![Some(&mass), Some(&neg)]], f)?;
    let r2 = bundle.radius * bundle.radius;
    let support = bundle
        .d_squared
        .iter()
        .zip(&bundle.support)
        .map(|(&d2, &inside)| inside && d2 + mu * mu <= r2 * (1.0 + 1e-12))
        .collect();
    Ok(DiracBundle {
        n: bundle.n,
        clifford: bundle.clifford.clone(),
        radius: bundle.radius,
        offset: bundle.offset,
        mu: Some(mu),
        model: bundle.model.clone(),
        lifted: lifted.clone(),
        d: OperatorMatrix::new_hermitian(lifted, dm)?,
        d_squared: bundle.d_squared.iter().map(|&d2| d2 + mu * mu).collect(),
        support,
    })
}

/// Smallest singular value of `D` (from the diagonal of `D^2`).
pub fn min_singular_value(bundle: &DiracBundle) -> f64 {
    bundle.d_squared.iter().copied().fold(f64::INFINITY, f64::min).sqrt()
}
