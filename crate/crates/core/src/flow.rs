//! Spectral flow of finite Hermitian paths and the essential codimension of
//! projection pairs.
//!
//! Positive spectral projections follow the convention `p = chi(T >= 0)`:
//! eigenvalues within `zero_tol` of zero count as nonnegative.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, dense_operator_norm, hermitian_eigen, hermitian_eigenvalues};
use crate::C64;

/// Projection inputs must satisfy `‖P² - P‖, ‖P - P*‖ <= PROJECTION_TOL`.
pub const PROJECTION_TOL: f64 = 1e-10;

/// An eigenvalue of `E + F` within this distance of 2 marks a direction in
/// `ran E ∩ ran F`.
const INTERSECTION_TOL: f64 = 1e-7;

/// Relative size below which an eigenvalue is considered zero.
pub const ZERO_REL_TOL: f64 = 1e-10;

/// Maximum bisection depth when a sample sits on a crossing.
pub const MAX_REFINEMENT_DEPTH: usize = 20;

/// Sampled Hermitian path on a strictly increasing grid.
#[derive(Clone, Debug)]
pub struct FlowPath {
    samples: Vec<DMatrix<C64>>,
    grid: Vec<f64>,
}

impl FlowPath {
    pub fn new(samples: Vec<DMatrix<C64>>, grid: Vec<f64>) -> Result<Self> {
        if samples.is_empty() || samples.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "{} samples on a grid of {} points",
                samples.len(),
                grid.len()
            )));
        }
        let n = samples[0].nrows();
        for s in &samples {
            if s.nrows() != n || s.ncols() != n {
                return Err(Error::DimensionMismatch { left: s.nrows(), right: n });
            }
            let dev = linalg::hermitian_deviation(s);
            if dev > 1e-12 * dense_operator_norm(s).max(1.0) {
                return Err(Error::NotHermitian(dev));
            }
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("grid must be strictly increasing".into()));
        }
        Ok(Self { samples, grid })
    }

    /// Samples of `f` at `m + 1` equally spaced points of `[0, 1]`.
    pub fn sample<F: Fn(f64) -> DMatrix<C64>>(f: F, m: usize) -> Result<Self> {
        let grid: Vec<f64> = (0..=m).map(|k| k as f64 / m as f64).collect();
        Self::new(grid.iter().map(|&t| f(t)).collect(), grid)
    }

    pub fn samples(&self) -> &[DMatrix<C64>] {
        &self.samples
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.samples[0].nrows()
    }

    /// Endpoint invertibility at the default relative tolerance.
    pub fn endpoint_invertible(&self) -> (bool, bool) {
        let inv = |t: &DMatrix<C64>| {
            let tol = zero_tol(t);
            hermitian_eigenvalues(t).iter().all(|v| v.abs() > tol)
        };
        (inv(&self.samples[0]), inv(self.samples.last().unwrap()))
    }

    /// `self` followed by `other`, on the grid rescaled to `[0, 2]`. The
    /// end of `self` must equal the start of `other`.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        let last = self.samples.last().unwrap();
        let gap = (last - &other.samples[0]).iter().map(|c| c.norm()).fold(0.0, f64::max);
        if gap > 1e-12 {
            return Err(Error::InvalidParameter(format!("paths do not meet (gap {gap:e})")));
        }
        let shift = self.grid.last().unwrap() - other.grid[0];
        let mut samples = self.samples.clone();
        let mut grid = self.grid.clone();
        samples.extend(other.samples.iter().skip(1).cloned());
        grid.extend(other.grid.iter().skip(1).map(|t| t + shift));
        Self::new(samples, grid)
    }

    /// Pointwise direct sum over a common grid.
    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::InvalidParameter("direct sum needs a common grid".into()));
        }
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| block_diag(a, b))
            .collect();
        Self::new(samples, self.grid.clone())
    }
}

pub fn block_diag(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let (n, m) = (a.nrows(), b.nrows());
    let mut out = DMatrix::zeros(n + m, n + m);
    out.view_mut((0, 0), (n, n)).copy_from(a);
    out.view_mut((n, n), (m, m)).copy_from(b);
    out
}

fn zero_tol(t: &DMatrix<C64>) -> f64 {
    ZERO_REL_TOL * dense_operator_norm(t).max(1.0)
}

fn check_projection(p: &DMatrix<C64>) -> Result<()> {
    if !p.is_square() {
        return Err(Error::DimensionMismatch { left: p.nrows(), right: p.ncols() });
    }
    let idem = (p * p - p).iter().map(|c| c.norm()).fold(0.0, f64::max);
    let herm = linalg::hermitian_deviation(p);
    let dev = idem.max(herm);
    if dev > PROJECTION_TOL {
        return Err(Error::NotProjection(dev));
    }
    Ok(())
}

/// `dim(ran E ∩ ran F)` for projections `E`, `F`: the multiplicity of the
/// eigenvalue 2 of `E + F`.
pub fn intersection_dim(e: &DMatrix<C64>, f: &DMatrix<C64>) -> usize {
    hermitian_eigenvalues(&(e + f)).iter().filter(|&&v| (v - 2.0).abs() < INTERSECTION_TOL).count()
}

/// `ec(P, Q) = dim((1-P) ∧ Q) - dim((1-Q) ∧ P)`.
pub fn essential_codimension(p: &DMatrix<C64>, q: &DMatrix<C64>) -> Result<i64> {
    check_projection(p)?;
    check_projection(q)?;
    if p.nrows() != q.nrows() {
        return Err(Error::DimensionMismatch { left: p.nrows(), right: q.nrows() });
    }
    let id = DMatrix::<C64>::identity(p.nrows(), p.nrows());
    let a = intersection_dim(&(&id - p), q) as i64;
    let b = intersection_dim(&(&id - q), p) as i64;
    Ok(a - b)
}

/// Rank of a projection from its trace.
pub fn rank(p: &DMatrix<C64>) -> usize {
    Float::round(p.trace().re) as usize
}

/// `chi(T >= 0)` with eigenvalues above `-zero_tol` included.
pub fn nonnegative_projection(t: &DMatrix<C64>, zero_tol: f64) -> DMatrix<C64> {
    let (vals, vecs) = hermitian_eigen(t);
    let n = t.nrows();
    let mut p = DMatrix::<C64>::zeros(n, n);
    for (k, &v) in vals.iter().enumerate() {
        if v >= -zero_tol {
            let col = vecs.column(k);
            p += &col * col.adjoint();
        }
    }
    p
}

fn count_nonnegative(t: &DMatrix<C64>, zero_tol: f64) -> usize {
    hermitian_eigenvalues(t).iter().filter(|&&v| v >= -zero_tol).count()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowReport {
    /// `sum_k ec(p_k, p_{k+1})`.
    pub spectral_flow: i64,
    /// `rank p_m - rank p_0`.
    pub rank_difference: i64,
    /// Signed count of eigenvalues moving across zero between samples.
    pub crossings: i64,
}

/// Spectral flow of a sampled path from the essential codimensions of
/// consecutive positive projections. The telescoped rank difference and a
/// crossing count are computed independently and must agree.
pub fn spectral_flow(path: &FlowPath) -> Result<FlowReport> {
    let projs: Vec<DMatrix<C64>> = path.samples.iter().map(|t| nonnegative_projection(t, zero_tol(t))).collect();
    let mut sf = 0;
    for w in projs.windows(2) {
        sf += essential_codimension(&w[0], &w[1])?;
    }
    let rank_difference = rank(projs.last().unwrap()) as i64 - rank(&projs[0]) as i64;
    let counts: Vec<i64> = path.samples.iter().map(|t| count_nonnegative(t, zero_tol(t)) as i64).collect();
    let crossings = counts.windows(2).map(|w| w[1] - w[0]).sum();
    if sf != rank_difference || sf != crossings {
        return Err(Error::NoConvergence(format!(
            "spectral flow {sf}, rank difference {rank_difference} and crossing count {crossings} disagree"
        )));
    }
    Ok(FlowReport { spectral_flow: sf, rank_difference, crossings })
}

/// A continuous path `t -> T(t)` on `[0, 1]`.
pub struct HermitianPath {
    f: Box<dyn Fn(f64) -> DMatrix<C64>>,
}

impl HermitianPath {
    pub fn new<F: Fn(f64) -> DMatrix<C64> + 'static>(f: F) -> Self {
        Self { f: Box::new(f) }
    }

    pub fn at(&self, t: f64) -> DMatrix<C64> {
        (self.f)(t)
    }

    /// Sample on `m + 1` equally spaced points. An interior sample with an
    /// eigenvalue within the zero tolerance is moved toward its left
    /// neighbour by bisection, up to [`MAX_REFINEMENT_DEPTH`] times.
    pub fn sample(&self, m: usize) -> Result<FlowPath> {
        if m == 0 {
            return Err(Error::InvalidParameter("need at least one interval".into()));
        }
        let mut grid: Vec<f64> = (0..=m).map(|k| k as f64 / m as f64).collect();
        let mut samples = Vec::with_capacity(m + 1);
        for k in 0..=m {
            let mut t = grid[k];
            let mut s = self.at(t);
            if k > 0 && k < m {
                let left = grid[k - 1];
                let mut depth = 0;
                while hermitian_eigenvalues(&s).iter().any(|v| v.abs() <= zero_tol(&s)) {
                    if depth == MAX_REFINEMENT_DEPTH {
                        return Err(Error::NoConvergence(format!("eigenvalue stays at zero near t = {t}")));
                    }
                    t = 0.5 * (left + t);
                    s = self.at(t);
                    depth += 1;
                }
                grid[k] = t;
            }
            samples.push(s);
        }
        FlowPath::new(samples, grid)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigFlowReport {
    /// `SF(P T P + 1 - P)`.
    pub spectral_flow: i64,
    /// `Sig(T_1) - Sig(T_0)` on `ran P` (twice the uncorrected right side).
    pub signature_difference: i64,
    /// `dim(ker T_1 ∩ ran P) - dim(ker T_0 ∩ ran P)`.
    pub kernel_difference: i64,
    /// `2 SF = ΔSig + Δker`.
    pub holds: bool,
    /// `2 SF = ΔSig`, the form valid for invertible endpoints.
    pub holds_without_correction: bool,
}

fn range_basis(p: &DMatrix<C64>) -> DMatrix<C64> {
    let (vals, vecs) = hermitian_eigen(p);
    let cols: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > 0.5).collect();
    DMatrix::from_fn(p.nrows(), cols.len(), |i, j| vecs[(i, cols[j])])
}

fn compressed_inertia(t: &DMatrix<C64>, v: &DMatrix<C64>) -> (i64, i64) {
    let c = v.adjoint() * t * v;
    let vals = hermitian_eigenvalues(&c);
    let tol = zero_tol(t);
    let plus = vals.iter().filter(|&&x| x > tol).count() as i64;
    let minus = vals.iter().filter(|&&x| x < -tol).count() as i64;
    (plus - minus, vals.len() as i64 - plus - minus)
}

/// Check `SF(P T_t P + 1 - P) = (Sig T_1 - Sig T_0) / 2 + (dim ker_P T_1 -
/// dim ker_P T_0) / 2` for a path supported in `P`.
pub fn sig_flow_identity(path: &FlowPath, p: &DMatrix<C64>) -> Result<SigFlowReport> {
    check_projection(p)?;
    let n = path.dim();
    if p.nrows() != n {
        return Err(Error::DimensionMismatch { left: p.nrows(), right: n });
    }
    for (index, t) in path.samples.iter().enumerate() {
        let deviation = (p * t * p - t).iter().map(|c| c.norm()).fold(0.0, f64::max);
        if deviation > 1e-10 * dense_operator_norm(t).max(1.0) {
            return Err(Error::SupportViolation { index, deviation });
        }
    }
    let id = DMatrix::<C64>::identity(n, n);
    let compl = &id - p;
    let lifted: Vec<DMatrix<C64>> = path.samples.iter().map(|t| p * t * p + &compl).collect();
    let flow = spectral_flow(&FlowPath::new(lifted, path.grid.clone())?)?;
    let v = range_basis(p);
    let (s0, k0) = compressed_inertia(&path.samples[0], &v);
    let (s1, k1) = compressed_inertia(path.samples.last().unwrap(), &v);
    let signature_difference = s1 - s0;
    let kernel_difference = k1 - k0;
    let sf = flow.spectral_flow;
    Ok(SigFlowReport {
        spectral_flow: sf,
        signature_difference,
        kernel_difference,
        holds: 2 * sf == signature_difference + kernel_difference,
        holds_without_correction: 2 * sf == signature_difference,
    })
}

/// `f(D) = D (1 + D²)^{-1/2}` through the eigendecomposition.
pub fn bounded_transform(d: &DMatrix<C64>) -> DMatrix<C64> {
    let (vals, vecs) = hermitian_eigen(d);
    let n = d.nrows();
    let fv = DMatrix::<C64>::from_fn(n, n, |i, j| {
        if i == j {
            C64::new(vals[i] / (1.0 + vals[i] * vals[i]).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    &vecs * fv * vecs.adjoint()
}
