//! Odd and even spectral localizers, their reduction to the range of
//! `P_rho`, and the admissibility and gap conditions on `(kappa, rho)`.
//!
//! Odd: `L = ((kappa D, a), (a*, -kappa D)) = h + kappa diag(D, -D)` with the
//! duplication index as the most significant part of the fiber; the pairing
//! is `+Sig/2`. Even: `L = kappa D + h gamma`; the pairing is `-Sig/2`.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::dirac::{self, DiracBundle, Parity};
use crate::error::{Error, Result};
use crate::inertia::{self, InertiaTriple};
use crate::lattice::{self, Boundary, LatticeGeometry, OperatorMatrix};
use crate::linalg::DENSE_EIGEN_LIMIT;
use crate::models::{self, ModelSpec};
use crate::sparse::SparseMatrix;
use crate::C64;

/// The three norms entering the admissibility bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BulkParameters {
    /// `g = ‖h⁻¹‖⁻¹`.
    pub g: f64,
    pub norm_h: f64,
    pub norm_comm: f64,
}

/// Largest Hilbert space dimension used for bulk measurements.
pub const BULK_DIM_CAP: usize = 4096;

fn bulk_side(radius: f64, dim: usize, fiber: usize) -> usize {
    let want = (2.0 * radius).ceil() as usize;
    let want = (want + want % 2).max(8);
    let cap = Float::floor(Float::powf((BULK_DIM_CAP / fiber) as f64, 1.0 / dim as f64)) as usize;
    let cap = (cap - cap % 2).max(4);
    want.min(cap)
}

impl BulkParameters {
    /// Measure `g`, `‖h‖` (periodic cube) and `‖[D, h]‖` (dirichlet cube)
    /// for the clean version of `spec`, with the Dirac operator on the first
    /// `n` axes. Cube sides are even, at least `2 rho`, and capped so that
    /// the Hamiltonian has dimension at most [`BULK_DIM_CAP`]. For chiral
    /// families all three refer to the block `a`; in particular the
    /// commutator is `‖[D, a]‖`.
    pub fn measure(spec: &ModelSpec, n: usize, radius: f64) -> Result<Self> {
        let clean = spec.clean();
        clean.validate()?;
        let d = clean.family.dim();
        if n == 0 || n > d {
            return Err(Error::InvalidParameter(format!("{n} pairing directions on a {d}-dimensional model")));
        }
        let chiral = clean.family.is_chiral();
        let fiber = if chiral { 1 } else { clean.family.fiber() };
        let side = bulk_side(radius, d, fiber);
        let build = |boundary: Boundary| -> Result<OperatorMatrix> {
            let g = Arc::new(LatticeGeometry::cube(d, side, boundary, fiber)?);
            if chiral {
                models::build_chiral_block(&clean, &g, 0, 0)
            } else {
                models::build_hamiltonian(&clean, &g, 0, 0)
            }
        };
        let periodic = build(Boundary::Periodic)?;
        let norm_h = lattice::operator_norm(&periodic)?;
        let g = if chiral {
            let h = models::assemble_chiral(&periodic, &Arc::new(periodic.geometry().with_fiber(2)))?;
            lattice::spectral_gap(&h)?
        } else {
            lattice::spectral_gap(&periodic)?
        };
        let open = build(Boundary::Dirichlet)?;
        let dirac = dirac::build_dirac(n, open.geometry(), radius)?;
        let lifted = OperatorMatrix::new(dirac.geometry().clone(), dirac.lift(open.matrix(), None)?)?;
        let norm_comm = lattice::operator_norm(&lattice::commutator(dirac.d(), &lifted)?)?;
        Ok(Self { g, norm_h, norm_comm })
    }

    /// `(lambda g, lambda ‖h‖, lambda ‖[D,h]‖)`.
    pub fn scaled(&self, lambda: f64) -> Self {
        Self { g: lambda * self.g, norm_h: lambda * self.norm_h, norm_comm: lambda * self.norm_comm }
    }

    /// `g³ / (12 ‖[D,h]‖ ‖h‖)`.
    pub fn kappa_max(&self) -> f64 {
        self.g.powi(3) / (12.0 * self.norm_comm * self.norm_h)
    }
}

/// Verdict on the sufficient bounds `kappa <= g³/(12 ‖[D,h]‖ ‖h‖)` and
/// `rho > 2 g / kappa`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Admissibility {
    pub kappa_max: f64,
    pub rho_min: f64,
    pub kappa_ok: bool,
    pub rho_ok: bool,
    pub admissible: bool,
}

pub fn admissibility(g: f64, norm_comm: f64, norm_h: f64, kappa: f64, radius: f64) -> Admissibility {
    let kappa_max = g * g * g / (12.0 * norm_comm * norm_h);
    let rho_min = 2.0 * g / kappa;
    let kappa_ok = kappa <= kappa_max * (1.0 + 1e-12);
    let rho_ok = radius > rho_min;
    Admissibility { kappa_max, rho_min, kappa_ok, rho_ok, admissible: kappa_ok && rho_ok }
}

/// Smallest half-integer radius strictly above `2 g / kappa`.
pub fn admissible_radius(g: f64, kappa: f64) -> f64 {
    let r = 2.0 * g / kappa;
    let mut rho = Float::floor(r) + 0.5;
    if rho <= r {
        rho += 1.0;
    }
    rho
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapCheck {
    pub min_abs: f64,
    pub threshold: f64,
    pub passed: bool,
}

/// `min |spec L|` and whether it exceeds `threshold`. Above
/// [`DENSE_EIGEN_LIMIT`] the verdict is additionally certified by
/// spectrum slicing: no eigenvalue may lie in `[-threshold, threshold)`.
pub fn margin_check(l: &SparseMatrix, threshold: f64) -> Result<GapCheck> {
    let min_abs = inertia::min_abs_eigenvalue(l)?;
    let mut passed = min_abs > threshold;
    if l.nrows() > DENSE_EIGEN_LIMIT && threshold > 0.0 {
        match inertia::count_in_interval(l, -threshold, threshold) {
            Ok(k) => passed = passed && k == 0,
            Err(Error::PivotBreakdown { .. }) => passed = false,
            Err(e) => return Err(e),
        }
    }
    Ok(GapCheck { min_abs, threshold, passed })
}

/// Gap test `min |spec L_{kappa,rho}| > g / 2`.
pub fn gap_check(l: &SparseMatrix, g: f64) -> Result<GapCheck> {
    margin_check(l, 0.5 * g)
}

/// Half the signature with the parity's sign, and its distance to the
/// nearest integer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pairing {
    pub signature: i64,
    pub value: f64,
    pub inertia: InertiaTriple,
}

impl Pairing {
    pub fn rounded(&self) -> i64 {
        Float::round(self.value) as i64
    }

    pub fn distance_to_integer(&self) -> f64 {
        (self.value - Float::round(self.value)).abs()
    }
}

pub fn pairing_sign(parity: Parity) -> f64 {
    match parity {
        Parity::Odd => 0.5,
        Parity::Even => -0.5,
    }
}

#[derive(Clone, Debug)]
pub struct LocalizerBundle {
    pub parity: Parity,
    pub kappa: f64,
    pub radius: f64,
    pub params: Option<BulkParameters>,
    pub full: Option<OperatorMatrix>,
    pub reduced: OperatorMatrix,
    pub admissibility: Option<Admissibility>,
    pub gap: Option<GapCheck>,
}

impl LocalizerBundle {
    pub fn dim(&self) -> usize {
        self.reduced.dim()
    }

    /// Attach bulk parameters, evaluate the sufficient bounds and run the gap
    /// check against `g / 2`.
    pub fn assess(&mut self, params: BulkParameters) -> Result<()> {
        self.params = Some(params);
        self.admissibility = Some(admissibility(params.g, params.norm_comm, params.norm_h, self.kappa, self.radius));
        self.gap = Some(gap_check(self.reduced.matrix(), params.g)?);
        Ok(())
    }

    /// Whether the stored sufficient bounds `kappa <= kappa_max`, `rho > 2g/kappa` hold.
    pub fn admissible_paper(&self) -> bool {
        self.admissibility.is_some_and(|a| a.admissible)
    }

    pub fn gap_verified(&self) -> bool {
        self.gap.is_some_and(|g| g.passed)
    }

    /// Zero tolerance for the signature: `g / 4` once bulk parameters are
    /// known, else the default rule.
    pub fn zero_tol(&self) -> Result<f64> {
        match self.params {
            Some(p) => Ok(0.25 * p.g),
            None => Ok(inertia::default_zero_tol(self.dim(), lattice::operator_norm(&self.reduced)?)),
        }
    }

    /// Inertia of `L_{kappa,rho}` by the automatic method choice.
    pub fn inertia(&self) -> Result<InertiaTriple> {
        inertia::inertia_auto(self.reduced.matrix(), self.zero_tol()?)
    }

    pub fn pairing(&self) -> Result<Pairing> {
        let t = self.inertia()?;
        if t.n_zero != 0 {
            return Err(Error::NotInvertible { gap: 0.0, tol: t.zero_tol });
        }
        let signature = t.signature();
        Ok(Pairing { signature, value: pairing_sign(self.parity) * signature as f64, inertia: t })
    }

    /// Strip `L_full`, keeping only the reduced matrix.
    pub fn drop_full(&mut self) {
        self.full = None;
    }
}

fn reduce(full: &SparseMatrix, dirac: &DiracBundle, copies: usize, parity: Parity, kappa: f64) -> Result<LocalizerBundle> {
    let fiber = dirac.geometry().fiber() * copies;
    let full_geom = Arc::new(dirac.geometry().with_fiber(fiber));
    let kept = dirac.kept_indices(copies);
    if kept.is_empty() {
        return Err(Error::InvalidGeometry("P_rho has empty range".into()));
    }
    let reduced_geom = Arc::new(full_geom.restrict(dirac.support())?);
    let reduced = OperatorMatrix::new_hermitian(reduced_geom, full.principal_submatrix(&kept))?;
    Ok(LocalizerBundle {
        parity,
        kappa,
        radius: dirac.radius(),
        params: None,
        full: Some(OperatorMatrix::new_hermitian(full_geom, full.clone())?),
        reduced,
        admissibility: None,
        gap: None,
    })
}

fn check_kappa(kappa: f64) -> Result<()> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::InvalidParameter(format!("kappa = {kappa} must be positive")));
    }
    Ok(())
}

fn check_invertible_dirac(dirac: &DiracBundle) -> Result<()> {
    let smin = dirac::min_singular_value(dirac);
    if smin == 0.0 {
        return Err(Error::InvalidParameter("Dirac operator is singular; apply the doubling first".into()));
    }
    Ok(())
}

/// `L = ((kappa D, a), (a*, -kappa D))` and its reduction. `a` must live
/// on the Dirac bundle's model geometry. A doubled bundle uses
/// `diag(a, 1)` on the doubled space.
pub fn odd_localizer(a: &OperatorMatrix, dirac: &DiracBundle, kappa: f64) -> Result<LocalizerBundle> {
    if dirac.parity() != Parity::Odd {
        return Err(Error::ParityMismatch { expected: "odd" });
    }
    check_kappa(kappa)?;
    check_invertible_dirac(dirac)?;
    if **a.geometry() != **dirac.model_geometry() {
        return Err(Error::GeometryMismatch("a and the Dirac bundle live on different geometries".into()));
    }
    let al = dirac.lift(a.matrix(), None)?;
    let ad = al.adjoint();
    let kd = dirac.d().matrix().scale_real(kappa);
    let mkd = kd.scale_real(-1.0);
    let f = dirac.geometry().fiber();
    let full = lattice::block_operator(&[vec![Some(&kd), Some(&al)], vec![Some(&ad), Some(&mkd)]], f)?;
    reduce(&full, dirac, 2, Parity::Odd, kappa)
}

/// The odd localizer from a chiral `h = ((0, a*), (a, 0))`.
pub fn odd_localizer_from_h(h: &OperatorMatrix, dirac: &DiracBundle, kappa: f64) -> Result<LocalizerBundle> {
    let a = models::chiral_block(h, 0.0)?;
    let a = OperatorMatrix::new(dirac.model_geometry().clone(), a.into_matrix())?;
    odd_localizer(&a, dirac, kappa)
}

/// `L = kappa D + (1 (x) h) gamma` for a model Hamiltonian `h` on the Dirac
/// bundle's model geometry. A doubled bundle uses `diag(h, 1)`.
pub fn even_localizer(h: &OperatorMatrix, dirac: &DiracBundle, kappa: f64) -> Result<LocalizerBundle> {
    if **h.geometry() != **dirac.model_geometry() {
        return Err(Error::GeometryMismatch("h and the Dirac bundle live on different geometries".into()));
    }
    let lifted = dirac.lift(h.matrix(), None)?;
    even_localizer_lifted(&lifted, dirac, kappa)
}

/// Even localizer for an `h` already on the lifted fiber. Fails unless
/// `[gamma, h] = 0` to `1e-12` relative.
pub fn even_localizer_lifted(h: &SparseMatrix, dirac: &DiracBundle, kappa: f64) -> Result<LocalizerBundle> {
    if dirac.parity() != Parity::Even {
        return Err(Error::ParityMismatch { expected: "even" });
    }
    check_kappa(kappa)?;
    check_invertible_dirac(dirac)?;
    let gamma = dirac.grading().ok_or(Error::ParityMismatch { expected: "even" })?;
    if h.nrows() != gamma.nrows() {
        return Err(Error::DimensionMismatch { left: h.nrows(), right: gamma.nrows() });
    }
    let comm = &h.matmul(&gamma)? - &gamma.matmul(h)?;
    let dev = comm.max_abs();
    if dev > 1e-12 * h.max_abs().max(1.0) {
        return Err(Error::GradingMismatch(dev));
    }
    let hg = h.matmul(&gamma)?;
    let full = dirac.d().matrix().scale_real(kappa).add_scaled(&hg, C64::new(1.0, 0.0))?;
    reduce(&full, dirac, 1, Parity::Even, kappa)
}

/// Block decomposition of an even localizer in the grading: returns
/// `(top-left, bottom-left)` blocks over the `+1` and `-1` eigenspaces of
/// `gamma`, which equal `h_+` and `kappa D_0`.
pub fn even_blocks(l: &SparseMatrix, gamma: &SparseMatrix) -> (SparseMatrix, SparseMatrix) {
    let diag = gamma.diagonal();
    let plus: Vec<usize> = (0..diag.len()).filter(|&i| diag[i].re > 0.0).collect();
    let minus: Vec<usize> = (0..diag.len()).filter(|&i| diag[i].re < 0.0).collect();
    let pos_in = |set: &[usize]| {
        let mut map = vec![usize::MAX; diag.len()];
        for (k, &i) in set.iter().enumerate() {
            map[i] = k;
        }
        map
    };
    let (pm, mm) = (pos_in(&plus), pos_in(&minus));
    let mut tl = Vec::new();
    let mut bl = Vec::new();
    for (i, j, v) in l.triplets() {
        if pm[i] != usize::MAX && pm[j] != usize::MAX {
            tl.push((pm[i], pm[j], v));
        } else if mm[i] != usize::MAX && pm[j] != usize::MAX {
            bl.push((mm[i], pm[j], v));
        }
    }
    (
        SparseMatrix::from_triplets(plus.len(), plus.len(), tl),
        SparseMatrix::from_triplets(minus.len(), plus.len(), bl),
    )
}

/// One evaluation of the practical `kappa` search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaProbe {
    pub kappa: f64,
    pub min_abs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PracticalKappa {
    pub kappa: f64,
    pub min_abs: f64,
    /// Required margin, `g / 4`.
    pub margin: f64,
    pub probes: Vec<KappaProbe>,
}

/// Pick the `kappa` that maximizes `min |spec L_{kappa,rho}|`: a doubling
/// ladder from `kappa_max` up to `‖h‖`, then a golden-section refinement
/// in `log kappa` around the best rung. Fails if the best margin does not
/// exceed `g / 4`.
pub fn practical_kappa<F>(mut build: F, params: &BulkParameters) -> Result<PracticalKappa>
where
    F: FnMut(f64) -> Result<LocalizerBundle>,
{
    let mut probes: Vec<KappaProbe> = Vec::new();
    let mut eval = |kappa: f64, probes: &mut Vec<KappaProbe>| -> Result<f64> {
        let loc = build(kappa)?;
        let m = inertia::min_abs_eigenvalue(loc.reduced.matrix())?;
        probes.push(KappaProbe { kappa, min_abs: m });
        Ok(m)
    };
    let start = params.kappa_max();
    let mut ladder = Vec::new();
    let mut k = start;
    while k <= params.norm_h * 1.000001 || ladder.len() < 2 {
        ladder.push(k);
        k *= 2.0;
        if ladder.len() > 64 {
            break;
        }
    }
    let mut vals = Vec::with_capacity(ladder.len());
    for &k in &ladder {
        vals.push(eval(k, &mut probes)?);
    }
    let best = (0..vals.len()).max_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap_or(0);
    let lo = ladder[best.saturating_sub(1)].ln();
    let hi = ladder[(best + 1).min(ladder.len() - 1)].ln();
    let (mut a, mut b) = (lo, hi);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    if b > a {
        let mut c = b - phi * (b - a);
        let mut d = a + phi * (b - a);
        let mut fc = eval(c.exp(), &mut probes)?;
        let mut fd = eval(d.exp(), &mut probes)?;
        for _ in 0..8 {
            if fc >= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - phi * (b - a);
                fc = eval(c.exp(), &mut probes)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + phi * (b - a);
                fd = eval(d.exp(), &mut probes)?;
            }
        }
    }
    let top = probes
        .iter()
        .copied()
        .max_by(|x, y| x.min_abs.total_cmp(&y.min_abs))
        .ok_or_else(|| Error::NoConvergence("no kappa probes".into()))?;
    let margin = 0.25 * params.g;
    if !(top.min_abs > margin) {
        return Err(Error::NotInvertible { gap: top.min_abs, tol: margin });
    }
    Ok(PracticalKappa { kappa: top.kappa, min_abs: top.min_abs, margin, probes })
}
