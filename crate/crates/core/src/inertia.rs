//! Inertia of Hermitian matrices by eigenvalue counting and by a
//! Bunch–Kaufman `LDLᴴ` factorization with rook pivoting.
//!
//! The factorization eliminates in natural index order over an active set
//! (no explicit permutation), choosing 1×1 or 2×2 pivots with the rook
//! search. Inertia is read off the block-diagonal factor, which by
//! Sylvester's law equals the inertia of the input.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, LanczosOptions, DENSE_EIGENCOUNT_MAX, DENSE_EIGEN_LIMIT};
use crate::sparse::SparseMatrix;
use crate::C64;

/// Bunch–Kaufman pivot threshold `(1 + sqrt 17) / 8`, rounded.
pub const PIVOT_ALPHA: f64 = 0.64;

/// Denser inputs than this (nnz / n^2) use the dense factorization.
const DENSE_FILL: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Eigencount,
    Factorization,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::Eigencount => "eigencount",
            Method::Factorization => "factorization",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InertiaTriple {
    pub n_plus: usize,
    pub n_zero: usize,
    pub n_minus: usize,
    pub zero_tol: f64,
    pub method: Method,
}

impl InertiaTriple {
    pub fn signature(&self) -> i64 {
        self.n_plus as i64 - self.n_minus as i64
    }

    pub fn dim(&self) -> usize {
        self.n_plus + self.n_zero + self.n_minus
    }

    /// Same counts, ignoring tolerance and method.
    pub fn same_counts(&self, other: &Self) -> bool {
        (self.n_plus, self.n_zero, self.n_minus) == (other.n_plus, other.n_zero, other.n_minus)
    }
}

/// `max(1e-8 ‖H‖, n ε ‖H‖)`.
pub fn default_zero_tol(dim: usize, norm: f64) -> f64 {
    (1e-8 * norm).max(dim as f64 * f64::EPSILON * norm)
}

fn check_hermitian_dense(h: &DMatrix<C64>) -> Result<()> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch { left: h.nrows(), right: h.ncols() });
    }
    let dev = linalg::hermitian_deviation(h);
    let scale = h.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1.0);
    if dev > 1e-12 * scale {
        return Err(Error::NotHermitian(dev));
    }
    Ok(())
}

fn check_hermitian_sparse(h: &SparseMatrix) -> Result<()> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch { left: h.nrows(), right: h.ncols() });
    }
    let dev = h.hermitian_deviation();
    if dev > 1e-12 * h.max_abs().max(1.0) {
        return Err(Error::NotHermitian(dev));
    }
    Ok(())
}

fn count(vals: &[f64], zero_tol: f64) -> InertiaTriple {
    let n_plus = vals.iter().filter(|&&v| v > zero_tol).count();
    let n_minus = vals.iter().filter(|&&v| v < -zero_tol).count();
    InertiaTriple {
        n_plus,
        n_zero: vals.len() - n_plus - n_minus,
        n_minus,
        zero_tol,
        method: Method::Eigencount,
    }
}

/// Count eigenvalues above `zero_tol`, below `-zero_tol`, and in between.
pub fn inertia_eigen(h: &DMatrix<C64>, zero_tol: f64) -> Result<InertiaTriple> {
    check_hermitian_dense(h)?;
    Ok(count(&linalg::hermitian_eigenvalues(h), zero_tol))
}

/// [`inertia_eigen`] on a sparse input, densified up to
/// [`DENSE_EIGENCOUNT_MAX`].
pub fn inertia_eigen_sparse(h: &SparseMatrix, zero_tol: f64) -> Result<InertiaTriple> {
    check_hermitian_sparse(h)?;
    if h.nrows() > DENSE_EIGENCOUNT_MAX {
        return Err(Error::TooLarge { dim: h.nrows(), limit: DENSE_EIGENCOUNT_MAX });
    }
    Ok(count(&linalg::hermitian_eigenvalues(&h.to_dense()), zero_tol))
}

/// One elimination step of the factorization.
#[derive(Clone, Debug)]
struct Step {
    pivots: [usize; 2],
    size: usize,
    /// Inverse of the pivot block (only the leading `size` square is used).
    dinv: [[C64; 2]; 2],
    /// Sign contributions `(plus, minus)` of this block.
    signs: (usize, usize),
    /// `(j, A[j, S])` for every active row `j` coupled to the pivot set.
    couplings: Vec<(usize, [C64; 2])>,
}

/// `LDLᴴ` factorization of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct LdlFactor {
    n: usize,
    steps: Vec<Step>,
    two_by_two: usize,
}

impl LdlFactor {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of 2×2 pivot blocks used.
    pub fn two_by_two_pivots(&self) -> usize {
        self.two_by_two
    }

    pub fn inertia(&self) -> InertiaTriple {
        let (p, m) = self.steps.iter().fold((0, 0), |(p, m), s| (p + s.signs.0, m + s.signs.1));
        InertiaTriple {
            n_plus: p,
            n_zero: 0,
            n_minus: m,
            zero_tol: 0.0,
            method: Method::Factorization,
        }
    }

    /// Solve `H x = b`.
    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [C64]) {
        for s in &self.steps {
            let y = [x[s.pivots[0]], if s.size == 2 { x[s.pivots[1]] } else { C64::zero() }];
            let w = apply_dinv(s, y);
            for (j, c) in &s.couplings {
                x[*j] -= c[0] * w[0] + c[1] * w[1];
            }
        }
        for s in self.steps.iter().rev() {
            let mut y = [x[s.pivots[0]], if s.size == 2 { x[s.pivots[1]] } else { C64::zero() }];
            for (j, c) in &s.couplings {
                y[0] -= c[0].conj() * x[*j];
                y[1] -= c[1].conj() * x[*j];
            }
            let z = apply_dinv(s, y);
            x[s.pivots[0]] = z[0];
            if s.size == 2 {
                x[s.pivots[1]] = z[1];
            }
        }
    }
}

fn apply_dinv(s: &Step, y: [C64; 2]) -> [C64; 2] {
    if s.size == 1 {
        [s.dinv[0][0] * y[0], C64::zero()]
    } else {
        [
            s.dinv[0][0] * y[0] + s.dinv[0][1] * y[1],
            s.dinv[1][0] * y[0] + s.dinv[1][1] * y[1],
        ]
    }
}

/// Storage abstraction shared by the dense and sparse eliminations. Only
/// active indices are ever queried.
trait Workspace {
    fn dim(&self) -> usize;
    fn diag(&self, i: usize) -> f64;
    fn get(&self, i: usize, j: usize) -> C64;
    /// Largest `|A[i, j]|` over active `j != i`, with its index.
    fn off_max(&self, i: usize) -> (f64, usize);
    /// Eliminate the pivot set, returning `(j, A[j, S])` for coupled rows.
    fn eliminate(&mut self, piv: &[usize], dinv: &[[C64; 2]; 2]) -> Vec<(usize, [C64; 2])>;
}

struct Dense {
    a: DMatrix<C64>,
    active: Vec<bool>,
    live: Vec<usize>,
}

impl Workspace for Dense {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn diag(&self, i: usize) -> f64 {
        self.a[(i, i)].re
    }

    fn get(&self, i: usize, j: usize) -> C64 {
        self.a[(i, j)]
    }

    fn off_max(&self, i: usize) -> (f64, usize) {
        let mut best = (0.0, i);
        for &j in &self.live {
            if j != i {
                let v = self.a[(j, i)].norm();
                if v > best.0 {
                    best = (v, j);
                }
            }
        }
        best
    }

    fn eliminate(&mut self, piv: &[usize], dinv: &[[C64; 2]; 2]) -> Vec<(usize, [C64; 2])> {
        for &p in piv {
            self.active[p] = false;
        }
        self.live.retain(|&j| self.active[j]);
        let k = piv.len();
        let mut couplings = Vec::with_capacity(self.live.len());
        for &j in &self.live {
            let mut c = [C64::zero(); 2];
            for (s, &p) in piv.iter().enumerate() {
                c[s] = self.a[(j, p)];
            }
            if c.iter().all(|v| v.is_zero()) {
                continue;
            }
            couplings.push((j, c));
        }
        // A[j, l] -= c_j dinv conj(c_l)^T, using Hermitian symmetry A[S, l] = conj(A[l, S]).
        for &(j, cj) in &couplings {
            let mut w = [C64::zero(); 2];
            for (s, ws) in w.iter_mut().enumerate().take(k) {
                for t in 0..k {
                    *ws += cj[t] * dinv[t][s];
                }
            }
            for &(l, cl) in &couplings {
                let mut upd = C64::zero();
                for s in 0..k {
                    upd += w[s] * cl[s].conj();
                }
                self.a[(j, l)] -= upd;
            }
        }
        couplings
    }
}

type Row = Vec<(usize, C64)>;

struct Sparse {
    rows: Vec<Row>,
}

impl Sparse {
    fn entry(row: &Row, j: usize) -> C64 {
        match row.binary_search_by_key(&j, |e| e.0) {
            Ok(k) => row[k].1,
            Err(_) => C64::zero(),
        }
    }
}

impl Workspace for Sparse {
    fn dim(&self) -> usize {
        self.rows.len()
    }

    fn diag(&self, i: usize) -> f64 {
        Self::entry(&self.rows[i], i).re
    }

    fn get(&self, i: usize, j: usize) -> C64 {
        Self::entry(&self.rows[i], j)
    }

    fn off_max(&self, i: usize) -> (f64, usize) {
        let mut best = (0.0, i);
        for &(j, v) in &self.rows[i] {
            if j != i && v.norm() > best.0 {
                best = (v.norm(), j);
            }
        }
        best
    }

    fn eliminate(&mut self, piv: &[usize], dinv: &[[C64; 2]; 2]) -> Vec<(usize, [C64; 2])> {
        let k = piv.len();
        let in_piv = |j: usize| piv.contains(&j);
        let mut pivot_rows: Vec<Row> = piv.iter().map(|&p| core::mem::take(&mut self.rows[p])).collect();
        for r in &mut pivot_rows {
            r.retain(|&(j, _)| !in_piv(j));
        }
        let mut neighbors: Vec<usize> = pivot_rows.iter().flat_map(|r| r.iter().map(|e| e.0)).collect();
        neighbors.sort_unstable();
        neighbors.dedup();
        let mut couplings = Vec::with_capacity(neighbors.len());
        for &j in &neighbors {
            let mut c = [C64::zero(); 2];
            for (s, r) in pivot_rows.iter().enumerate() {
                // A[j, p] = conj(A[p, j])
                c[s] = Self::entry(r, j).conj();
            }
            let mut w = [C64::zero(); 2];
            for (s, ws) in w.iter_mut().enumerate().take(k) {
                for t in 0..k {
                    *ws += c[t] * dinv[t][s];
                }
            }
            let old = core::mem::take(&mut self.rows[j]);
            self.rows[j] = merge_update(&old, &pivot_rows, &w[..k], &in_piv);
            couplings.push((j, c));
        }
        couplings
    }
}

/// `row - sum_s w_s * pivot_rows[s]`, dropping pivot columns.
fn merge_update(row: &Row, pivot_rows: &[Row], w: &[C64], in_piv: &dyn Fn(usize) -> bool) -> Row {
    let mut out: Row = Vec::with_capacity(row.len() + pivot_rows.iter().map(|r| r.len()).sum::<usize>());
    let mut cursors = vec![0usize; pivot_rows.len()];
    let mut i = 0;
    loop {
        let mut next = usize::MAX;
        if i < row.len() {
            next = row[i].0;
        }
        for (s, r) in pivot_rows.iter().enumerate() {
            if cursors[s] < r.len() {
                next = next.min(r[cursors[s]].0);
            }
        }
        if next == usize::MAX {
            break;
        }
        let mut v = C64::zero();
        if i < row.len() && row[i].0 == next {
            v = row[i].1;
            i += 1;
        }
        for (s, r) in pivot_rows.iter().enumerate() {
            if cursors[s] < r.len() && r[cursors[s]].0 == next {
                v -= w[s] * r[cursors[s]].1;
                cursors[s] += 1;
            }
        }
        if !in_piv(next) {
            out.push((next, v));
        }
    }
    out
}

fn factorize<W: Workspace>(mut ws: W, scale: f64) -> Result<LdlFactor> {
    let n = ws.dim();
    let tol = n as f64 * f64::EPSILON * scale;
    let mut active = vec![true; n];
    let mut steps = Vec::new();
    let mut two_by_two = 0;
    let mut next = 0;
    let mut step_no = 0;
    while next < n {
        if !active[next] {
            next += 1;
            continue;
        }
        let k = next;
        let absakk = ws.diag(k).abs();
        let (colmax, imax) = ws.off_max(k);
        let piv: ([usize; 2], usize) = if absakk.max(colmax) <= tol {
            return Err(Error::PivotBreakdown { step: step_no, pivot: absakk.max(colmax), tol });
        } else if absakk >= PIVOT_ALPHA * colmax {
            ([k, k], 1)
        } else {
            let (mut p, mut colmax, mut imax) = (k, colmax, imax);
            loop {
                let (rowmax, jmax) = ws.off_max(imax);
                if ws.diag(imax).abs() >= PIVOT_ALPHA * rowmax {
                    break ([imax, imax], 1);
                } else if p == jmax || rowmax <= colmax {
                    break ([p.min(imax), p.max(imax)], 2);
                }
                p = imax;
                colmax = rowmax;
                imax = jmax;
            }
        };
        let (pivots, size) = piv;
        let mut dinv = [[C64::zero(); 2]; 2];
        let signs;
        if size == 1 {
            let d = ws.diag(pivots[0]);
            if d.abs() <= tol {
                return Err(Error::PivotBreakdown { step: step_no, pivot: d.abs(), tol });
            }
            dinv[0][0] = C64::new(1.0 / d, 0.0);
            signs = if d > 0.0 { (1, 0) } else { (0, 1) };
        } else {
            let (a, b, c) = (ws.diag(pivots[0]), ws.get(pivots[0], pivots[1]), ws.diag(pivots[1]));
            let det = a * c - b.norm_sqr();
            // eigenvalues of [[a, b], [conj b, c]]
            let half_tr = 0.5 * (a + c);
            let disc = (0.25 * (a - c) * (a - c) + b.norm_sqr()).sqrt();
            let min_eig = (half_tr.abs() - disc).abs();
            if min_eig <= tol || det == 0.0 {
                return Err(Error::PivotBreakdown { step: step_no, pivot: min_eig, tol });
            }
            dinv = [[C64::new(c / det, 0.0), -b / det], [-b.conj() / det, C64::new(a / det, 0.0)]];
            signs = if det < 0.0 {
                (1, 1)
            } else if half_tr > 0.0 {
                (2, 0)
            } else {
                (0, 2)
            };
            two_by_two += 1;
        }
        let couplings = ws.eliminate(&pivots[..size], &dinv);
        for &p in &pivots[..size] {
            active[p] = false;
        }
        steps.push(Step { pivots, size, dinv, signs, couplings });
        step_no += 1;
    }
    Ok(LdlFactor { n, steps, two_by_two })
}

/// Dense `LDLᴴ` factorization.
pub fn ldl_dense(h: &DMatrix<C64>) -> Result<LdlFactor> {
    check_hermitian_dense(h)?;
    let scale = h.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let n = h.nrows();
    factorize(Dense { a: h.clone(), active: vec![true; n], live: (0..n).collect() }, scale)
}

/// Sparse `LDLᴴ` factorization on full symmetric row storage.
pub fn ldl_sparse(h: &SparseMatrix) -> Result<LdlFactor> {
    check_hermitian_sparse(h)?;
    let rows = (0..h.nrows()).map(|i| h.row(i).collect()).collect();
    factorize(Sparse { rows }, h.max_abs())
}

/// Factorize with the dense or sparse kernel depending on fill.
pub fn ldl_factor(h: &SparseMatrix) -> Result<LdlFactor> {
    let n = h.nrows();
    if n <= 64 || h.nnz() as f64 > DENSE_FILL * (n as f64) * (n as f64) {
        ldl_dense(&h.to_dense())
    } else {
        ldl_sparse(h)
    }
}

/// Inertia from a single factorization. Requires a gapped input;
/// `n_zero` is always 0. A [`Error::PivotBreakdown`] means `h` is
/// numerically singular and eigencounting should be used instead.
pub fn inertia_ldl(h: &SparseMatrix) -> Result<InertiaTriple> {
    Ok(ldl_factor(h)?.inertia())
}

/// Dense-input variant of [`inertia_ldl`].
pub fn inertia_ldl_dense(h: &DMatrix<C64>) -> Result<InertiaTriple> {
    Ok(ldl_dense(h)?.inertia())
}

/// Number of eigenvalues strictly below `sigma`, from the factorization of
/// `h - sigma`.
pub fn count_below(h: &SparseMatrix, sigma: f64) -> Result<usize> {
    Ok(ldl_factor(&h.shifted(sigma))?.inertia().n_minus)
}

/// Full inertia triple by spectrum slicing at `±zero_tol`: two
/// factorizations, no eigensolve.
pub fn inertia_sliced(h: &SparseMatrix, zero_tol: f64) -> Result<InertiaTriple> {
    check_hermitian_sparse(h)?;
    let below_neg = count_below(h, -zero_tol)?;
    let n = h.nrows();
    let above_pos = n - count_below(h, zero_tol)?;
    Ok(InertiaTriple {
        n_plus: above_pos,
        n_zero: n - above_pos - below_neg,
        n_minus: below_neg,
        zero_tol,
        method: Method::Factorization,
    })
}

/// Inertia by the cheapest reliable method: eigencount up to
/// [`DENSE_EIGEN_LIMIT`], otherwise slicing by factorization.
pub fn inertia_auto(h: &SparseMatrix, zero_tol: f64) -> Result<InertiaTriple> {
    if h.nrows() <= DENSE_EIGEN_LIMIT {
        inertia_eigen_sparse(h, zero_tol)
    } else {
        inertia_sliced(h, zero_tol)
    }
}

/// `min |spec(h)|`. Dense up to [`DENSE_EIGEN_LIMIT`]; above it, Lanczos on
/// `h⁻¹` via the factorization. Returns 0 when the factorization breaks down.
pub fn min_abs_eigenvalue(h: &SparseMatrix) -> Result<f64> {
    check_hermitian_sparse(h)?;
    let n = h.nrows();
    if n <= DENSE_EIGEN_LIMIT {
        let vals = linalg::hermitian_eigenvalues(&h.to_dense());
        return Ok(vals.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min));
    }
    let f = match ldl_factor(h) {
        Ok(f) => f,
        Err(Error::PivotBreakdown { .. }) => return Ok(0.0),
        Err(e) => return Err(e),
    };
    let ext = linalg::lanczos_extremes(
        n,
        |x, y| {
            y.copy_from_slice(x);
            f.solve_in_place(y);
        },
        LanczosOptions { tol: 1e-9, ..Default::default() },
    )?;
    let inv_norm = ext.min.abs().max(ext.max.abs());
    Ok(if inv_norm > 0.0 { 1.0 / inv_norm } else { f64::INFINITY })
}

/// Number of eigenvalues in `[lo, hi)`.
pub fn count_in_interval(h: &SparseMatrix, lo: f64, hi: f64) -> Result<usize> {
    if h.nrows() <= DENSE_EIGEN_LIMIT {
        check_hermitian_sparse(h)?;
        let vals = linalg::hermitian_eigenvalues(&h.to_dense());
        return Ok(vals.iter().filter(|&&v| v >= lo && v < hi).count());
    }
    Ok(count_below(h, hi)? - count_below(h, lo)?)
}

/// Outcome of a congruence test `Sig(A* T A) = Sig(T)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SylvesterReport {
    pub original: InertiaTriple,
    pub congruent: InertiaTriple,
    pub condition: f64,
    pub equal: bool,
}

/// Condition numbers above this count as numerically singular.
pub const SYLVESTER_MAX_CONDITION: f64 = 1e12;

/// Compare the inertia of `T` and `A* T A` by eigencounting. The zero
/// tolerance for `A* T A` is the one for `T` scaled by `‖A‖²`.
pub fn sylvester_check(t: &DMatrix<C64>, a: &DMatrix<C64>) -> Result<SylvesterReport> {
    check_hermitian_dense(t)?;
    if a.nrows() != t.nrows() || !a.is_square() {
        return Err(Error::DimensionMismatch { left: a.nrows(), right: t.nrows() });
    }
    let sv = a.clone().singular_values();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= SYLVESTER_MAX_CONDITION) {
        return Err(Error::Singular(condition));
    }
    let tnorm = linalg::dense_operator_norm(t);
    let tol = default_zero_tol(t.nrows(), tnorm);
    let original = inertia_eigen(t, tol)?;
    let ata = a.adjoint() * t * a;
    let congruent = inertia_eigen(&linalg::hermitian_part(&ata), tol * smax * smax)?;
    Ok(SylvesterReport { original, congruent, condition, equal: original.same_counts(&congruent) })
}

/// Convenience for error messages.
pub fn describe(t: &InertiaTriple) -> alloc::string::String {
    format!(
        "(n+={}, n0={}, n-={}) sig={} [{} tol={:e}]",
        t.n_plus,
        t.n_zero,
        t.n_minus,
        t.signature(),
        t.method.tag(),
        t.zero_tol
    )
}
