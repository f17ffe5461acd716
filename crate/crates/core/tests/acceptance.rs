//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use sigloc_core::dirac::{self, DiracBundle};
use sigloc_core::flow::{self, FlowPath};
use sigloc_core::inertia;
use sigloc_core::invariants::{self, WeakRunConfig};
use sigloc_core::lattice::{BallCenter, Boundary, LatticeGeometry, OperatorMatrix};
use sigloc_core::localizer::{self, BulkParameters, LocalizerBundle};
use sigloc_core::models::{self, Family, ModelSpec};
use sigloc_core::oracles::{self, DEFAULT_NK};
use sigloc_core::sparse::SparseMatrix;
use sigloc_core::C64;

type Outcome = Result<String, String>;

fn fail<E: std::fmt::Display>(ctx: &str) -> impl FnOnce(E) -> String + '_ {
    move |e| format!("{ctx}: {e}")
}

fn within(limit: Duration, start: Instant) -> Result<Duration, String> {
    let t = start.elapsed();
    if t > limit {
        return Err(format!("runtime {t:.1?} exceeds {limit:?}"));
    }
    Ok(t)
}

struct BallModel {
    h: OperatorMatrix,
    dirac: DiracBundle,
    params: BulkParameters,
    chiral: bool,
}

impl BallModel {
    fn new(spec: &ModelSpec, n: usize, rho: f64) -> Result<Self, String> {
        let chiral = spec.family.is_chiral();
        let fiber = if chiral { 1 } else { 2 };
        let geom = Arc::new(LatticeGeometry::ball(n, rho, BallCenter::HalfShifted, fiber).map_err(fail("geometry"))?);
        let h = if chiral {
            models::build_chiral_block(spec, &geom, 0, 0)
        } else {
            models::build_hamiltonian(spec, &geom, 0, 0)
        }
        .map_err(fail("model"))?;
        let dirac = dirac::build_dirac(n, &geom, rho).map_err(fail("dirac"))?;
        let params = BulkParameters::measure(spec, n, rho).map_err(fail("bulk parameters"))?;
        Ok(Self { h, dirac, params, chiral })
    }

    fn localizer(&self, h: &OperatorMatrix, kappa: f64) -> sigloc_core::error::Result<LocalizerBundle> {
        if self.chiral {
            localizer::odd_localizer(h, &self.dirac, kappa)
        } else {
            localizer::even_localizer(h, &self.dirac, kappa)
        }
    }

    fn at(&self, kappa: f64) -> Result<LocalizerBundle, String> {
        let mut loc = self.localizer(&self.h, kappa).map_err(fail("localizer"))?;
        loc.assess(self.params).map_err(fail("assess"))?;
        Ok(loc)
    }

    fn practical(&self) -> Result<LocalizerBundle, String> {
        let pk = localizer::practical_kappa(|k| self.localizer(&self.h, k), &self.params).map_err(fail("practical kappa"))?;
        self.at(pk.kappa)
    }
}

fn practical_margin(loc: &LocalizerBundle) -> Result<f64, String> {
    let g = loc.params.ok_or("missing bulk parameters")?.g;
    let m = inertia::min_abs_eigenvalue(loc.reduced.matrix()).map_err(fail("min |eig|"))?;
    if !(m > 0.25 * g) {
        return Err(format!("practical margin {m:.4} <= g/4 = {:.4}", 0.25 * g));
    }
    Ok(m)
}

fn a1() -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    for m in [-1.0, 1.0, 3.0] {
        let spec = ModelSpec::new(Family::Qwz2d, m);
        let chern = oracles::strong_invariant(&spec, DEFAULT_NK).map_err(fail("fhs oracle"))?;
        for rho in [10.5, 12.5] {
            let model = BallModel::new(&spec, 2, rho)?;
            let loc = model.practical()?;
            let margin = practical_margin(&loc)?;
            let pairing = loc.pairing().map_err(fail("pairing"))?;
            if pairing.signature % 2 != 0 || pairing.rounded() != chern {
                return Err(format!("m={m} rho={rho}: -Sig/2 = {} but fhs_chern = {chern}", pairing.value));
            }
            parts.push(format!("m={m} rho={rho} -Sig/2={} (margin {margin:.3})", pairing.rounded()));
        }
    }
    let t = within(Duration::from_secs(300), start)?;
    Ok(format!("{} [{t:.1?}]", parts.join("; ")))
}

fn a2() -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    for (m, expect) in [(0.5, 1), (1.5, 0)] {
        let spec = ModelSpec::new(Family::Chiral1d, m);
        let w = oracles::strong_invariant(&spec, DEFAULT_NK).map_err(fail("winding oracle"))?;
        if w != expect {
            return Err(format!("winding oracle at m={m} returned {w}, expected {expect}"));
        }
        let loc = BallModel::new(&spec, 1, 40.5)?.practical()?;
        practical_margin(&loc)?;
        let pairing = loc.pairing().map_err(fail("pairing"))?;
        if pairing.signature != 2 * w {
            return Err(format!("m={m}: Sig/2 = {} but winding = {w}", pairing.value));
        }
        parts.push(format!("m={m} Sig/2={} winding={w}", pairing.rounded()));
    }
    let t = within(Duration::from_secs(30), start)?;
    Ok(format!("{} [{t:.1?}]", parts.join("; ")))
}

fn a3() -> Outcome {
    let mut parts = Vec::new();
    for m in [0.5, 1.5] {
        let spec = ModelSpec::new(Family::Chiral1d, m);
        let clean = BulkParameters::measure(&spec, 1, 1.5).map_err(fail("bulk parameters"))?;
        let kappa = clean.kappa_max();
        let rho = localizer::admissible_radius(clean.g, kappa);
        let model = BallModel::new(&spec, 1, rho)?;
        let loc = model.at(kappa)?;
        if !loc.admissible_paper() {
            return Err(format!("m={m}: (kappa={kappa:e}, rho={rho}) outside the sufficient bounds: {:?}", loc.admissibility));
        }
        let gap = loc.gap.ok_or("missing gap check")?;
        let g = model.params.g;
        if !(gap.min_abs > 0.5 * g) {
            return Err(format!("m={m}: min |eig| = {} <= g/2 = {}", gap.min_abs, 0.5 * g));
        }
        parts.push(format!("m={m} kappa={kappa:.3e} rho={rho} dim={} min|eig|={:.4} > g/2={:.4}", loc.dim(), gap.min_abs, 0.5 * g));
    }
    Ok(parts.join("; "))
}

fn a4() -> Outcome {
    let spec = ModelSpec::new(Family::Chiral1d, 0.5);
    let kappas = [0.0125, 0.025, 0.05];
    let radii = [20.5, 40.5];
    let mut sigs = Vec::new();
    for rho in radii {
        let model = BallModel::new(&spec, 1, rho)?;
        for kappa in kappas {
            let loc = model.at(kappa)?;
            practical_margin(&loc).map_err(|e| format!("kappa={kappa} rho={rho}: {e}"))?;
            sigs.push(loc.pairing().map_err(fail("pairing"))?.signature);
        }
    }
    if sigs.iter().any(|&s| s != sigs[0]) {
        return Err(format!("signatures differ over the grid: {sigs:?}"));
    }
    Ok(format!("{} pairs (kappa x4, rho x{:.2}), Sig = {}", sigs.len(), radii[1] / radii[0], sigs[0]))
}

fn a5() -> Outcome {
    let mut parts = Vec::new();
    for (spec, n, rho) in [(ModelSpec::new(Family::Qwz2d, 1.0), 2, 10.5), (ModelSpec::new(Family::Chiral1d, 0.5), 1, 40.5)] {
        let model = BallModel::new(&spec, n, rho)?;
        let base = model.practical()?;
        let sig = base.pairing().map_err(fail("pairing"))?.signature;
        for lambda in [0.5, 2.0] {
            let scaled_h = model.h.scale_real(lambda);
            let mut loc = model.localizer(&scaled_h, lambda * base.kappa).map_err(fail("scaled localizer"))?;
            loc.assess(model.params.scaled(lambda)).map_err(fail("assess"))?;
            let expect = base.reduced.matrix().scale_real(lambda);
            let diff = loc.reduced.matrix().max_abs_diff(&expect).map_err(fail("compare"))?;
            if diff > 1e-12 * expect.max_abs() {
                return Err(format!("{} lambda={lambda}: L(lambda h, lambda kappa) differs from lambda L by {diff:e}", spec.family.name()));
            }
            let s = loc.pairing().map_err(fail("pairing"))?.signature;
            if s != sig {
                return Err(format!("{} lambda={lambda}: Sig {s} != {sig}", spec.family.name()));
            }
        }
        parts.push(format!("{} Sig={sig}", spec.family.name()));
    }
    Ok(parts.join("; "))
}

fn a6() -> Outcome {
    let start = Instant::now();
    let spec = ModelSpec::new(Family::StackedChiral2d, 0.5).with_t_perp(0.2);
    let oracle = oracles::weak_invariant_oracle(&spec, DEFAULT_NK).map_err(fail("weak oracle"))?;
    let mut config = WeakRunConfig {
        spec: spec.clone(),
        n: 1,
        kappa: 1.0,
        radius: 10.5,
        volumes: vec![4, 8, 16],
        boundary: Boundary::Periodic,
        samples: 10,
        seed: 20240601,
    };
    let params = BulkParameters::measure(&spec, 1, config.radius).map_err(fail("bulk parameters"))?;
    let probe = |k: f64| {
        let c = WeakRunConfig { kappa: k, volumes: vec![4], ..config.clone() };
        invariants::weak_localizer(&c, 4, 0)
    };
    config.kappa = localizer::practical_kappa(probe, &params).map_err(fail("practical kappa"))?.kappa;
    let clean = invariants::trace_per_volume_signature(&config).map_err(fail("clean weak run"))?;
    if clean.invariant != oracle {
        return Err(format!("clean invariant {} != oracle {oracle}", clean.invariant));
    }
    if !(clean.distance_to_integer < 0.1) {
        return Err(format!("clean distance to integer {} >= 0.1 at l=16", clean.distance_to_integer));
    }
    let errors: Vec<f64> = clean.volumes.iter().map(|v| (v.value - oracle as f64).abs()).collect();
    if errors.windows(2).any(|w| w[1] > w[0]) {
        return Err(format!("error not decreasing in l: {errors:?}"));
    }
    let disordered = WeakRunConfig { spec: spec.with_disorder(0.3), ..config.clone() };
    let dirty = invariants::trace_per_volume_signature(&disordered).map_err(fail("disordered weak run"))?;
    let last = dirty.volumes.last().ok_or("no volumes")?;
    if dirty.invariant != oracle || !(dirty.distance_to_integer < 0.2) {
        return Err(format!("W=0.3 mean {} (stderr {}) does not round to {oracle} within 0.2", last.value, last.stderr));
    }
    let t = within(Duration::from_secs(600), start)?;
    Ok(format!(
        "kappa={:.4} clean {:?} oracle={oracle}; W=0.3 S=10 mean={:.3} stderr={:.3} excluded={} [{t:.1?}]",
        config.kappa,
        clean.volumes.iter().map(|v| v.value).collect::<Vec<_>>(),
        last.value,
        last.stderr,
        dirty.samples.iter().filter(|s| s.excluded).count()
    ))
}

fn gaussian(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<C64> {
    let g = DMatrix::from_fn(n, n, |_, _| gaussian(rng));
    g.qr().q()
}

/// `U diag(values) U*` for a random unitary `U`.
fn with_spectrum(rng: &mut ChaCha8Rng, values: &[f64]) -> DMatrix<C64> {
    let n = values.len();
    let u = random_unitary(rng, n);
    let d = DMatrix::from_fn(n, n, |i, j| if i == j { C64::new(values[i], 0.0) } else { C64::new(0.0, 0.0) });
    let m = &u * d * u.adjoint();
    (&m + m.adjoint()) * C64::new(0.5, 0.0)
}

fn gapped_values(rng: &mut ChaCha8Rng, n: usize, gap: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let mag = gap + rng.random::<f64>() * 2.0;
            if rng.random::<bool>() {
                mag
            } else {
                -mag
            }
        })
        .collect()
}

fn projection_onto(cols: &DMatrix<C64>) -> DMatrix<C64> {
    if cols.ncols() == 0 {
        return DMatrix::zeros(cols.nrows(), cols.nrows());
    }
    let q = cols.clone().qr().q();
    let q = q.columns(0, cols.ncols()).into_owned();
    let p = &q * q.adjoint();
    (&p + p.adjoint()) * C64::new(0.5, 0.0)
}

fn compress(p: &DMatrix<C64>, t: &DMatrix<C64>) -> DMatrix<C64> {
    let m = p * t * p;
    (&m + m.adjoint()) * C64::new(0.5, 0.0)
}

fn a7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..110 {
        let n = rng.random_range(2..=50);
        let r = rng.random_range(1..=n);
        let basis = random_unitary(&mut rng, n);
        let p = projection_onto(&basis.columns(0, r).into_owned());
        let singular = case >= 100;
        let v0 = gapped_values(&mut rng, n, 0.1);
        let t0 = compress(&p, &with_spectrum(&mut rng, &v0));
        let mut v1 = gapped_values(&mut rng, n, 0.1);
        let planted = if singular { rng.random_range(1..=r) } else { 0 };
        // place zero modes inside ran P: rotate the in-range basis
        let t1 = if singular {
            for v in v1.iter_mut().take(planted) {
                *v = 0.0;
            }
            let d = DMatrix::from_fn(n, n, |i, j| if i == j { C64::new(v1[i], 0.0) } else { C64::new(0.0, 0.0) });
            compress(&p, &(&basis * d * basis.adjoint()))
        } else {
            compress(&p, &with_spectrum(&mut rng, &v1))
        };
        let vk = gapped_values(&mut rng, n, 0.0);
        let k = compress(&p, &with_spectrum(&mut rng, &vk));
        let path = FlowPath::sample(
            |t| {
                let bump = (std::f64::consts::PI * t).sin();
                &t0 * C64::new(1.0 - t, 0.0) + &t1 * C64::new(t, 0.0) + &k * C64::new(bump, 0.0)
            },
            32,
        )
        .map_err(fail("path"))?;
        let rep = flow::sig_flow_identity(&path, &p).map_err(|e| format!("case {case}: {e}"))?;
        if singular {
            if !rep.holds || rep.kernel_difference != planted as i64 || rep.holds_without_correction {
                return Err(format!("singular case {case}: {rep:?}, planted {planted}"));
            }
        } else if !(rep.holds_without_correction && rep.kernel_difference == 0) {
            return Err(format!("case {case}: SF {} != (Sig1 - Sig0)/2 = {}/2", rep.spectral_flow, rep.signature_difference));
        }
    }
    Ok("100 invertible-endpoint paths: SF = dSig/2; 10 singular endpoints: SF = (dSig + dker)/2 with dker != 0".into())
}

fn a8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut two_by_two = 0;
    for case in 0..200 {
        let n = if case < 10 { 500 } else { rng.random_range(1..=300) };
        let vals = gapped_values(&mut rng, n, 0.05);
        let (h, sparse) = if case % 4 == 3 {
            // banded sparse with indefinite diagonal, gapped by construction
            let mut trip = Vec::new();
            for i in 0..n {
                trip.push((i, i, C64::new(vals[i] * 3.0, 0.0)));
                if i + 1 < n {
                    let c = gaussian(&mut rng) * 0.3;
                    trip.push((i, i + 1, c));
                    trip.push((i + 1, i, c.conj()));
                }
            }
            let s = SparseMatrix::from_triplets(n, n, trip);
            (s.to_dense(), s)
        } else {
            let h = with_spectrum(&mut rng, &vals);
            let s = SparseMatrix::from_dense(&h, 0.0);
            (h, s)
        };
        let norm = vals.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
        let tol = inertia::default_zero_tol(n, norm);
        let eig = inertia::inertia_eigen(&h, tol).map_err(fail("eigencount"))?;
        if eig.n_zero != 0 {
            continue;
        }
        let factor = inertia::ldl_factor(&sparse).map_err(|e| format!("case {case} (n={n}): {e}"))?;
        two_by_two += factor.two_by_two_pivots();
        let ldl = factor.inertia();
        if !ldl.same_counts(&eig) {
            return Err(format!("case {case} (n={n}): ldl {} vs eigen {}", inertia::describe(&ldl), inertia::describe(&eig)));
        }
    }
    for case in 0..100 {
        let n = rng.random_range(1..=120);
        let vt = gapped_values(&mut rng, n, 0.1);
        let t = with_spectrum(&mut rng, &vt);
        let log_cond: f64 = 3.0 * std::f64::consts::LN_10;
        let s: Vec<f64> = (0..n).map(|i| if i == 0 { 1.0 } else if i == 1 { log_cond.exp() } else { (rng.random::<f64>() * log_cond).exp() }).collect();
        let u = random_unitary(&mut rng, n);
        let v = random_unitary(&mut rng, n);
        let d = DMatrix::from_fn(n, n, |i, j| if i == j { C64::new(s[i], 0.0) } else { C64::new(0.0, 0.0) });
        let a = &u * d * v.adjoint();
        let rep = inertia::sylvester_check(&t, &a).map_err(|e| format!("congruence {case}: {e}"))?;
        if rep.condition > 1e3 * (1.0 + 1e-6) {
            return Err(format!("congruence {case}: cond {} above 1e3", rep.condition));
        }
        if !rep.equal || rep.original.signature() != rep.congruent.signature() {
            return Err(format!("congruence {case}: Sig {} vs {}", rep.original.signature(), rep.congruent.signature()));
        }
    }
    Ok(format!("200 LDL/eigencount agreements ({two_by_two} 2x2 pivots); 100 congruences with cond <= 1e3 preserve Sig"))
}

fn a9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut nontrivial = 0;
    for case in 0..100 {
        let n = rng.random_range(1..=40);
        let (p, q) = if case % 2 == 0 {
            // subspaces spanned by subsets of a common unitary basis, so the
            // intersections are exact and nongeneric
            let u = random_unitary(&mut rng, n);
            let pick = |rng: &mut ChaCha8Rng| -> DMatrix<C64> {
                let idx: Vec<usize> = (0..n).filter(|_| rng.random::<bool>()).collect();
                DMatrix::from_fn(n, idx.len(), |i, j| u[(i, idx[j])])
            };
            (projection_onto(&pick(&mut rng)), projection_onto(&pick(&mut rng)))
        } else {
            let rp = rng.random_range(0..=n);
            let rq = rng.random_range(0..=n);
            let cp = DMatrix::from_fn(n, rp, |_, _| gaussian(&mut rng));
            let cq = DMatrix::from_fn(n, rq, |_, _| gaussian(&mut rng));
            (projection_onto(&cp), projection_onto(&cq))
        };
        let ec = flow::essential_codimension(&p, &q).map_err(|e| format!("pair {case}: {e}"))?;
        let expect = flow::rank(&q) as i64 - flow::rank(&p) as i64;
        if ec != expect {
            return Err(format!("pair {case} (n={n}): ec = {ec}, rank Q - rank P = {expect}"));
        }
        let id = DMatrix::<C64>::identity(n, n);
        if flow::intersection_dim(&(&id - &p), &q) > 0 && flow::intersection_dim(&(&id - &q), &p) > 0 {
            nontrivial += 1;
        }
    }
    Ok(format!("100 pairs; {nontrivial} with both intersections nonzero"))
}

fn a10() -> Outcome {
    let rho = 40.5;
    let mut parts = Vec::new();
    for m in [0.5, 1.5] {
        let spec = ModelSpec::new(Family::Chiral1d, m);
        let shifted = BallModel::new(&spec, 1, rho)?;
        let reference = shifted.practical()?.pairing().map_err(fail("shifted pairing"))?;
        let geom = Arc::new(LatticeGeometry::ball(1, rho, BallCenter::Integer, 1).map_err(fail("geometry"))?);
        let a = models::build_chiral_block(&spec, &geom, 0, 0).map_err(fail("model"))?;
        let bare = dirac::build_dirac_unshifted(1, &geom, rho).map_err(fail("dirac"))?;
        if dirac::min_singular_value(&bare) != 0.0 {
            return Err("unshifted Dirac operator is not singular".into());
        }
        let doubled = dirac::double(&bare, 0.5).map_err(fail("doubling"))?;
        let params = shifted.params;
        let pk = localizer::practical_kappa(|k| localizer::odd_localizer(&a, &doubled, k), &params).map_err(fail("practical kappa"))?;
        let mut loc = localizer::odd_localizer(&a, &doubled, pk.kappa).map_err(fail("localizer"))?;
        loc.assess(params).map_err(fail("assess"))?;
        practical_margin(&loc)?;
        let p = loc.pairing().map_err(fail("doubled pairing"))?;
        if p.signature != reference.signature {
            return Err(format!("m={m}: doubled Sig {} != shifted Sig {}", p.signature, reference.signature));
        }
        parts.push(format!("m={m} Sig={}", p.signature));
    }
    Ok(parts.join("; "))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("A1", a1),
        ("A2", a2),
        ("A3", a3),
        ("A4", a4),
        ("A5", a5),
        ("A6", a6),
        ("A7", a7),
        ("A8", a8),
        ("A9", a9),
        ("A10", a10),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        match f() {
            Ok(msg) => println!("{name} PASS {msg} ({:.1?})", start.elapsed()),
            Err(msg) => {
                failed += 1;
                println!("{name} FAIL {msg} ({:.1?})", start.elapsed());
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
