//! A fast sample of the property suites, runnable from an installed binary.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sigloc_core::flow::{self, FlowPath};
use sigloc_core::inertia;
use sigloc_core::linalg::hermitian_eigen;
use sigloc_core::models::{Family, ModelSpec};
use sigloc_core::sparse::SparseMatrix;
use sigloc_core::{oracles, C64};

use crate::commands::Outcome;
use crate::config::{KappaChoice, RunConfig};
use crate::problem::BallProblem;
use crate::report::Table;

type Check = fn(&mut ChaCha8Rng) -> Result<usize, String>;

fn uniform(rng: &mut ChaCha8Rng, n: usize, m: usize) -> DMatrix<C64> {
    DMatrix::from_fn(n, m, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn hermitian(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<C64> {
    let a = uniform(rng, n, n);
    (&a + a.adjoint()).scale(0.5)
}

/// `U diag(values) U*` with a random unitary `U`.
fn with_spectrum(rng: &mut ChaCha8Rng, values: &[f64]) -> DMatrix<C64> {
    let n = values.len();
    let u = uniform(rng, n, n).qr().q();
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, values.iter().map(|&v| C64::from(v))));
    let m = &u * d * u.adjoint();
    (&m + m.adjoint()).scale(0.5)
}

fn gapped_values(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let v: f64 = rng.random_range(0.1..2.0);
            if rng.random_bool(0.5) {
                v
            } else {
                -v
            }
        })
        .collect()
}

fn ldl_matches_eigencount(rng: &mut ChaCha8Rng) -> Result<usize, String> {
    let cases = 40;
    for case in 0..cases {
        let n = rng.random_range(1..80);
        let values = gapped_values(rng, n);
        let h = with_spectrum(rng, &values);
        let eig = inertia::inertia_eigen(&h, 1e-6).map_err(|e| e.to_string())?;
        let ldl = inertia::inertia_ldl(&SparseMatrix::from_dense(&h, 0.0)).map_err(|e| e.to_string())?;
        if !eig.same_counts(&ldl) {
            return Err(format!("case {case}: {} vs {}", inertia::describe(&eig), inertia::describe(&ldl)));
        }
    }
    Ok(cases)
}

fn sylvester(rng: &mut ChaCha8Rng) -> Result<usize, String> {
    let cases = 20;
    for case in 0..cases {
        let n = rng.random_range(2..40);
        let values = gapped_values(rng, n);
        let t = with_spectrum(rng, &values);
        let sv: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..10.0)).collect();
        let a = uniform(rng, n, n).qr().q() * with_spectrum(rng, &sv);
        let r = inertia::sylvester_check(&t, &a).map_err(|e| e.to_string())?;
        if !r.equal {
            return Err(format!("case {case}: congruence changed the inertia"));
        }
    }
    Ok(cases)
}

fn signature_flow(rng: &mut ChaCha8Rng) -> Result<usize, String> {
    let cases = 20;
    for case in 0..cases {
        let n = rng.random_range(2..16);
        let (v0, v1) = (gapped_values(rng, n), gapped_values(rng, n));
        let t0 = with_spectrum(rng, &v0);
        let t1 = with_spectrum(rng, &v1);
        let path = FlowPath::sample(|s| t0.scale(1.0 - s) + t1.scale(s), 64).map_err(|e| e.to_string())?;
        let p = DMatrix::<C64>::identity(n, n);
        let r = flow::sig_flow_identity(&path, &p).map_err(|e| e.to_string())?;
        if !r.holds {
            return Err(format!("case {case}: SF {} vs signature change {}", r.spectral_flow, r.signature_difference));
        }
    }
    Ok(cases)
}

fn essential_codimension(rng: &mut ChaCha8Rng) -> Result<usize, String> {
    let cases = 20;
    for case in 0..cases {
        let n = rng.random_range(2..20);
        let h = hermitian(rng, n);
        let (_, vecs) = hermitian_eigen(&h);
        let cut = |k: usize| {
            let v = vecs.columns(0, k).into_owned();
            &v * v.adjoint()
        };
        let (a, b) = (rng.random_range(0..=n), rng.random_range(0..=n));
        let (p, q) = (cut(a.min(b)), cut(a.max(b)));
        let ec = flow::essential_codimension(&p, &q).map_err(|e| e.to_string())?;
        if ec != a.max(b) as i64 - a.min(b) as i64 {
            return Err(format!("case {case}: ec {ec} for ranks {} and {}", a.min(b), a.max(b)));
        }
    }
    Ok(cases)
}

fn pairing_matches_oracle(_: &mut ChaCha8Rng) -> Result<usize, String> {
    let cases = [(Family::Chiral1d, 0.5, 1, 20.5), (Family::Chiral1d, 1.5, 1, 20.5), (Family::Qwz2d, 1.0, 2, 6.5)];
    for (family, mass, n, radius) in cases {
        let config = selftest_config(ModelSpec::new(family, mass), n, radius);
        let p = BallProblem::new(&config, radius).map_err(|e| e.to_string())?;
        let (kappa, _, _) = p.choose_kappa(KappaChoice::Auto, true).map_err(|e| e.to_string())?;
        let a = p.assessed(kappa, true).map_err(|e| e.to_string())?;
        let pairing = a.loc.pairing().map_err(|e| e.to_string())?;
        let oracle = oracles::strong_invariant(&config.model, config.nk).map_err(|e| e.to_string())?;
        if !a.certification.ok() || pairing.rounded() != oracle {
            return Err(format!("{} m={mass}: pairing {} vs oracle {oracle}", family.name(), pairing.value));
        }
    }
    Ok(cases.len())
}

fn selftest_config(model: ModelSpec, n: usize, radius: f64) -> RunConfig {
    RunConfig {
        model,
        n,
        radius,
        kappa: KappaChoice::Auto,
        practical: true,
        volumes: vec![4],
        boundary: sigloc_core::lattice::Boundary::Periodic,
        samples: 1,
        sweep_kappas: None,
        sweep_radii: None,
        nk: oracles::DEFAULT_NK,
        seed: 0,
        workers: 1,
        zero_tol: None,
        matrix_in: None,
        out: None,
        format: crate::config::Format::Csv,
        matrix_out: None,
    }
}

pub const CHECKS: &[(&str, Check)] = &[
    ("ldl_matches_eigencount", ldl_matches_eigencount),
    ("sylvester_congruence", sylvester),
    ("signature_flow_identity", signature_flow),
    ("essential_codimension", essential_codimension),
    ("pairing_matches_oracle", pairing_matches_oracle),
];

pub fn run(seed: u64, verbose: bool) -> Outcome {
    let mut t = Table::new(&["check", "cases", "passed", "detail"]);
    let mut failed = Vec::new();
    for (k, (name, check)) in CHECKS.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let start = Instant::now();
        let result = check(&mut rng);
        let secs = start.elapsed().as_secs_f64();
        if verbose {
            eprintln!("{name}: {result:?}");
        }
        t.note(format!("{name}: {secs:.2}s"));
        match result {
            Ok(cases) => t.push(vec![("check", (*name).into()), ("cases", cases.into()), ("passed", true.into())]),
            Err(detail) => {
                failed.push(*name);
                t.push(vec![("check", (*name).into()), ("passed", false.into()), ("detail", detail.into())]);
            }
        }
    }
    let failure = (!failed.is_empty()).then(|| format!("self-test failures: {}", failed.join(", ")));
    Outcome { table: t, failure }
}
