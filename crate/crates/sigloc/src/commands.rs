//! Subcommands. Each returns a table and, for a failed check, the reason.

use std::path::Path;

use rayon::prelude::*;
use sigloc_core::dirac::Parity;
use sigloc_core::inertia::{self, InertiaTriple, Method};
use sigloc_core::invariants::{WeakPlan, WeakRunConfig};
use sigloc_core::localizer::{self, BulkParameters};
use sigloc_core::{linalg, oracles};

use crate::config::{KappaChoice, RunConfig};
use crate::error::{CliError, CliResult};
use crate::matrix_io::MatrixFile;
use crate::problem::{require_strong, Assessed, BallProblem, KappaSource};
use crate::report::{Cell, Table};

pub struct Outcome {
    pub table: Table,
    pub failure: Option<String>,
}

impl Outcome {
    fn ok(table: Table) -> Self {
        Self { table, failure: None }
    }
}

fn pool(workers: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Compute(format!("thread pool: {e}")))
}

fn inertia_cells(t: &InertiaTriple) -> Vec<(&'static str, Cell)> {
    vec![
        ("n_plus", t.n_plus.into()),
        ("n_zero", t.n_zero.into()),
        ("n_minus", t.n_minus.into()),
        ("signature", t.signature().into()),
        ("method", t.method.tag().into()),
        ("zero_tol", t.zero_tol.into()),
    ]
}

fn log(verbose: bool, msg: impl FnOnce() -> String) {
    if verbose {
        eprintln!("{}", msg());
    }
}

pub fn model(config: &RunConfig, verbose: bool) -> CliResult<Outcome> {
    require_strong(config, "model")?;
    log(verbose, || format!("assembling {} on a ball of radius {}", config.model.family.name(), config.radius));
    let p = BallProblem::new(config, config.radius)?;
    let full = if config.model.family.is_chiral() {
        sigloc_core::models::assemble_chiral(&p.h, &std::sync::Arc::new(p.h.geometry().with_fiber(2)))?
    } else {
        p.h.clone()
    };
    let mut t = Table::new(&["quantity", "value", "method", "volume"]);
    t.push(vec![("quantity", "dim".into()), ("value", full.dim().into()), ("volume", "ball".into())]);
    t.push(vec![("quantity", "nnz".into()), ("value", full.matrix().nnz().into()), ("volume", "ball".into())]);
    t.push(vec![
        ("quantity", "hermitian_deviation".into()),
        ("value", full.matrix().hermitian_deviation().into()),
        ("method", "entrywise".into()),
        ("volume", "ball".into()),
    ]);
    let BulkParameters { g, norm_h, norm_comm } = p.params;
    let block = if config.model.family.is_chiral() { "a" } else { "h" };
    t.push(vec![("quantity", "g".into()), ("value", g.into()), ("method", "min_abs_eigenvalue".into()), ("volume", "periodic-cube".into())]);
    t.push(vec![("quantity", format!("norm_{block}").into()), ("value", norm_h.into()), ("method", "operator_norm".into()), ("volume", "periodic-cube".into())]);
    t.push(vec![
        ("quantity", format!("norm_comm_D_{block}").into()),
        ("value", norm_comm.into()),
        ("method", "operator_norm".into()),
        ("volume", "dirichlet-cube".into()),
    ]);
    t.push(vec![("quantity", "kappa_max".into()), ("value", p.params.kappa_max().into()), ("method", "bound".into())]);
    t.push(vec![("quantity", "symbol_gap".into()), ("value", config.model.clean().symbol_gap().into()), ("method", "k-grid".into())]);
    if let Some(path) = &config.matrix_out {
        MatrixFile::new(full.matrix().clone(), 2).write(path)?;
        t.note(format!("wrote {}", path.display()));
    }
    Ok(Outcome::ok(t))
}

fn localizer_rows(t: &mut Table, a: &Assessed, source: KappaSource, triple: Option<&InertiaTriple>) {
    let adm = a.loc.admissibility;
    let mut cells = vec![
        ("kappa", a.loc.kappa.into()),
        ("kappa_source", source.tag().into()),
        ("radius", a.loc.radius.into()),
        ("dim", a.loc.dim().into()),
        ("min_abs", a.min_abs.into()),
        ("g", a.loc.params.map(|p| p.g).into()),
        ("kappa_max", adm.map(|x| x.kappa_max).into()),
        ("rho_min", adm.map(|x| x.rho_min).into()),
        ("admissible_paper", a.loc.admissible_paper().into()),
        ("certification", a.certification.tag().into()),
    ];
    if let Some(t3) = triple {
        cells.extend(inertia_cells(t3));
    }
    t.push(cells);
}

const LOCALIZER_COLUMNS: &[&str] = &[
    "kappa",
    "kappa_source",
    "radius",
    "dim",
    "min_abs",
    "g",
    "kappa_max",
    "rho_min",
    "admissible_paper",
    "certification",
    "n_plus",
    "n_zero",
    "n_minus",
    "signature",
    "method",
    "zero_tol",
];

fn strong_localizer(config: &RunConfig, verbose: bool) -> CliResult<(Assessed, KappaSource)> {
    log(verbose, || format!("measuring bulk parameters at radius {}", config.radius));
    let p = BallProblem::new(config, config.radius)?;
    let (kappa, source, search) = p.choose_kappa(config.kappa, config.practical)?;
    if let Some(s) = &search {
        log(verbose, || format!("practical search: {} probes, best kappa {:e} with min |eig| {:e}", s.probes.len(), s.kappa, s.min_abs));
    }
    let a = p.assessed(kappa, config.practical)?;
    Ok((a, source))
}

pub fn localize(config: &RunConfig, verbose: bool) -> CliResult<Outcome> {
    require_strong(config, "localize")?;
    let (a, source) = strong_localizer(config, verbose)?;
    let mut t = Table::new(LOCALIZER_COLUMNS);
    localizer_rows(&mut t, &a, source, None);
    if let Some(path) = &config.matrix_out {
        let fiber = a.loc.reduced.geometry().fiber();
        MatrixFile::new(a.loc.reduced.matrix().clone(), fiber).write(path)?;
        t.note(format!("wrote {}", path.display()));
    }
    let failure = (!a.certification.ok()).then(|| a.failure());
    Ok(Outcome { table: t, failure })
}

/// Inertia of a stored matrix by eigencounting and by `LDL*` slicing.
pub fn sig(path: &Path, zero_tol: Option<f64>, verbose: bool) -> CliResult<Outcome> {
    let file = MatrixFile::read(path)?;
    let h = &file.matrix;
    if !file.hermitian || h.hermitian_deviation() > 1e-12 * h.max_abs().max(1.0) {
        return Err(CliError::config(format!("{}: matrix is not Hermitian", path.display())));
    }
    let tol = match zero_tol {
        Some(t) => t,
        None => inertia::default_zero_tol(h.nrows(), linalg::sparse_operator_norm(h)?),
    };
    log(verbose, || format!("dim {} nnz {} zero_tol {tol:e}", h.nrows(), h.nnz()));
    let eig = inertia::inertia_eigen_sparse(h, tol)?;
    let ldl = inertia::inertia_sliced(h, tol)?;
    let mut t = Table::new(&["dim", "n_plus", "n_zero", "n_minus", "signature", "method", "zero_tol"]);
    for triple in [&eig, &ldl] {
        let mut cells = inertia_cells(triple);
        cells.push(("dim", h.nrows().into()));
        t.push(cells);
    }
    let agree = eig.same_counts(&ldl);
    t.note(format!("methods agree: {agree}"));
    let failure = (!agree).then(|| format!("eigencount {} and factorization {} disagree", inertia::describe(&eig), inertia::describe(&ldl)));
    Ok(Outcome { table: t, failure })
}

pub fn index(config: &RunConfig, verbose: bool) -> CliResult<Outcome> {
    require_strong(config, "index")?;
    let (a, source) = strong_localizer(config, verbose)?;
    let oracle = oracles::strong_invariant(&config.model.clean(), config.nk)?;
    let triple = a.inertia(config.zero_tol)?;
    let parity = Parity::of(config.n);
    let mut columns = LOCALIZER_COLUMNS.to_vec();
    columns.extend(["pairing", "oracle", "oracle_method", "equal"]);
    let mut t = Table::new(&columns);
    localizer_rows(&mut t, &a, source, Some(&triple));
    let pairing = localizer::pairing_sign(parity) * triple.signature() as f64;
    let equal = triple.n_zero == 0 && pairing == oracle as f64;
    let row = t.rows.last_mut().expect("row just pushed");
    let k = |name: &str| columns.iter().position(|c| *c == name).expect("known column");
    row[k("pairing")] = pairing.into();
    row[k("oracle")] = oracle.into();
    row[k("oracle_method")] = if config.model.family.is_chiral() { "winding" } else { "fhs" }.into();
    row[k("equal")] = equal.into();
    t.note(format!(
        "{} pairing {} = {pairing}, oracle {oracle}: {}",
        if parity == Parity::Odd { "odd" } else { "even" },
        if parity == Parity::Odd { "Sig/2" } else { "-Sig/2" },
        if equal { "equal" } else { "DIFFERENT" }
    ));
    let failure = if !a.certification.ok() {
        Some(a.failure())
    } else if !equal {
        Some(format!("pairing {pairing} differs from oracle {oracle}"))
    } else {
        None
    };
    Ok(Outcome { table: t, failure })
}

/// The default grid around `rho`: `rho` and the half-integer nearest `2 rho`.
pub fn default_radii(rho: f64) -> Vec<f64> {
    vec![rho, (2.0 * rho).floor() + 0.5]
}

pub fn sweep(config: &RunConfig, verbose: bool) -> CliResult<Outcome> {
    require_strong(config, "sweep")?;
    let radii = config.sweep_radii.clone().unwrap_or_else(|| default_radii(config.radius));
    let kappas = match &config.sweep_kappas {
        Some(k) => k.clone(),
        None => {
            let base = BallProblem::new(config, config.radius)?;
            let (k0, _, _) = base.choose_kappa(config.kappa, config.practical)?;
            vec![0.5 * k0, k0, 2.0 * k0]
        }
    };
    log(verbose, || format!("sweep over kappa {kappas:?} x rho {radii:?} on {} workers", config.workers));
    let pool = pool(config.workers)?;
    let problems: Vec<BallProblem> = pool.install(|| radii.par_iter().map(|&r| BallProblem::new(config, r)).collect::<Result<_, _>>())?;
    let jobs: Vec<(usize, f64)> = (0..radii.len()).flat_map(|r| kappas.iter().map(move |&k| (r, k))).collect();
    let results: Vec<(Assessed, InertiaTriple)> = pool.install(|| {
        jobs.par_iter()
            .map(|&(r, k)| -> sigloc_core::Result<_> {
                let a = problems[r].assessed(k, config.practical)?;
                let t = a.inertia(config.zero_tol)?;
                Ok((a, t))
            })
            .collect::<Result<_, _>>()
    })?;
    let mut t = Table::new(LOCALIZER_COLUMNS);
    for (a, triple) in &results {
        localizer_rows(&mut t, a, KappaSource::Given, Some(triple));
    }
    let certified: Vec<i64> = results.iter().filter(|(a, _)| a.certification.ok()).map(|(_, t)| t.signature()).collect();
    let constant = !certified.is_empty() && certified.iter().all(|&s| s == certified[0]);
    t.note(format!("{} of {} pairs certified; signature constant: {constant}", certified.len(), results.len()));
    let failure = if certified.len() != results.len() {
        Some(format!("{} of {} (kappa, rho) pairs not certified", results.len() - certified.len(), results.len()))
    } else if !constant {
        Some(format!("signature varies over the grid: {certified:?}"))
    } else {
        None
    };
    Ok(Outcome { table: t, failure })
}

const WEAK_COLUMNS: &[&str] = &[
    "row",
    "volume",
    "sample",
    "dim",
    "n_plus",
    "n_minus",
    "signature",
    "scaled",
    "min_abs",
    "excluded",
    "included",
    "mean",
    "stderr",
    "value",
    "invariant",
    "oracle",
    "distance",
    "kappa",
    "method",
    "zero_tol",
];

pub fn weak(config: &RunConfig, verbose: bool) -> CliResult<Outcome> {
    let mut run = WeakRunConfig {
        spec: config.model.clone(),
        n: config.n,
        kappa: 1.0,
        radius: config.radius,
        volumes: config.volumes.clone(),
        boundary: config.boundary,
        samples: config.samples,
        seed: config.seed,
    };
    run.validate()?;
    let params = BulkParameters::measure(&run.spec, run.n, run.radius)?;
    run.kappa = match config.kappa {
        KappaChoice::Value(k) => k,
        KappaChoice::Auto if config.practical => {
            let mut probe = run.clone();
            probe.spec = run.spec.clean();
            let l0 = run.volumes[0];
            localizer::practical_kappa(
                |k| {
                    probe.kappa = k;
                    sigloc_core::invariants::weak_localizer(&probe, l0, 0)
                },
                &params,
            )?
            .kappa
        }
        KappaChoice::Auto => params.kappa_max(),
    };
    log(verbose, || format!("weak run at kappa {:e}, volumes {:?}, {} samples", run.kappa, run.volumes, run.effective_samples()));
    let plan = WeakPlan::with_params(&run, params);
    let samples = pool(config.workers)?.install(|| plan.jobs.par_iter().map(|&job| plan.run(job)).collect::<Result<Vec<_>, _>>())?;
    let result = plan.finish(samples)?;
    let oracle = if run.spec.disorder == 0.0 {
        Some(oracles::weak_invariant_oracle(&run.spec, config.nk)?)
    } else {
        oracles::weak_invariant_oracle(&run.spec.clean(), config.nk).ok()
    };
    let mut t = Table::new(WEAK_COLUMNS);
    for s in &result.samples {
        t.push(vec![
            ("row", "sample".into()),
            ("volume", s.volume.into()),
            ("sample", s.sample.into()),
            ("dim", s.dim.into()),
            ("n_plus", s.n_plus.into()),
            ("n_minus", s.n_minus.into()),
            ("signature", s.signature.into()),
            ("scaled", s.scaled.into()),
            ("min_abs", s.min_abs.into()),
            ("excluded", s.excluded.into()),
            ("kappa", result.kappa.into()),
            ("method", s.method.tag().into()),
            ("zero_tol", s.zero_tol.into()),
        ]);
    }
    let zero_tol = params.g / 16.0;
    for v in &result.volumes {
        t.push(vec![
            ("row", "volume".into()),
            ("volume", v.volume.into()),
            ("included", v.included.into()),
            ("excluded", v.excluded.into()),
            ("mean", v.mean.into()),
            ("stderr", v.stderr.into()),
            ("value", v.value.into()),
            ("kappa", result.kappa.into()),
            ("method", Method::Eigencount.tag().into()),
            ("zero_tol", zero_tol.into()),
        ]);
    }
    let matches = oracle.is_none_or(|o| o == result.invariant);
    t.push(vec![
        ("row", "result".into()),
        ("volume", result.volumes.last().map(|v| v.volume).into()),
        ("invariant", result.invariant.into()),
        ("oracle", oracle.into()),
        ("distance", result.distance_to_integer.into()),
        ("kappa", result.kappa.into()),
        ("zero_tol", zero_tol.into()),
    ]);
    t.note(format!(
        "weak invariant {} (distance to integer {:.3e}), oracle {}",
        result.invariant,
        result.distance_to_integer,
        oracle.map_or("n/a".into(), |o| o.to_string())
    ));
    let failure = (!matches).then(|| format!("weak invariant {} differs from oracle {:?}", result.invariant, oracle));
    Ok(Outcome { table: t, failure })
}

pub fn oracle(config: &RunConfig) -> CliResult<Outcome> {
    let spec = config.model.clean();
    let mut t = Table::new(&["family", "mass", "t_perp", "quantity", "value", "method", "nk", "symbol_gap"]);
    let (quantity, method, value) = if config.is_strong() {
        let name = if spec.family.is_chiral() { ("winding", "winding") } else { ("chern", "fhs") };
        (name.0, name.1, oracles::strong_invariant(&spec, config.nk)?)
    } else {
        ("weak", if spec.family.is_chiral() { "winding-per-slice" } else { "fhs-per-slice" }, oracles::weak_invariant_oracle(&spec, config.nk)?)
    };
    t.push(vec![
        ("family", spec.family.name().into()),
        ("mass", spec.mass.into()),
        ("t_perp", spec.t_perp.into()),
        ("quantity", quantity.into()),
        ("value", value.into()),
        ("method", method.into()),
        ("nk", config.nk.into()),
        ("symbol_gap", spec.symbol_gap().into()),
    ]);
    if config.model.disorder != 0.0 {
        t.note("disorder ignored: the oracle uses the clean symbol");
    }
    Ok(Outcome::ok(t))
}
