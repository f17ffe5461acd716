//! Run configuration in TOML.
//!
//! ```toml
//! [model]
//! family = "qwz2d"        # qwz2d | stacked_qwz3d | chiral1d | stacked_chiral2d
//! mass = 1.0
//! t_perp = 0.0            # stacked families only
//! disorder = 0.0          # W
//! flux = [0, 1]           # p / q per plaquette
//!
//! [dirac]
//! n = 2                   # pairing directions, default from the family
//! radius = 10.5           # positive half-integer
//!
//! [localizer]
//! kappa = "auto"          # or a positive number
//! practical = false
//!
//! [weak]
//! volumes = [4, 8, 16]
//! boundary = "periodic"   # or "dirichlet"
//! samples = 1
//!
//! [sweep]
//! kappas = [0.01, 0.02]   # default: kappa x {1/2, 1, 2}
//! radii = [10.5, 20.5]    # default: rho and about 2 rho
//!
//! [oracle]
//! nk = 40
//!
//! [run]
//! seed = 0
//! workers = 1
//!
//! [tolerances]
//! zero_tol = 1e-8         # default: g/4 for localizers, else the matrix rule
//!
//! [input]
//! matrix = "l.txt"        # for `sig`
//!
//! [output]
//! path = "out.csv"
//! format = "csv"          # or "json"
//! matrix = "l.slmx"       # matrix container written by `model` / `localize`
//! ```
//!
//! Every section and key is optional except `model.family` and
//! `model.mass`. Unknown sections and keys are errors; all problems are
//! reported together.

use std::path::PathBuf;

use serde::Serialize;
use sigloc_core::lattice::Boundary;
use sigloc_core::models::{Family, Flux, ModelSpec};
use toml::{Table, Value};

use crate::error::{CliError, CliResult};

pub const DEFAULT_RADIUS: f64 = 10.5;
pub const DEFAULT_VOLUMES: [usize; 3] = [4, 8, 16];

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KappaChoice {
    Auto,
    #[serde(untagged)]
    Value(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "csv" => Some(Format::Csv),
            "json" => Some(Format::Json),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub n: usize,
    pub radius: f64,
    pub kappa: KappaChoice,
    pub practical: bool,
    pub volumes: Vec<usize>,
    pub boundary: Boundary,
    pub samples: usize,
    pub sweep_kappas: Option<Vec<f64>>,
    pub sweep_radii: Option<Vec<f64>>,
    pub nk: usize,
    pub seed: u64,
    pub workers: usize,
    pub zero_tol: Option<f64>,
    pub matrix_in: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub matrix_out: Option<PathBuf>,
}

const SCHEMA: &[(&str, &[&str])] = &[
    ("model", &["family", "mass", "t_perp", "disorder", "flux"]),
    ("dirac", &["n", "radius"]),
    ("localizer", &["kappa", "practical"]),
    ("weak", &["volumes", "boundary", "samples"]),
    ("sweep", &["kappas", "radii"]),
    ("oracle", &["nk"]),
    ("run", &["seed", "workers"]),
    ("tolerances", &["zero_tol"]),
    ("input", &["matrix"]),
    ("output", &["path", "format", "matrix"]),
];

/// Typed accessors that record a message instead of failing.
struct Reader<'a> {
    root: &'a Table,
    errors: Vec<String>,
}

impl<'a> Reader<'a> {
    fn raw(&self, section: &str, key: &str) -> Option<&'a Value> {
        self.root.get(section).and_then(|s| s.as_table()).and_then(|t| t.get(key))
    }

    fn mismatch(&mut self, section: &str, key: &str, want: &str, got: &Value) {
        self.errors.push(format!("{section}.{key}: expected {want}, found {}", got.type_str()));
    }

    fn float(&mut self, section: &str, key: &str) -> Option<f64> {
        match self.raw(section, key)? {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            other => {
                self.mismatch(section, key, "a number", other);
                None
            }
        }
    }

    fn int(&mut self, section: &str, key: &str) -> Option<i64> {
        match self.raw(section, key)? {
            Value::Integer(i) => Some(*i),
            other => {
                self.mismatch(section, key, "an integer", other);
                None
            }
        }
    }

    fn count(&mut self, section: &str, key: &str, min: i64) -> Option<usize> {
        let v = self.int(section, key)?;
        if v < min {
            self.errors.push(format!("{section}.{key} = {v} must be at least {min}"));
            return None;
        }
        Some(v as usize)
    }

    fn string(&mut self, section: &str, key: &str) -> Option<&'a str> {
        match self.raw(section, key)? {
            Value::String(s) => Some(s.as_str()),
            other => {
                self.mismatch(section, key, "a string", other);
                None
            }
        }
    }

    fn boolean(&mut self, section: &str, key: &str) -> Option<bool> {
        match self.raw(section, key)? {
            Value::Boolean(b) => Some(*b),
            other => {
                self.mismatch(section, key, "a boolean", other);
                None
            }
        }
    }

    fn array<T>(&mut self, section: &str, key: &str, want: &str, item: impl Fn(&Value) -> Option<T>) -> Option<Vec<T>> {
        let v = self.raw(section, key)?;
        let Some(arr) = v.as_array() else {
            self.mismatch(section, key, want, v);
            return None;
        };
        let parsed: Option<Vec<T>> = arr.iter().map(&item).collect();
        if parsed.is_none() {
            self.errors.push(format!("{section}.{key}: expected {want}"));
        }
        parsed
    }
}

fn as_number(v: &Value) -> Option<f64> {
    match v {
        Value::Float(x) => Some(*x),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn is_half_integer(x: f64) -> bool {
    x > 0.0 && (x - x.floor() - 0.5).abs() < 1e-12
}

fn check_unknown(root: &Table, errors: &mut Vec<String>) {
    for (section, value) in root {
        let Some(&(_, keys)) = SCHEMA.iter().find(|(s, _)| s == section) else {
            errors.push(format!("unknown section [{section}]"));
            continue;
        };
        let Some(table) = value.as_table() else {
            errors.push(format!("[{section}] must be a table"));
            continue;
        };
        for key in table.keys() {
            if !keys.contains(&key.as_str()) {
                errors.push(format!("unknown key {section}.{key}"));
            }
        }
    }
}

/// Parse and validate. On failure returns every problem found.
pub fn parse_config(text: &str) -> CliResult<RunConfig> {
    let root: Table = toml::from_str(text).map_err(|e| CliError::config(format!("malformed TOML: {}", e.message())))?;
    let mut errors = Vec::new();
    check_unknown(&root, &mut errors);
    let mut r = Reader { root: &root, errors };

    let family = match r.string("model", "family") {
        Some(name) => {
            let f = Family::parse(name);
            if f.is_none() {
                r.errors.push(format!("model.family: unknown family \"{name}\" (qwz2d, stacked_qwz3d, chiral1d, stacked_chiral2d)"));
            }
            f
        }
        None => {
            if r.raw("model", "family").is_none() {
                r.errors.push("model.family is required".into());
            }
            None
        }
    };
    let mass = r.float("model", "mass");
    if mass.is_none() && r.raw("model", "mass").is_none() {
        r.errors.push("model.mass is required".into());
    }
    let t_perp = r.float("model", "t_perp").unwrap_or(0.0);
    let disorder = r.float("model", "disorder").unwrap_or(0.0);
    let flux = r
        .array("model", "flux", "[p, q] integers", |v| v.as_integer())
        .and_then(|v| match v.as_slice() {
            [p, q] if *q > 0 => Some(Flux { p: *p, q: *q as u64 }),
            _ => {
                r.errors.push("model.flux must be [p, q] with q > 0".into());
                None
            }
        })
        .unwrap_or(Flux::ZERO);

    let n = r.count("dirac", "n", 1);
    let radius = r.float("dirac", "radius").unwrap_or(DEFAULT_RADIUS);
    if !is_half_integer(radius) {
        r.errors.push(format!("dirac.radius = {radius} must be a positive half-integer"));
    }

    let kappa = match r.raw("localizer", "kappa") {
        None => KappaChoice::Auto,
        Some(Value::String(s)) if s == "auto" => KappaChoice::Auto,
        Some(v) => match as_number(v) {
            Some(k) if k > 0.0 && k.is_finite() => KappaChoice::Value(k),
            Some(k) => {
                r.errors.push(format!("localizer.kappa = {k} must be positive"));
                KappaChoice::Auto
            }
            None => {
                r.mismatch("localizer", "kappa", "a positive number or \"auto\"", v);
                KappaChoice::Auto
            }
        },
    };
    let practical = r.boolean("localizer", "practical").unwrap_or(false);

    let volumes = r
        .array("weak", "volumes", "an array of positive integers", |v| v.as_integer().filter(|&i| i > 0).map(|i| i as usize))
        .unwrap_or_else(|| DEFAULT_VOLUMES.to_vec());
    if volumes.is_empty() || volumes.windows(2).any(|w| w[1] <= w[0]) {
        r.errors.push(format!("weak.volumes = {volumes:?} must be nonempty and strictly increasing"));
    }
    let boundary = match r.string("weak", "boundary") {
        None | Some("periodic") => Boundary::Periodic,
        Some("dirichlet") => Boundary::Dirichlet,
        Some(other) => {
            r.errors.push(format!("weak.boundary: unknown boundary \"{other}\" (periodic, dirichlet)"));
            Boundary::Periodic
        }
    };
    let samples = r.count("weak", "samples", 1).unwrap_or(1);

    let positive_floats = |v: &Value| as_number(v).filter(|x| *x > 0.0);
    let sweep_kappas = r.array("sweep", "kappas", "an array of positive numbers", positive_floats);
    let sweep_radii = r.array("sweep", "radii", "an array of positive half-integers", |v| as_number(v).filter(|&x| is_half_integer(x)));

    let nk = r.count("oracle", "nk", 4).unwrap_or(sigloc_core::oracles::DEFAULT_NK);
    let seed = match r.int("run", "seed") {
        Some(s) if s >= 0 => s as u64,
        Some(s) => {
            r.errors.push(format!("run.seed = {s} must be nonnegative"));
            0
        }
        None => 0,
    };
    let workers = r.count("run", "workers", 1).unwrap_or(1);
    let zero_tol = r.float("tolerances", "zero_tol");
    if let Some(t) = zero_tol {
        if !(t > 0.0) {
            r.errors.push(format!("tolerances.zero_tol = {t} must be positive"));
        }
    }
    let matrix_in = r.string("input", "matrix").map(PathBuf::from);
    let out = r.string("output", "path").map(PathBuf::from);
    let format = match r.string("output", "format") {
        None => Format::Csv,
        Some(s) => Format::parse(s).unwrap_or_else(|| {
            r.errors.push(format!("output.format: unknown format \"{s}\" (csv, json)"));
            Format::Csv
        }),
    };
    let matrix_out = r.string("output", "matrix").map(PathBuf::from);

    let mut errors = r.errors;
    let n = family.map(|f| n.unwrap_or(f.pairing_directions()));
    if let (Some(family), Some(n)) = (family, n) {
        let d = family.dim();
        if n > d {
            errors.push(format!("weak directions exceed dimension: n = {n} > d = {d} for {}", family.name()));
        } else if (n % 2 == 1) != family.is_chiral() {
            errors.push(format!(
                "dirac.n = {n}: {} pairs with an {} number of directions",
                family.name(),
                if family.is_chiral() { "odd" } else { "even" }
            ));
        }
    }
    let mut config = None;
    if let (Some(family), Some(mass), Some(n)) = (family, mass, n) {
        let model = ModelSpec { family, mass, t_perp, disorder, flux };
        if let Err(e) = model.validate() {
            errors.push(format!("[model] {e}"));
        }
        config = Some(RunConfig {
            model,
            n,
            radius,
            kappa,
            practical,
            volumes,
            boundary,
            samples,
            sweep_kappas,
            sweep_radii,
            nk,
            seed,
            workers,
            zero_tol,
            matrix_in,
            out,
            format,
            matrix_out,
        });
    }
    match config {
        Some(c) if errors.is_empty() => Ok(c),
        _ => Err(CliError::Config(errors)),
    }
}

impl RunConfig {
    /// True when the Dirac operator covers every lattice axis.
    pub fn is_strong(&self) -> bool {
        self.n == self.model.family.dim()
    }
}
