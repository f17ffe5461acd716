//! Weak invariants from the trace-per-volume signature of the localizer on
//! `B_rho^n x V_l`, with disorder averaging.
//!
//! The Dirac operator acts on the `n` leading (ball) axes; the remaining
//! `d - n` axes form the cube `V_l`. Each `(l, sample)` contributes
//! `Sig(L) / |V_l|`, the signature per transverse volume. For decoupled
//! layers this equals the single-layer signature exactly; the invariant is
//! `+1/2` (odd `n`) or `-1/2` (even `n`) times the sample mean.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::dirac::{self, Parity};
use crate::error::{Error, Result};
use crate::inertia;
use crate::lattice::{BallCenter, Boundary, LatticeGeometry};
use crate::localizer::{self, Admissibility, BulkParameters, LocalizerBundle};
use crate::models::{self, ModelSpec};

/// Samples whose localizer gap is below `g_clean * EXCLUSION_FRACTION` are
/// excluded.
pub const EXCLUSION_FRACTION: f64 = 0.125;

/// Runs with more than this fraction of excluded samples fail.
pub const MAX_EXCLUDED_FRACTION: f64 = 0.2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakRunConfig {
    pub spec: ModelSpec,
    /// Number of ball (pairing) directions.
    pub n: usize,
    pub kappa: f64,
    pub radius: f64,
    pub volumes: Vec<usize>,
    pub boundary: Boundary,
    pub samples: usize,
    pub seed: u64,
}

impl WeakRunConfig {
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        let d = self.spec.family.dim();
        let mut problems = Vec::new();
        if self.n == 0 || self.n >= d {
            problems.push(format!("weak directions n = {} must satisfy 1 <= n < d = {d}", self.n));
        }
        let parity = Parity::of(self.n);
        let chiral = self.spec.family.is_chiral();
        if chiral != (parity == Parity::Odd) {
            problems.push(format!(
                "{} needs an {} number of pairing directions",
                self.spec.family.name(),
                if chiral { "odd" } else { "even" }
            ));
        }
        if (self.radius - Float::floor(self.radius) - 0.5).abs() > 1e-12 || self.radius <= 0.0 {
            problems.push(format!("rho = {} must be a positive half-integer", self.radius));
        }
        if !(self.kappa > 0.0) {
            problems.push(format!("kappa = {} must be positive", self.kappa));
        }
        if self.volumes.is_empty() || self.volumes.iter().any(|&l| l == 0) {
            problems.push("volumes must be a nonempty list of positive sides".into());
        }
        if self.volumes.windows(2).any(|w| w[1] <= w[0]) {
            problems.push("volumes must be strictly increasing".into());
        }
        if self.samples == 0 {
            problems.push("sample count must be positive".into());
        }
        if !problems.is_empty() {
            return Err(Error::InvalidParameter(problems.join("; ")));
        }
        Ok(())
    }

    /// Samples actually drawn: one for a clean model.
    pub fn effective_samples(&self) -> usize {
        if self.spec.disorder == 0.0 {
            1
        } else {
            self.samples
        }
    }
}

/// Fiber of the localizer per site and the expected dimension of the
/// reduced localizer: `|B_rho^n| * |V_l| * N'` with
/// `N' = 2 cl N_a` (odd, duplication) or `cl N` (even).
pub fn fiber_bookkeeping(config: &WeakRunConfig, ball_sites: usize, l: usize) -> (usize, usize) {
    let cl = 1usize << (config.n / 2);
    let fiber = if config.spec.family.is_chiral() { 2 * cl } else { cl * config.spec.family.fiber() };
    let transverse = l.pow((config.spec.family.dim() - config.n) as u32);
    (fiber, ball_sites * transverse * fiber)
}

/// Reduced localizer for volume `l` and disorder sample `sample`.
pub fn weak_localizer(config: &WeakRunConfig, l: usize, sample: u64) -> Result<LocalizerBundle> {
    let d = config.spec.family.dim();
    let chiral = config.spec.family.is_chiral();
    let fiber = if chiral { 1 } else { config.spec.family.fiber() };
    let geometry = Arc::new(LatticeGeometry::product(
        config.n,
        config.radius,
        BallCenter::HalfShifted,
        alloc::vec![l; d - config.n],
        alloc::vec![config.boundary; d - config.n],
        fiber,
    )?);
    let dirac = dirac::build_dirac(config.n, &geometry, config.radius)?;
    let loc = if chiral {
        let a = models::build_chiral_block(&config.spec, &geometry, config.seed, sample)?;
        localizer::odd_localizer(&a, &dirac, config.kappa)?
    } else {
        let h = models::build_hamiltonian(&config.spec, &geometry, config.seed, sample)?;
        localizer::even_localizer(&h, &dirac, config.kappa)?
    };
    let transverse_sites = l.pow((d - config.n) as u32);
    let ball_sites = dirac.support_size() / transverse_sites;
    let (_, expect) = fiber_bookkeeping(config, ball_sites, l);
    if loc.dim() != expect {
        return Err(Error::DimensionMismatch { left: loc.dim(), right: expect });
    }
    Ok(loc)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakSample {
    pub volume: usize,
    pub sample: u64,
    pub dim: usize,
    pub n_plus: usize,
    pub n_minus: usize,
    pub signature: i64,
    /// `Sig / |V_l|`.
    pub scaled: f64,
    pub min_abs: f64,
    pub excluded: bool,
    pub method: inertia::Method,
    pub zero_tol: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeSummary {
    pub volume: usize,
    pub included: usize,
    pub excluded: usize,
    pub mean: f64,
    pub stderr: f64,
    /// `±1/2 * mean`.
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakResult {
    pub parity: Parity,
    pub kappa: f64,
    pub radius: f64,
    pub params: BulkParameters,
    pub admissibility: Admissibility,
    pub samples: Vec<WeakSample>,
    pub volumes: Vec<VolumeSummary>,
    /// Rounded value at the largest volume.
    pub invariant: i64,
    pub distance_to_integer: f64,
}

/// A fixed work set of `(volume, sample)` jobs sharing bulk parameters.
#[derive(Clone, Debug)]
pub struct WeakPlan {
    pub config: WeakRunConfig,
    pub params: BulkParameters,
    pub jobs: Vec<(usize, u64)>,
}

impl WeakPlan {
    /// Validate and measure the clean bulk parameters once.
    pub fn new(config: &WeakRunConfig) -> Result<Self> {
        config.validate()?;
        let params = BulkParameters::measure(&config.spec, config.n, config.radius)?;
        Ok(Self::with_params(config, params))
    }

    pub fn with_params(config: &WeakRunConfig, params: BulkParameters) -> Self {
        let s = config.effective_samples() as u64;
        let jobs = config.volumes.iter().flat_map(|&l| (0..s).map(move |k| (l, k))).collect();
        Self { config: config.clone(), params, jobs }
    }

    /// Evaluate one job. The signature uses zero tolerance `g / 16`, below the
    /// exclusion threshold, so included samples have no zero eigenvalues.
    pub fn run(&self, job: (usize, u64)) -> Result<WeakSample> {
        let (l, sample) = job;
        let loc = weak_localizer(&self.config, l, sample)?;
        let g = self.params.g;
        let threshold = EXCLUSION_FRACTION * g;
        let check = localizer::margin_check(loc.reduced.matrix(), threshold)?;
        let zero_tol = g / 16.0;
        let transverse = l.pow((self.config.spec.family.dim() - self.config.n) as u32) as f64;
        if !check.passed {
            return Ok(WeakSample {
                volume: l,
                sample,
                dim: loc.dim(),
                n_plus: 0,
                n_minus: 0,
                signature: 0,
                scaled: 0.0,
                min_abs: check.min_abs,
                excluded: true,
                method: inertia::Method::Eigencount,
                zero_tol,
            });
        }
        let t = inertia::inertia_auto(loc.reduced.matrix(), zero_tol)?;
        Ok(WeakSample {
            volume: l,
            sample,
            dim: loc.dim(),
            n_plus: t.n_plus,
            n_minus: t.n_minus,
            signature: t.signature(),
            scaled: t.signature() as f64 / transverse,
            min_abs: check.min_abs,
            excluded: false,
            method: t.method,
            zero_tol,
        })
    }

    /// Merge job results (in any order) into a [`WeakResult`].
    pub fn finish(&self, mut samples: Vec<WeakSample>) -> Result<WeakResult> {
        samples.sort_by_key(|s| (s.volume, s.sample));
        let sign = localizer::pairing_sign(Parity::of(self.config.n));
        let total = samples.len();
        let excluded_total = samples.iter().filter(|s| s.excluded).count();
        if excluded_total as f64 > MAX_EXCLUDED_FRACTION * total as f64 {
            return Err(Error::TooManyExcluded { excluded: excluded_total, total });
        }
        let mut volumes = Vec::new();
        for &l in &self.config.volumes {
            let vals: Vec<f64> = samples.iter().filter(|s| s.volume == l && !s.excluded).map(|s| s.scaled).collect();
            let excluded = samples.iter().filter(|s| s.volume == l && s.excluded).count();
            if vals.is_empty() {
                return Err(Error::TooManyExcluded { excluded, total: excluded });
            }
            let k = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / k;
            let stderr = if vals.len() > 1 {
                (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0) / k).sqrt()
            } else {
                0.0
            };
            volumes.push(VolumeSummary { volume: l, included: vals.len(), excluded, mean, stderr, value: sign * mean });
        }
        let last = volumes.last().expect("validated nonempty volumes");
        let invariant = Float::round(last.value) as i64;
        let p = self.params;
        Ok(WeakResult {
            parity: Parity::of(self.config.n),
            kappa: self.config.kappa,
            radius: self.config.radius,
            params: p,
            admissibility: localizer::admissibility(p.g, p.norm_comm, p.norm_h, self.config.kappa, self.config.radius),
            distance_to_integer: (last.value - invariant as f64).abs(),
            samples,
            volumes,
            invariant,
        })
    }
}

/// Sequential evaluation of the full `(volume, sample)` grid.
pub fn trace_per_volume_signature(config: &WeakRunConfig) -> Result<WeakResult> {
    let plan = WeakPlan::new(config)?;
    let samples = plan.jobs.iter().map(|&j| plan.run(j)).collect::<Result<Vec<_>>>()?;
    plan.finish(samples)
}
