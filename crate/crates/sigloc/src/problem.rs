//! Strong localizer on a ball: assembly, kappa selection, certification.

use std::sync::Arc;

use sigloc_core::dirac::{self, DiracBundle};
use sigloc_core::lattice::{BallCenter, LatticeGeometry, OperatorMatrix};
use sigloc_core::localizer::{self, BulkParameters, LocalizerBundle, PracticalKappa};
use sigloc_core::models::{self, ModelSpec};
use sigloc_core::{inertia, Result};

use crate::config::{KappaChoice, RunConfig};
use crate::error::{CliError, CliResult};

/// How a localizer earned the right to be read off.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Certification {
    /// The sufficient bounds on kappa and rho hold and `min |spec L| > g/2`.
    Bounds,
    /// Practical mode and `min |spec L| > g/4`.
    Practical,
    None,
}

impl Certification {
    pub fn tag(self) -> &'static str {
        match self {
            Certification::Bounds => "bounds",
            Certification::Practical => "practical",
            Certification::None => "none",
        }
    }

    pub fn ok(self) -> bool {
        self != Certification::None
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KappaSource {
    Given,
    Bound,
    PracticalSearch,
}

impl KappaSource {
    pub fn tag(self) -> &'static str {
        match self {
            KappaSource::Given => "given",
            KappaSource::Bound => "bound",
            KappaSource::PracticalSearch => "practical-search",
        }
    }
}

pub struct BallProblem {
    pub spec: ModelSpec,
    pub h: OperatorMatrix,
    pub dirac: DiracBundle,
    pub params: BulkParameters,
    pub radius: f64,
}

/// Strong commands put every lattice axis inside the ball.
pub fn require_strong(config: &RunConfig, command: &str) -> CliResult<()> {
    if !config.is_strong() {
        let d = config.model.family.dim();
        return Err(CliError::config(format!(
            "`{command}` needs dirac.n = d = {d} (found n = {}); use `weak` for n < d",
            config.n
        )));
    }
    Ok(())
}

impl BallProblem {
    pub fn new(config: &RunConfig, radius: f64) -> Result<Self> {
        let spec = config.model.clone();
        let chiral = spec.family.is_chiral();
        let fiber = if chiral { 1 } else { spec.family.fiber() };
        let geometry = Arc::new(LatticeGeometry::ball(config.n, radius, BallCenter::HalfShifted, fiber)?);
        let h = if chiral {
            models::build_chiral_block(&spec, &geometry, config.seed, 0)?
        } else {
            models::build_hamiltonian(&spec, &geometry, config.seed, 0)?
        };
        let dirac = dirac::build_dirac(config.n, &geometry, radius)?;
        let params = BulkParameters::measure(&spec, config.n, radius)?;
        Ok(Self { spec, h, dirac, params, radius })
    }

    pub fn build(&self, kappa: f64) -> Result<LocalizerBundle> {
        if self.spec.family.is_chiral() {
            localizer::odd_localizer(&self.h, &self.dirac, kappa)
        } else {
            localizer::even_localizer(&self.h, &self.dirac, kappa)
        }
    }

    /// The kappa requested by `choice`, with the search record when the
    /// practical search ran.
    pub fn choose_kappa(&self, choice: KappaChoice, practical: bool) -> Result<(f64, KappaSource, Option<PracticalKappa>)> {
        match choice {
            KappaChoice::Value(k) => Ok((k, KappaSource::Given, None)),
            KappaChoice::Auto if practical => {
                let pk = localizer::practical_kappa(|k| self.build(k), &self.params)?;
                Ok((pk.kappa, KappaSource::PracticalSearch, Some(pk)))
            }
            KappaChoice::Auto => Ok((self.params.kappa_max(), KappaSource::Bound, None)),
        }
    }

    pub fn assessed(&self, kappa: f64, practical: bool) -> Result<Assessed> {
        let mut loc = self.build(kappa)?;
        loc.assess(self.params)?;
        let min_abs = loc.gap.map_or(0.0, |g| g.min_abs);
        let margin = localizer::margin_check(loc.reduced.matrix(), 0.25 * self.params.g)?;
        let certification = if loc.admissible_paper() && loc.gap_verified() {
            Certification::Bounds
        } else if practical && margin.passed {
            Certification::Practical
        } else {
            Certification::None
        };
        Ok(Assessed { loc, min_abs, certification })
    }
}

pub struct Assessed {
    pub loc: LocalizerBundle,
    pub min_abs: f64,
    pub certification: Certification,
}

impl Assessed {
    pub fn zero_tol(&self) -> Result<f64> {
        self.loc.zero_tol()
    }

    pub fn inertia(&self, override_tol: Option<f64>) -> Result<inertia::InertiaTriple> {
        let tol = match override_tol {
            Some(t) => t,
            None => self.loc.zero_tol()?,
        };
        inertia::inertia_auto(self.loc.reduced.matrix(), tol)
    }

    /// Explanation for an uncertified localizer.
    pub fn failure(&self) -> String {
        let g = self.loc.params.map_or(f64::NAN, |p| p.g);
        let adm = self.loc.admissibility;
        let mut why = vec![format!("min |spec L| = {:e}, g = {g:e}", self.min_abs)];
        if let Some(a) = adm {
            if !a.kappa_ok {
                why.push(format!("kappa {:e} above the bound {:e}", self.loc.kappa, a.kappa_max));
            }
            if !a.rho_ok {
                why.push(format!("rho {} not above 2g/kappa = {:e}", self.loc.radius, a.rho_min));
            }
        }
        format!("localizer at kappa = {:e}, rho = {} is not certified ({})", self.loc.kappa, self.loc.radius, why.join("; "))
    }
}
