//! Verification suites. Each suite runs a fixed experiment at one of two
//! scales and returns a serializable report whose checks decide pass/fail.
//!
//! `Full` uses the resolutions and path counts the tolerances were set for
//! and takes minutes. `Desk` shrinks grids and ensembles for quick runs;
//! its Monte Carlo checks stay honest because their standard errors grow
//! accordingly.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::pde::SolveDiagnostics;

mod heat;
mod mc;
mod pde;

/// Problem size of a suite run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Desk,
    Full,
}

impl Scale {
    pub(crate) fn pick<T>(self, desk: T, full: T) -> T {
        match self {
            Scale::Desk => desk,
            Scale::Full => full,
        }
    }
}

impl FromStr for Scale {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "desk" => Ok(Scale::Desk),
            "full" => Ok(Scale::Full),
            _ => Err(Error::InvalidArgument(format!("unknown scale `{s}` (expected desk or full)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Suite {
    #[serde(rename = "theorem")]
    Theorem,
    #[serde(rename = "averaging")]
    Averaging,
    #[serde(rename = "commuting")]
    Commuting,
    #[serde(rename = "appendixA")]
    AppendixA,
    #[serde(rename = "distribution")]
    Distribution,
    #[serde(rename = "selfadjoint")]
    SelfAdjoint,
    #[serde(rename = "localisation")]
    Localisation,
    #[serde(rename = "coherence")]
    Coherence,
    #[serde(rename = "conservation")]
    Conservation,
}

impl Suite {
    /// Every suite, in the order `all` runs them. Conservation comes last
    /// because under `all` it audits the solves of the others.
    pub const ALL: [Suite; 9] = [
        Suite::Theorem,
        Suite::Averaging,
        Suite::Commuting,
        Suite::AppendixA,
        Suite::Distribution,
        Suite::SelfAdjoint,
        Suite::Localisation,
        Suite::Coherence,
        Suite::Conservation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Theorem => "theorem",
            Suite::Averaging => "averaging",
            Suite::Commuting => "commuting",
            Suite::AppendixA => "appendixA",
            Suite::Distribution => "distribution",
            Suite::SelfAdjoint => "selfadjoint",
            Suite::Localisation => "localisation",
            Suite::Coherence => "coherence",
            Suite::Conservation => "conservation",
        }
    }

    /// Whether the suite draws random numbers.
    pub fn uses_seed(self) -> bool {
        matches!(self, Suite::Theorem | Suite::AppendixA | Suite::Distribution)
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown suite `{s}`")))
    }
}

/// One pass/fail assertion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// Acceptance criterion the check belongs to, if any.
    pub criterion: Option<u32>,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, criterion: Option<u32>, passed: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), criterion, passed, detail: detail.into() }
    }
}

/// Relative mass drift allowed per solve.
pub const MASS_DRIFT_TOLERANCE: f64 = 1e-12;
/// Allowed excursion outside `[0, 1]` for indicator data.
pub const RANGE_TOLERANCE: f64 = 1e-10;

/// Conservation and range audit over a set of solves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub solves: usize,
    /// Solves whose initial data lay in `[0, 1]`.
    pub unit_range_solves: usize,
    pub max_mass_drift: f64,
    /// Extremes over the unit-range solves.
    pub min_value: Option<f64>,
    pub max_value: Option<f64>,
    pub passed: bool,
}

impl SolveSummary {
    pub fn of(diagnostics: &[SolveDiagnostics]) -> Self {
        let max_mass_drift = diagnostics.iter().map(|d| d.mass_drift).fold(0.0, f64::max);
        let unit: Vec<_> = diagnostics.iter().filter(|d| d.unit_range_data).collect();
        let min_value = unit.iter().map(|d| d.min).reduce(f64::min);
        let max_value = unit.iter().map(|d| d.max).reduce(f64::max);
        let range_ok = min_value.is_none_or(|v| v >= -RANGE_TOLERANCE) && max_value.is_none_or(|v| v <= 1.0 + RANGE_TOLERANCE);
        SolveSummary {
            solves: diagnostics.len(),
            unit_range_solves: unit.len(),
            max_mass_drift,
            min_value,
            max_value,
            passed: max_mass_drift <= MASS_DRIFT_TOLERANCE && range_ok,
        }
    }

    fn check(&self) -> Check {
        Check::new(
            "conservation",
            Some(9),
            self.passed,
            format!(
                "{} solves, max relative mass drift {:.3e}, indicator range [{}, {}]",
                self.solves,
                self.max_mass_drift,
                self.min_value.map_or("-".into(), |v| format!("{v:.3e}")),
                self.max_value.map_or("-".into(), |v| format!("{v:.12}")),
            ),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub scale: Scale,
    pub seed: Option<u64>,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub solves: SolveSummary,
    pub details: serde_json::Value,
    #[serde(skip)]
    pub diagnostics: Vec<SolveDiagnostics>,
}

impl SuiteReport {
    fn new(
        suite: Suite,
        scale: Scale,
        seed: u64,
        mut checks: Vec<Check>,
        diagnostics: Vec<SolveDiagnostics>,
        details: impl Serialize,
    ) -> Result<Self> {
        let solves = SolveSummary::of(&diagnostics);
        if solves.solves > 0 {
            checks.push(solves.check());
        }
        let details = serde_json::to_value(details).map_err(|e| Error::InvalidArgument(format!("report: {e}")))?;
        Ok(SuiteReport {
            suite,
            scale,
            seed: suite.uses_seed().then_some(seed),
            passed: checks.iter().all(|c| c.passed),
            checks,
            solves,
            details,
            diagnostics,
        })
    }
}

/// Reports of a multi-suite run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub scale: Scale,
    pub seed: u64,
    pub passed: bool,
    pub suites: Vec<SuiteReport>,
}

pub fn run_suite(suite: Suite, scale: Scale, seed: u64) -> Result<SuiteReport> {
    match suite {
        Suite::Theorem => heat::theorem(scale, seed),
        Suite::Coherence => heat::coherence(scale, seed),
        Suite::Averaging => pde::averaging(scale, seed),
        Suite::Commuting => pde::commuting(scale, seed),
        Suite::SelfAdjoint => pde::self_adjoint(scale, seed),
        Suite::Localisation => pde::localisation(scale, seed),
        Suite::Conservation => pde::conservation(scale, seed),
        Suite::AppendixA => mc::appendix_a(scale, seed),
        Suite::Distribution => mc::distribution(scale, seed),
    }
}

/// Runs every suite. The conservation entry audits the solves of all the
/// other suites instead of running its own battery.
pub fn run_all(scale: Scale, seed: u64) -> Result<VerifyReport> {
    run_many(&Suite::ALL, scale, seed, |_| {})
}

/// Runs `suites` in order, calling `progress` after each. When the list
/// includes conservation together with other suites, it audits their
/// solves.
pub fn run_many(suites: &[Suite], scale: Scale, seed: u64, mut progress: impl FnMut(&SuiteReport)) -> Result<VerifyReport> {
    let audit = suites.len() > 1 && suites.contains(&Suite::Conservation);
    let mut reports = Vec::with_capacity(suites.len());
    for &s in suites.iter().filter(|s| !(audit && **s == Suite::Conservation)) {
        let r = run_suite(s, scale, seed)?;
        progress(&r);
        reports.push(r);
    }
    if audit {
        let all: Vec<SolveDiagnostics> = reports.iter().flat_map(|r| r.diagnostics.iter().copied()).collect();
        let per_suite: Vec<(Suite, SolveSummary)> = reports.iter().map(|r| (r.suite, r.solves)).collect();
        let r = SuiteReport::new(Suite::Conservation, scale, seed, vec![], all, per_suite)?;
        progress(&r);
        reports.push(r);
    }
    Ok(VerifyReport { scale, seed, passed: reports.iter().all(|r| r.passed), suites: reports })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
            assert_eq!(serde_json::to_value(s).unwrap(), serde_json::Value::String(s.name().into()));
        }
        assert!("nope".parse::<Suite>().is_err());
        assert_eq!("APPENDIXA".parse::<Suite>().unwrap(), Suite::AppendixA);
    }

    #[test]
    fn summary_flags_drift_and_range() {
        let d = SolveDiagnostics {
            eps: 1e-3,
            t_final: 1.0,
            steps: 10,
            dt: 0.1,
            mass_initial: 1.0,
            mass_final: 1.0,
            mass_drift: 0.0,
            min: 0.0,
            max: 1.0,
            unit_range_data: true,
        };
        assert!(SolveSummary::of(&[d]).passed);
        assert!(!SolveSummary::of(&[SolveDiagnostics { mass_drift: 1e-11, ..d }]).passed);
        assert!(!SolveSummary::of(&[SolveDiagnostics { min: -1e-9, ..d }]).passed);
        // Out-of-range values only matter for indicator-type data.
        assert!(SolveSummary::of(&[SolveDiagnostics { min: -1.0, unit_range_data: false, ..d }]).passed);
        assert!(SolveSummary::of(&[]).passed);
    }
}
