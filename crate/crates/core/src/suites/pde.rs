use serde::Serialize;

use super::{Check, Scale, Suite, SuiteReport};
use crate::analysis::measure_pde;
use crate::error::Result;
use crate::geometry::{
    AveragedCoefficients, Cutoff, Density, Euclidean, FamilyCoefficients, MetricFamily, Region, RotatingGyre,
    ScheduledFamily,
};
use crate::pde::{
    averaging_order_check, evolve, localisation_check, self_adjoint_identity_check, AveragingOrderReport, EvolveOptions,
    Grid, GridField, LocalisationReport, PdeOptions, SelfAdjointReport, TimeSampling,
};

pub const AVERAGING_SLOPE_MIN: f64 = 1.8;
pub const COMMUTING_TOLERANCE: f64 = 1e-8;
pub const SELF_ADJOINT_TOLERANCE: f64 = 1e-4;
/// Required decrease of `leak/ε` per halving once `ε ≤ LOCALISATION_ONSET`.
pub const LOCALISATION_FACTOR: f64 = 2.0;
pub const LOCALISATION_ONSET: f64 = 2.5e-3;

fn bump(grid: Grid, center: [f64; 2], width: f64) -> Result<GridField> {
    let rho = GridField::density_of(&grid, |_| 1.0);
    GridField::from_fn(grid, rho, |p| {
        let (dx, dy) = (p[0] - center[0], p[1] - center[1]);
        (-(dx * dx + dy * dy) / (2.0 * width * width)).exp()
    })
}

pub(super) fn averaging(scale: Scale, seed: u64) -> Result<SuiteReport> {
    let fam = ScheduledFamily::shear_pullback(1.0, Some(Cutoff::new(0.0, 3.0)));
    let grid = Grid::square(3.0, scale.pick(96, 128))?;
    let u0 = bump(grid, [0.6, 0.0], 0.5)?;
    let eps: Vec<f64> = (0..5).map(|k| 1e-2 / f64::from(1 << k)).collect();
    // A fixed step keeps the time-discretisation error from flooring the
    // difference at small ε.
    let options = EvolveOptions { time_sampling: TimeSampling::StepAverage { nodes: 4 }, dt: Some(0.01), ..Default::default() };
    let r = averaging_order_check(&u0, &fam, &eps, &options)?;
    let slope = r.slope.unwrap_or(f64::NAN);
    let checks = vec![Check::new(
        "averaging.slope",
        Some(3),
        slope >= AVERAGING_SLOPE_MIN,
        format!("log-log slope {slope:.4} over eps {:e}..{:e} (minimum {AVERAGING_SLOPE_MIN})", eps[0], eps[4]),
    )];
    let diagnostics = r.diagnostics.clone();
    SuiteReport::new(Suite::Averaging, scale, seed, checks, diagnostics, AveragingDetails { grid, report: r })
}

#[derive(Debug, Serialize)]
struct AveragingDetails {
    grid: Grid,
    report: AveragingOrderReport,
}

#[derive(Debug, Serialize)]
struct CommutingDetails {
    grid: Grid,
    eps: f64,
    relative_l2: f64,
    steps: usize,
}

pub(super) fn commuting(scale: Scale, seed: u64) -> Result<SuiteReport> {
    // Without a cutoff the shear metric is spatially constant, so all the
    // operators Δ_t commute and P₁ equals the averaged semigroup.
    let fam = ScheduledFamily::shear_pullback(1.0, None);
    let grid = Grid::square(2.0, scale.pick(96, 128))?;
    let u0 = bump(grid, [0.0, 0.0], 0.15)?;
    let eps = 5e-3;
    let options = EvolveOptions {
        time_sampling: TimeSampling::StepAverage { nodes: 2 },
        max_dt: Some(5e-4),
        ..Default::default()
    };
    let p = evolve(&u0, &FamilyCoefficients::new(&fam), eps, 1.0, &options)?;
    let pbar = evolve(&u0, &AveragedCoefficients::new(&fam), eps, 1.0, &options)?;
    let gap = p.field.relative_l2_diff(&pbar.field);
    let checks = vec![Check::new(
        "commuting.identity",
        Some(4),
        gap <= COMMUTING_TOLERANCE,
        format!("relative L2 difference {gap:.3e} (limit {COMMUTING_TOLERANCE:e})"),
    )];
    let details = CommutingDetails { grid, eps, relative_l2: gap, steps: p.diagnostics.steps };
    SuiteReport::new(Suite::Commuting, scale, seed, checks, vec![p.diagnostics, pbar.diagnostics], details)
}

fn cutoff_shear() -> ScheduledFamily {
    ScheduledFamily::shear_pullback(1.0, Some(Cutoff::new(1.0, 1.6)))
}

pub(super) fn self_adjoint(scale: Scale, seed: u64) -> Result<SuiteReport> {
    let fam = cutoff_shear();
    let region = Region::disk([0.0, 0.0], 0.6)?;
    let grid = Grid::square(2.4, scale.pick(128, 256))?;
    let r = self_adjoint_identity_check(&region, &fam, 1e-3, &grid, &PdeOptions::default())?;
    let checks = vec![Check::new(
        "selfadjoint.gap",
        Some(7),
        r.relative_gap <= SELF_ADJOINT_TOLERANCE,
        format!("lhs {:.12e}, rhs {:.12e}, relative gap {:.3e}", r.lhs, r.rhs, r.relative_gap),
    )];
    let diagnostics = r.diagnostics.clone();
    SuiteReport::new(Suite::SelfAdjoint, scale, seed, checks, diagnostics, SelfAdjointDetails { grid, report: r })
}

#[derive(Debug, Serialize)]
struct SelfAdjointDetails {
    grid: Grid,
    report: SelfAdjointReport,
}

#[derive(Debug, Serialize)]
struct LocalisationDetails {
    grid: Grid,
    inner: Region,
    outer: Region,
    decrease_factors: Vec<f64>,
    report: LocalisationReport,
}

pub(super) fn localisation(scale: Scale, seed: u64) -> Result<SuiteReport> {
    let fam = cutoff_shear();
    let inner = Region::disk([0.0, 0.0], 0.5)?;
    let outer = Region::disk([0.0, 0.0], 0.8)?;
    let grid = Grid::square(2.4, scale.pick(128, 256))?;
    let eps = [1e-2, 5e-3, 2.5e-3, 1.25e-3];
    let r = localisation_check(&inner, &outer, &fam, &eps, &grid, &PdeOptions::default())?;
    let factors = r.decrease_factors();
    let mut checks = Vec::new();
    for (k, f) in factors.iter().enumerate() {
        if eps[k] <= LOCALISATION_ONSET {
            checks.push(Check::new(
                format!("localisation.halving_{:e}", eps[k]),
                Some(8),
                *f >= LOCALISATION_FACTOR,
                format!("leak/eps drops by {f:.3e} from eps {:e} to {:e}", eps[k], eps[k + 1]),
            ));
        }
    }
    let diagnostics = r.diagnostics.clone();
    let details = LocalisationDetails { grid, inner, outer, decrease_factors: factors, report: r };
    SuiteReport::new(Suite::Localisation, scale, seed, checks, diagnostics, details)
}

#[derive(Debug, Serialize)]
struct BatteryEntry {
    family: String,
    region: Region,
    values: Vec<f64>,
}

/// Indicator solves across the family catalogue, audited for conservation
/// and range.
pub(super) fn conservation(scale: Scale, seed: u64) -> Result<SuiteReport> {
    let bump_density = Density::Bump { amplitude: 0.8, radius: 0.7, center: [0.2, 0.1] };
    let families: Vec<Box<dyn MetricFamily>> = vec![
        Box::new(Euclidean { density: bump_density }),
        Box::new(cutoff_shear()),
        Box::new(ScheduledFamily::diag_time(Some(Cutoff::new(0.5, 1.2))).with_density(bump_density)),
        Box::new(RotatingGyre::new(1.5, 0.5, Cutoff::new(0.2, 1.2))),
    ];
    let region = Region::ellipse([0.1, 0.0], [0.6, 0.35], 0.4)?;
    let grid = Grid::square(2.4, scale.pick(96, 192))?;
    let eps = [1e-2, 2.5e-3];
    let mut diagnostics = Vec::new();
    let mut battery = Vec::new();
    for fam in &families {
        let s = measure_pde(&region, fam.as_ref(), &eps, &grid, &PdeOptions::default())?;
        diagnostics.extend(s.diagnostics);
        battery.push(BatteryEntry {
            family: fam.describe(),
            region: region.clone(),
            values: s.measurements.iter().map(|m| m.value).collect(),
        });
    }
    SuiteReport::new(Suite::Conservation, scale, seed, vec![], diagnostics, battery)
}
