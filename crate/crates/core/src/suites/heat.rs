use serde::Serialize;
use std::f64::consts::PI;

use super::{Check, Scale, Suite, SuiteReport};
use crate::analysis::{
    coherence_ratio, default_eps_grid, fit_asymptotics, mc_measurements, measure_mc, measure_pde, AsymptoticsReport,
    CoherenceBackend, CoherenceReport,
};
use crate::error::Result;
use crate::geometry::{
    mixing_area_of_family, Cutoff, Euclidean, MetricFamily, MixingAreaOptions, Region, RotatingGyre, ScheduledFamily,
};
use crate::pde::{Grid, PdeOptions};
use crate::sde::{derive_seed, McEstimate};

/// Largest accepted `|c₁√π − Ā|/Ā` for the grid route.
pub const PDE_GAP_TOLERANCE: f64 = 0.05;
/// MC time steps for heat-content estimates.
pub const HEAT_MC_STEPS: usize = 128;

struct HeatCase {
    label: &'static str,
    criterion: u32,
    family: Box<dyn MetricFamily>,
    region: Region,
    grid: Grid,
    mc_paths: usize,
}

fn theorem_cases(scale: Scale) -> Result<Vec<HeatCase>> {
    Ok(vec![
        HeatCase {
            label: "euclidean_disk",
            criterion: 1,
            family: Box::new(Euclidean::default()),
            region: Region::disk([0.0, 0.0], 1.0)?,
            grid: Grid::square(2.0, scale.pick(256, 512))?,
            mc_paths: scale.pick(50_000, 1_000_000),
        },
        HeatCase {
            label: "shear",
            criterion: 2,
            family: Box::new(ScheduledFamily::shear_pullback(1.0, Some(Cutoff::new(1.0, 1.6)))),
            region: Region::disk([0.0, 0.0], 0.6)?,
            grid: Grid::square(2.4, scale.pick(192, 256))?,
            mc_paths: scale.pick(20_000, 200_000),
        },
        HeatCase {
            label: "gyre",
            criterion: 2,
            family: Box::new(RotatingGyre::new(1.5, 0.5, Cutoff::new(0.2, 1.2))),
            region: Region::disk([0.6, 0.0], 0.35)?,
            grid: Grid::square(2.0, scale.pick(192, 256))?,
            mc_paths: scale.pick(10_000, 100_000),
        },
    ])
}

#[derive(Debug, Serialize)]
struct HeatCaseReport {
    label: &'static str,
    family: String,
    region: Region,
    mixing_area: f64,
    euclidean_perimeter: f64,
    grid: Grid,
    pde: AsymptoticsReport,
    mc_paths: usize,
    mc_steps: usize,
    mc: AsymptoticsReport,
    mc_estimates: Vec<McEstimate>,
}

pub(super) fn theorem(scale: Scale, seed: u64) -> Result<SuiteReport> {
    let eps = default_eps_grid();
    let mut checks = Vec::new();
    let mut diagnostics = Vec::new();
    let mut cases = Vec::new();
    for (k, case) in theorem_cases(scale)?.into_iter().enumerate() {
        let fam = case.family.as_ref();
        let area = mixing_area_of_family(&case.region, fam, MixingAreaOptions::default(), None)?;
        let series = measure_pde(&case.region, fam, &eps, &case.grid, &PdeOptions::default())?;
        let pde = fit_asymptotics(&series.measurements, area)?;
        diagnostics.extend(series.diagnostics);
        let estimates = measure_mc(&case.region, fam, &eps, case.mc_paths, HEAT_MC_STEPS, derive_seed(seed, k as u64))?;
        let mc = fit_asymptotics(&mc_measurements(&estimates), area)?;

        checks.push(Check::new(
            format!("{}.pde", case.label),
            Some(case.criterion),
            pde.relative_gap <= PDE_GAP_TOLERANCE,
            format!("c1·sqrt(pi) = {:.6}, area = {area:.6}, gap {:.4} (limit {PDE_GAP_TOLERANCE})", pde.c1 * PI.sqrt(), pde.relative_gap),
        ));
        checks.push(Check::new(
            format!("{}.mc", case.label),
            Some(case.criterion),
            mc.prediction_in_ci(),
            format!(
                "c1 = {:.6} ± {:.6} (3 SE), predicted {:.6}, gap {:.4}",
                mc.c1,
                3.0 * mc.c1_standard_error(),
                mc.predicted_c1,
                mc.relative_gap
            ),
        ));
        cases.push(HeatCaseReport {
            label: case.label,
            family: fam.describe(),
            euclidean_perimeter: case.region.perimeter(),
            region: case.region,
            mixing_area: area,
            grid: case.grid,
            pde,
            mc_paths: case.mc_paths,
            mc_steps: HEAT_MC_STEPS,
            mc,
            mc_estimates: estimates,
        });
    }
    SuiteReport::new(Suite::Theorem, scale, seed, checks, diagnostics, cases)
}

/// Allowed relative error of the coherence deficit `2 − ρ` against its
/// leading-order expansion.
pub const COHERENCE_TOLERANCE: f64 = 0.05;

#[derive(Debug, Serialize)]
struct CoherenceDetails {
    expansion: CoherenceReport,
    /// `√(ε/π)·Ā·(1/ω(S) + 1/ω(rect∖S))`.
    predicted_deficit: f64,
    deficit_error: f64,
    no_diffusion: CoherenceReport,
    disk: CoherenceReport,
    square: CoherenceReport,
    disk_area: f64,
    square_area: f64,
}

pub(super) fn coherence(scale: Scale, seed: u64) -> Result<SuiteReport> {
    let fam = Euclidean::default();
    let eps = 1e-3;
    let disk = Region::disk([0.0, 0.0], 1.0)?;
    let big = CoherenceBackend::Pde { grid: Grid::square(5.0, scale.pick(512, 1024))?, options: PdeOptions::default() };
    let expansion = coherence_ratio(&fam, &disk, eps, &big)?;
    let area = mixing_area_of_family(&disk, &fam, MixingAreaOptions::default(), None)?;
    let predicted = (eps / PI).sqrt() * area * (1.0 / PI + 1.0 / (100.0 - PI));
    let deficit_error = ((2.0 - expansion.ratio) - predicted).abs() / predicted;

    let no_diffusion = coherence_ratio(&fam, &disk, 0.0, &big)?;

    // Equal mass, different boundary length: the disk should hold on better.
    let small = CoherenceBackend::Pde { grid: Grid::square(2.0, scale.pick(192, 256))?, options: PdeOptions::default() };
    let r = 0.5;
    let side = r * PI.sqrt();
    let round = Region::disk([0.0, 0.0], r)?;
    let square = Region::square([-0.5 * side, -0.5 * side], side)?;
    let round_report = coherence_ratio(&fam, &round, eps, &small)?;
    let square_report = coherence_ratio(&fam, &square, eps, &small)?;
    let round_area = mixing_area_of_family(&round, &fam, MixingAreaOptions::default(), None)?;
    let square_area = mixing_area_of_family(&square, &fam, MixingAreaOptions::default(), None)?;

    let checks = vec![
        Check::new(
            "coherence.expansion",
            None,
            deficit_error <= COHERENCE_TOLERANCE,
            format!("2 - rho = {:.6e}, predicted {predicted:.6e}, relative error {deficit_error:.4}", 2.0 - expansion.ratio),
        ),
        Check::new(
            "coherence.no_diffusion",
            None,
            no_diffusion.ratio == 2.0,
            format!("rho at eps = 0 is {}", no_diffusion.ratio),
        ),
        Check::new(
            "coherence.ordering",
            None,
            round_area < square_area && round_report.ratio > square_report.ratio,
            format!(
                "disk: area {round_area:.4}, rho {:.6}; square: area {square_area:.4}, rho {:.6}",
                round_report.ratio, square_report.ratio
            ),
        ),
    ];
    let mut diagnostics = expansion.diagnostics.clone();
    diagnostics.extend(round_report.diagnostics.iter().chain(&square_report.diagnostics));
    let details = CoherenceDetails {
        expansion,
        predicted_deficit: predicted,
        deficit_error,
        no_diffusion,
        disk: round_report,
        square: square_report,
        disk_area: round_area,
        square_area,
    };
    SuiteReport::new(Suite::Coherence, scale, seed, checks, diagnostics, details)
}
