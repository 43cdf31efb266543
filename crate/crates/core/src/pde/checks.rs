use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AveragedCoefficients, ClosedCurve, FamilyCoefficients, MetricFamily, Region};
use crate::quadrature::GaussLegendre;

use super::evolve::{evolve, EvolveOptions, SolveDiagnostics};
use super::grid::{discretize_indicator_with, Grid, GridField, INDICATOR_SUBSAMPLES};
use super::operator::Operator;

/// Options shared by the region-based PDE experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdeOptions {
    pub evolve: EvolveOptions,
    /// Subsamples per direction for the anti-aliased indicators.
    pub indicator_subsamples: usize,
}

impl Default for PdeOptions {
    fn default() -> Self {
        PdeOptions { evolve: EvolveOptions::default(), indicator_subsamples: INDICATOR_SUBSAMPLES }
    }
}

/// Discrete heat content together with the solve that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatContentPde {
    pub eps: f64,
    pub value: f64,
    /// Discrete `ω(S) = Σ f ρ ΔxΔy` of the anti-aliased indicator.
    pub region_mass: f64,
    /// Discrete mass of the rectangle.
    pub total_mass: f64,
    pub diagnostics: Option<SolveDiagnostics>,
}

fn enclosing_radius(region: &Region, family: &dyn MetricFamily) -> f64 {
    let ball = family.euclidean_outside_radius();
    let r = region.max_radius();
    if ball.is_finite() {
        ball.max(r)
    } else {
        ball
    }
}

/// Density table and anti-aliased indicator for a region, after the grid
/// and region checks.
pub fn prepare_indicator(
    region: &Region,
    family: &dyn MetricFamily,
    grid: &Grid,
    eps_max: f64,
    subsamples: usize,
) -> Result<GridField> {
    // Any ball containing both the region and the non-Euclidean part of the
    // family satisfies the far-field assumption, so only the curve is checked.
    region.validate(f64::INFINITY)?;
    grid.check_encloses(enclosing_radius(region, family), eps_max)?;
    let density = GridField::density_of(grid, |x| family.density(x));
    discretize_indicator_with(region, grid, density, subsamples)
}

/// `Σ u(1) (1 − 1_S) ρ ΔxΔy` with `u(0)` the anti-aliased indicator of `S`.
/// Exactly zero at `ε = 0`.
pub fn heat_content_pde(
    region: &Region,
    family: &dyn MetricFamily,
    eps: f64,
    grid: &Grid,
    options: &PdeOptions,
) -> Result<HeatContentPde> {
    let f = prepare_indicator(region, family, grid, eps, options.indicator_subsamples)?;
    heat_content_from_indicator(&f, family, eps, &options.evolve)
}

pub fn heat_content_from_indicator(
    f: &GridField,
    family: &dyn MetricFamily,
    eps: f64,
    options: &EvolveOptions,
) -> Result<HeatContentPde> {
    let region_mass = f.mass();
    let total_mass = f.with_values(vec![1.0; f.grid().len()])?.mass();
    if eps == 0.0 {
        return Ok(HeatContentPde { eps, value: 0.0, region_mass, total_mass, diagnostics: None });
    }
    let coeffs = FamilyCoefficients::new(family);
    let report = evolve(f, &coeffs, eps, 1.0, options)?;
    let value = report.field.inner(&f.complement());
    Ok(HeatContentPde { eps, value, region_mass, total_mass, diagnostics: Some(report.diagnostics) })
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        x.iter().zip(y).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(a, b)| (a.ln(), b.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragingOrderReport {
    pub eps: Vec<f64>,
    /// `‖P₁u₀ − P̄₁u₀‖∞` per ε.
    pub linf_diff: Vec<f64>,
    /// Fitted log–log slope; `None` when every difference is at rounding level.
    pub slope: Option<f64>,
    pub expansion_times: Vec<f64>,
    /// `max_t ‖P_t u₀ − u₀ − ε∫₀ᵗ Δ_τ u₀ dτ‖∞` per ε.
    pub expansion_residual: Vec<f64>,
    pub expansion_slope: Option<f64>,
    pub diagnostics: Vec<SolveDiagnostics>,
}

/// Differences at or below this multiple of `‖u₀‖∞` count as rounding.
pub const ROUNDING_FLOOR: f64 = 1e-12;

/// Compares the time-dependent and averaged solves of a smooth `u0` across
/// `eps_list` and checks the first-order expansion in ε.
pub fn averaging_order_check(
    u0: &GridField,
    family: &dyn MetricFamily,
    eps_list: &[f64],
    options: &EvolveOptions,
) -> Result<AveragingOrderReport> {
    if eps_list.len() < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 diffusivities, got {}", eps_list.len())));
    }
    if eps_list.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidArgument("diffusivities must be positive".into()));
    }
    let coeffs = FamilyCoefficients::new(family);
    let averaged = AveragedCoefficients::new(family);
    let floor = ROUNDING_FLOOR * u0.max_abs().max(f64::MIN_POSITIVE);
    let times = [0.25, 0.5, 0.75, 1.0];

    // ∫₀ᵗ Δ_τ u₀ dτ by Gauss–Legendre in τ, one operator assembly per node.
    let rule = GaussLegendre::new(8);
    let density = u0.density().clone();
    let mut op = Operator::new(*u0.grid(), &density, &coeffs);
    let mut integrals = Vec::with_capacity(times.len());
    let mut buf = vec![0.0; u0.grid().len()];
    for &t in &times {
        let mut acc = vec![0.0; u0.grid().len()];
        for (tau, w) in rule.on(0.0, t) {
            let tau = if options.reversed { 1.0 - tau } else { tau };
            op.assemble(&[(tau, 1.0)])?;
            op.apply(u0.values(), 1.0, None, &mut buf);
            acc.iter_mut().zip(&buf).for_each(|(a, b)| *a += w * b);
        }
        integrals.push(acc);
    }

    let mut linf = Vec::new();
    let mut residual = Vec::new();
    let mut diagnostics = Vec::new();
    for &eps in eps_list {
        let p = evolve(u0, &coeffs, eps, 1.0, options)?;
        let pbar = evolve(u0, &averaged, eps, 1.0, options)?;
        linf.push(p.field.max_abs_diff(&pbar.field));
        diagnostics.push(p.diagnostics);
        diagnostics.push(pbar.diagnostics);
        let mut worst = 0.0f64;
        for (k, &t) in times.iter().enumerate() {
            let pt = if t == 1.0 { p.field.clone() } else { evolve(u0, &coeffs, eps, t, options)?.field };
            let r = pt
                .values()
                .iter()
                .zip(u0.values())
                .zip(&integrals[k])
                .map(|((a, b), l)| (a - b - eps * l).abs())
                .fold(0.0, f64::max);
            worst = worst.max(r);
        }
        residual.push(worst);
    }
    let slope = if linf.iter().all(|d| *d <= floor) { None } else { log_log_slope(eps_list, &linf) };
    let expansion_slope = log_log_slope(eps_list, &residual);
    Ok(AveragingOrderReport {
        eps: eps_list.to_vec(),
        linf_diff: linf,
        slope,
        expansion_times: times.to_vec(),
        expansion_residual: residual,
        expansion_slope,
        diagnostics,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfAdjointReport {
    pub eps: f64,
    /// `⟨P 1_S, 1_{S^c}⟩`
    pub lhs: f64,
    /// `⟨1_S, P 1_{S^c}⟩`
    pub rhs: f64,
    pub relative_gap: f64,
    pub diagnostics: Vec<SolveDiagnostics>,
}

/// Both sides of `⟨P 1_S, 1_{S^c}⟩ = ⟨1_S, P 1_{S^c}⟩`, with `1_{S^c}` the
/// complement inside the rectangle.
pub fn self_adjoint_identity_check(
    region: &Region,
    family: &dyn MetricFamily,
    eps: f64,
    grid: &Grid,
    options: &PdeOptions,
) -> Result<SelfAdjointReport> {
    let f = prepare_indicator(region, family, grid, eps, options.indicator_subsamples)?;
    if eps == 0.0 {
        return Ok(SelfAdjointReport { eps, lhs: 0.0, rhs: 0.0, relative_gap: 0.0, diagnostics: vec![] });
    }
    let fc = f.complement();
    let coeffs = FamilyCoefficients::new(family);
    let a = evolve(&f, &coeffs, eps, 1.0, &options.evolve)?;
    let b = evolve(&fc, &coeffs, eps, 1.0, &options.evolve)?;
    let lhs = a.field.inner(&fc);
    let rhs = f.inner(&b.field);
    let scale = lhs.abs().max(rhs.abs());
    let relative_gap = if scale == 0.0 { 0.0 } else { (lhs - rhs).abs() / scale };
    Ok(SelfAdjointReport { eps, lhs, rhs, relative_gap, diagnostics: vec![a.diagnostics, b.diagnostics] })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalisationReport {
    pub eps: Vec<f64>,
    /// `⟨P 1_S, 1_{U^c}⟩` per ε.
    pub leak: Vec<f64>,
    /// `leak / ε`.
    pub ratio: Vec<f64>,
    pub monotone_decreasing: bool,
    /// `ratio_last ≤ ε_last^{1/2} · ratio_first`.
    pub final_below_sqrt_eps: bool,
    pub diagnostics: Vec<SolveDiagnostics>,
}

impl LocalisationReport {
    /// Ratio decrease factors `ratio_k / ratio_{k+1}` for consecutive ε.
    pub fn decrease_factors(&self) -> Vec<f64> {
        self.ratio
            .windows(2)
            .map(|w| if w[1] == 0.0 { f64::INFINITY } else { w[0] / w[1] })
            .collect()
    }

    pub fn passed(&self) -> bool {
        self.monotone_decreasing && self.final_below_sqrt_eps
    }
}

/// Tabulates the mass leaking from `S` past `∂U` for each ε.
pub fn localisation_check(
    inner: &Region,
    outer: &Region,
    family: &dyn MetricFamily,
    eps_list: &[f64],
    grid: &Grid,
    options: &PdeOptions,
) -> Result<LocalisationReport> {
    if eps_list.is_empty() {
        return Err(Error::InvalidArgument("empty diffusivity list".into()));
    }
    for piece in 0..inner.piece_count() {
        for k in 0..64 {
            if !outer.contains(inner.point(piece, k as f64 / 64.0)) {
                return Err(Error::InvalidRegion("inner region is not strictly inside the outer one".into()));
            }
        }
    }
    let eps_max = eps_list.iter().cloned().fold(0.0, f64::max);
    let n = options.indicator_subsamples;
    let f = prepare_indicator(inner, family, grid, eps_max, n)?;
    let fu = prepare_indicator(outer, family, grid, eps_max, n)?;
    let outside = fu.complement();
    let coeffs = FamilyCoefficients::new(family);
    let mut leak = Vec::new();
    let mut diagnostics = Vec::new();
    for &eps in eps_list {
        if eps == 0.0 {
            leak.push(0.0);
            continue;
        }
        let r = evolve(&f, &coeffs, eps, 1.0, &options.evolve)?;
        leak.push(r.field.inner(&outside));
        diagnostics.push(r.diagnostics);
    }
    let ratio: Vec<f64> =
        eps_list.iter().zip(&leak).map(|(e, l)| if *e == 0.0 { 0.0 } else { l / e }).collect();
    let monotone_decreasing = ratio.windows(2).all(|w| w[1] <= w[0]);
    let last = *eps_list.last().unwrap();
    let final_below_sqrt_eps = ratio.last().unwrap() <= &(last.sqrt() * ratio[0]);
    Ok(LocalisationReport { eps: eps_list.to_vec(), leak, ratio, monotone_decreasing, final_below_sqrt_eps, diagnostics })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Cutoff, Euclidean, ScheduledFamily};

    #[test]
    fn zero_diffusivity_gives_zero_everywhere() {
        let g = Grid::square(2.0, 64).unwrap();
        let d = Region::disk([0.0, 0.0], 1.0).unwrap();
        let fam = Euclidean::default();
        let opts = PdeOptions::default();
        assert_eq!(heat_content_pde(&d, &fam, 0.0, &g, &opts).unwrap().value, 0.0);
        let sa = self_adjoint_identity_check(&d, &fam, 0.0, &g, &opts).unwrap();
        assert_eq!((sa.lhs, sa.rhs), (0.0, 0.0));
        let small = Region::disk([0.0, 0.0], 0.5).unwrap();
        let loc = localisation_check(&small, &d, &fam, &[0.0], &g, &opts).unwrap();
        assert_eq!(loc.leak, vec![0.0]);
    }

    #[test]
    fn heat_content_increases_with_eps() {
        let g = Grid::square(1.6, 96).unwrap();
        let d = Region::disk([0.0, 0.0], 0.6).unwrap();
        let fam = Euclidean::default();
        let opts = PdeOptions::default();
        let vals: Vec<f64> =
            [1e-3, 2e-3, 4e-3, 8e-3].iter().map(|&e| heat_content_pde(&d, &fam, e, &g, &opts).unwrap().value).collect();
        assert!(vals.windows(2).all(|w| w[1] > w[0]), "{vals:?}");
    }

    #[test]
    fn self_adjoint_gap_is_tiny_for_euclidean_disk() {
        let g = Grid::square(1.5, 96).unwrap();
        let d = Region::disk([0.0, 0.0], 0.7).unwrap();
        let r = self_adjoint_identity_check(&d, &Euclidean::default(), 1e-3, &g, &PdeOptions::default()).unwrap();
        assert!(r.relative_gap <= 1e-6, "{r:?}");
    }

    #[test]
    fn averaging_difference_vanishes_for_time_independent_family() {
        let g = Grid::square(1.0, 32).unwrap();
        let fam = Euclidean::default();
        let u0 = GridField::from_fn(g, GridField::density_of(&g, |_| 1.0), |p| (-(p[0] * p[0] + p[1] * p[1]) * 8.0).exp())
            .unwrap();
        let r = averaging_order_check(&u0, &fam, &[1e-2, 5e-3, 2.5e-3], &EvolveOptions::default()).unwrap();
        assert!(r.linf_diff.iter().all(|d| *d <= 1e-14), "{:?}", r.linf_diff);
        assert!(r.slope.is_none());
    }

    #[test]
    fn averaging_check_needs_three_values() {
        let g = Grid::square(1.0, 16).unwrap();
        let u0 = GridField::from_fn(g, GridField::density_of(&g, |_| 1.0), |_| 0.0).unwrap();
        let fam = ScheduledFamily::shear_pullback(1.0, Some(Cutoff::new(0.3, 0.6)));
        assert!(averaging_order_check(&u0, &fam, &[1e-2, 5e-3], &EvolveOptions::default()).is_err());
    }

    #[test]
    fn slope_of_power_law() {
        let x = [1.0, 0.5, 0.25, 0.125];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powi(2)).collect();
        assert!((log_log_slope(&x, &y).unwrap() - 2.0).abs() < 1e-12);
    }
}
