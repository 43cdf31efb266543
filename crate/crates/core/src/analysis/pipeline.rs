use serde::Serialize;

use super::fit::Measurement;
use crate::error::Result;
use crate::geometry::{MetricFamily, Region};
use crate::pde::{heat_content_from_indicator, prepare_indicator, Grid, PdeOptions, SolveDiagnostics};
use crate::sde::{derive_seed, heat_content_mc, McEstimate};

/// Heat contents on one grid for a list of diffusivities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PdeSeries {
    pub measurements: Vec<Measurement>,
    pub region_mass: f64,
    pub diagnostics: Vec<SolveDiagnostics>,
}

/// Grid heat content for each ε. The indicator is discretised once.
pub fn measure_pde(
    region: &Region,
    family: &dyn MetricFamily,
    eps_list: &[f64],
    grid: &Grid,
    options: &PdeOptions,
) -> Result<PdeSeries> {
    let eps_max = eps_list.iter().cloned().fold(0.0, f64::max);
    let f = prepare_indicator(region, family, grid, eps_max, options.indicator_subsamples)?;
    let mut measurements = Vec::with_capacity(eps_list.len());
    let mut diagnostics = Vec::new();
    for &eps in eps_list {
        let h = heat_content_from_indicator(&f, family, eps, &options.evolve)?;
        measurements.push(Measurement::new(eps, h.value, 0.0));
        diagnostics.extend(h.diagnostics);
    }
    Ok(PdeSeries { measurements, region_mass: f.mass(), diagnostics })
}

/// Monte Carlo heat content for each ε. The `k`-th diffusivity uses the
/// sub-seed `derive_seed(seed, k)`, so the estimates are independent.
pub fn measure_mc(
    region: &Region,
    family: &dyn MetricFamily,
    eps_list: &[f64],
    n_paths: usize,
    n_steps: usize,
    seed: u64,
) -> Result<Vec<McEstimate>> {
    eps_list
        .iter()
        .enumerate()
        .map(|(k, &eps)| heat_content_mc(region, family, eps, n_paths, n_steps, derive_seed(seed, k as u64)))
        .collect()
}

pub fn mc_measurements(estimates: &[McEstimate]) -> Vec<Measurement> {
    estimates.iter().map(|e| Measurement::new(e.eps, e.estimate, e.standard_error)).collect()
}
