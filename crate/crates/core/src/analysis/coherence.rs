use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{FamilyCoefficients, MetricFamily, Rect, Region};
use crate::pde::{evolve, prepare_indicator, Grid, PdeOptions, SolveDiagnostics};
use crate::sde::heat_content_mc;

/// How the two retained-mass fractions are measured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoherenceBackend {
    /// Two grid solves, one from `1_S` and one from `1_{rect∖S}`.
    Pde { grid: Grid, options: PdeOptions },
    /// One escape estimate `T`. The complement term uses
    /// `⟨P1_{S^c}, 1_S⟩ = ⟨P1_S, 1_{S^c}⟩`, so both fractions lose `T`.
    Mc { truncation: Rect, n_paths: usize, n_steps: usize, seed: u64 },
}

impl CoherenceBackend {
    pub fn name(&self) -> &'static str {
        match self {
            CoherenceBackend::Pde { .. } => "pde",
            CoherenceBackend::Mc { .. } => "mc",
        }
    }

    fn truncation(&self) -> Rect {
        match self {
            CoherenceBackend::Pde { grid, .. } => grid.rect,
            CoherenceBackend::Mc { truncation, .. } => *truncation,
        }
    }
}

/// `ρ_ε(S, S′) = ⟨P1_S, 1_{S′}⟩/ω(S) + ⟨P1_{S^c}, 1_{S′^c}⟩/ω(M∖S′)`.
///
/// In Lagrangian coordinates a material set is fixed, so `S′ = S` and the
/// Eulerian and Lagrangian ratios coincide; both are reported. The sum of
/// two unit fractions is 2 without diffusion and is not renormalised.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub eps: f64,
    pub backend: String,
    pub ratio: f64,
    pub lagrangian_ratio: f64,
    /// Zero for the grid backend.
    pub ratio_standard_error: f64,
    /// `⟨P1_S, 1_S⟩/ω(S)`.
    pub retained_inside: f64,
    /// `⟨P1_{S^c}, 1_{S^c}⟩/ω(rect∖S)`.
    pub retained_outside: f64,
    pub region_mass: f64,
    /// `ω(rect∖S)`, which depends on the truncation.
    pub complement_mass: f64,
    pub truncation: Rect,
    /// Distance from the origin to the nearest rectangle side.
    pub truncation_radius: f64,
    /// `⟨P1_S, 1_{S^c}⟩`.
    pub heat_content: f64,
    pub diagnostics: Vec<SolveDiagnostics>,
}

fn rect_region(r: &Rect) -> Result<Region> {
    Region::polygon(vec![[r.x_min, r.y_min], [r.x_max, r.y_min], [r.x_max, r.y_max], [r.x_min, r.y_max]])
}

/// Coherence ratio of `S` with its own image, which is `S` itself in
/// Lagrangian coordinates. `ε = 0` returns 2 exactly.
pub fn coherence_ratio(
    family: &dyn MetricFamily,
    region: &Region,
    eps: f64,
    backend: &CoherenceBackend,
) -> Result<CoherenceReport> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("diffusivity must be non-negative, got {eps}")));
    }
    let truncation = backend.truncation();
    if !truncation.contains_rect(&region.bounding_box()) {
        return Err(Error::InvalidRegion("region does not fit inside the truncation rectangle".into()));
    }
    let truncation_radius =
        [-truncation.x_min, truncation.x_max, -truncation.y_min, truncation.y_max].into_iter().fold(f64::INFINITY, f64::min);

    let report = |inside: f64, outside: f64, se: f64, s_mass: f64, c_mass: f64, t: f64, d: Vec<SolveDiagnostics>| {
        let ratio = inside + outside;
        CoherenceReport {
            eps,
            backend: backend.name().into(),
            ratio,
            lagrangian_ratio: ratio,
            ratio_standard_error: se,
            retained_inside: inside,
            retained_outside: outside,
            region_mass: s_mass,
            complement_mass: c_mass,
            truncation,
            truncation_radius,
            heat_content: t,
            diagnostics: d,
        }
    };

    match backend {
        CoherenceBackend::Pde { grid, options } => {
            let f = prepare_indicator(region, family, grid, eps, options.indicator_subsamples)?;
            let fc = f.complement();
            let (s_mass, c_mass) = (f.mass(), fc.mass());
            if eps == 0.0 {
                return Ok(report(1.0, 1.0, 0.0, s_mass, c_mass, 0.0, vec![]));
            }
            let coeffs = FamilyCoefficients::new(family);
            let a = evolve(&f, &coeffs, eps, 1.0, &options.evolve)?;
            let b = evolve(&fc, &coeffs, eps, 1.0, &options.evolve)?;
            let inside = a.field.inner(&f) / s_mass;
            let outside = b.field.inner(&fc) / c_mass;
            let t = a.field.inner(&fc);
            Ok(report(inside, outside, 0.0, s_mass, c_mass, t, vec![a.diagnostics, b.diagnostics]))
        }
        CoherenceBackend::Mc { n_paths, n_steps, seed, .. } => {
            let rho = |x| family.density(x);
            let s_mass = region.mass(&rho);
            let c_mass = rect_region(&truncation)?.mass(&rho) - s_mass;
            let est = heat_content_mc(region, family, eps, *n_paths, *n_steps, *seed)?;
            let t = est.estimate;
            let inside = 1.0 - t / s_mass;
            let outside = 1.0 - t / c_mass;
            let se = est.standard_error * (1.0 / s_mass + 1.0 / c_mass);
            Ok(report(inside, outside, se, s_mass, c_mass, t, vec![]))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Cutoff, Euclidean, ScheduledFamily};

    #[test]
    fn no_diffusion_gives_two_for_both_backends() {
        let fam = ScheduledFamily::shear_pullback(1.0, Some(Cutoff::new(0.5, 1.0)));
        let d = Region::disk([0.1, 0.0], 0.4).unwrap();
        let pde = CoherenceBackend::Pde { grid: Grid::square(2.0, 32).unwrap(), options: PdeOptions::default() };
        let mc = CoherenceBackend::Mc { truncation: Rect::centered(2.0), n_paths: 10, n_steps: 4, seed: 1 };
        for b in [pde, mc] {
            let r = coherence_ratio(&fam, &d, 0.0, &b).unwrap();
            assert_eq!(r.ratio, 2.0);
            assert_eq!((r.retained_inside, r.retained_outside), (1.0, 1.0));
        }
    }

    #[test]
    fn mc_masses_match_closed_forms() {
        let d = Region::disk([0.0, 0.0], 1.0).unwrap();
        let b = CoherenceBackend::Mc { truncation: Rect::centered(5.0), n_paths: 1000, n_steps: 8, seed: 3 };
        let r = coherence_ratio(&Euclidean::default(), &d, 1e-3, &b).unwrap();
        assert!((r.region_mass - std::f64::consts::PI).abs() < 1e-10);
        assert!((r.complement_mass - (100.0 - std::f64::consts::PI)).abs() < 1e-8);
        assert_eq!(r.truncation_radius, 5.0);
    }

    #[test]
    fn region_outside_truncation_is_rejected() {
        let d = Region::disk([0.0, 0.0], 1.0).unwrap();
        let b = CoherenceBackend::Mc { truncation: Rect::centered(0.9), n_paths: 10, n_steps: 4, seed: 3 };
        assert!(coherence_ratio(&Euclidean::default(), &d, 1e-3, &b).is_err());
    }
}
