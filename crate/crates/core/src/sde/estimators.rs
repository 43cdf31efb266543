use super::rng::NoiseTag;
use super::simulate::{euler_maruyama, InitialLaw, PathEnsemble, SdeSpec, Weight};
use super::stats::{ks_one_sample, ks_two_sample, KsResult, Moments};
use crate::geometry::{AveragedCoefficients, CoefficientField, FamilyCoefficients, MetricFamily, Region};
use crate::{Error, Point, Result};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

/// Monte Carlo estimate with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub eps: f64,
    pub estimate: f64,
    pub standard_error: f64,
    /// Fraction of paths that ended outside the region.
    pub escape_fraction: f64,
    /// Mass of the initial density before normalization.
    pub normalization: f64,
    pub n_paths: usize,
    pub n_steps: usize,
}

impl McEstimate {
    /// Whether `value` lies within `k` standard errors of the estimate.
    pub fn agrees_with(&self, value: f64, k: f64) -> bool {
        (self.estimate - value).abs() <= k * self.standard_error
    }
}

fn escape_estimate(
    region: &Region,
    family: &dyn MetricFamily,
    law: &InitialLaw<'_>,
    eps: f64,
    n_paths: usize,
    n_steps: usize,
    seed: u64,
) -> Result<McEstimate> {
    let norm = law.normalization();
    if eps == 0.0 && law.point_mass().is_none() {
        // Without diffusion the paths never move and start inside S.
        return Ok(McEstimate { eps, estimate: 0.0, standard_error: 0.0, escape_fraction: 0.0, normalization: norm, n_paths, n_steps });
    }
    let coeffs = FamilyCoefficients::new(family);
    let spec = SdeSpec::backward(&coeffs, eps);
    let ensemble = euler_maruyama(&spec, law, n_paths, n_steps, seed, NoiseTag::SHARED, 0)?;
    let escaped = ensemble.endpoints.iter().filter(|&&x| !region.contains(x)).count();
    let p = escaped as f64 / n_paths as f64;
    Ok(McEstimate {
        eps,
        estimate: norm * p,
        standard_error: norm * (p * (1.0 - p) / n_paths as f64).sqrt(),
        escape_fraction: p,
        normalization: norm,
        n_paths,
        n_steps,
    })
}

fn check_region(region: &Region) -> Result<()> {
    // The far-field ball is not a constraint here: paths may leave it freely.
    region.validate(f64::INFINITY)
}

/// `⟨P₁^ε 1_S, 1_{S^c}⟩₀ = ω(S)·P(X₁ ∉ S)` with `X₀ ~ 1_S ω / ω(S)` and `X`
/// the backward SDE of `family`.
pub fn heat_content_mc(
    region: &Region,
    family: &dyn MetricFamily,
    eps: f64,
    n_paths: usize,
    n_steps: usize,
    seed: u64,
) -> Result<McEstimate> {
    check_region(region)?;
    let law = InitialLaw::indicator(region, family)?;
    escape_estimate(region, family, &law, eps, n_paths, n_steps, seed)
}

/// `⟨P₁^ε (f 1_S), 1_{S^c}⟩₀`, which should approach `√(ε/π)∫_{∂S} f dĀ`.
#[allow(clippy::too_many_arguments)]
pub fn heat_content_mc_weighted(
    region: &Region,
    family: &dyn MetricFamily,
    weight: Weight<'_>,
    eps: f64,
    n_paths: usize,
    n_steps: usize,
    seed: u64,
) -> Result<McEstimate> {
    check_region(region)?;
    let law = InitialLaw::weighted(region, family, weight)?;
    escape_estimate(region, family, &law, eps, n_paths, n_steps, seed)
}

/// `(P₁^ε 1_{S^c})(x) = P(X₁ ∉ S | X₀ = x)`.
#[allow(clippy::too_many_arguments)]
pub fn escape_probability(
    region: &Region,
    family: &dyn MetricFamily,
    x: Point,
    eps: f64,
    n_paths: usize,
    n_steps: usize,
    seed: u64,
) -> Result<McEstimate> {
    check_region(region)?;
    escape_estimate(region, family, &InitialLaw::point(x), eps, n_paths, n_steps, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckpointGap {
    pub t: f64,
    pub mean_square: f64,
    pub standard_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrongErrorReport {
    pub eps: f64,
    /// Largest checkpoint mean of `|X_t − Y_t|²`.
    pub value: f64,
    pub standard_error: f64,
    pub argmax_time: f64,
    pub checkpoints: Vec<CheckpointGap>,
}

/// Max over checkpoints of the sample mean of `|X_t − Y_t|²` for two
/// ensembles driven by the same noise from the same starting points.
pub fn strong_error(x: &PathEnsemble, y: &PathEnsemble) -> Result<StrongErrorReport> {
    if x.noise_tag != y.noise_tag || x.master_seed != y.master_seed {
        return Err(Error::Uncoupled(format!(
            "noise ({}, {:?}) vs ({}, {:?})",
            x.master_seed, x.noise_tag, y.master_seed, y.noise_tag
        )));
    }
    if x.len() != y.len() {
        return Err(Error::Uncoupled(format!("{} vs {} paths", x.len(), y.len())));
    }
    if x.checkpoint_times.is_empty() || x.checkpoint_times != y.checkpoint_times {
        return Err(Error::Uncoupled("checkpoint times missing or different".into()));
    }
    if x.initial != y.initial {
        return Err(Error::Uncoupled("initial samples differ".into()));
    }
    let n = x.len();
    let nf = n as f64;
    let m = x.checkpoint_times.len();
    let mut gaps = Vec::with_capacity(m);
    for (k, &t) in x.checkpoint_times.iter().enumerate() {
        let sq: Vec<f64> = (0..n)
            .map(|p| {
                let (a, b) = (x.checkpoints_of(p)[k], y.checkpoints_of(p)[k]);
                (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
            })
            .collect();
        let mean = crate::quadrature::compensated_sum(sq.iter().copied()) / nf;
        let se = if n > 1 {
            let v = crate::quadrature::compensated_sum(sq.iter().map(|q| (q - mean).powi(2))) / (nf - 1.0);
            (v / nf).sqrt()
        } else {
            f64::NAN
        };
        gaps.push(CheckpointGap { t, mean_square: mean, standard_error: se });
    }
    let best = gaps.iter().copied().enumerate().fold(gaps[0], |acc, (_, g)| if g.mean_square > acc.mean_square { g } else { acc });
    Ok(StrongErrorReport {
        eps: x.eps,
        value: best.mean_square,
        standard_error: best.standard_error,
        argmax_time: best.t,
        checkpoints: gaps,
    })
}

/// Simulates the backward process `X` and its frozen approximant `Y` with
/// shared noise and returns their strong error.
#[allow(clippy::too_many_arguments)]
pub fn strong_error_frozen(
    family: &dyn MetricFamily,
    law: &InitialLaw<'_>,
    eps: f64,
    n_paths: usize,
    n_steps: usize,
    seed: u64,
    checkpoints: usize,
) -> Result<StrongErrorReport> {
    let coeffs = FamilyCoefficients::new(family);
    let spec = SdeSpec::backward(&coeffs, eps);
    let x = euler_maruyama(&spec, law, n_paths, n_steps, seed, NoiseTag::SHARED, checkpoints)?;
    let y = euler_maruyama(&spec.frozen(), law, n_paths, n_steps, seed, NoiseTag::SHARED, checkpoints)?;
    strong_error(&x, &y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// KS comparisons along one direction `θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProjectionTest {
    pub angle: f64,
    /// `Y₁ − X₀` against `Ȳ₁ − X₀`.
    pub two_sample: KsResult,
    /// Normality of each projection against `N(0, ε θᵀāθ)` (point laws only).
    pub normality_frozen: Option<KsResult>,
    pub normality_averaged: Option<KsResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LawReport {
    pub verdict: Verdict,
    pub eps: f64,
    pub n_paths: usize,
    pub n_steps: usize,
    pub p_threshold: f64,
    pub initial_point: Option<Point>,
    /// `ε ā(x₀)` as `(c11, c12, c22)`, for point laws.
    pub expected_covariance: Option<[f64; 3]>,
    pub frozen: Moments,
    pub averaged: Moments,
    pub means_ok: bool,
    pub covariances_ok: Option<bool>,
    pub projections: Vec<ProjectionTest>,
    pub note: String,
}

pub const PROJECTION_ANGLES: [f64; 4] =
    [0.0, std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_2, 3.0 * std::f64::consts::FRAC_PI_4];
pub const KS_THRESHOLD: f64 = 0.01;

fn project(samples: &[Point], angle: f64) -> Vec<f64> {
    let (s, c) = angle.sin_cos();
    samples.iter().map(|p| c * p[0] + s * p[1]).collect()
}

/// Compares the endpoint displacement of the frozen backward process `Y`
/// (time-dependent `σ(1 − t, X₀)`) with that of `Ȳ` (averaged `σ̄(X₀)`).
/// Their laws should coincide. The two ensembles use independent noise.
pub fn law_equality_check(
    family: &dyn MetricFamily,
    law: &InitialLaw<'_>,
    eps: f64,
    n_paths: usize,
    n_steps: usize,
    seed: u64,
) -> Result<LawReport> {
    let coeffs = FamilyCoefficients::new(family);
    let averaged = AveragedCoefficients::new(family);
    let y = euler_maruyama(&SdeSpec::backward(&coeffs, eps).frozen(), law, n_paths, n_steps, seed, NoiseTag::SHARED, 0)?;
    let ybar = euler_maruyama(&SdeSpec::backward(&averaged, eps).frozen(), law, n_paths, n_steps, seed, NoiseTag::AVERAGED, 0)?;
    let (dy, dybar) = (y.displacements(), ybar.displacements());
    let (my, mybar) = (Moments::of(&dy), Moments::of(&dybar));

    let x0 = law.point_mass();
    let expected = match x0 {
        Some(x) => {
            let a = averaged.diffusion(0.0, x)?;
            Some([eps * a.a11(), eps * a.a12(), eps * a.a22()])
        }
        None => None,
    };

    if n_paths < 2 || eps == 0.0 {
        let note = if n_paths < 2 { "a single path supports no distributional test" } else { "no diffusion: both laws are the point mass at the start" };
        return Ok(LawReport {
            verdict: Verdict::Inconclusive,
            eps,
            n_paths,
            n_steps,
            p_threshold: KS_THRESHOLD,
            initial_point: x0,
            expected_covariance: expected,
            frozen: my,
            averaged: mybar,
            means_ok: true,
            covariances_ok: None,
            projections: vec![],
            note: note.into(),
        });
    }

    let means_ok = my.mean_within([0.0, 0.0], 3.0) && mybar.mean_within([0.0, 0.0], 3.0);
    let covariances_ok = expected.map(|c| my.covariance_within(c, 3.0) && mybar.covariance_within(c, 3.0));
    let projections: Vec<ProjectionTest> = PROJECTION_ANGLES
        .iter()
        .map(|&angle| {
            let (py, pybar) = (project(&dy, angle), project(&dybar, angle));
            let normal = expected.map(|c| {
                let (s, co) = angle.sin_cos();
                let var = co * co * c[0] + 2.0 * s * co * c[1] + s * s * c[2];
                Normal::new(0.0, var.sqrt()).expect("positive variance")
            });
            ProjectionTest {
                angle,
                two_sample: ks_two_sample(&py, &pybar),
                normality_frozen: normal.as_ref().map(|n| ks_one_sample(&py, |v| n.cdf(v))),
                normality_averaged: normal.as_ref().map(|n| ks_one_sample(&pybar, |v| n.cdf(v))),
            }
        })
        .collect();
    let ks_ok = projections.iter().all(|p| {
        p.two_sample.p_value >= KS_THRESHOLD
            && p.normality_frozen.is_none_or(|r| r.p_value >= KS_THRESHOLD)
            && p.normality_averaged.is_none_or(|r| r.p_value >= KS_THRESHOLD)
    });
    let pass = means_ok && covariances_ok.unwrap_or(true) && ks_ok;
    Ok(LawReport {
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        eps,
        n_paths,
        n_steps,
        p_threshold: KS_THRESHOLD,
        initial_point: x0,
        expected_covariance: expected,
        frozen: my,
        averaged: mybar,
        means_ok,
        covariances_ok,
        projections,
        note: String::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Euclidean, ScheduledFamily};

    #[test]
    fn zero_diffusion_gives_zero_heat_content() {
        let fam = Euclidean::default();
        let region = Region::disk([0.0, 0.0], 1.0).unwrap();
        let r = heat_content_mc(&region, &fam, 0.0, 1000, 16, 3).unwrap();
        assert_eq!(r.estimate, 0.0);
    }

    #[test]
    fn identical_specs_have_zero_strong_error() {
        let fam = ScheduledFamily::shear_pullback(1.0, None);
        let coeffs = FamilyCoefficients::new(&fam);
        let spec = SdeSpec::backward(&coeffs, 0.1);
        let law = InitialLaw::point([0.1, 0.2]);
        let a = euler_maruyama(&spec, &law, 200, 32, 5, NoiseTag::SHARED, 17).unwrap();
        let b = euler_maruyama(&spec, &law, 200, 32, 5, NoiseTag::SHARED, 17).unwrap();
        assert_eq!(strong_error(&a, &b).unwrap().value, 0.0);
    }

    #[test]
    fn spatially_constant_sigma_makes_frozen_exact() {
        // Without a cutoff the shear coefficients do not depend on x, so the
        // frozen process is the process itself.
        let fam = ScheduledFamily::shear_pullback(1.0, None);
        let law = InitialLaw::point([0.0, 0.0]);
        let r = strong_error_frozen(&fam, &law, 0.1, 500, 64, 11, 17).unwrap();
        assert!(r.value < 1e-24, "{}", r.value);
    }

    #[test]
    fn uncoupled_ensembles_are_rejected() {
        let fam = Euclidean::default();
        let coeffs = FamilyCoefficients::new(&fam);
        let spec = SdeSpec::backward(&coeffs, 0.1);
        let law = InitialLaw::point([0.0, 0.0]);
        let a = euler_maruyama(&spec, &law, 20, 16, 5, NoiseTag::SHARED, 17).unwrap();
        let b = euler_maruyama(&spec, &law, 20, 16, 5, NoiseTag::AVERAGED, 17).unwrap();
        let c = euler_maruyama(&spec, &law, 21, 16, 5, NoiseTag::SHARED, 17).unwrap();
        let d = euler_maruyama(&spec, &law, 20, 16, 5, NoiseTag::SHARED, 0).unwrap();
        assert!(matches!(strong_error(&a, &b), Err(Error::Uncoupled(_))));
        assert!(matches!(strong_error(&a, &c), Err(Error::Uncoupled(_))));
        assert!(matches!(strong_error(&a, &d), Err(Error::Uncoupled(_))));
    }

    #[test]
    fn single_path_law_check_is_inconclusive() {
        let fam = Euclidean::default();
        let r = law_equality_check(&fam, &InitialLaw::point([0.0, 0.0]), 0.01, 1, 16, 1).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn euclidean_law_check_passes_with_isotropic_covariance() {
        let fam = Euclidean::default();
        let r = law_equality_check(&fam, &InitialLaw::point([0.0, 0.0]), 0.01, 20_000, 16, 8).unwrap();
        let c = r.expected_covariance.unwrap();
        assert!((c[0] - 0.02).abs() < 1e-15 && c[1] == 0.0 && (c[2] - 0.02).abs() < 1e-15);
        assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
    }
}
