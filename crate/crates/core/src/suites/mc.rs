use serde::Serialize;

use super::{Check, Scale, Suite, SuiteReport};
use crate::error::Result;
use crate::geometry::{Cutoff, ScheduledFamily};
use crate::sde::{
    derive_seed, law_equality_check, strong_error_frozen, InitialLaw, LawReport, StrongErrorReport, Verdict,
    DEFAULT_CHECKPOINTS, KS_THRESHOLD,
};

pub const STRONG_ERROR_EPS: [f64; 3] = [0.1, 0.05, 0.025];
pub const STRONG_ERROR_STEPS: usize = 256;
pub const LAW_STEPS: usize = 256;

#[derive(Debug, Serialize)]
struct StrongErrorDetails {
    family: String,
    initial_point: [f64; 2],
    n_paths: usize,
    n_steps: usize,
    /// `value/ε²` per ε and its standard error.
    ratios: Vec<[f64; 2]>,
    reports: Vec<StrongErrorReport>,
}

/// `max_t E|X_t − Y_t|²/ε²` at three diffusivities. The bound is the ratio
/// at the largest ε; the smaller diffusivities must not exceed it by more
/// than three combined standard errors.
pub(super) fn appendix_a(scale: Scale, seed: u64) -> Result<SuiteReport> {
    let fam = ScheduledFamily::shear_pullback(1.0, Some(Cutoff::new(0.0, 3.0)));
    let x0 = [0.5, 0.5];
    let law = InitialLaw::point(x0);
    let n_paths = scale.pick(20_000, 100_000);
    let mut reports = Vec::new();
    for (k, &eps) in STRONG_ERROR_EPS.iter().enumerate() {
        reports.push(strong_error_frozen(
            &fam,
            &law,
            eps,
            n_paths,
            STRONG_ERROR_STEPS,
            derive_seed(seed, k as u64),
            DEFAULT_CHECKPOINTS,
        )?);
    }
    let ratios: Vec<[f64; 2]> = reports.iter().map(|r| [r.value / (r.eps * r.eps), r.standard_error / (r.eps * r.eps)]).collect();
    let [c, c_se] = ratios[0];
    let mut checks = Vec::new();
    for (r, [v, se]) in reports.iter().zip(&ratios).skip(1) {
        let slack = 3.0 * (c_se * c_se + se * se).sqrt();
        checks.push(Check::new(
            format!("appendixA.bounded_{:e}", r.eps),
            Some(5),
            *v <= c + slack,
            format!("ratio {v:.5} ± {se:.5} against bound {c:.5} ± {c_se:.5}"),
        ));
    }
    checks.push(Check::new(
        "appendixA.finite",
        Some(5),
        ratios.iter().all(|r| r[0].is_finite() && r[1].is_finite()),
        format!("ratios {:?}", ratios.iter().map(|r| r[0]).collect::<Vec<_>>()),
    ));
    let details = StrongErrorDetails {
        family: crate::geometry::MetricFamily::describe(&fam),
        initial_point: x0,
        n_paths,
        n_steps: STRONG_ERROR_STEPS,
        ratios,
        reports,
    };
    SuiteReport::new(Suite::AppendixA, scale, seed, checks, vec![], details)
}

pub(super) fn distribution(scale: Scale, seed: u64) -> Result<SuiteReport> {
    let fam = ScheduledFamily::shear_pullback(1.0, Some(Cutoff::new(1.0, 1.6)));
    let law = InitialLaw::point([0.0, 0.0]);
    let n_paths = scale.pick(20_000, 100_000);
    let r: LawReport = law_equality_check(&fam, &law, 0.01, n_paths, LAW_STEPS, derive_seed(seed, 0))?;
    let min_p = r.projections.iter().map(|p| p.two_sample.p_value).fold(f64::INFINITY, f64::min);
    let checks = vec![
        Check::new(
            "distribution.ks",
            Some(6),
            r.projections.len() == 4 && min_p >= KS_THRESHOLD,
            format!("smallest two-sample p-value over {} projections: {min_p:.4}", r.projections.len()),
        ),
        Check::new(
            "distribution.covariance",
            Some(6),
            r.covariances_ok == Some(true),
            format!("sample covariance {:?} vs eps·a(x0) {:?}", r.frozen.covariance, r.expected_covariance),
        ),
        Check::new("distribution.verdict", Some(6), r.verdict == Verdict::Pass, format!("{:?}", r.verdict)),
    ];
    SuiteReport::new(Suite::Distribution, scale, seed, checks, vec![], r)
}
