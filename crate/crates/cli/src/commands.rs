use std::f64::consts::PI;

use mixlab_core::analysis::{
    coherence_ratio, fit_asymptotics, AsymptoticsReport, CoherenceBackend, CoherenceReport, Measurement,
};
use mixlab_core::geometry::{mixing_area_of_family, MetricFamily, MixingAreaOptions, Region};
use mixlab_core::pde::{
    averaging_order_check, heat_content_pde, AveragingOrderReport, EvolveOptions, Grid, GridField, HeatContentPde,
    PdeOptions, SolveDiagnostics, TimeSampling, INDICATOR_SUBSAMPLES,
};
use mixlab_core::sde::{derive_seed, heat_content_mc, McEstimate};
use mixlab_core::suites::{run_many, Check, Scale, Suite, SuiteReport};
use serde::Serialize;

use crate::config::{Backend, ExperimentConfig};
use crate::error::CliError;
use crate::jobs::fan_out;
use crate::output::Artifacts;

/// Largest accepted relative gap of the grid fit.
const PDE_GAP_TOLERANCE: f64 = 0.05;
/// Standard errors allowed between grid and Monte Carlo values.
const AGREEMENT_SE: f64 = 3.0;

/// Result of a command: printable lines and the assertion verdict.
pub struct Outcome {
    pub lines: Vec<String>,
    pub passed: bool,
}

impl Outcome {
    fn new() -> Self {
        Outcome { lines: Vec::new(), passed: true }
    }

    fn say(&mut self, line: impl Into<String>) {
        self.lines.push(line.into());
    }

    fn assert(&mut self, ok: bool, what: impl Into<String>) {
        self.passed &= ok;
        self.lines.push(format!("{} {}", if ok { "PASS" } else { "FAIL" }, what.into()));
    }

    fn audit(&mut self, diagnostics: &[SolveDiagnostics]) {
        if let Some(bad) = diagnostics.iter().find(|d| !d.within_tolerances()) {
            self.assert(false, format!("conservation: solve at eps {:e} drifted or left [0, 1]: {bad:?}", bad.eps));
        }
    }
}

struct Setup {
    family: Box<dyn MetricFamily>,
    region: Region,
    pde_options: PdeOptions,
}

fn setup(cfg: &ExperimentConfig) -> Result<Setup, CliError> {
    let subsamples = cfg.grid.as_ref().and_then(|g| g.subsamples).unwrap_or(INDICATOR_SUBSAMPLES);
    Ok(Setup {
        family: cfg.family.build()?,
        region: cfg.region()?,
        pde_options: PdeOptions { indicator_subsamples: subsamples, ..Default::default() },
    })
}

#[derive(Serialize)]
struct AreaReport<'a> {
    name: &'a str,
    family: String,
    region: &'a Region,
    mixing_area: f64,
    euclidean_perimeter: f64,
    region_mass: f64,
}

pub fn area(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Outcome, CliError> {
    let s = setup(cfg)?;
    let a = mixing_area_of_family(&s.region, s.family.as_ref(), MixingAreaOptions::default(), None)?;
    let report = AreaReport {
        name: &cfg.name,
        family: s.family.describe(),
        region: &s.region,
        mixing_area: a,
        euclidean_perimeter: s.region.perimeter(),
        region_mass: s.region.mass(&|x| s.family.density(x)),
    };
    out.json("area.json", &report)?;
    let mut o = Outcome::new();
    o.say(format!("Ā = {a:.10}"));
    o.say(format!("Euclidean perimeter = {:.10}", report.euclidean_perimeter));
    Ok(o)
}

enum Job {
    Pde(f64),
    Mc(usize, f64),
}

enum JobResult {
    Pde(HeatContentPde),
    Mc(McEstimate),
}

/// Runs the requested backends over `eps` as independent jobs.
fn measure(
    cfg: &ExperimentConfig,
    s: &Setup,
    backend: Backend,
    seed: Option<u64>,
    eps: &[f64],
) -> Result<(Vec<HeatContentPde>, Vec<McEstimate>), CliError> {
    let grid = if backend.pde() { Some(cfg.grid()?) } else { None };
    let mc = if backend.mc() { Some(cfg.mc()?.clone()) } else { None };
    let seed = if backend.mc() { Some(seed.ok_or_else(|| CliError::Config("mc backend needs a seed".into()))?) } else { None };
    let mut jobs = Vec::new();
    for (k, &e) in eps.iter().enumerate() {
        if backend.pde() {
            jobs.push(Job::Pde(e));
        }
        if backend.mc() {
            jobs.push(Job::Mc(k, e));
        }
    }
    let results = fan_out(jobs, |job| -> Result<JobResult, CliError> {
        Ok(match job {
            Job::Pde(e) => JobResult::Pde(heat_content_pde(&s.region, s.family.as_ref(), e, grid.as_ref().unwrap(), &s.pde_options)?),
            Job::Mc(k, e) => {
                let m = mc.as_ref().unwrap();
                JobResult::Mc(heat_content_mc(&s.region, s.family.as_ref(), e, m.paths, m.steps, derive_seed(seed.unwrap(), k as u64))?)
            }
        })
    });
    let (mut pde, mut mcs) = (Vec::new(), Vec::new());
    for r in results {
        match r? {
            JobResult::Pde(p) => pde.push(p),
            JobResult::Mc(m) => mcs.push(m),
        }
    }
    Ok((pde, mcs))
}

#[derive(Serialize)]
struct HeatRow {
    epsilon: f64,
    prediction: f64,
    pde: Option<f64>,
    mc: Option<f64>,
    mc_se: Option<f64>,
    /// `(pde − mc)/se` when both are present.
    z: Option<f64>,
}

#[derive(Serialize)]
struct HeatReport<'a> {
    name: &'a str,
    family: String,
    mixing_area: f64,
    backend: Backend,
    seed: Option<u64>,
    rows: &'a [HeatRow],
    pde: Vec<HeatContentPde>,
    mc: Vec<McEstimate>,
}

pub fn heat_content(
    cfg: &ExperimentConfig,
    backend: Backend,
    seed: Option<u64>,
    out: &mut Artifacts,
) -> Result<Outcome, CliError> {
    let s = setup(cfg)?;
    let seed = if backend.mc() { Some(cfg.seed(seed)?) } else { None };
    let area = mixing_area_of_family(&s.region, s.family.as_ref(), MixingAreaOptions::default(), None)?;
    let eps = cfg.eps();
    let (pde, mc) = measure(cfg, &s, backend, seed, &eps)?;
    let mut o = Outcome::new();
    let rows: Vec<HeatRow> = eps
        .iter()
        .enumerate()
        .map(|(k, &e)| {
            let p = pde.get(k).map(|h| h.value);
            let m = mc.get(k);
            HeatRow {
                epsilon: e,
                prediction: (e / PI).sqrt() * area,
                pde: p,
                mc: m.map(|m| m.estimate),
                mc_se: m.map(|m| m.standard_error),
                z: match (p, m) {
                    (Some(p), Some(m)) if m.standard_error > 0.0 => Some((p - m.estimate) / m.standard_error),
                    _ => None,
                },
            }
        })
        .collect();
    o.say(format!("{:>12} {:>14} {:>14} {:>14} {:>12}", "epsilon", "prediction", "pde", "mc", "mc_se"));
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.8}"));
    for r in &rows {
        o.say(format!("{:>12e} {:>14.8} {:>14} {:>14} {:>12}", r.epsilon, r.prediction, fmt(r.pde), fmt(r.mc), fmt(r.mc_se)));
    }
    if backend == Backend::Both {
        for r in &rows {
            let (p, m, se) = (r.pde.unwrap(), r.mc.unwrap(), r.mc_se.unwrap());
            o.assert((p - m).abs() <= AGREEMENT_SE * se, format!("eps {:e}: |pde - mc| = {:.3e} vs 3·SE = {:.3e}", r.epsilon, (p - m).abs(), 3.0 * se));
        }
    }
    let diagnostics: Vec<_> = pde.iter().filter_map(|p| p.diagnostics).collect();
    o.audit(&diagnostics);
    out.csv("heat_content.csv", &rows)?;
    let report = HeatReport { name: &cfg.name, family: s.family.describe(), mixing_area: area, backend, seed, rows: &rows, pde, mc };
    out.json("heat_content.json", &report)?;
    Ok(o)
}

#[derive(Serialize)]
struct AsymptoticsOutput<'a> {
    name: &'a str,
    family: String,
    region: &'a Region,
    mixing_area: f64,
    seed: Option<u64>,
    pde: Option<AsymptoticsReport>,
    mc: Option<AsymptoticsReport>,
    mc_estimates: Vec<McEstimate>,
}

pub fn asymptotics(
    cfg: &ExperimentConfig,
    backend: Backend,
    seed: Option<u64>,
    out: &mut Artifacts,
) -> Result<Outcome, CliError> {
    let s = setup(cfg)?;
    let seed = if backend.mc() { Some(cfg.seed(seed)?) } else { None };
    let area = mixing_area_of_family(&s.region, s.family.as_ref(), MixingAreaOptions::default(), None)?;
    let eps = cfg.eps();
    let (pde, mc) = measure(cfg, &s, backend, seed, &eps)?;
    let mut o = Outcome::new();
    o.say(format!("Ā = {area:.10}, predicted c1 = Ā/sqrt(pi) = {:.10}", area / PI.sqrt()));

    let pde_fit = if backend.pde() {
        let ms: Vec<Measurement> = pde.iter().map(|h| Measurement::new(h.eps, h.value, 0.0)).collect();
        let fit = fit_asymptotics(&ms, area)?;
        o.assert(
            fit.relative_gap <= PDE_GAP_TOLERANCE,
            format!("pde: c1 = {:.8}, |c1·sqrt(pi) - Ā|/Ā = {:.4} (limit {PDE_GAP_TOLERANCE})", fit.c1, fit.relative_gap),
        );
        out.csv("asymptotics_pde.csv", &fit.rows())?;
        Some(fit)
    } else {
        None
    };
    let mc_fit = if backend.mc() {
        let ms: Vec<Measurement> = mc.iter().map(|m| Measurement::new(m.eps, m.estimate, m.standard_error)).collect();
        let fit = fit_asymptotics(&ms, area)?;
        o.assert(
            fit.prediction_in_ci(),
            format!(
                "mc: c1 = {:.8} ± {:.8} (3 SE) vs predicted {:.8}",
                fit.c1,
                3.0 * fit.c1_standard_error(),
                fit.predicted_c1
            ),
        );
        out.csv("asymptotics_mc.csv", &fit.rows())?;
        Some(fit)
    } else {
        None
    };
    let diagnostics: Vec<_> = pde.iter().filter_map(|p| p.diagnostics).collect();
    o.audit(&diagnostics);
    let report = AsymptoticsOutput {
        name: &cfg.name,
        family: s.family.describe(),
        region: &s.region,
        mixing_area: area,
        seed,
        pde: pde_fit,
        mc: mc_fit,
        mc_estimates: mc,
    };
    out.json("asymptotics.json", &report)?;
    Ok(o)
}

#[derive(Serialize)]
struct CoherenceRow {
    epsilon: f64,
    backend: String,
    ratio: f64,
    ratio_se: f64,
    retained_inside: f64,
    retained_outside: f64,
}

/// Slack allowed above 1 for a retained fraction.
const FRACTION_SLACK: f64 = 1e-9;

pub fn coherence(
    cfg: &ExperimentConfig,
    backend: Backend,
    seed: Option<u64>,
    out: &mut Artifacts,
) -> Result<Outcome, CliError> {
    let s = setup(cfg)?;
    let grid: Grid = cfg.grid()?;
    let mut backends = Vec::new();
    if backend.pde() {
        backends.push(CoherenceBackend::Pde { grid, options: s.pde_options });
    }
    let eps = cfg.eps();
    let mut jobs = Vec::new();
    for (k, &e) in eps.iter().enumerate() {
        for b in &backends {
            jobs.push((e, *b));
        }
        if backend.mc() {
            let m = cfg.mc()?;
            let seed = derive_seed(cfg.seed(seed)?, k as u64);
            jobs.push((e, CoherenceBackend::Mc { truncation: grid.rect, n_paths: m.paths, n_steps: m.steps, seed }));
        }
    }
    let reports: Vec<CoherenceReport> = fan_out(jobs, |(e, b)| coherence_ratio(s.family.as_ref(), &s.region, e, &b))
        .into_iter()
        .collect::<Result<_, _>>()?;
    let mut o = Outcome::new();
    let mut rows = Vec::new();
    for r in &reports {
        o.say(format!(
            "eps {:e} [{}]: rho = {:.10} (inside {:.10}, outside {:.10}, truncation radius {})",
            r.eps, r.backend, r.ratio, r.retained_inside, r.retained_outside, r.truncation_radius
        ));
        for (what, f) in [("inside", r.retained_inside), ("outside", r.retained_outside)] {
            if !(0.0..=1.0 + FRACTION_SLACK).contains(&f) {
                o.assert(false, format!("eps {:e} [{}]: retained {what} fraction {f} outside [0, 1]", r.eps, r.backend));
            }
        }
        o.audit(&r.diagnostics);
        rows.push(CoherenceRow {
            epsilon: r.eps,
            backend: r.backend.clone(),
            ratio: r.ratio,
            ratio_se: r.ratio_standard_error,
            retained_inside: r.retained_inside,
            retained_outside: r.retained_outside,
        });
    }
    out.csv("coherence.csv", &rows)?;
    out.json("coherence.json", &reports)?;
    Ok(o)
}

#[derive(Serialize)]
struct AveragingRow {
    epsilon: f64,
    linf_diff: f64,
    expansion_residual: f64,
}

pub fn averaging_order(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Outcome, CliError> {
    let s = setup(cfg)?;
    let a = cfg.averaging.as_ref().ok_or_else(|| CliError::Config("averaging-order needs an [averaging] section".into()))?;
    if !(a.bump_width > 0.0) || a.nodes == 0 {
        return Err(CliError::Config("averaging needs bump_width > 0 and nodes >= 1".into()));
    }
    let grid = cfg.grid()?;
    let rho = GridField::density_of(&grid, |x| s.family.density(x));
    let (c, w) = (a.bump_center, a.bump_width);
    let u0 = GridField::from_fn(grid, rho, |p| {
        let d2 = (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2);
        (-d2 / (2.0 * w * w)).exp()
    })?;
    let options = EvolveOptions { time_sampling: TimeSampling::StepAverage { nodes: a.nodes }, dt: a.dt, ..Default::default() };
    let r: AveragingOrderReport = averaging_order_check(&u0, s.family.as_ref(), &cfg.eps(), &options)?;
    let mut o = Outcome::new();
    for (e, d) in r.eps.iter().zip(&r.linf_diff) {
        o.say(format!("eps {e:e}: ||P u0 - Pbar u0||_inf = {d:.6e}"));
    }
    let slope = r.slope;
    o.say(format!("slope {}", slope.map_or("none (differences at rounding level)".into(), |v| format!("{v:.4}"))));
    if let Some(min) = a.min_slope {
        o.assert(slope.is_some_and(|v| v >= min), format!("slope at least {min}"));
    }
    o.audit(&r.diagnostics);
    let rows: Vec<AveragingRow> = r
        .eps
        .iter()
        .zip(&r.linf_diff)
        .zip(&r.expansion_residual)
        .map(|((&epsilon, &linf_diff), &expansion_residual)| AveragingRow { epsilon, linf_diff, expansion_residual })
        .collect();
    out.csv("averaging_order.csv", &rows)?;
    out.json("averaging_order.json", &r)?;
    Ok(o)
}

fn describe_check(c: &Check) -> String {
    let tag = c.criterion.map_or(String::new(), |n| format!("[{n}] "));
    format!("{tag}{}: {}", c.name, c.detail)
}

pub fn verify(suite: &str, scale: Scale, seed: u64, out: &mut Artifacts) -> Result<Outcome, CliError> {
    let suites: Vec<Suite> = if suite.eq_ignore_ascii_case("all") {
        Suite::ALL.to_vec()
    } else {
        vec![suite.parse().map_err(|e: mixlab_core::Error| CliError::Config(e.to_string()))?]
    };
    let report = run_many(&suites, scale, seed, |r: &SuiteReport| {
        eprintln!("{}: {}", r.suite, if r.passed { "pass" } else { "FAIL" });
    })?;
    let mut o = Outcome::new();
    for r in &report.suites {
        o.say(format!("== {} ({})", r.suite, if r.passed { "pass" } else { "FAIL" }));
        for c in &r.checks {
            o.assert(c.passed, describe_check(c));
        }
    }
    out.json("verify.json", &report)?;
    Ok(o)
}
