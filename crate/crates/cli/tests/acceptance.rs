//! Acceptance run: every verification suite at full scale, then the
//! determinism rerun of the binary. Prints one line per criterion and exits
//! non-zero if any fails.
//!
//! Each criterion is judged twice: by the suite's own checks and by an
//! independent reading of the numbers in its report against the stated
//! tolerances.

use std::f64::consts::PI;
use std::process::Command;
use std::time::Instant;

use mixlab_core::suites::{run_many, Scale, Suite, SuiteReport, VerifyReport};
use serde_json::Value;

const SEED: u64 = 42;

struct Verdict {
    passed: bool,
    notes: Vec<String>,
}

impl Verdict {
    fn new() -> Self {
        Verdict { passed: true, notes: Vec::new() }
    }

    fn require(&mut self, ok: bool, note: String) {
        self.passed &= ok;
        self.notes.push(if ok { note } else { format!("FAILED {note}") });
    }
}

fn suite(report: &VerifyReport, s: Suite) -> &SuiteReport {
    report.suites.iter().find(|r| r.suite == s).expect("suite ran")
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("expected a number, got {v}"))
}

/// The suite's own checks tagged with `criterion`.
fn own_checks(report: &VerifyReport, criterion: u32, v: &mut Verdict) {
    let checks: Vec<_> = report.suites.iter().flat_map(|s| &s.checks).filter(|c| c.criterion == Some(criterion)).collect();
    let failed: Vec<_> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    v.require(!checks.is_empty() && failed.is_empty(), format!("{} suite checks, failing: {failed:?}", checks.len()));
}

/// PDE gap against `area` and MC confidence interval around `area/√π`.
fn heat_case(case: &Value, area: f64, v: &mut Verdict) {
    let label = case["label"].as_str().unwrap();
    let pde_c1 = f(&case["pde"]["c1"]);
    let gap = (pde_c1 * PI.sqrt() - area).abs() / area;
    v.require(gap <= 0.05, format!("{label} grid gap {gap:.4}"));
    let mc_c1 = f(&case["mc"]["c1"]);
    let se = f(&case["mc"]["covariance"][0][0]).sqrt();
    let target = area / PI.sqrt();
    v.require((mc_c1 - target).abs() <= 3.0 * se, format!("{label} MC c1 {mc_c1:.4} vs {target:.4} (3 SE {:.4})", 3.0 * se));
}

fn criterion_1(r: &VerifyReport) -> Verdict {
    let mut v = Verdict::new();
    own_checks(r, 1, &mut v);
    let case = &suite(r, Suite::Theorem).details[0];
    v.require(case["label"] == "euclidean_disk", "Euclidean case first".into());
    v.require(case["grid"]["nx"] == 512 && case["mc_paths"] == 1_000_000, "nx 512, 1e6 paths".into());
    let eps: Vec<f64> = case["pde"]["eps"].as_array().unwrap().iter().map(f).collect();
    v.require(eps.len() == 5 && eps[0] == 1e-2 && eps[4] == 6.25e-4, format!("eps {eps:?}"));
    // Perimeter of the unit circle, not the geometry module's output.
    heat_case(case, 2.0 * PI, &mut v);
    v
}

fn criterion_2(r: &VerifyReport) -> Verdict {
    let mut v = Verdict::new();
    own_checks(r, 2, &mut v);
    let cases = suite(r, Suite::Theorem).details.as_array().unwrap();
    for label in ["shear", "gyre"] {
        let case = cases.iter().find(|c| c["label"] == label).expect("case present");
        heat_case(case, f(&case["mixing_area"]), &mut v);
    }
    v
}

fn criterion_3(r: &VerifyReport) -> Verdict {
    let mut v = Verdict::new();
    own_checks(r, 3, &mut v);
    let rep = &suite(r, Suite::Averaging).details["report"];
    let eps: Vec<f64> = rep["eps"].as_array().unwrap().iter().map(f).collect();
    let diff: Vec<f64> = rep["linf_diff"].as_array().unwrap().iter().map(f).collect();
    // Independent least-squares slope of log diff on log eps.
    let (lx, ly): (Vec<f64>, Vec<f64>) = eps.iter().zip(&diff).map(|(e, d)| (e.ln(), d.ln())).unzip();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    v.require(eps.len() == 5, format!("{} diffusivities (4 halvings)", eps.len()));
    v.require(slope >= 1.8, format!("slope {slope:.4}"));
    v
}

fn criterion_4(r: &VerifyReport) -> Verdict {
    let mut v = Verdict::new();
    own_checks(r, 4, &mut v);
    let gap = f(&suite(r, Suite::Commuting).details["relative_l2"]);
    v.require(gap <= 1e-8, format!("relative L2 {gap:.3e}"));
    v
}

fn criterion_5(r: &VerifyReport) -> Verdict {
    let mut v = Verdict::new();
    own_checks(r, 5, &mut v);
    let d = &suite(r, Suite::AppendixA).details;
    v.require(d["n_paths"] == 100_000, "1e5 paths".into());
    let reports = d["reports"].as_array().unwrap();
    let eps: Vec<f64> = reports.iter().map(|x| f(&x["eps"])).collect();
    v.require(eps == [0.1, 0.05, 0.025], format!("eps {eps:?}"));
    let ratios: Vec<(f64, f64)> =
        reports.iter().map(|x| (f(&x["value"]) / f(&x["eps"]).powi(2), f(&x["standard_error"]) / f(&x["eps"]).powi(2))).collect();
    let (c, c_se) = ratios[0];
    for &(q, se) in &ratios[1..] {
        v.require(q <= c + 3.0 * (c_se * c_se + se * se).sqrt(), format!("ratio {q:.5} vs bound {c:.5}"));
    }
    v
}

fn criterion_6(r: &VerifyReport) -> Verdict {
    let mut v = Verdict::new();
    own_checks(r, 6, &mut v);
    let d = &suite(r, Suite::Distribution).details;
    let projections = d["projections"].as_array().unwrap();
    v.require(projections.len() == 4, "4 projections".into());
    let pmin = projections.iter().map(|p| f(&p["two_sample"]["p_value"])).fold(1.0, f64::min);
    v.require(pmin >= 0.01, format!("min p {pmin:.4}"));
    let expected: Vec<f64> = d["expected_covariance"].as_array().unwrap().iter().map(f).collect();
    for sample in ["frozen", "averaged"] {
        for i in 0..3 {
            let c = f(&d[sample]["covariance"][i]);
            let se = f(&d[sample]["covariance_se"][i]);
            v.require((c - expected[i]).abs() <= 3.0 * se, format!("{sample} cov[{i}] {c:.5} vs {:.5}", expected[i]));
        }
    }
    v
}

fn criterion_7(r: &VerifyReport) -> Verdict {
    let mut v = Verdict::new();
    own_checks(r, 7, &mut v);
    let rep = &suite(r, Suite::SelfAdjoint).details["report"];
    let (lhs, rhs) = (f(&rep["lhs"]), f(&rep["rhs"]));
    let gap = (lhs - rhs).abs() / lhs.abs().max(rhs.abs());
    v.require(f(&rep["eps"]) == 1e-3 && gap <= 1e-4, format!("gap {gap:.3e} at eps {}", rep["eps"]));
    v
}

fn criterion_8(r: &VerifyReport) -> Verdict {
    let mut v = Verdict::new();
    own_checks(r, 8, &mut v);
    let rep = &suite(r, Suite::Localisation).details["report"];
    let eps: Vec<f64> = rep["eps"].as_array().unwrap().iter().map(f).collect();
    let leak: Vec<f64> = rep["leak"].as_array().unwrap().iter().map(f).collect();
    for k in 0..eps.len() - 1 {
        if eps[k] <= 2.5e-3 {
            let factor = (leak[k] / eps[k]) / (leak[k + 1] / eps[k + 1]);
            v.require(factor >= 2.0, format!("factor {factor:.3e} from eps {:e}", eps[k]));
        }
    }
    v
}

fn criterion_9(r: &VerifyReport) -> Verdict {
    let mut v = Verdict::new();
    own_checks(r, 9, &mut v);
    let mut solves = 0;
    // The conservation report repeats the other suites' solves.
    for s in r.suites.iter().filter(|s| s.suite != Suite::Conservation) {
        for d in &s.diagnostics {
            solves += 1;
            let range_ok = !d.unit_range_data || (d.min >= -1e-10 && d.max <= 1.0 + 1e-10);
            if d.mass_drift > 1e-12 || !range_ok {
                v.require(false, format!("{} solve drift {:e} range [{:e}, {:e}]", s.suite, d.mass_drift, d.min, d.max));
            }
        }
    }
    v.require(solves > 0, format!("{solves} solves audited"));
    v
}

fn criterion_10() -> Verdict {
    let mut v = Verdict::new();
    let tmp = tempfile::TempDir::new().unwrap();
    let mut outputs = Vec::new();
    for run in ["first", "second"] {
        let dir = tmp.path().join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_mixlab"))
            .args(["verify", "--suite", "all", "--seed", &SEED.to_string(), "--out", dir.to_str().unwrap()])
            .output()
            .expect("spawn mixlab");
        v.require(status.status.success(), format!("{run} run exit {:?}", status.status.code()));
        outputs.push(std::fs::read(dir.join("verify.json")).expect("verify.json written"));
    }
    v.require(!outputs[0].is_empty() && outputs[0] == outputs[1], format!("verify.json {} bytes, identical", outputs[0].len()));
    v
}

fn main() {
    let started = Instant::now();
    let report = run_many(&Suite::ALL, Scale::Full, SEED, |s| {
        eprintln!("  {} finished after {:.0} s", s.suite, started.elapsed().as_secs_f64());
    })
    .expect("suites run");
    let verdicts = vec![
        criterion_1(&report),
        criterion_2(&report),
        criterion_3(&report),
        criterion_4(&report),
        criterion_5(&report),
        criterion_6(&report),
        criterion_7(&report),
        criterion_8(&report),
        criterion_9(&report),
        criterion_10(),
    ];
    let mut all = true;
    for (k, v) in verdicts.iter().enumerate() {
        all &= v.passed;
        println!("criterion {:>2}: {}  {}", k + 1, if v.passed { "PASS" } else { "FAIL" }, v.notes.join("; "));
    }
    println!("acceptance: {} in {:.0} s", if all { "PASS" } else { "FAIL" }, started.elapsed().as_secs_f64());
    if !all {
        std::process::exit(1);
    }
}
