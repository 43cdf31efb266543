use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::CoefficientField;
use crate::par;
use crate::quadrature::GaussLegendre;

use super::grid::GridField;
use super::operator::Operator;

/// Default safety factor in `Δt ≤ c·min(Δx, Δy)²/(ε·max λ(a))`.
pub const DEFAULT_CFL: f64 = 0.4;

/// How the coefficients are sampled within a time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeSampling {
    /// Coefficients frozen at the step midpoint.
    Midpoint,
    /// Coefficients averaged over the step with Gauss–Legendre nodes; exact for
    /// polynomial schedules of degree below `2·nodes`.
    StepAverage { nodes: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    pub time_sampling: TimeSampling,
    /// Evaluate coefficients at `1 − t` instead of `t`.
    pub reversed: bool,
    /// Fixed step; refused when it exceeds the stability bound.
    pub dt: Option<f64>,
    /// Upper bound on the automatically chosen step.
    pub max_dt: Option<f64>,
    pub cfl: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions { time_sampling: TimeSampling::Midpoint, reversed: false, dt: None, max_dt: None, cfl: DEFAULT_CFL }
    }
}

/// Per-solve bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub eps: f64,
    pub t_final: f64,
    pub steps: usize,
    pub dt: f64,
    pub mass_initial: f64,
    pub mass_final: f64,
    /// `|m₁ − m₀| / |m₀|` (absolute when `m₀ = 0`).
    pub mass_drift: f64,
    pub min: f64,
    pub max: f64,
    /// Whether the initial data took values in `[0, 1]`.
    pub unit_range_data: bool,
}

impl SolveDiagnostics {
    /// Mass drift at most `1e-12` and, for data in `[0, 1]`, the solution
    /// inside `[−1e-10, 1 + 1e-10]`.
    pub fn within_tolerances(&self) -> bool {
        let range_ok = !self.unit_range_data || (self.min >= -1e-10 && self.max <= 1.0 + 1e-10);
        self.mass_drift <= 1e-12 && range_ok
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub field: GridField,
    pub diagnostics: SolveDiagnostics,
}

/// Picks the step count for a solve.
fn step_count(
    op: &Operator<'_>,
    eps: f64,
    t_final: f64,
    options: &EvolveOptions,
    h_min: f64,
) -> Result<(usize, f64)> {
    if t_final == 0.0 {
        return Ok((0, 0.0));
    }
    let limit = if eps == 0.0 {
        f64::INFINITY
    } else {
        let times: Vec<f64> = (0..=32).map(|k| k as f64 / 32.0).collect();
        let lmax = op.max_eigenvalue(&times)?;
        options.cfl * h_min * h_min / (eps * lmax)
    };
    if let Some(dt) = options.dt {
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        if dt > limit {
            return Err(Error::CflViolation { dt, limit });
        }
        let n = (t_final / dt).round().max(1.0) as usize;
        return Ok((n, t_final / n as f64));
    }
    let mut dt = limit.min(t_final);
    if let Some(m) = options.max_dt {
        dt = dt.min(m);
    }
    let n = (t_final / dt).ceil().max(1.0) as usize;
    Ok((n, t_final / n as f64))
}

/// Times at which the stencil pattern is sampled before a time-dependent
/// solve, so the sparse layout is rarely rebuilt mid-run.
const PRIME_TIMES: usize = 64;

/// Explicit Heun stepping of `∂_t u = ε ρ⁻¹ div(ρ g_t⁻¹ ∇u)` from `0` to
/// `t_final`. The first-order coefficient `b` of `coeffs` is implied by the
/// flux form and not used directly.
pub fn evolve(
    u0: &GridField,
    coeffs: &dyn CoefficientField,
    eps: f64,
    t_final: f64,
    options: &EvolveOptions,
) -> Result<SolveReport> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("diffusivity must be non-negative, got {eps}")));
    }
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidArgument(format!("final time must be non-negative, got {t_final}")));
    }
    let grid = *u0.grid();
    let density = u0.density().clone();
    let mut op = Operator::new(grid, &density, coeffs);
    let (steps, dt) = step_count(&op, eps, t_final, options, grid.min_spacing())?;

    let (lo0, hi0) = par::min_max(u0.values());
    let mass_initial = u0.mass();
    let mut u = u0.clone();
    let (mut lo, mut hi) = (lo0, hi0);

    if eps > 0.0 && steps > 0 {
        let rule = match options.time_sampling {
            TimeSampling::Midpoint => None,
            TimeSampling::StepAverage { nodes } => Some(GaussLegendre::new(nodes.max(1))),
        };
        let tau = |t: f64| if options.reversed { 1.0 - t } else { t };
        let samples_for = |n: usize| -> Vec<(f64, f64)> {
            let (a, b) = (n as f64 * dt, (n + 1) as f64 * dt);
            match &rule {
                None => vec![(tau(0.5 * (a + b)), 1.0)],
                Some(r) => r.on(a, b).map(|(t, w)| (tau(t), w / dt)).collect(),
            }
        };
        let frozen = coeffs.is_time_independent();
        if !frozen && steps > PRIME_TIMES {
            let times: Vec<f64> = (0..=PRIME_TIMES).map(|k| k as f64 / PRIME_TIMES as f64).collect();
            op.prime(&times)?;
        }
        let c = eps * dt;
        let len = grid.len();
        let mut stage = vec![0.0; len];
        let mut next = vec![0.0; len];
        for n in 0..steps {
            if n == 0 || !frozen {
                op.assemble(&samples_for(n))?;
                if c * op.max_rate > 1.0 + 1e-12 {
                    return Err(Error::CflViolation { dt, limit: 1.0 / (eps * op.max_rate) });
                }
            }
            let cur = u.values();
            op.apply(cur, c, Some(cur), &mut stage);
            op.apply(&stage, c, Some(&stage), &mut next);
            let (cur_ref, next_ref) = (cur, &mut next);
            par::for_each_row(next_ref, grid.nx, |j, row| {
                let base = j * grid.nx;
                for (i, v) in row.iter_mut().enumerate() {
                    *v = 0.5 * (cur_ref[base + i] + *v);
                }
            });
            std::mem::swap(u.values_mut(), &mut next);
            let (a, b) = par::min_max(u.values());
            if a.is_nan() || !a.is_finite() || !b.is_finite() {
                return Err(Error::NonFinite { step: n + 1 });
            }
            lo = lo.min(a);
            hi = hi.max(b);
        }
    }

    let mass_final = u.mass();
    let mass_drift = if mass_initial == 0.0 {
        mass_final.abs()
    } else {
        ((mass_final - mass_initial) / mass_initial).abs()
    };
    Ok(SolveReport {
        field: u,
        diagnostics: SolveDiagnostics {
            eps,
            t_final,
            steps,
            dt,
            mass_initial,
            mass_final,
            mass_drift,
            min: lo,
            max: hi,
            unit_range_data: lo0 >= 0.0 && hi0 <= 1.0,
        },
    })
}
