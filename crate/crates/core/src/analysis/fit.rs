use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Minimum number of diffusivities in a fit.
pub const MIN_FIT_POINTS: usize = 4;
/// Confidence intervals are this many standard errors wide on each side.
pub const CI_WIDTH: f64 = 3.0;

/// One heat-content measurement `T(ε) ± σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub eps: f64,
    pub value: f64,
    /// Standard error; zero for deterministic (PDE) values.
    pub sigma: f64,
}

impl Measurement {
    pub fn new(eps: f64, value: f64, sigma: f64) -> Self {
        Measurement { eps, value, sigma }
    }
}

/// Weighted least-squares fit of `T = c₁√ε + c₂ε` against the prediction
/// `c₁ = Ā/√π`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticsReport {
    /// Sorted strictly decreasing.
    pub eps: Vec<f64>,
    pub values: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub c1: f64,
    pub c2: f64,
    /// `[[var c₁, cov], [cov, var c₂]]`.
    pub covariance: [[f64; 2]; 2],
    pub c1_ci: [f64; 2],
    /// Weighted by `1/σ²` (true) or ordinary with residual variance (false).
    pub weighted: bool,
    /// `T − ĉ₁√ε − ĉ₂ε` per point.
    pub residuals: Vec<f64>,
    pub chi_square: f64,
    pub mixing_area: f64,
    /// `Ā/√π`, the predicted `c₁`.
    pub predicted_c1: f64,
    /// `|c₁√π − Ā| / Ā`.
    pub relative_gap: f64,
}

/// Row of the plotting table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub epsilon: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub sigma_t: f64,
    /// `√(ε/π)·Ā`.
    pub prediction: f64,
    /// `(T − prediction)/prediction`.
    pub gap: f64,
}

impl AsymptoticsReport {
    pub fn c1_standard_error(&self) -> f64 {
        self.covariance[0][0].sqrt()
    }

    /// Whether the predicted coefficient lies inside the confidence interval.
    pub fn prediction_in_ci(&self) -> bool {
        self.c1_ci[0] <= self.predicted_c1 && self.predicted_c1 <= self.c1_ci[1]
    }

    pub fn rows(&self) -> Vec<FitRow> {
        self.eps
            .iter()
            .zip(&self.values)
            .zip(&self.sigmas)
            .map(|((&e, &t), &s)| {
                let p = (e / PI).sqrt() * self.mixing_area;
                FitRow { epsilon: e, t, sigma_t: s, prediction: p, gap: if p == 0.0 { f64::NAN } else { (t - p) / p } }
            })
            .collect()
    }
}

/// Fits `T = c₁√ε + c₂ε`. With positive uncertainties the fit is weighted by
/// `1/σ²` and the covariance is `(XᵀWX)⁻¹`; when every `σ` is zero it is an
/// ordinary fit whose covariance uses the residual variance.
pub fn fit_asymptotics(measurements: &[Measurement], mixing_area: f64) -> Result<AsymptoticsReport> {
    if measurements.len() < MIN_FIT_POINTS {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_FIT_POINTS} measurements, got {}",
            measurements.len()
        )));
    }
    for m in measurements {
        if !(m.eps > 0.0 && m.eps.is_finite() && m.value.is_finite() && m.sigma >= 0.0 && m.sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!("bad measurement {m:?}")));
        }
    }
    if !(mixing_area.is_finite() && mixing_area > 0.0) {
        return Err(Error::InvalidArgument(format!("mixing area must be positive, got {mixing_area}")));
    }
    let zero = measurements.iter().filter(|m| m.sigma == 0.0).count();
    let weighted = match zero {
        0 => true,
        z if z == measurements.len() => false,
        _ => return Err(Error::InvalidArgument("uncertainties must be all positive or all zero".into())),
    };

    let mut ms = measurements.to_vec();
    ms.sort_by(|a, b| b.eps.total_cmp(&a.eps));
    let w = |m: &Measurement| if weighted { 1.0 / (m.sigma * m.sigma) } else { 1.0 };

    // Normal equations in the basis (√ε, ε).
    let (mut a11, mut a12, mut a22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for m in &ms {
        let (x1, x2, wt) = (m.eps.sqrt(), m.eps, w(m));
        a11 += wt * x1 * x1;
        a12 += wt * x1 * x2;
        a22 += wt * x2 * x2;
        r1 += wt * x1 * m.value;
        r2 += wt * x2 * m.value;
    }
    let det = a11 * a22 - a12 * a12;
    if !(det > 1e-10 * a11 * a22) {
        return Err(Error::SingularFit);
    }
    let (lo, hi) = (ms.last().unwrap().eps, ms[0].eps);
    if hi < 10.0 * lo * (1.0 - 1e-12) {
        return Err(Error::InvalidArgument(format!("diffusivities span less than a decade ({lo:e} to {hi:e})")));
    }
    if ms.windows(2).any(|p| p[0].eps == p[1].eps) {
        return Err(Error::InvalidArgument("repeated diffusivity".into()));
    }

    let inv = [[a22 / det, -a12 / det], [-a12 / det, a11 / det]];
    let c1 = inv[0][0] * r1 + inv[0][1] * r2;
    let c2 = inv[1][0] * r1 + inv[1][1] * r2;
    let residuals: Vec<f64> = ms.iter().map(|m| m.value - c1 * m.eps.sqrt() - c2 * m.eps).collect();
    let chi_square: f64 = ms.iter().zip(&residuals).map(|(m, r)| w(m) * r * r).sum();
    let scale = if weighted { 1.0 } else { chi_square / (ms.len() - 2) as f64 };
    let covariance = [[inv[0][0] * scale, inv[0][1] * scale], [inv[1][0] * scale, inv[1][1] * scale]];
    let half = CI_WIDTH * covariance[0][0].sqrt();
    let predicted_c1 = mixing_area / PI.sqrt();

    Ok(AsymptoticsReport {
        eps: ms.iter().map(|m| m.eps).collect(),
        values: ms.iter().map(|m| m.value).collect(),
        sigmas: ms.iter().map(|m| m.sigma).collect(),
        c1,
        c2,
        covariance,
        c1_ci: [c1 - half, c1 + half],
        weighted,
        residuals,
        chi_square,
        mixing_area,
        predicted_c1,
        relative_gap: (c1 * PI.sqrt() - mixing_area).abs() / mixing_area,
    })
}

/// `ε₀·2^{−k}` for `k = 0..n`.
pub fn geometric_eps_grid(eps0: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| eps0 * 0.5f64.powi(k as i32)).collect()
}

/// Default grid: five halvings from `1e-2`.
pub fn default_eps_grid() -> Vec<f64> {
    geometric_eps_grid(1e-2, 5)
}
