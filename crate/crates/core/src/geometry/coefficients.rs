use super::family::MetricFamily;
use crate::error::{Error, Result};
use crate::linalg::{Point, Spd2, Sym2};
use crate::quadrature::GaussLegendre;

/// Relative step for the central differences in the first-order coefficient.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

type ScheduleFn<'a> = Box<dyn Fn(f64) -> f64 + Send + Sync + 'a>;
type FieldFn<'a> = Box<dyn Fn(Point) -> Sym2 + Send + Sync + 'a>;

/// Tensor field of the form `Σ_k φ_k(t) T_k(x)`. Lets grid solvers tabulate
/// the spatial factors once and only re-evaluate scalar schedules per step.
pub struct SeparableTensor<'a> {
    terms: Vec<(ScheduleFn<'a>, FieldFn<'a>)>,
}

impl<'a> SeparableTensor<'a> {
    pub fn constant(t: Sym2) -> Self {
        SeparableTensor { terms: vec![(Box::new(|_| 1.0), Box::new(move |_| t))] }
    }

    pub fn empty() -> Self {
        SeparableTensor { terms: Vec::new() }
    }

    pub fn push(
        &mut self,
        schedule: impl Fn(f64) -> f64 + Send + Sync + 'a,
        field: impl Fn(Point) -> Sym2 + Send + Sync + 'a,
    ) {
        self.terms.push((Box::new(schedule), Box::new(field)));
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn schedule(&self, k: usize, t: f64) -> f64 {
        (self.terms[k].0)(t)
    }

    pub fn field(&self, k: usize, x: Point) -> Sym2 {
        (self.terms[k].1)(x)
    }

    pub fn eval(&self, t: f64, x: Point) -> Sym2 {
        self.terms.iter().fold(Sym2::ZERO, |acc, (s, f)| acc + f(x).scale(s(t)))
    }

    /// Multiplies every spatial factor by `s`.
    pub fn scaled(self, s: f64) -> SeparableTensor<'a> {
        SeparableTensor {
            terms: self
                .terms
                .into_iter()
                .map(|(phi, f)| (phi, Box::new(move |x| f(x).scale(s)) as FieldFn<'a>))
                .collect(),
        }
    }
}

/// Second- and first-order coefficients `(a, b)` of
/// `∂_t u = ε(Σ b_i ∂_i u + ½ Σ a_ij ∂_ij u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub a: Spd2,
    pub b: Point,
}

pub trait CoefficientField: Send + Sync {
    fn evaluate(&self, t: f64, x: Point) -> Result<Coefficients>;

    fn diffusion(&self, t: f64, x: Point) -> Result<Spd2> {
        Ok(self.evaluate(t, x)?.a)
    }

    /// Symmetric square root `σ` of `a`, so that `σσᵀ = a`.
    fn sigma(&self, t: f64, x: Point) -> Result<Spd2> {
        Ok(self.diffusion(t, x)?.sqrt())
    }

    fn is_time_independent(&self) -> bool;

    /// `a(t, x)` in separable form, when available.
    fn separable_diffusion(&self) -> Option<SeparableTensor<'_>> {
        None
    }

    /// Radius outside which `a = 2I` and `b = 0`.
    fn euclidean_outside_radius(&self) -> f64 {
        f64::INFINITY
    }
}

fn check_density(rho: f64, x: Point) -> Result<f64> {
    if rho > 0.0 && rho.is_finite() {
        Ok(rho)
    } else {
        Err(Error::NonPositiveDensity { value: rho, x: x[0], y: x[1] })
    }
}

/// Central-difference first-order coefficient of `ρ⁻¹ ∂_i(ρ G_ij)`.
fn flux_drift(
    inv_metric: impl Fn(Point) -> Result<Spd2>,
    density: impl Fn(Point) -> f64,
    x: Point,
    h: f64,
) -> Result<Point> {
    let weighted = |p: Point| -> Result<Sym2> {
        let rho = check_density(density(p), p)?;
        Ok(inv_metric(p)?.sym().scale(rho))
    };
    let xp = weighted([x[0] + h, x[1]])?;
    let xm = weighted([x[0] - h, x[1]])?;
    let yp = weighted([x[0], x[1] + h])?;
    let ym = weighted([x[0], x[1] - h])?;
    let rho = check_density(density(x), x)?;
    let inv2h = 1.0 / (2.0 * h);
    let b1 = ((xp.a11 - xm.a11) + (yp.a12 - ym.a12)) * inv2h / rho;
    let b2 = ((xp.a12 - xm.a12) + (yp.a22 - ym.a22)) * inv2h / rho;
    Ok([b1, b2])
}

fn fd_step(family: &dyn MetricFamily) -> f64 {
    let r = family.euclidean_outside_radius();
    let scale = if r.is_finite() && r > 0.0 { r } else { 1.0 };
    DEFAULT_FD_STEP * scale
}

/// `a = 2 g_t⁻¹`, `b_j = ρ⁻¹ Σ_i ∂_i(ρ (g_t⁻¹)_ij)` for a metric family.
pub struct FamilyCoefficients<'a> {
    family: &'a dyn MetricFamily,
    h: f64,
}

impl<'a> FamilyCoefficients<'a> {
    pub fn new(family: &'a dyn MetricFamily) -> Self {
        FamilyCoefficients { h: fd_step(family), family }
    }

    pub fn with_fd_step(family: &'a dyn MetricFamily, h: f64) -> Self {
        FamilyCoefficients { family, h }
    }

    pub fn family(&self) -> &'a dyn MetricFamily {
        self.family
    }
}

impl CoefficientField for FamilyCoefficients<'_> {
    fn evaluate(&self, t: f64, x: Point) -> Result<Coefficients> {
        let r = self.family.euclidean_outside_radius();
        if x[0].hypot(x[1]) > r + 2.0 * self.h {
            return Ok(Coefficients { a: Spd2::diag(2.0, 2.0)?, b: [0.0, 0.0] });
        }
        let a = self.family.inverse_metric(t, x)?.scale(2.0)?;
        let b = flux_drift(|p| self.family.inverse_metric(t, p), |p| self.family.density(p), x, self.h)?;
        Ok(Coefficients { a, b })
    }

    fn diffusion(&self, t: f64, x: Point) -> Result<Spd2> {
        self.family.inverse_metric(t, x)?.scale(2.0)
    }

    fn is_time_independent(&self) -> bool {
        self.family.is_time_independent()
    }

    fn separable_diffusion(&self) -> Option<SeparableTensor<'_>> {
        self.family.separable().map(|s| s.scaled(2.0))
    }

    fn euclidean_outside_radius(&self) -> f64 {
        self.family.euclidean_outside_radius()
    }
}

/// Time averages `ā = ∫₀¹ a dt`, `b̄ = ∫₀¹ b dt`; equal to `2ḡ⁻¹` and the flux
/// drift of `ḡ⁻¹` by linearity.
pub struct AveragedCoefficients<'a> {
    family: &'a dyn MetricFamily,
    rule: GaussLegendre,
    h: f64,
}

impl<'a> AveragedCoefficients<'a> {
    pub fn new(family: &'a dyn MetricFamily) -> Self {
        Self::with_nodes(family, super::DEFAULT_TIME_NODES)
    }

    pub fn with_nodes(family: &'a dyn MetricFamily, nodes: usize) -> Self {
        AveragedCoefficients { family, rule: GaussLegendre::new(nodes.max(2)), h: fd_step(family) }
    }

    fn averaged_g(&self, x: Point) -> Result<Spd2> {
        super::averaged_inverse_metric(self.family, x, &self.rule)
    }
}

impl CoefficientField for AveragedCoefficients<'_> {
    fn evaluate(&self, _t: f64, x: Point) -> Result<Coefficients> {
        let r = self.family.euclidean_outside_radius();
        if x[0].hypot(x[1]) > r + 2.0 * self.h {
            return Ok(Coefficients { a: Spd2::diag(2.0, 2.0)?, b: [0.0, 0.0] });
        }
        let a = self.averaged_g(x)?.scale(2.0)?;
        let b = flux_drift(|p| self.averaged_g(p), |p| self.family.density(p), x, self.h)?;
        Ok(Coefficients { a, b })
    }

    fn diffusion(&self, _t: f64, x: Point) -> Result<Spd2> {
        self.averaged_g(x)?.scale(2.0)
    }

    fn is_time_independent(&self) -> bool {
        true
    }

    fn separable_diffusion(&self) -> Option<SeparableTensor<'_>> {
        let sep = self.family.separable()?;
        // Average each schedule; the spatial factors are unchanged.
        let means: Vec<f64> =
            (0..sep.len()).map(|k| self.rule.integrate(0.0, 1.0, |t| sep.schedule(k, t))).collect();
        let mut out = SeparableTensor::empty();
        let sep = std::sync::Arc::new(sep);
        for (k, m) in means.into_iter().enumerate() {
            let sep = sep.clone();
            out.push(move |_| m, move |x| sep.field(k, x).scale(2.0));
        }
        Some(out)
    }

    fn euclidean_outside_radius(&self) -> f64 {
        self.family.euclidean_outside_radius()
    }
}
