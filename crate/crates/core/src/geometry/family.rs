use serde::{Deserialize, Serialize};

use super::coefficients::SeparableTensor;
use super::cutoff::{Cutoff, Density};
use crate::error::{Error, Result};
use crate::linalg::{axpy, norm, perp, Mat2, Point, Spd2, Sym2};

/// Time-dependent field of Riemannian metrics `g_t(x)` with a mass density.
///
/// Implementations report `g_t⁻¹` directly. Outside
/// [`MetricFamily::euclidean_outside_radius`] the metric must be the identity
/// and the density one, for every `t ∈ [0, 1]`.
pub trait MetricFamily: Send + Sync {
    /// `g_t(x)⁻¹`.
    fn inverse_metric(&self, t: f64, x: Point) -> Result<Spd2>;

    fn metric(&self, t: f64, x: Point) -> Result<Spd2> {
        Ok(self.inverse_metric(t, x)?.inverse())
    }

    fn density(&self, x: Point) -> f64;

    /// Upper bound for the density, used by rejection samplers.
    fn density_bound(&self) -> f64;

    fn euclidean_outside_radius(&self) -> f64;

    fn is_time_independent(&self) -> bool {
        false
    }

    /// `g_t⁻¹(x) = Σ_k φ_k(t) T_k(x)` when the family has that structure.
    fn separable(&self) -> Option<SeparableTensor<'_>> {
        None
    }

    fn describe(&self) -> String;
}

impl<F: MetricFamily + ?Sized> MetricFamily for &F {
    fn inverse_metric(&self, t: f64, x: Point) -> Result<Spd2> {
        (**self).inverse_metric(t, x)
    }
    fn metric(&self, t: f64, x: Point) -> Result<Spd2> {
        (**self).metric(t, x)
    }
    fn density(&self, x: Point) -> f64 {
        (**self).density(x)
    }
    fn density_bound(&self) -> f64 {
        (**self).density_bound()
    }
    fn euclidean_outside_radius(&self) -> f64 {
        (**self).euclidean_outside_radius()
    }
    fn is_time_independent(&self) -> bool {
        (**self).is_time_independent()
    }
    fn separable(&self) -> Option<SeparableTensor<'_>> {
        (**self).separable()
    }
    fn describe(&self) -> String {
        (**self).describe()
    }
}

impl<F: MetricFamily + ?Sized> MetricFamily for Box<F> {
    fn inverse_metric(&self, t: f64, x: Point) -> Result<Spd2> {
        (**self).inverse_metric(t, x)
    }
    fn metric(&self, t: f64, x: Point) -> Result<Spd2> {
        (**self).metric(t, x)
    }
    fn density(&self, x: Point) -> f64 {
        (**self).density(x)
    }
    fn density_bound(&self) -> f64 {
        (**self).density_bound()
    }
    fn euclidean_outside_radius(&self) -> f64 {
        (**self).euclidean_outside_radius()
    }
    fn is_time_independent(&self) -> bool {
        (**self).is_time_independent()
    }
    fn separable(&self) -> Option<SeparableTensor<'_>> {
        (**self).separable()
    }
    fn describe(&self) -> String {
        (**self).describe()
    }
}

/// The flat metric, possibly with a non-uniform density.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Euclidean {
    pub density: Density,
}

impl MetricFamily for Euclidean {
    fn inverse_metric(&self, _t: f64, _x: Point) -> Result<Spd2> {
        Ok(Spd2::IDENTITY)
    }
    fn density(&self, x: Point) -> f64 {
        self.density.value(x)
    }
    fn density_bound(&self) -> f64 {
        self.density.bound()
    }
    fn euclidean_outside_radius(&self) -> f64 {
        self.density.support_radius()
    }
    fn is_time_independent(&self) -> bool {
        true
    }
    fn separable(&self) -> Option<SeparableTensor<'_>> {
        Some(SeparableTensor::constant(Sym2::IDENTITY))
    }
    fn describe(&self) -> String {
        "euclidean".into()
    }
}

/// Scalar time profile used by [`ScheduledFamily`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// `tⁿ`
    Power(i32),
    /// `cos(2π f t)`
    Cos(f64),
    /// `sin(2π f t)`
    Sin(f64),
}

impl Schedule {
    pub fn eval(&self, t: f64) -> f64 {
        use std::f64::consts::TAU;
        match *self {
            Schedule::Power(0) => 1.0,
            Schedule::Power(n) => t.powi(n),
            Schedule::Cos(f) => (TAU * f * t).cos(),
            Schedule::Sin(f) => (TAU * f * t).sin(),
        }
    }
}

/// `g_t⁻¹(x) = I + χ(|x|)·Σ_k φ_k(t) C_k` with constant symmetric `C_k` and
/// an optional smooth radial cutoff `χ`. Without a cutoff the family is
/// spatially constant (and then not Euclidean outside any ball).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduledFamily {
    pub name: String,
    pub terms: Vec<(Schedule, Sym2)>,
    pub cutoff: Option<Cutoff>,
    pub density: Density,
}

impl ScheduledFamily {
    /// `g_t = diag(1/(1+t), 1)`, i.e. `g_t⁻¹ = diag(1 + t, 1)`.
    pub fn diag_time(cutoff: Option<Cutoff>) -> Self {
        ScheduledFamily {
            name: "diag_time".into(),
            terms: vec![(Schedule::Power(1), Sym2::diag(1.0, 0.0))],
            cutoff,
            density: Density::Uniform,
        }
    }

    /// Pullback of the Euclidean metric under the steady shear
    /// `x ↦ (x₁ + γ t x₂, x₂)`: `g_t = [[1, γt], [γt, 1 + γ²t²]]`,
    /// `g_t⁻¹ = [[1 + γ²t², −γt], [−γt, 1]]`.
    pub fn shear_pullback(rate: f64, cutoff: Option<Cutoff>) -> Self {
        ScheduledFamily {
            name: "shear_pullback".into(),
            terms: vec![
                (Schedule::Power(1), Sym2::new(0.0, -rate, 0.0)),
                (Schedule::Power(2), Sym2::new(rate * rate, 0.0, 0.0)),
            ],
            cutoff,
            density: Density::Uniform,
        }
    }

    pub fn with_density(mut self, density: Density) -> Self {
        self.density = density;
        self
    }

    fn chi(&self, x: Point) -> f64 {
        self.cutoff.map_or(1.0, |c| c.value(norm(x)))
    }

    fn core(&self, t: f64) -> Sym2 {
        self.terms.iter().fold(Sym2::ZERO, |acc, (s, c)| acc + c.scale(s.eval(t)))
    }
}

impl MetricFamily for ScheduledFamily {
    fn inverse_metric(&self, t: f64, x: Point) -> Result<Spd2> {
        let chi = self.chi(x);
        if chi == 0.0 {
            return Ok(Spd2::IDENTITY);
        }
        Spd2::try_from(Sym2::IDENTITY + self.core(t).scale(chi))
    }
    fn density(&self, x: Point) -> f64 {
        self.density.value(x)
    }
    fn density_bound(&self) -> f64 {
        self.density.bound()
    }
    fn euclidean_outside_radius(&self) -> f64 {
        let r = self.cutoff.map_or(f64::INFINITY, |c| c.outer);
        r.max(self.density.support_radius())
    }
    fn is_time_independent(&self) -> bool {
        self.terms.is_empty()
    }
    fn separable(&self) -> Option<SeparableTensor<'_>> {
        let mut sep = SeparableTensor::constant(Sym2::IDENTITY);
        for &(schedule, c) in &self.terms {
            sep.push(move |t| schedule.eval(t), move |x| c.scale(self.chi(x)));
        }
        Some(sep)
    }
    fn describe(&self) -> String {
        match self.cutoff {
            Some(c) => format!("{} (cutoff {}..{})", self.name, c.inner, c.outer),
            None => format!("{} (spatially constant)", self.name),
        }
    }
}

/// Velocity field driving a flow map `Φ₀ᵗ`.
pub trait VelocityField: Send + Sync {
    fn velocity(&self, t: f64, x: Point) -> Point;

    /// Spatial Jacobian `DV(t, x)`; central differences unless overridden.
    fn jacobian(&self, t: f64, x: Point) -> Mat2 {
        let h = 1e-6 * (1.0 + norm(x));
        let vxp = self.velocity(t, [x[0] + h, x[1]]);
        let vxm = self.velocity(t, [x[0] - h, x[1]]);
        let vyp = self.velocity(t, [x[0], x[1] + h]);
        let vym = self.velocity(t, [x[0], x[1] - h]);
        Mat2::new(
            (vxp[0] - vxm[0]) / (2.0 * h),
            (vyp[0] - vym[0]) / (2.0 * h),
            (vxp[1] - vxm[1]) / (2.0 * h),
            (vyp[1] - vym[1]) / (2.0 * h),
        )
    }

    /// Radius outside which the field vanishes (infinite when not compactly
    /// supported).
    fn support_radius(&self) -> f64;

    fn describe(&self) -> String;
}

/// `V(x) = (γ x₂, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyShear {
    pub rate: f64,
}

impl VelocityField for SteadyShear {
    fn velocity(&self, _t: f64, x: Point) -> Point {
        [self.rate * x[1], 0.0]
    }
    fn jacobian(&self, _t: f64, _x: Point) -> Mat2 {
        Mat2::new(0.0, self.rate, 0.0, 0.0)
    }
    fn support_radius(&self) -> f64 {
        f64::INFINITY
    }
    fn describe(&self) -> String {
        format!("steady shear (rate {})", self.rate)
    }
}

/// Differentially rotating vortex `V(t, x) = s(t)·Ω₀·χ(|x|)·(−x₂, x₁)` with
/// `s(t) = 1 + m·cos(2πt)`. Divergence-free and compactly supported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vortex {
    pub amplitude: f64,
    pub modulation: f64,
    pub cutoff: Cutoff,
}

impl Vortex {
    pub fn new(amplitude: f64, modulation: f64, cutoff: Cutoff) -> Self {
        Vortex { amplitude, modulation, cutoff }
    }

    /// `s(t)`.
    pub fn rate(&self, t: f64) -> f64 {
        1.0 + self.modulation * (std::f64::consts::TAU * t).cos()
    }

    /// `∫₀ᵗ s`.
    pub fn cumulative_rate(&self, t: f64) -> f64 {
        use std::f64::consts::TAU;
        t + self.modulation * (TAU * t).sin() / TAU
    }
}

impl VelocityField for Vortex {
    fn velocity(&self, t: f64, x: Point) -> Point {
        let w = self.rate(t) * self.amplitude * self.cutoff.value(norm(x));
        let v = perp(x);
        [w * v[0], w * v[1]]
    }
    fn jacobian(&self, t: f64, x: Point) -> Mat2 {
        let r = norm(x);
        let s = self.rate(t) * self.amplitude;
        let j = Mat2::new(0.0, -1.0, 1.0, 0.0).scale(s * self.cutoff.value(r));
        if r == 0.0 {
            return j;
        }
        let k = s * self.cutoff.derivative(r) / r;
        let v = perp(x);
        j.add(&Mat2::new(v[0] * x[0], v[0] * x[1], v[1] * x[0], v[1] * x[1]).scale(k))
    }
    fn support_radius(&self) -> f64 {
        self.cutoff.outer
    }
    fn describe(&self) -> String {
        format!(
            "vortex (amplitude {}, modulation {}, cutoff {}..{})",
            self.amplitude, self.modulation, self.cutoff.inner, self.cutoff.outer
        )
    }
}

/// Closed-form pullback metric of [`Vortex`]. The flow is the rotation
/// `Φ₀ᵗ(x) = R(θ) x` with `θ = S(t) Ω₀ χ(|x|)`, so
/// `DΦ₀ᵗ = R(θ)(I + c·(Jx) xᵀ)` with `c = S(t) Ω₀ χ'(r)/r` and the rotation
/// drops out of `g_t = DΦᵀ DΦ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotatingGyre {
    pub vortex: Vortex,
    pub density: Density,
}

impl RotatingGyre {
    pub fn new(amplitude: f64, modulation: f64, cutoff: Cutoff) -> Self {
        RotatingGyre { vortex: Vortex::new(amplitude, modulation, cutoff), density: Density::Uniform }
    }

    fn radial_strain(&self, x: Point) -> f64 {
        let r = norm(x);
        if r == 0.0 {
            return 0.0;
        }
        self.vortex.amplitude * self.vortex.cutoff.derivative(r) / r
    }

    fn strain_terms(&self, x: Point) -> (Sym2, Sym2) {
        let k = self.radial_strain(x);
        let v = perp(x);
        let r2 = x[0] * x[0] + x[1] * x[1];
        (Sym2::sym_outer(v, x).scale(-k), Sym2::outer(v).scale(k * k * r2))
    }

    /// Exact flow-map Jacobian `DΦ₀ᵗ(x)`.
    pub fn flow_jacobian(&self, t: f64, x: Point) -> Mat2 {
        let big_s = self.vortex.cumulative_rate(t);
        let theta = big_s * self.vortex.amplitude * self.vortex.cutoff.value(norm(x));
        let (s, c) = theta.sin_cos();
        let rot = Mat2::new(c, -s, s, c);
        let k = big_s * self.radial_strain(x);
        let v = perp(x);
        let m = Mat2::IDENTITY.add(&Mat2::new(v[0] * x[0], v[0] * x[1], v[1] * x[0], v[1] * x[1]).scale(k));
        rot.mul(&m)
    }
}

impl MetricFamily for RotatingGyre {
    fn inverse_metric(&self, t: f64, x: Point) -> Result<Spd2> {
        let s = self.vortex.cumulative_rate(t);
        let (t1, t2) = self.strain_terms(x);
        Spd2::try_from(Sym2::IDENTITY + t1.scale(s) + t2.scale(s * s))
    }
    fn density(&self, x: Point) -> f64 {
        self.density.value(x)
    }
    fn density_bound(&self) -> f64 {
        self.density.bound()
    }
    fn euclidean_outside_radius(&self) -> f64 {
        self.vortex.cutoff.outer.max(self.density.support_radius())
    }
    fn separable(&self) -> Option<SeparableTensor<'_>> {
        let mut sep = SeparableTensor::constant(Sym2::IDENTITY);
        let v = self.vortex;
        sep.push(move |t| v.cumulative_rate(t), move |x| self.strain_terms(x).0);
        sep.push(move |t| v.cumulative_rate(t).powi(2), move |x| self.strain_terms(x).1);
        Some(sep)
    }
    fn describe(&self) -> String {
        format!("rotating_gyre: {}", self.vortex.describe())
    }
}

/// Default RK4 steps per unit time for flow-map integration.
pub const DEFAULT_FLOW_STEPS: usize = 256;

/// Pullback family `g_t = DΦ₀ᵗᵀ DΦ₀ᵗ` of a velocity field, integrating the flow
/// and its variational equation `d/dt DΦ = DV(Φ)·DΦ` with fixed-step RK4.
#[derive(Debug, Clone)]
pub struct FlowPullback<V> {
    pub velocity: V,
    pub density: Density,
    pub steps_per_unit_time: usize,
}

/// Builds the pullback family of a volume-preserving velocity field. The base
/// density is carried over unchanged.
pub fn pullback_family<V: VelocityField>(velocity: V, density: Density) -> FlowPullback<V> {
    FlowPullback { velocity, density, steps_per_unit_time: DEFAULT_FLOW_STEPS }
}

impl<V: VelocityField> FlowPullback<V> {
    /// `(Φ₀ᵗ(x), DΦ₀ᵗ(x))`.
    pub fn flow(&self, t: f64, x: Point) -> Result<(Point, Mat2)> {
        let n = ((self.steps_per_unit_time as f64 * t.abs()).ceil() as usize).max(1);
        let h = t / n as f64;
        let mut y = x;
        let mut jac = Mat2::IDENTITY;
        let rhs = |s: f64, y: Point, j: &Mat2| -> (Point, Mat2) {
            (self.velocity.velocity(s, y), self.velocity.jacobian(s, y).mul(j))
        };
        for k in 0..n {
            let s = k as f64 * h;
            let (k1y, k1j) = rhs(s, y, &jac);
            let (k2y, k2j) = rhs(s + 0.5 * h, axpy(0.5 * h, k1y, y), &jac.add(&k1j.scale(0.5 * h)));
            let (k3y, k3j) = rhs(s + 0.5 * h, axpy(0.5 * h, k2y, y), &jac.add(&k2j.scale(0.5 * h)));
            let (k4y, k4j) = rhs(s + h, axpy(h, k3y, y), &jac.add(&k3j.scale(h)));
            for d in 0..2 {
                y[d] += h / 6.0 * (k1y[d] + 2.0 * k2y[d] + 2.0 * k3y[d] + k4y[d]);
            }
            let incr = k1j.add(&k2j.scale(2.0)).add(&k3j.scale(2.0)).add(&k4j).scale(h / 6.0);
            jac = jac.add(&incr);
            if !(y[0].is_finite() && y[1].is_finite() && jac.is_finite()) {
                return Err(Error::FlowIntegration { t: s + h });
            }
        }
        Ok((y, jac))
    }
}

impl<V: VelocityField> MetricFamily for FlowPullback<V> {
    fn inverse_metric(&self, t: f64, x: Point) -> Result<Spd2> {
        let (_, jac) = self.flow(t, x)?;
        let inv = jac.inverse().ok_or(Error::FlowIntegration { t })?;
        Spd2::try_from(inv.outer_gram())
    }
    fn metric(&self, t: f64, x: Point) -> Result<Spd2> {
        let (_, jac) = self.flow(t, x)?;
        Spd2::try_from(jac.gram())
    }
    fn density(&self, x: Point) -> f64 {
        self.density.value(x)
    }
    fn density_bound(&self) -> f64 {
        self.density.bound()
    }
    fn euclidean_outside_radius(&self) -> f64 {
        self.velocity.support_radius().max(self.density.support_radius())
    }
    fn describe(&self) -> String {
        format!("pullback of {}", self.velocity.describe())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steady_shear_pullback_matches_linear_flow() {
        let fam = pullback_family(SteadyShear { rate: 1.0 }, Density::Uniform);
        for &t in &[0.0, 0.3, 0.77, 1.0] {
            let g = fam.metric(t, [0.4, -0.2]).unwrap();
            let expect = Spd2::new(1.0, t, 1.0 + t * t).unwrap();
            assert!(g.max_abs_diff(&expect) < 1e-12, "t={t}: {g:?}");
        }
    }

    #[test]
    fn zero_velocity_gives_identity() {
        let fam = pullback_family(SteadyShear { rate: 0.0 }, Density::Uniform);
        let g = fam.metric(0.9, [1.0, 2.0]).unwrap();
        assert!(g.max_abs_diff(&Spd2::IDENTITY) < 1e-15);
    }

    #[test]
    fn shear_family_matches_numerical_pullback() {
        let closed = ScheduledFamily::shear_pullback(0.7, None);
        let flow = pullback_family(SteadyShear { rate: 0.7 }, Density::Uniform);
        for &t in &[0.1, 0.5, 1.0] {
            let a = closed.inverse_metric(t, [0.3, 0.1]).unwrap();
            let b = flow.inverse_metric(t, [0.3, 0.1]).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-12);
        }
    }

    #[test]
    fn gyre_closed_form_matches_rk4_pullback() {
        let gyre = RotatingGyre::new(2.0, 0.5, Cutoff::new(0.2, 1.2));
        let flow = pullback_family(gyre.vortex, Density::Uniform);
        for &x in &[[0.5, 0.1], [-0.3, 0.6], [0.9, -0.4], [0.05, 0.0]] {
            for &t in &[0.25, 0.6, 1.0] {
                let a = gyre.inverse_metric(t, x).unwrap();
                let b = flow.inverse_metric(t, x).unwrap();
                assert!(a.max_abs_diff(&b) < 1e-7, "x={x:?} t={t}: {a:?} vs {b:?}");
                let ja = gyre.flow_jacobian(t, x);
                let (_, jb) = flow.flow(t, x).unwrap();
                for i in 0..2 {
                    for j in 0..2 {
                        assert!((ja.m[i][j] - jb.m[i][j]).abs() < 1e-7);
                    }
                }
            }
        }
    }

    #[test]
    fn divergence_free_pullback_has_unit_determinant() {
        let gyre = RotatingGyre::new(2.5, 0.5, Cutoff::new(0.2, 1.2));
        let flow = pullback_family(gyre.vortex, Density::Uniform);
        for i in 0..12 {
            let x = [-1.3 + 0.21 * i as f64, 0.7 - 0.1 * i as f64];
            for &t in &[0.0, 0.4, 1.0] {
                let det_closed = gyre.metric(t, x).unwrap().det();
                let det_flow = flow.metric(t, x).unwrap().det();
                assert!((det_closed - 1.0).abs() < 1e-6);
                assert!((det_flow - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn families_are_euclidean_outside_their_ball() {
        let fams: Vec<Box<dyn MetricFamily>> = vec![
            Box::new(ScheduledFamily::shear_pullback(1.0, Some(Cutoff::new(0.8, 1.3)))),
            Box::new(ScheduledFamily::diag_time(Some(Cutoff::new(0.8, 1.3)))),
            Box::new(RotatingGyre::new(2.0, 0.5, Cutoff::new(0.2, 1.2))),
        ];
        for fam in &fams {
            let r = fam.euclidean_outside_radius();
            for k in 0..16 {
                let th = k as f64 * 0.4;
                let x = [(r + 0.01) * th.cos(), (r + 0.01) * th.sin()];
                for &t in &[0.0, 0.5, 1.0] {
                    let g = fam.metric(t, x).unwrap();
                    assert!(g.max_abs_diff(&Spd2::IDENTITY) < 1e-15, "{}", fam.describe());
                }
                assert_eq!(fam.density(x), 1.0);
            }
        }
    }

    #[test]
    fn separable_form_reproduces_family() {
        let fams: Vec<Box<dyn MetricFamily>> = vec![
            Box::new(ScheduledFamily::shear_pullback(1.0, Some(Cutoff::new(0.8, 1.3)))),
            Box::new(RotatingGyre::new(2.0, 0.5, Cutoff::new(0.2, 1.2))),
            Box::new(Euclidean::default()),
        ];
        for fam in &fams {
            let sep = fam.separable().unwrap();
            for &x in &[[0.1, 0.2], [0.9, -0.3], [1.1, 0.2]] {
                for &t in &[0.0, 0.33, 1.0] {
                    let a = fam.inverse_metric(t, x).unwrap().sym();
                    let b = sep.eval(t, x);
                    assert!(a.max_abs_diff(&b) < 1e-14);
                }
            }
        }
    }

    #[test]
    fn metric_is_continuous_in_time_and_space() {
        let gyre = RotatingGyre::new(2.0, 0.5, Cutoff::new(0.2, 1.2));
        let base = gyre.inverse_metric(0.5, [0.6, 0.3]).unwrap();
        let dt = gyre.inverse_metric(0.5 + 1e-7, [0.6, 0.3]).unwrap();
        let dx = gyre.inverse_metric(0.5, [0.6 + 1e-7, 0.3]).unwrap();
        assert!(base.max_abs_diff(&dt) < 1e-5);
        assert!(base.max_abs_diff(&dx) < 1e-5);
    }
}
