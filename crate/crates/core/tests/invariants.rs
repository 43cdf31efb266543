//! Randomised checks of the structural invariants. Each property is stated
//! independently of the implementation: exact algebraic identities are
//! compared bit for bit or to round-off, numerical ones against their
//! documented tolerances.

use std::f64::consts::TAU;

use mixlab_core::analysis::{coherence_ratio, fit_asymptotics, CoherenceBackend, Measurement};
use mixlab_core::geometry::{
    averaged_metric, mixing_area, pullback_family, AveragedCoefficients, ClosedCurve, CoefficientField, Cutoff,
    Density, Euclidean, MetricFamily, Rect, Region, RotatingGyre, ScheduledFamily, Vortex,
};
use mixlab_core::pde::{evolve, heat_content_pde, EvolveOptions, Grid, GridField, PdeOptions};
use mixlab_core::{Mat2, Point, Spd2, Sym2};
use proptest::prelude::*;

/// `h_t = Cᵀ g_t C` for a fixed matrix `C`.
struct Conjugated<F> {
    inner: F,
    c: Mat2,
}

impl<F: MetricFamily> MetricFamily for Conjugated<F> {
    fn inverse_metric(&self, t: f64, x: Point) -> mixlab_core::Result<Spd2> {
        // h⁻¹ = C⁻¹ g⁻¹ C⁻ᵀ, a congruence by C⁻ᵀ.
        let cinv_t = self.c.inverse().expect("invertible").transpose();
        Spd2::try_from(self.inner.inverse_metric(t, x)?.sym().congruence(&cinv_t))
    }
    fn density(&self, x: Point) -> f64 {
        self.inner.density(x)
    }
    fn density_bound(&self) -> f64 {
        self.inner.density_bound()
    }
    fn euclidean_outside_radius(&self) -> f64 {
        f64::INFINITY
    }
    fn describe(&self) -> String {
        "conjugated".into()
    }
}

/// The same fixed metric at every time.
struct Frozen(Spd2);

impl MetricFamily for Frozen {
    fn inverse_metric(&self, _t: f64, _x: Point) -> mixlab_core::Result<Spd2> {
        Ok(self.0.inverse())
    }
    fn density(&self, _x: Point) -> f64 {
        1.0
    }
    fn density_bound(&self) -> f64 {
        1.0
    }
    fn euclidean_outside_radius(&self) -> f64 {
        f64::INFINITY
    }
    fn is_time_independent(&self) -> bool {
        true
    }
    fn describe(&self) -> String {
        "frozen".into()
    }
}

/// An ellipse traced with a non-uniform speed `s ↦ s + α sin(2πs)/2π`.
struct WarpedEllipse {
    a: f64,
    b: f64,
    alpha: f64,
}

impl ClosedCurve for WarpedEllipse {
    fn piece_count(&self) -> usize {
        1
    }
    fn point(&self, _piece: usize, s: f64) -> Point {
        let th = TAU * s + self.alpha * (TAU * s).sin();
        [self.a * th.cos(), self.b * th.sin()]
    }
    fn tangent(&self, _piece: usize, s: f64) -> Point {
        let th = TAU * s + self.alpha * (TAU * s).sin();
        let dth = TAU * (1.0 + self.alpha * (TAU * s).cos());
        [-self.a * th.sin() * dth, self.b * th.cos() * dth]
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn family_for(kind: usize, rate: f64) -> Box<dyn MetricFamily> {
    let bump = Density::Bump { amplitude: 0.6, radius: 0.8, center: [0.1, -0.1] };
    match kind {
        0 => Box::new(Euclidean { density: bump }),
        1 => Box::new(ScheduledFamily::shear_pullback(rate, Some(Cutoff::new(1.0, 1.6)))),
        2 => Box::new(ScheduledFamily::diag_time(Some(Cutoff::new(0.5, 1.2))).with_density(bump)),
        _ => Box::new(RotatingGyre::new(1.5 * rate, 0.5, Cutoff::new(0.2, 1.2))),
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn fit_scales_linearly_with_the_data(
        c1 in 0.1f64..10.0,
        c2 in -5.0f64..5.0,
        k in -6i32..6,
        noise in prop::collection::vec(-1e-3f64..1e-3, 5),
        weighted in any::<bool>(),
    ) {
        let lambda = 2f64.powi(k);
        let eps: Vec<f64> = (0..5).map(|j| 1e-2 / 2f64.powi(j)).collect();
        let build = |scale: f64| -> Vec<Measurement> {
            eps.iter().zip(&noise).map(|(&e, n)| {
                let t = c1 * e.sqrt() + c2 * e + n * e;
                let sigma = if weighted { 1e-4 * (1.0 + e) } else { 0.0 };
                Measurement::new(e, scale * t, scale * sigma)
            }).collect()
        };
        let base = fit_asymptotics(&build(1.0), 1.0).unwrap();
        let scaled = fit_asymptotics(&build(lambda), 1.0).unwrap();
        prop_assert_eq!(scaled.c1, lambda * base.c1);
        prop_assert_eq!(scaled.c2, lambda * base.c2);
    }

    #[test]
    fn averaged_metric_commutes_with_congruence(
        m in prop::array::uniform4(-2.0f64..2.0),
        x in prop::array::uniform2(-1.5f64..1.5),
        rate in 0.2f64..1.5,
    ) {
        let c = Mat2::new(m[0], m[1], m[2], m[3]);
        prop_assume!(c.det().abs() > 0.2);
        let g = ScheduledFamily::shear_pullback(rate, None);
        let expected = averaged_metric(&g, x, 16).unwrap().sym().congruence(&c);
        let h = Conjugated { inner: g, c };
        let got = averaged_metric(&h, x, 16).unwrap().sym();
        prop_assert!(got.max_abs_diff(&expected) <= 1e-10 * expected.max_abs().max(1.0),
            "{:?} vs {:?}", got, expected);
    }

    #[test]
    fn averaged_diffusion_is_twice_the_inverse_averaged_metric(
        x in prop::array::uniform2(-1.5f64..1.5),
        kind in 0usize..4,
        rate in 0.2f64..1.0,
    ) {
        let fam = family_for(kind, rate);
        let coeffs = AveragedCoefficients::new(fam.as_ref());
        let a = coeffs.diffusion(0.3, x).unwrap().sym();
        let gbar_inv = averaged_metric(fam.as_ref(), x, 16).unwrap().inverse().sym();
        prop_assert!(a.max_abs_diff(&gbar_inv.scale(2.0)) <= 1e-10 * a.max_abs());
    }

    #[test]
    fn constant_family_averages_to_itself(a in 0.1f64..5.0, b in -0.9f64..0.9, d in 0.1f64..5.0) {
        let g = Spd2::new(a, b * (a * d).sqrt(), d).unwrap();
        let avg = averaged_metric(&Frozen(g), [0.3, -0.2], 16).unwrap();
        prop_assert!(avg.sym().max_abs_diff(&g.sym()) <= 1e-13 * g.max_eigenvalue());
    }

    #[test]
    fn mixing_area_ignores_parametrisation(
        a in 0.3f64..1.2,
        b in 0.3f64..1.2,
        alpha in -0.6f64..0.6,
        rate in 0.2f64..1.5,
    ) {
        let fam = ScheduledFamily::shear_pullback(rate, Some(Cutoff::new(1.0, 1.6)));
        let gbar = |x: Point| averaged_metric(&fam, x, 16);
        let rho = |_: Point| 1.0;
        let plain = WarpedEllipse { a, b, alpha: 0.0 };
        let warped = WarpedEllipse { a, b, alpha };
        let v0 = mixing_area(&plain, &gbar, &rho, None, 512).unwrap();
        let v1 = mixing_area(&warped, &gbar, &rho, None, 512).unwrap();
        prop_assert!(rel(v1, v0) <= 1e-8, "{} vs {}", v1, v0);
        // The region type is one more parametrisation of the same curve.
        let region = Region::ellipse([0.0, 0.0], [a, b], 0.0).unwrap();
        let v2 = mixing_area(&region, &gbar, &rho, None, 512).unwrap();
        prop_assert!(rel(v2, v0) <= 1e-8, "{} vs {}", v2, v0);
    }

    #[test]
    fn divergence_free_pullbacks_have_unit_determinant(
        t in 0.0f64..1.0,
        x in prop::array::uniform2(-1.5f64..1.5),
        amp in 0.2f64..2.0,
        modulation in 0.0f64..0.9,
    ) {
        let vortex = pullback_family(Vortex::new(amp, modulation, Cutoff::new(0.2, 1.2)), Density::Uniform);
        let d = vortex.metric(t, x).unwrap().det();
        prop_assert!((d - 1.0).abs() <= 1e-6, "det {}", d);
        let gyre = RotatingGyre::new(amp, modulation, Cutoff::new(0.2, 1.2));
        let d = gyre.metric(t, x).unwrap().det();
        prop_assert!((d - 1.0).abs() <= 1e-6, "det {}", d);
    }

    #[test]
    fn coherence_without_diffusion_is_two(
        cx in -0.5f64..0.5,
        cy in -0.5f64..0.5,
        r in 0.1f64..0.6,
        kind in 0usize..4,
    ) {
        let fam = family_for(kind, 0.8);
        let region = Region::disk([cx, cy], r).unwrap();
        let pde = CoherenceBackend::Pde { grid: Grid::square(2.4, 32).unwrap(), options: PdeOptions::default() };
        let mc = CoherenceBackend::Mc { truncation: Rect::centered(2.4), n_paths: 64, n_steps: 4, seed: 1 };
        for backend in [pde, mc] {
            let rep = coherence_ratio(fam.as_ref(), &region, 0.0, &backend).unwrap();
            prop_assert_eq!(rep.ratio, 2.0);
            prop_assert_eq!(rep.lagrangian_ratio, 2.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn indicator_solves_conserve_mass_and_stay_in_range(
        kind in 0usize..4,
        rate in 0.3f64..1.0,
        cx in -0.4f64..0.4,
        cy in -0.4f64..0.4,
        semi in prop::array::uniform2(0.2f64..0.6),
        angle in 0.0f64..3.2,
        eps in 1e-3f64..5e-3,
    ) {
        let fam = family_for(kind, rate);
        let region = Region::ellipse([cx, cy], semi, angle).unwrap();
        let grid = Grid::square(2.4, 48).unwrap();
        let out = heat_content_pde(&region, fam.as_ref(), eps, &grid, &PdeOptions::default()).unwrap();
        let d = out.diagnostics.unwrap();
        prop_assert!(d.mass_drift <= 1e-12, "drift {:e}", d.mass_drift);
        prop_assert!(d.min >= -1e-10 && d.max <= 1.0 + 1e-10, "range [{:e}, {:e}]", d.min, d.max);
        prop_assert!(out.value >= 0.0 && out.value <= out.region_mass);
    }

    #[test]
    fn reversal_is_invisible_without_time_dependence(
        amplitude in 0.0f64..0.9,
        bx in -0.5f64..0.5,
        sigma in 0.2f64..0.5,
        eps in 1e-3f64..1e-2,
    ) {
        let fam = Euclidean { density: Density::Bump { amplitude, radius: 1.0, center: [bx, 0.0] } };
        let coeffs = mixlab_core::geometry::FamilyCoefficients::new(&fam);
        let grid = Grid::square(2.0, 32).unwrap();
        let rho = GridField::density_of(&grid, |x| fam.density(x));
        let u0 = GridField::from_fn(grid, rho, |x| (-(x[0] * x[0] + x[1] * x[1]) / (2.0 * sigma * sigma)).exp()).unwrap();
        let fwd = evolve(&u0, &coeffs, eps, 1.0, &EvolveOptions::default()).unwrap();
        let rev = evolve(&u0, &coeffs, eps, 1.0, &EvolveOptions { reversed: true, ..EvolveOptions::default() }).unwrap();
        prop_assert_eq!(fwd.field.values(), rev.field.values());
    }
}

#[test]
fn symmetric_tensor_helpers_agree() {
    // Guards the congruence convention the conjugation property relies on.
    let s = Sym2::diag(2.0, 3.0);
    let c = Mat2::new(1.0, 2.0, 0.0, 1.0);
    let r = s.congruence(&c);
    assert_eq!((r.a11, r.a12, r.a22), (2.0, 4.0, 11.0));
}
