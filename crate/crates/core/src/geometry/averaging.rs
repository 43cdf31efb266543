use super::family::MetricFamily;
use crate::error::{Error, Result};
use crate::linalg::{Point, Spd2, Sym2};
use crate::quadrature::GaussLegendre;

/// Gauss–Legendre nodes in time used for averaging unless stated otherwise.
pub const DEFAULT_TIME_NODES: usize = 16;

/// `∫₀¹ g_t⁻¹(x) dt` by Gauss–Legendre quadrature.
pub fn averaged_inverse_metric(
    family: &dyn MetricFamily,
    x: Point,
    rule: &GaussLegendre,
) -> Result<Spd2> {
    let mut acc = Sym2::ZERO;
    for (t, w) in rule.on(0.0, 1.0) {
        acc = acc + family.inverse_metric(t, x)?.sym().scale(w);
    }
    Spd2::try_from(acc)
}

/// The averaged metric `ḡ(x) = (∫₀¹ g_t⁻¹(x) dt)⁻¹`.
pub fn averaged_metric(family: &dyn MetricFamily, x: Point, quadrature_nodes: usize) -> Result<Spd2> {
    if quadrature_nodes < 2 {
        return Err(Error::InvalidArgument(format!(
            "averaged_metric needs at least 2 quadrature nodes, got {quadrature_nodes}"
        )));
    }
    let rule = GaussLegendre::new(quadrature_nodes);
    Ok(averaged_inverse_metric(family, x, &rule)?.inverse())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Euclidean, RotatingGyre, ScheduledFamily};
    use crate::geometry::Cutoff;
    use crate::linalg::Mat2;
    use proptest::prelude::*;

    #[test]
    fn identity_family_averages_to_identity() {
        let g = averaged_metric(&Euclidean::default(), [0.3, -2.0], 16).unwrap();
        assert!(g.max_abs_diff(&Spd2::IDENTITY) < 1e-15);
    }

    #[test]
    fn diag_time_closed_form() {
        // ∫ diag(1+t, 1) dt = diag(3/2, 1)
        let g = averaged_metric(&ScheduledFamily::diag_time(None), [0.0, 0.0], 16).unwrap();
        assert!(g.max_abs_diff(&Spd2::diag(2.0 / 3.0, 1.0).unwrap()) < 1e-14);
    }

    #[test]
    fn shear_closed_form() {
        // ∫ [[1+t², −t], [−t, 1]] dt = [[4/3, −1/2], [−1/2, 1]], det = 13/12,
        // inverse = (12/13)·[[1, 1/2], [1/2, 4/3]].
        let g = averaged_metric(&ScheduledFamily::shear_pullback(1.0, None), [0.0, 0.0], 16).unwrap();
        let k = 12.0 / 13.0;
        let expect = Spd2::new(k, k * 0.5, k * 4.0 / 3.0).unwrap();
        assert!(g.max_abs_diff(&expect) < 1e-14, "{g:?}");
    }

    #[test]
    fn rejects_single_node() {
        assert!(averaged_metric(&Euclidean::default(), [0.0, 0.0], 1).is_err());
    }

    #[test]
    fn time_independent_family_is_its_own_average() {
        let fam = ScheduledFamily {
            name: "static".into(),
            terms: vec![],
            cutoff: None,
            density: Default::default(),
        };
        let g = averaged_metric(&fam, [1.0, 1.0], 4).unwrap();
        assert!(g.max_abs_diff(&fam.metric(0.4, [1.0, 1.0]).unwrap()) < 1e-15);
    }

    struct Conjugated<F> {
        inner: F,
        c: Mat2,
    }

    impl<F: MetricFamily> MetricFamily for Conjugated<F> {
        fn inverse_metric(&self, t: f64, x: Point) -> Result<Spd2> {
            Ok(self.metric(t, x)?.inverse())
        }
        fn metric(&self, t: f64, x: Point) -> Result<Spd2> {
            Spd2::try_from(self.inner.metric(t, x)?.sym().congruence(&self.c))
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
        fn describe(&self) -> String {
            "conjugated".into()
        }
    }

    proptest! {
        #[test]
        fn commutes_with_constant_congruence(
            c00 in -2.0f64..2.0, c01 in -2.0f64..2.0, c10 in -2.0f64..2.0, c11 in -2.0f64..2.0,
            x0 in -1.0f64..1.0, x1 in -1.0f64..1.0,
        ) {
            let c = Mat2::new(c00, c01, c10, c11);
            prop_assume!(c.det().abs() > 0.1);
            let base = RotatingGyre::new(2.0, 0.5, Cutoff::new(0.2, 1.2));
            let h = Conjugated { inner: base, c };
            let lhs = averaged_metric(&h, [x0, x1], 16).unwrap();
            let rhs = averaged_metric(&base, [x0, x1], 16).unwrap().sym().congruence(&c);
            let scale = rhs.max_abs();
            prop_assert!(lhs.sym().max_abs_diff(&rhs) < 1e-10 * scale);
        }
    }
}
