use serde::{Deserialize, Serialize};

use crate::linalg::{norm, sub, Point};

/// Smooth radial step: 1 for `r ≤ inner`, 0 for `r ≥ outer`, C^∞ in between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub inner: f64,
    pub outer: f64,
}

fn bump_kernel(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else {
        (-1.0 / u).exp()
    }
}

fn bump_kernel_prime(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else {
        (-1.0 / u).exp() / (u * u)
    }
}

impl Cutoff {
    pub fn new(inner: f64, outer: f64) -> Self {
        assert!(inner >= 0.0 && outer > inner, "cutoff needs 0 <= inner < outer");
        Cutoff { inner, outer }
    }

    pub fn value(&self, r: f64) -> f64 {
        if r <= self.inner {
            return 1.0;
        }
        if r >= self.outer {
            return 0.0;
        }
        let u = (r - self.inner) / (self.outer - self.inner);
        let f = bump_kernel(u);
        let g = bump_kernel(1.0 - u);
        g / (f + g)
    }

    /// `d/dr` of [`Cutoff::value`].
    pub fn derivative(&self, r: f64) -> f64 {
        if r <= self.inner || r >= self.outer {
            return 0.0;
        }
        let w = self.outer - self.inner;
        let u = (r - self.inner) / w;
        let f = bump_kernel(u);
        let g = bump_kernel(1.0 - u);
        let fp = bump_kernel_prime(u);
        let gp = -bump_kernel_prime(1.0 - u);
        let s = f + g;
        (gp * s - g * (fp + gp)) / (s * s) / w
    }
}

/// Mass density `ρ` of the volume form `ω = ρ dx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Density {
    #[default]
    Uniform,
    /// `ρ(x) = 1 + amplitude·χ(|x − center|)` with a smooth bump `χ` of the
    /// given radius.
    Bump { amplitude: f64, radius: f64, center: Point },
}

impl Density {
    pub fn value(&self, x: Point) -> f64 {
        match *self {
            Density::Uniform => 1.0,
            Density::Bump { amplitude, radius, center } => {
                1.0 + amplitude * Cutoff::new(0.0, radius).value(norm(sub(x, center)))
            }
        }
    }

    pub fn bound(&self) -> f64 {
        match *self {
            Density::Uniform => 1.0,
            Density::Bump { amplitude, .. } => 1.0 + amplitude.max(0.0),
        }
    }

    pub fn is_valid(&self) -> bool {
        match *self {
            Density::Uniform => true,
            Density::Bump { amplitude, radius, center } => {
                amplitude > -1.0 && radius > 0.0 && center.iter().all(|c| c.is_finite())
            }
        }
    }

    /// Radius beyond which `ρ = 1`.
    pub fn support_radius(&self) -> f64 {
        match *self {
            Density::Uniform => 0.0,
            Density::Bump { radius, center, .. } => radius + norm(center),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_limits_and_monotone() {
        let c = Cutoff::new(1.0, 2.0);
        assert_eq!(c.value(0.5), 1.0);
        assert_eq!(c.value(2.5), 0.0);
        assert!((c.value(1.5) - 0.5).abs() < 1e-15);
        let mut prev = 1.0;
        for k in 0..=100 {
            let v = c.value(1.0 + k as f64 / 100.0);
            assert!(v <= prev + 1e-15);
            prev = v;
        }
    }

    #[test]
    fn cutoff_derivative_matches_finite_differences() {
        let c = Cutoff::new(0.3, 1.1);
        for k in 1..40 {
            let r = 0.3 + 0.8 * k as f64 / 40.0;
            let h = 1e-6;
            let fd = (c.value(r + h) - c.value(r - h)) / (2.0 * h);
            assert!((fd - c.derivative(r)).abs() < 1e-7, "r={r}");
        }
    }

    #[test]
    fn bump_density_is_euclidean_outside_support() {
        let d = Density::Bump { amplitude: 0.5, radius: 1.0, center: [0.2, 0.0] };
        assert_eq!(d.value([1.3, 0.0]), 1.0);
        assert!((d.value([0.2, 0.0]) - 1.5).abs() < 1e-15);
        assert!(d.support_radius() <= 1.2 + 1e-15);
    }
}
