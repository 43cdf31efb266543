//! Sample statistics used by the Monte Carlo checks. Every reduction is a
//! sequential fold in sample order, so results are bit-reproducible.

use crate::quadrature::compensated_sum;
use crate::Point;
use serde::Serialize;

/// Sample mean and covariance of 2-vectors, with standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub n: usize,
    pub mean: Point,
    pub mean_se: Point,
    /// `(c11, c12, c22)`.
    pub covariance: [f64; 3],
    pub covariance_se: [f64; 3],
}

impl Moments {
    pub fn of(samples: &[Point]) -> Moments {
        let n = samples.len();
        let nf = n as f64;
        if n == 0 {
            let nan = f64::NAN;
            return Moments { n, mean: [nan; 2], mean_se: [nan; 2], covariance: [nan; 3], covariance_se: [nan; 3] };
        }
        let mean = [
            compensated_sum(samples.iter().map(|p| p[0])) / nf,
            compensated_sum(samples.iter().map(|p| p[1])) / nf,
        ];
        let centred = |p: &Point| [p[0] - mean[0], p[1] - mean[1]];
        let products = |i: usize, j: usize| samples.iter().map(move |p| {
            let z = centred(p);
            z[i] * z[j]
        });
        let pairs = [(0, 0), (0, 1), (1, 1)];
        let mut covariance = [0.0; 3];
        let mut covariance_se = [f64::NAN; 3];
        for (k, &(i, j)) in pairs.iter().enumerate() {
            let c = compensated_sum(products(i, j)) / nf;
            covariance[k] = c;
            if n > 1 {
                let v = compensated_sum(products(i, j).map(|q| (q - c) * (q - c))) / (nf - 1.0);
                covariance_se[k] = (v / nf).sqrt();
            }
        }
        let mean_se = if n > 1 {
            [(covariance[0] * nf / (nf - 1.0) / nf).sqrt(), (covariance[2] * nf / (nf - 1.0) / nf).sqrt()]
        } else {
            [f64::NAN; 2]
        };
        Moments { n, mean, mean_se, covariance, covariance_se }
    }

    /// Whether both mean components lie within `k` standard errors of `target`.
    pub fn mean_within(&self, target: Point, k: f64) -> bool {
        (0..2).all(|i| (self.mean[i] - target[i]).abs() <= k * self.mean_se[i])
    }

    /// Whether every covariance entry lies within `k` standard errors of `target`.
    pub fn covariance_within(&self, target: [f64; 3], k: f64) -> bool {
        (0..3).all(|i| (self.covariance[i] - target[i]).abs() <= k * self.covariance_se[i])
    }
}

/// Survival function of the Kolmogorov distribution,
/// `Q(λ) = 2 Σ_{j≥1} (−1)^{j−1} exp(−2 j² λ²)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * lambda * lambda).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Asymptotic p-value for a KS statistic `d` at effective sample size `ne`
/// (Stephens' small-sample correction).
fn ks_p_value(d: f64, ne: f64) -> f64 {
    let s = ne.sqrt();
    kolmogorov_survival((s + 0.12 + 0.11 / s) * d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// Two-sample Kolmogorov–Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len(), b.len());
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < na && j < nb {
        let x = a[i].min(b[j]);
        while i < na && a[i] <= x {
            i += 1;
        }
        while j < nb && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let ne = (na * nb) as f64 / (na + nb) as f64;
    KsResult { statistic: d, p_value: ks_p_value(d, ne) }
}

/// One-sample KS test against a continuous CDF.
pub fn ks_one_sample(a: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    let a = sorted(a);
    let n = a.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in a.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    KsResult { statistic: d, p_value: ks_p_value(d, n) }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kolmogorov_quantiles() {
        // Tabulated critical values of the Kolmogorov distribution.
        assert!((kolmogorov_survival(1.3581) - 0.05).abs() < 5e-4);
        assert!((kolmogorov_survival(1.6276) - 0.01).abs() < 2e-4);
        assert_eq!(kolmogorov_survival(0.0), 1.0);
    }

    #[test]
    fn two_sample_statistic_by_hand() {
        // ECDFs of {1,2,3} and {2.5,4}: largest gap 2/3 at x = 2.
        let r = ks_two_sample(&[1.0, 2.0, 3.0], &[2.5, 4.0]);
        assert!((r.statistic - 2.0 / 3.0).abs() < 1e-15);
        let same = ks_two_sample(&[1.0, 2.0], &[1.0, 2.0]);
        assert_eq!(same.statistic, 0.0);
    }

    #[test]
    fn one_sample_uniform() {
        let r = ks_one_sample(&[0.1, 0.5, 0.9], |x| x.clamp(0.0, 1.0));
        assert!((r.statistic - (1.0 / 3.0 - 0.1f64).max(0.5 - 1.0 / 3.0).max(0.9 - 2.0 / 3.0).max(0.1)).abs() < 1e-15);
    }

    #[test]
    fn moments_of_small_sample() {
        let m = Moments::of(&[[1.0, 0.0], [3.0, 2.0]]);
        assert_eq!(m.mean, [2.0, 1.0]);
        assert_eq!(m.covariance, [1.0, 1.0, 1.0]);
    }
}
