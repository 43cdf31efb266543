use super::rng::{NoiseTag, StreamFamily};
use super::stats::Moments;
use crate::geometry::{CoefficientField, MetricFamily, Rect, Region};
use crate::linalg::{axpy, Mat2};
use crate::{par, Error, Point, Result};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use std::io::Write;
use std::path::Path;

pub const DEFAULT_STEPS: usize = 512;
pub const DEFAULT_CHECKPOINTS: usize = 17;

/// Drift `b` and diffusion factor `σ` of `dX = εb dt + √ε σ dW`.
pub trait SdeCoefficients: Send + Sync {
    fn drift_sigma(&self, t: f64, x: Point) -> Result<(Point, Mat2)>;

    fn sigma(&self, t: f64, x: Point) -> Result<Mat2> {
        Ok(self.drift_sigma(t, x)?.1)
    }

    fn is_time_independent(&self) -> bool {
        false
    }
}

impl<T: CoefficientField> SdeCoefficients for T {
    fn drift_sigma(&self, t: f64, x: Point) -> Result<(Point, Mat2)> {
        let c = self.evaluate(t, x)?;
        Ok((c.b, c.a.sqrt().to_mat()))
    }

    fn sigma(&self, t: f64, x: Point) -> Result<Mat2> {
        Ok(CoefficientField::sigma(self, t, x)?.to_mat())
    }

    fn is_time_independent(&self) -> bool {
        CoefficientField::is_time_independent(self)
    }
}

/// SDE coefficients given directly as closures. Unlike a
/// [`CoefficientField`], `σ` may be singular or zero.
pub struct FnCoefficients<B, S> {
    pub drift: B,
    pub sigma: S,
}

impl<B, S> SdeCoefficients for FnCoefficients<B, S>
where
    B: Fn(f64, Point) -> Point + Send + Sync,
    S: Fn(f64, Point) -> Mat2 + Send + Sync,
{
    fn drift_sigma(&self, t: f64, x: Point) -> Result<(Point, Mat2)> {
        Ok(((self.drift)(t, x), (self.sigma)(t, x)))
    }
}

#[derive(Clone, Copy)]
pub struct SdeSpec<'a> {
    pub coeffs: &'a dyn SdeCoefficients,
    pub eps: f64,
    /// Evaluate `σ` at the starting point and drop the drift.
    pub freeze_at_start: bool,
    /// Evaluate coefficients at `1 − t`.
    pub time_reversed: bool,
}

impl<'a> SdeSpec<'a> {
    pub fn new(coeffs: &'a dyn SdeCoefficients, eps: f64) -> Self {
        SdeSpec { coeffs, eps, freeze_at_start: false, time_reversed: false }
    }

    /// The backward process used in the probabilistic representation of the
    /// heat semigroup.
    pub fn backward(coeffs: &'a dyn SdeCoefficients, eps: f64) -> Self {
        SdeSpec { time_reversed: true, ..Self::new(coeffs, eps) }
    }

    pub fn frozen(self) -> Self {
        SdeSpec { freeze_at_start: true, ..self }
    }
}

/// Bounded non-negative weight `f` used in a weighted initial law.
#[derive(Clone, Copy)]
pub struct Weight<'a> {
    pub f: &'a (dyn Fn(Point) -> f64 + Sync),
    pub bound: f64,
}

#[derive(Clone, Copy)]
enum LawKind<'a> {
    Point(Point),
    Region { region: &'a Region, family: &'a dyn MetricFamily, weight: Option<Weight<'a>>, bbox: Rect, bound: f64 },
}

/// Initial distribution of the paths: a point mass, or the probability
/// measure `f·1_S·ω / ∫_S f dω`.
#[derive(Clone, Copy)]
pub struct InitialLaw<'a> {
    kind: LawKind<'a>,
    normalization: f64,
}

const MAX_REJECTIONS: usize = 1_000_000;

impl<'a> InitialLaw<'a> {
    pub fn point(x: Point) -> Self {
        InitialLaw { kind: LawKind::Point(x), normalization: 1.0 }
    }

    /// `1_S·ω / ω(S)`.
    pub fn indicator(region: &'a Region, family: &'a dyn MetricFamily) -> Result<Self> {
        Self::build(region, family, None)
    }

    /// `f·1_S·ω / ∫_S f dω`.
    pub fn weighted(region: &'a Region, family: &'a dyn MetricFamily, weight: Weight<'a>) -> Result<Self> {
        if !(weight.bound > 0.0 && weight.bound.is_finite()) {
            return Err(Error::InvalidArgument(format!("weight bound must be positive, got {}", weight.bound)));
        }
        Self::build(region, family, Some(weight))
    }

    fn build(region: &'a Region, family: &'a dyn MetricFamily, weight: Option<Weight<'a>>) -> Result<Self> {
        let normalization = match weight {
            None => region.mass(&|x| family.density(x)),
            Some(w) => region.mass(&|x| family.density(x) * (w.f)(x)),
        };
        if !(normalization > 0.0 && normalization.is_finite()) {
            return Err(Error::InvalidArgument(format!("initial law has mass {normalization}")));
        }
        let bound = family.density_bound() * weight.map_or(1.0, |w| w.bound);
        Ok(InitialLaw {
            kind: LawKind::Region { region, family, weight, bbox: region.bounding_box(), bound },
            normalization,
        })
    }

    /// `∫ h dω` before normalization (`ω(S)` for the indicator law, 1 for a point).
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn point_mass(&self) -> Option<Point> {
        match self.kind {
            LawKind::Point(x) => Some(x),
            LawKind::Region { .. } => None,
        }
    }

    pub fn describe(&self) -> String {
        match self.kind {
            LawKind::Point(x) => format!("point mass at ({}, {})", x[0], x[1]),
            LawKind::Region { weight: None, .. } => "uniform in S with respect to ω".into(),
            LawKind::Region { weight: Some(_), .. } => "f·1_S·ω, normalized".into(),
        }
    }

    /// Rejection sampling from the bounding box with acceptance `ρ f / bound`.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Result<Point> {
        let LawKind::Region { region, family, weight, bbox, bound } = self.kind else {
            let LawKind::Point(x) = self.kind else { unreachable!() };
            return Ok(x);
        };
        for _ in 0..MAX_REJECTIONS {
            let x = [rng.gen_range(bbox.x_min..bbox.x_max), rng.gen_range(bbox.y_min..bbox.y_max)];
            if !region.contains(x) {
                continue;
            }
            let h = family.density(x) * weight.map_or(1.0, |w| (w.f)(x));
            if h > bound * (1.0 + 1e-12) {
                return Err(Error::InvalidArgument(format!("sampling bound {bound} exceeded by {h}")));
            }
            if rng.gen::<f64>() * bound < h {
                return Ok(x);
            }
        }
        Err(Error::InvalidArgument("rejection sampler made no progress".into()))
    }
}

/// Samples of one SDE, with enough provenance to re-create them.
#[derive(Debug, Clone)]
pub struct PathEnsemble {
    pub master_seed: u64,
    pub noise_tag: NoiseTag,
    pub n_steps: usize,
    pub eps: f64,
    pub initial: Vec<Point>,
    pub endpoints: Vec<Point>,
    pub checkpoint_times: Vec<f64>,
    /// Path-major, `checkpoint_times.len()` states per path.
    checkpoints: Vec<Point>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnsembleSummary {
    pub n_paths: usize,
    pub n_steps: usize,
    pub eps: f64,
    pub master_seed: u64,
    pub noise_tag: NoiseTag,
    pub displacement: Moments,
    pub checkpoint_times: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
struct EndpointHeader {
    n_paths: usize,
    columns: usize,
    dtype: &'static str,
    layout: &'static str,
    master_seed: u64,
    noise_tag: NoiseTag,
}

impl PathEnsemble {
    pub fn len(&self) -> usize {
        self.endpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.endpoints.is_empty()
    }

    /// States of path `p` at the checkpoint times.
    pub fn checkpoints_of(&self, p: usize) -> &[Point] {
        let m = self.checkpoint_times.len();
        &self.checkpoints[p * m..(p + 1) * m]
    }

    pub fn displacements(&self) -> Vec<Point> {
        self.initial.iter().zip(&self.endpoints).map(|(a, b)| [b[0] - a[0], b[1] - a[1]]).collect()
    }

    pub fn summary(&self) -> EnsembleSummary {
        EnsembleSummary {
            n_paths: self.len(),
            n_steps: self.n_steps,
            eps: self.eps,
            master_seed: self.master_seed,
            noise_tag: self.noise_tag,
            displacement: Moments::of(&self.displacements()),
            checkpoint_times: self.checkpoint_times.clone(),
        }
    }

    /// Writes `<stem>.bin` (endpoint pairs) and `<stem>.json` (header).
    pub fn dump_endpoints(&self, dir: &Path, stem: &str) -> std::io::Result<()> {
        let mut bin = std::io::BufWriter::new(std::fs::File::create(dir.join(format!("{stem}.bin")))?);
        for p in &self.endpoints {
            bin.write_all(&p[0].to_le_bytes())?;
            bin.write_all(&p[1].to_le_bytes())?;
        }
        bin.flush()?;
        let header = EndpointHeader {
            n_paths: self.len(),
            columns: 2,
            dtype: "float64 little-endian",
            layout: "path-major (x, y) pairs",
            master_seed: self.master_seed,
            noise_tag: self.noise_tag,
        };
        let text = serde_json::to_string_pretty(&header).map_err(std::io::Error::other)?;
        std::fs::write(dir.join(format!("{stem}.json")), text + "\n")
    }
}

/// Euler–Maruyama for `dX = εb(τ, X)dt + √ε σ(τ, X)dW` on `[0, 1]`, with
/// `τ = 1 − t` for backward specs.
///
/// Path `p` draws its starting point from stream `p` of the
/// `(seed, NoiseTag::INITIAL)` family and its increments from stream `p` of
/// `(seed, noise_tag)`. `checkpoints` is the number of equispaced recording
/// times including both ends (0 records none); `checkpoints − 1` must divide
/// `n_steps`.
pub fn euler_maruyama(
    spec: &SdeSpec<'_>,
    law: &InitialLaw<'_>,
    n_paths: usize,
    n_steps: usize,
    master_seed: u64,
    noise_tag: NoiseTag,
    checkpoints: usize,
) -> Result<PathEnsemble> {
    if n_paths == 0 || n_steps == 0 {
        return Err(Error::InvalidArgument("need at least one path and one step".into()));
    }
    if noise_tag == NoiseTag::INITIAL {
        return Err(Error::InvalidArgument("noise tag 0 is reserved for initial samples".into()));
    }
    if !(spec.eps >= 0.0 && spec.eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("diffusivity must be non-negative, got {}", spec.eps)));
    }
    let stride = match checkpoints {
        0 => 0,
        1 => return Err(Error::InvalidArgument("checkpoints must include both ends".into())),
        m if !n_steps.is_multiple_of(m - 1) => {
            return Err(Error::InvalidArgument(format!("{} checkpoint intervals do not divide {n_steps} steps", m - 1)))
        }
        m => n_steps / (m - 1),
    };
    let checkpoint_times: Vec<f64> =
        if stride == 0 { vec![] } else { (0..checkpoints).map(|k| (k * stride) as f64 / n_steps as f64).collect() };

    let starts = StreamFamily::new(master_seed, NoiseTag::INITIAL);
    let noise = StreamFamily::new(master_seed, noise_tag);
    let runs = par::try_map_indexed(n_paths, |p| {
        let x0 = law.sample(&mut starts.path(p))?;
        let mut rng = noise.path(p);
        simulate(spec, x0, &mut rng, n_steps, stride).map(|(end, cps)| (x0, end, cps)).map_err(|e| match e {
            Error::NonFinite { step } => Error::NonFinitePath { path: p, step },
            other => other,
        })
    })?;

    let mut initial = Vec::with_capacity(n_paths);
    let mut endpoints = Vec::with_capacity(n_paths);
    let mut stored = Vec::with_capacity(n_paths * checkpoint_times.len());
    for (x0, end, cps) in runs {
        initial.push(x0);
        endpoints.push(end);
        stored.extend(cps);
    }
    Ok(PathEnsemble {
        master_seed,
        noise_tag,
        n_steps,
        eps: spec.eps,
        initial,
        endpoints,
        checkpoint_times,
        checkpoints: stored,
    })
}

fn simulate<R: Rng>(
    spec: &SdeSpec<'_>,
    x0: Point,
    rng: &mut R,
    n_steps: usize,
    stride: usize,
) -> Result<(Point, Vec<Point>)> {
    let dt = 1.0 / n_steps as f64;
    let noise_scale = (spec.eps * dt).sqrt();
    let mut cps = Vec::new();
    if stride > 0 {
        cps.reserve(n_steps / stride + 1);
        cps.push(x0);
    }
    let cached_sigma = if spec.freeze_at_start && spec.coeffs.is_time_independent() && spec.eps > 0.0 {
        Some(spec.coeffs.sigma(0.0, x0)?)
    } else {
        None
    };
    let mut x = x0;
    for k in 0..n_steps {
        let t = k as f64 * dt;
        let tau = if spec.time_reversed { 1.0 - t } else { t };
        let xi: Point = [rng.sample(StandardNormal), rng.sample(StandardNormal)];
        if spec.eps > 0.0 {
            let (drift, sigma) = if spec.freeze_at_start {
                ([0.0, 0.0], match cached_sigma {
                    Some(s) => s,
                    None => spec.coeffs.sigma(tau, x0)?,
                })
            } else {
                spec.coeffs.drift_sigma(tau, x)?
            };
            x = axpy(noise_scale, sigma.mul_vec(xi), axpy(spec.eps * dt, drift, x));
            if !(x[0].is_finite() && x[1].is_finite()) {
                return Err(Error::NonFinite { step: k + 1 });
            }
        }
        if stride > 0 && (k + 1) % stride == 0 {
            cps.push(x);
        }
    }
    Ok((x, cps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Euclidean, FamilyCoefficients};

    fn constant(sigma: Mat2) -> FnCoefficients<impl Fn(f64, Point) -> Point + Send + Sync, impl Fn(f64, Point) -> Mat2 + Send + Sync> {
        FnCoefficients { drift: |_, _| [0.0, 0.0], sigma: move |_, _| sigma }
    }

    #[test]
    fn zero_coefficients_leave_paths_in_place() {
        let c = constant(Mat2::ZERO);
        let spec = SdeSpec::new(&c, 1.0);
        let e = euler_maruyama(&spec, &InitialLaw::point([0.3, -0.2]), 50, 64, 1, NoiseTag::SHARED, 17).unwrap();
        assert!(e.endpoints.iter().all(|&p| p == [0.3, -0.2]));
        assert!(e.checkpoints_of(7).iter().all(|&p| p == [0.3, -0.2]));
    }

    #[test]
    fn brownian_covariance_is_identity() {
        let c = constant(Mat2::IDENTITY);
        let spec = SdeSpec::new(&c, 1.0);
        let e = euler_maruyama(&spec, &InitialLaw::point([0.0, 0.0]), 100_000, 4, 7, NoiseTag::SHARED, 0).unwrap();
        let m = Moments::of(&e.displacements());
        assert!(m.mean_within([0.0, 0.0], 3.0), "{m:?}");
        assert!(m.covariance_within([1.0, 0.0, 1.0], 3.0), "{m:?}");
    }

    #[test]
    fn linear_drift_matches_exponential_decay() {
        let c = FnCoefficients { drift: |_, x: Point| [-x[0], -x[1]], sigma: |_, _| Mat2::ZERO };
        let spec = SdeSpec::new(&c, 1.0);
        let n = 10_000;
        let e = euler_maruyama(&spec, &InitialLaw::point([1.0, -2.0]), 3, n, 0, NoiseTag::SHARED, 0).unwrap();
        let exact = (-1.0f64).exp();
        // Explicit Euler on x' = −x gives (1 − 1/n)^n, an O(1/n) error.
        let euler = (1.0 - 1.0 / n as f64).powi(n as i32);
        assert!((e.endpoints[0][0] - euler).abs() < 1e-12);
        assert!((e.endpoints[0][0] - exact).abs() < 1.0 / n as f64);
        assert!((e.endpoints[2][1] + 2.0 * exact).abs() < 2.0 / n as f64);
    }

    #[test]
    fn same_seed_gives_identical_ensembles() {
        let fam = Euclidean::default();
        let coeffs = FamilyCoefficients::new(&fam);
        let region = Region::disk([0.0, 0.0], 1.0).unwrap();
        let law = InitialLaw::indicator(&region, &fam).unwrap();
        let spec = SdeSpec::backward(&coeffs, 0.01);
        let a = euler_maruyama(&spec, &law, 500, 32, 9, NoiseTag::SHARED, 17).unwrap();
        let b = euler_maruyama(&spec, &law, 500, 32, 9, NoiseTag::SHARED, 17).unwrap();
        assert_eq!(a.endpoints, b.endpoints);
        assert_eq!(a.checkpoints, b.checkpoints);
        assert!(a.initial.iter().all(|&p| region.contains(p)));
        let c = euler_maruyama(&spec, &law, 500, 32, 9, NoiseTag::AVERAGED, 17).unwrap();
        assert_eq!(a.initial, c.initial);
        assert_ne!(a.endpoints, c.endpoints);
    }

    #[test]
    fn indicator_law_normalization_is_the_mass() {
        let fam = Euclidean::default();
        let region = Region::disk([0.0, 0.0], 1.0).unwrap();
        let law = InitialLaw::indicator(&region, &fam).unwrap();
        assert!((law.normalization() - std::f64::consts::PI).abs() < 1e-10);
    }

    #[test]
    fn checkpoint_layout_is_validated() {
        let c = constant(Mat2::IDENTITY);
        let spec = SdeSpec::new(&c, 1.0);
        let law = InitialLaw::point([0.0, 0.0]);
        assert!(euler_maruyama(&spec, &law, 1, 30, 0, NoiseTag::SHARED, 17).is_err());
        assert!(euler_maruyama(&spec, &law, 1, 32, 0, NoiseTag::INITIAL, 0).is_err());
        assert!(euler_maruyama(&spec, &law, 0, 32, 0, NoiseTag::SHARED, 0).is_err());
        let e = euler_maruyama(&spec, &law, 2, 32, 0, NoiseTag::SHARED, 17).unwrap();
        assert_eq!(e.checkpoint_times.len(), 17);
        assert_eq!(*e.checkpoints_of(1).last().unwrap(), e.endpoints[1]);
    }

    #[test]
    fn non_finite_state_reports_path_and_step() {
        let c = FnCoefficients { drift: |_, x: Point| [x[0] * 1e300, 0.0], sigma: |_, _| Mat2::ZERO };
        let spec = SdeSpec::new(&c, 1.0);
        let err = euler_maruyama(&spec, &InitialLaw::point([1.0, 0.0]), 2, 8, 0, NoiseTag::SHARED, 0).unwrap_err();
        assert!(matches!(err, Error::NonFinitePath { path: 0, step: 2 }), "{err:?}");
    }
}
