use super::averaging::averaged_metric;
use super::family::MetricFamily;
use super::region::Region;
use crate::error::{Error, Result};
use crate::linalg::{cross, norm, Point, Spd2};
use crate::quadrature::GaussLegendre;

/// Closed curve made of one or more smooth pieces, each parametrized by
/// `s ∈ [0, 1]`, traversed counter-clockwise.
pub trait ClosedCurve {
    fn piece_count(&self) -> usize;
    fn point(&self, piece: usize, s: f64) -> Point;
    /// `dγ/ds`.
    fn tangent(&self, piece: usize, s: f64) -> Point;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingAreaOptions {
    /// Total number of quadrature panels along the boundary.
    pub boundary_nodes: usize,
    /// Gauss–Legendre nodes in time for `ḡ`.
    pub time_nodes: usize,
}

impl Default for MixingAreaOptions {
    fn default() -> Self {
        MixingAreaOptions { boundary_nodes: 512, time_nodes: super::DEFAULT_TIME_NODES }
    }
}

/// `∫_{∂S} f dĀ` with `dĀ = ω(ν, ·)`: at each boundary point the `ḡ`-unit,
/// `ḡ`-orthogonal outer normal `ν` is built explicitly and the integrand is
/// `ρ·|det[ν, γ']|·f`. Without a weight `f ≡ 1`.
pub fn mixing_area(
    curve: &dyn ClosedCurve,
    gbar: &dyn Fn(Point) -> Result<Spd2>,
    density: &dyn Fn(Point) -> f64,
    weight: Option<&dyn Fn(Point) -> f64>,
    boundary_nodes: usize,
) -> Result<f64> {
    if boundary_nodes == 0 {
        return Err(Error::InvalidArgument("mixing_area needs at least one panel".into()));
    }
    let rule = GaussLegendre::new(4);
    let pieces = curve.piece_count();
    let panels = (boundary_nodes / pieces).max(1);
    let mut total = 0.0;
    for piece in 0..pieces {
        for k in 0..panels {
            let lo = k as f64 / panels as f64;
            let hi = (k + 1) as f64 / panels as f64;
            for (s, w) in rule.on(lo, hi) {
                let p = curve.point(piece, s);
                let tau = curve.tangent(piece, s);
                let len = norm(tau);
                if !(len > 0.0 && len.is_finite()) {
                    return Err(Error::InvalidRegion(format!(
                        "degenerate tangent at piece {piece}, s = {s}"
                    )));
                }
                let g = gbar(p)?;
                let n = [tau[1], -tau[0]];
                let g_inv_n = g.inverse().mul_vec(n);
                let nu_norm = (n[0] * g_inv_n[0] + n[1] * g_inv_n[1]).sqrt();
                let nu = [g_inv_n[0] / nu_norm, g_inv_n[1] / nu_norm];
                let f = weight.map_or(1.0, |f| f(p));
                total += w * density(p) * cross(nu, tau).abs() * f;
            }
        }
    }
    Ok(total)
}

/// `Ā(∂S)` (or `∫ f dĀ`) for a region in the averaged geometry of a family.
pub fn mixing_area_of_family(
    region: &Region,
    family: &dyn MetricFamily,
    options: MixingAreaOptions,
    weight: Option<&dyn Fn(Point) -> f64>,
) -> Result<f64> {
    let gbar = |x: Point| averaged_metric(family, x, options.time_nodes);
    let rho = |x: Point| family.density(x);
    mixing_area(region, &gbar, &rho, weight, options.boundary_nodes)
}
