use serde::{Deserialize, Serialize};

use super::area::ClosedCurve;
use crate::error::{Error, Result};
use crate::linalg::{cross, norm, sub, Point};
use crate::quadrature::GaussLegendre;

/// Axis-aligned rectangle `[x_min, x_max] × [y_min, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        Rect { x_min, x_max, y_min, y_max }
    }

    pub fn centered(half_width: f64) -> Self {
        Rect::new(-half_width, half_width, -half_width, half_width)
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, x: Point) -> bool {
        x[0] >= self.x_min && x[0] <= self.x_max && x[1] >= self.y_min && x[1] <= self.y_max
    }

    pub fn contains_rect(&self, o: &Rect) -> bool {
        o.x_min >= self.x_min && o.x_max <= self.x_max && o.y_min >= self.y_min && o.y_max <= self.y_max
    }

    /// Distance from the origin-centred disk of radius `r` to the rectangle
    /// boundary (negative when the disk sticks out).
    pub fn margin_around_disk(&self, r: f64) -> f64 {
        (self.x_max - r).min(-r - self.x_min).min(self.y_max - r).min(-r - self.y_min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Disk { center: Point, radius: f64 },
    /// Ellipse with semi-axes `(a, b)` rotated by `angle` radians.
    Ellipse { center: Point, semi_axes: [f64; 2], angle: f64 },
    /// Simple polygon, stored counter-clockwise.
    Polygon { vertices: Vec<Point> },
}

/// Compact planar set bounded by a simple closed curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    shape: Shape,
}

fn signed_area(v: &[Point]) -> f64 {
    let n = v.len();
    0.5 * (0..n).map(|i| cross(v[i], v[(i + 1) % n])).sum::<f64>()
}

fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = cross(sub(q2, q1), sub(p1, q1));
    let d2 = cross(sub(q2, q1), sub(p2, q1));
    let d3 = cross(sub(p2, p1), sub(q1, p1));
    let d4 = cross(sub(p2, p1), sub(q2, p1));
    (d1 > 0.0) != (d2 > 0.0) && (d3 > 0.0) != (d4 > 0.0)
}

impl Region {
    pub fn disk(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidRegion(format!("disk radius must be positive, got {radius}")));
        }
        Ok(Region { shape: Shape::Disk { center, radius } })
    }

    pub fn ellipse(center: Point, semi_axes: [f64; 2], angle: f64) -> Result<Self> {
        if !semi_axes.iter().all(|&a| a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidRegion(format!("ellipse semi-axes must be positive, got {semi_axes:?}")));
        }
        Ok(Region { shape: Shape::Ellipse { center, semi_axes, angle } })
    }

    /// Axis-aligned square with lower-left corner `corner`.
    pub fn square(corner: Point, side: f64) -> Result<Self> {
        let [x, y] = corner;
        Region::polygon(vec![[x, y], [x + side, y], [x + side, y + side], [x, y + side]])
    }

    pub fn polygon(mut vertices: Vec<Point>) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::InvalidRegion("polygon needs at least 3 vertices".into()));
        }
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidRegion("polygon vertex is not finite".into()));
        }
        for i in 0..n {
            if norm(sub(vertices[(i + 1) % n], vertices[i])) == 0.0 {
                return Err(Error::InvalidRegion(format!("polygon edge {i} is degenerate")));
            }
        }
        for i in 0..n {
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                if segments_intersect(vertices[i], vertices[(i + 1) % n], vertices[j], vertices[(j + 1) % n]) {
                    return Err(Error::InvalidRegion(format!("polygon edges {i} and {j} cross")));
                }
            }
        }
        let a = signed_area(&vertices);
        if a == 0.0 {
            return Err(Error::InvalidRegion("polygon has zero area".into()));
        }
        if a < 0.0 {
            vertices.reverse();
        }
        Ok(Region { shape: Shape::Polygon { vertices } })
    }

    pub fn from_shape(shape: Shape) -> Result<Self> {
        match shape {
            Shape::Disk { center, radius } => Region::disk(center, radius),
            Shape::Ellipse { center, semi_axes, angle } => Region::ellipse(center, semi_axes, angle),
            Shape::Polygon { vertices } => Region::polygon(vertices),
        }
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn contains(&self, x: Point) -> bool {
        match &self.shape {
            Shape::Disk { center, radius } => norm(sub(x, *center)) < *radius,
            Shape::Ellipse { center, semi_axes, angle } => {
                let d = sub(x, *center);
                let (s, c) = angle.sin_cos();
                let u = c * d[0] + s * d[1];
                let v = -s * d[0] + c * d[1];
                (u / semi_axes[0]).powi(2) + (v / semi_axes[1]).powi(2) < 1.0
            }
            Shape::Polygon { vertices } => {
                let n = vertices.len();
                let mut inside = false;
                let mut j = n - 1;
                for i in 0..n {
                    let (pi, pj) = (vertices[i], vertices[j]);
                    if (pi[1] > x[1]) != (pj[1] > x[1]) {
                        let xc = pj[0] + (x[1] - pj[1]) * (pi[0] - pj[0]) / (pi[1] - pj[1]);
                        if x[0] < xc {
                            inside = !inside;
                        }
                    }
                    j = i;
                }
                inside
            }
        }
    }

    pub fn bounding_box(&self) -> Rect {
        match &self.shape {
            Shape::Disk { center, radius } => {
                Rect::new(center[0] - radius, center[0] + radius, center[1] - radius, center[1] + radius)
            }
            Shape::Ellipse { center, semi_axes, angle } => {
                let (s, c) = angle.sin_cos();
                let hx = ((semi_axes[0] * c).powi(2) + (semi_axes[1] * s).powi(2)).sqrt();
                let hy = ((semi_axes[0] * s).powi(2) + (semi_axes[1] * c).powi(2)).sqrt();
                Rect::new(center[0] - hx, center[0] + hx, center[1] - hy, center[1] + hy)
            }
            Shape::Polygon { vertices } => {
                let mut r = Rect::new(f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
                for v in vertices {
                    r.x_min = r.x_min.min(v[0]);
                    r.x_max = r.x_max.max(v[0]);
                    r.y_min = r.y_min.min(v[1]);
                    r.y_max = r.y_max.max(v[1]);
                }
                r
            }
        }
    }

    /// `max |x|` over the region.
    pub fn max_radius(&self) -> f64 {
        match &self.shape {
            Shape::Disk { center, radius } => norm(*center) + radius,
            Shape::Ellipse { center, semi_axes, .. } => norm(*center) + semi_axes[0].max(semi_axes[1]),
            Shape::Polygon { vertices } => vertices.iter().map(|&v| norm(v)).fold(0.0, f64::max),
        }
    }

    /// Characteristic length, used to scale validation offsets.
    pub fn diameter(&self) -> f64 {
        let b = self.bounding_box();
        b.width().hypot(b.height())
    }

    /// Euclidean area.
    pub fn area(&self) -> f64 {
        match &self.shape {
            Shape::Disk { radius, .. } => std::f64::consts::PI * radius * radius,
            Shape::Ellipse { semi_axes, .. } => std::f64::consts::PI * semi_axes[0] * semi_axes[1],
            Shape::Polygon { vertices } => signed_area(vertices),
        }
    }

    /// Euclidean perimeter.
    pub fn perimeter(&self) -> f64 {
        integrate_boundary(self, 256, |_, tau| norm(tau))
    }

    /// `ω(S) = ∫_S ρ dx`, via Green's theorem `∮ P dy` with
    /// `P(x, y) = ∫_{x₀}^{x} ρ(s, y) ds`.
    pub fn mass(&self, density: &dyn Fn(Point) -> f64) -> f64 {
        let x0 = self.bounding_box().x_min;
        let inner = GaussLegendre::new(16);
        integrate_boundary(self, 256, |p, tau| {
            let (a, b) = (x0, p[0]);
            let panels = 4;
            let h = (b - a) / panels as f64;
            let mut col = 0.0;
            for k in 0..panels {
                let lo = a + k as f64 * h;
                col += inner.integrate(lo, lo + h, |s| density([s, p[1]]));
            }
            col * tau[1]
        })
    }

    /// Checks the curve and indicator invariants and that the region sits
    /// strictly inside the ball of the given radius.
    pub fn validate(&self, ball_radius: f64) -> Result<()> {
        let r = self.max_radius();
        if ball_radius.is_finite() && r >= ball_radius {
            return Err(Error::InvalidRegion(format!(
                "region reaches radius {r}, not strictly inside the ball of radius {ball_radius}"
            )));
        }
        let delta = 1e-4 * self.diameter();
        for piece in 0..self.piece_count() {
            for k in 0..64 {
                let s = (k as f64 + 0.5) / 64.0;
                let p = self.point(piece, s);
                let tau = self.tangent(piece, s);
                let len = norm(tau);
                if !(len > 0.0 && len.is_finite()) {
                    return Err(Error::InvalidRegion(format!("tangent vanishes at piece {piece}, s = {s}")));
                }
                // outward normal of a counter-clockwise curve
                let n = [tau[1] / len, -tau[0] / len];
                let inside = [p[0] - delta * n[0], p[1] - delta * n[1]];
                let outside = [p[0] + delta * n[0], p[1] + delta * n[1]];
                if !self.contains(inside) || self.contains(outside) {
                    return Err(Error::InvalidRegion(format!(
                        "indicator disagrees with the boundary near ({}, {})",
                        p[0], p[1]
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `∮ f(γ(s), γ'(s)) ds` with composite 4-point Gauss–Legendre panels.
pub(crate) fn integrate_boundary(
    curve: &dyn ClosedCurve,
    panels_total: usize,
    mut f: impl FnMut(Point, Point) -> f64,
) -> f64 {
    let rule = GaussLegendre::new(4);
    let pieces = curve.piece_count();
    let panels = (panels_total / pieces).max(1);
    let mut sum = 0.0;
    for piece in 0..pieces {
        for k in 0..panels {
            let lo = k as f64 / panels as f64;
            let hi = (k + 1) as f64 / panels as f64;
            for (s, w) in rule.on(lo, hi) {
                sum += w * f(curve.point(piece, s), curve.tangent(piece, s));
            }
        }
    }
    sum
}

impl ClosedCurve for Region {
    fn piece_count(&self) -> usize {
        match &self.shape {
            Shape::Polygon { vertices } => vertices.len(),
            _ => 1,
        }
    }

    fn point(&self, piece: usize, s: f64) -> Point {
        use std::f64::consts::TAU;
        match &self.shape {
            Shape::Disk { center, radius } => {
                let (sn, cs) = (TAU * s).sin_cos();
                [center[0] + radius * cs, center[1] + radius * sn]
            }
            Shape::Ellipse { center, semi_axes, angle } => {
                let (sn, cs) = (TAU * s).sin_cos();
                let (sa, ca) = angle.sin_cos();
                let u = semi_axes[0] * cs;
                let v = semi_axes[1] * sn;
                [center[0] + ca * u - sa * v, center[1] + sa * u + ca * v]
            }
            Shape::Polygon { vertices } => {
                let a = vertices[piece];
                let b = vertices[(piece + 1) % vertices.len()];
                [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
            }
        }
    }

    fn tangent(&self, piece: usize, s: f64) -> Point {
        use std::f64::consts::TAU;
        match &self.shape {
            Shape::Disk { radius, .. } => {
                let (sn, cs) = (TAU * s).sin_cos();
                [-TAU * radius * sn, TAU * radius * cs]
            }
            Shape::Ellipse { semi_axes, angle, .. } => {
                let (sn, cs) = (TAU * s).sin_cos();
                let (sa, ca) = angle.sin_cos();
                let du = -TAU * semi_axes[0] * sn;
                let dv = TAU * semi_axes[1] * cs;
                [ca * du - sa * dv, sa * du + ca * dv]
            }
            Shape::Polygon { vertices } => {
                let a = vertices[piece];
                let b = vertices[(piece + 1) % vertices.len()];
                sub(b, a)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_indicator_and_validation() {
        let d = Region::disk([0.1, -0.2], 0.5).unwrap();
        assert!(d.contains([0.1, -0.2]));
        assert!(!d.contains([0.7, -0.2]));
        d.validate(1.0).unwrap();
        assert!(d.validate(0.7).is_err());
    }

    #[test]
    fn clockwise_polygon_is_reoriented() {
        let p = Region::polygon(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!((p.area() - 1.0).abs() < 1e-15);
        p.validate(f64::INFINITY).unwrap();
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(Region::disk([0.0, 0.0], 0.0).is_err());
        assert!(Region::ellipse([0.0, 0.0], [1.0, -1.0], 0.0).is_err());
        assert!(Region::polygon(vec![[0.0, 0.0], [1.0, 0.0]]).is_err());
        // bow tie
        assert!(Region::polygon(vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]).is_err());
    }

    #[test]
    fn perimeters_and_masses() {
        let d = Region::disk([0.0, 0.0], 1.0).unwrap();
        assert!((d.perimeter() - std::f64::consts::TAU).abs() < 1e-12);
        assert!((d.mass(&|_| 1.0) - std::f64::consts::PI).abs() < 1e-12);
        let e = Region::ellipse([0.3, 0.1], [1.0, 0.5], 0.4).unwrap();
        assert!((e.mass(&|_| 1.0) - e.area()).abs() < 1e-12);
        e.validate(f64::INFINITY).unwrap();
        let sq = Region::square([0.0, 0.0], 1.0).unwrap();
        assert!((sq.perimeter() - 4.0).abs() < 1e-14);
        // ρ = 1 + x on the unit square has mass 3/2
        assert!((sq.mass(&|p| 1.0 + p[0]) - 1.5).abs() < 1e-13);
    }

    #[test]
    fn ellipse_bounding_box_contains_boundary() {
        let e = Region::ellipse([0.0, 0.0], [1.0, 0.3], 0.7).unwrap();
        let b = e.bounding_box();
        for k in 0..100 {
            let p = e.point(0, k as f64 / 100.0);
            assert!(b.contains(p));
        }
    }
}
