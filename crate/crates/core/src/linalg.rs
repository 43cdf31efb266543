//! Small fixed-size linear algebra for 2×2 tensors.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Symmetric 2×2 matrix with no definiteness requirement.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Sym2 {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl Sym2 {
    pub const ZERO: Sym2 = Sym2 { a11: 0.0, a12: 0.0, a22: 0.0 };
    pub const IDENTITY: Sym2 = Sym2 { a11: 1.0, a12: 0.0, a22: 1.0 };

    pub const fn new(a11: f64, a12: f64, a22: f64) -> Self {
        Sym2 { a11, a12, a22 }
    }

    pub fn diag(a11: f64, a22: f64) -> Self {
        Sym2 { a11, a12: 0.0, a22 }
    }

    /// `u vᵀ + v uᵀ`.
    pub fn sym_outer(u: Point, v: Point) -> Self {
        Sym2 {
            a11: 2.0 * u[0] * v[0],
            a12: u[0] * v[1] + u[1] * v[0],
            a22: 2.0 * u[1] * v[1],
        }
    }

    /// `v vᵀ`.
    pub fn outer(v: Point) -> Self {
        Sym2 { a11: v[0] * v[0], a12: v[0] * v[1], a22: v[1] * v[1] }
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a12
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    pub fn scale(&self, s: f64) -> Self {
        Sym2 { a11: s * self.a11, a12: s * self.a12, a22: s * self.a22 }
    }

    pub fn mul_vec(&self, v: Point) -> Point {
        [self.a11 * v[0] + self.a12 * v[1], self.a12 * v[0] + self.a22 * v[1]]
    }

    pub fn quad_form(&self, v: Point) -> f64 {
        self.a11 * v[0] * v[0] + 2.0 * self.a12 * v[0] * v[1] + self.a22 * v[1] * v[1]
    }

    pub fn bilinear(&self, u: Point, v: Point) -> f64 {
        dot(u, self.mul_vec(v))
    }

    pub fn eigenvalues(&self) -> (f64, f64) {
        let m = 0.5 * (self.a11 + self.a22);
        let d = (0.25 * (self.a11 - self.a22).powi(2) + self.a12 * self.a12).sqrt();
        (m - d, m + d)
    }

    pub fn max_abs_diff(&self, other: &Sym2) -> f64 {
        (self.a11 - other.a11)
            .abs()
            .max((self.a12 - other.a12).abs())
            .max((self.a22 - other.a22).abs())
    }

    pub fn max_abs(&self) -> f64 {
        self.a11.abs().max(self.a12.abs()).max(self.a22.abs())
    }

    pub fn is_finite(&self) -> bool {
        self.a11.is_finite() && self.a12.is_finite() && self.a22.is_finite()
    }

    /// `Cᵀ S C`.
    pub fn congruence(&self, c: &Mat2) -> Sym2 {
        let sc = Mat2::from(*self).mul(c);
        let r = c.transpose().mul(&sc);
        Sym2 { a11: r.m[0][0], a12: 0.5 * (r.m[0][1] + r.m[1][0]), a22: r.m[1][1] }
    }
}

impl Add for Sym2 {
    type Output = Sym2;
    fn add(self, o: Sym2) -> Sym2 {
        Sym2 { a11: self.a11 + o.a11, a12: self.a12 + o.a12, a22: self.a22 + o.a22 }
    }
}

impl Sub for Sym2 {
    type Output = Sym2;
    fn sub(self, o: Sym2) -> Sym2 {
        Sym2 { a11: self.a11 - o.a11, a12: self.a12 - o.a12, a22: self.a22 - o.a22 }
    }
}

impl Mul<Sym2> for f64 {
    type Output = Sym2;
    fn mul(self, s: Sym2) -> Sym2 {
        s.scale(self)
    }
}

/// Symmetric positive-definite 2×2 matrix. Only constructible from entries
/// with `a11 > 0` and `det > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(into = "Sym2")]
pub struct Spd2(Sym2);

impl From<Spd2> for Sym2 {
    fn from(s: Spd2) -> Sym2 {
        s.0
    }
}

impl TryFrom<Sym2> for Spd2 {
    type Error = Error;
    fn try_from(s: Sym2) -> Result<Spd2> {
        Spd2::new(s.a11, s.a12, s.a22)
    }
}

impl Spd2 {
    pub const IDENTITY: Spd2 = Spd2(Sym2::IDENTITY);

    pub fn new(a11: f64, a12: f64, a22: f64) -> Result<Self> {
        let s = Sym2 { a11, a12, a22 };
        if s.is_finite() && a11 > 0.0 && s.det() > 0.0 {
            Ok(Spd2(s))
        } else {
            Err(Error::NotPositiveDefinite { a11, a12, a22 })
        }
    }

    pub fn diag(a11: f64, a22: f64) -> Result<Self> {
        Spd2::new(a11, 0.0, a22)
    }

    pub fn sym(&self) -> Sym2 {
        self.0
    }

    pub fn a11(&self) -> f64 {
        self.0.a11
    }
    pub fn a12(&self) -> f64 {
        self.0.a12
    }
    pub fn a22(&self) -> f64 {
        self.0.a22
    }

    pub fn det(&self) -> f64 {
        self.0.det()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.0.eigenvalues().1
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.0.eigenvalues().0
    }

    pub fn inverse(&self) -> Spd2 {
        let d = self.det();
        Spd2(Sym2 { a11: self.0.a22 / d, a12: -self.0.a12 / d, a22: self.0.a11 / d })
    }

    pub fn scale(&self, s: f64) -> Result<Spd2> {
        Spd2::try_from(self.0.scale(s))
    }

    /// Symmetric positive-definite square root, via `√A = (A + √det·I)/√(tr A + 2√det)`.
    pub fn sqrt(&self) -> Spd2 {
        let sd = self.det().sqrt();
        let t = (self.trace() + 2.0 * sd).sqrt();
        Spd2(Sym2 { a11: (self.0.a11 + sd) / t, a12: self.0.a12 / t, a22: (self.0.a22 + sd) / t })
    }

    pub fn mul_vec(&self, v: Point) -> Point {
        self.0.mul_vec(v)
    }

    pub fn quad_form(&self, v: Point) -> f64 {
        self.0.quad_form(v)
    }

    pub fn to_mat(&self) -> Mat2 {
        Mat2::from(self.0)
    }

    pub fn max_abs_diff(&self, other: &Spd2) -> f64 {
        self.0.max_abs_diff(&other.0)
    }
}

/// General 2×2 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub m: [[f64; 2]; 2],
}

impl From<Sym2> for Mat2 {
    fn from(s: Sym2) -> Mat2 {
        Mat2 { m: [[s.a11, s.a12], [s.a12, s.a22]] }
    }
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 { m: [[1.0, 0.0], [0.0, 1.0]] };
    pub const ZERO: Mat2 = Mat2 { m: [[0.0, 0.0], [0.0, 0.0]] };

    pub fn new(m00: f64, m01: f64, m10: f64, m11: f64) -> Self {
        Mat2 { m: [[m00, m01], [m10, m11]] }
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn transpose(&self) -> Mat2 {
        Mat2::new(self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1])
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        Some(Mat2::new(self.m[1][1] / d, -self.m[0][1] / d, -self.m[1][0] / d, self.m[0][0] / d))
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        let mut r = [[0.0; 2]; 2];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.m[i][0] * o.m[0][j] + self.m[i][1] * o.m[1][j];
            }
        }
        Mat2 { m: r }
    }

    pub fn add(&self, o: &Mat2) -> Mat2 {
        Mat2::new(
            self.m[0][0] + o.m[0][0],
            self.m[0][1] + o.m[0][1],
            self.m[1][0] + o.m[1][0],
            self.m[1][1] + o.m[1][1],
        )
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        Mat2::new(s * self.m[0][0], s * self.m[0][1], s * self.m[1][0], s * self.m[1][1])
    }

    pub fn mul_vec(&self, v: Point) -> Point {
        [self.m[0][0] * v[0] + self.m[0][1] * v[1], self.m[1][0] * v[0] + self.m[1][1] * v[1]]
    }

    /// `Mᵀ M`, symmetrized.
    pub fn gram(&self) -> Sym2 {
        let g = self.transpose().mul(self);
        Sym2 { a11: g.m[0][0], a12: 0.5 * (g.m[0][1] + g.m[1][0]), a22: g.m[1][1] }
    }

    /// `M Mᵀ`, symmetrized.
    pub fn outer_gram(&self) -> Sym2 {
        self.transpose().gram()
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|v| v.is_finite())
    }
}

pub fn dot(u: Point, v: Point) -> f64 {
    u[0] * v[0] + u[1] * v[1]
}

pub fn norm(v: Point) -> f64 {
    v[0].hypot(v[1])
}

pub fn sub(u: Point, v: Point) -> Point {
    [u[0] - v[0], u[1] - v[1]]
}

pub fn add(u: Point, v: Point) -> Point {
    [u[0] + v[0], u[1] + v[1]]
}

pub fn axpy(a: f64, x: Point, y: Point) -> Point {
    [a * x[0] + y[0], a * x[1] + y[1]]
}

/// Quarter-turn rotation `J v = (−v₂, v₁)`.
pub fn perp(v: Point) -> Point {
    [-v[1], v[0]]
}

/// `det[u, v]`.
pub fn cross(u: Point, v: Point) -> f64 {
    u[0] * v[1] - u[1] * v[0]
}
