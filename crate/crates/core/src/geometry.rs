//! Planar primitives: points, vectors, the quarter-turn rotation, barycentric
//! and frame coordinates, orientation and point location.
//!
//! Points are row vectors `[x, y]`; the rotation `R = [[0, 1], [-1, 0]]` acts
//! by right multiplication, so `(dx, dy) R = (-dy, dx)`.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::Mesh;

/// Relative area threshold: a triangle is degenerate when
/// `|signed_area| <= AREA_EPS * longest_edge^2`.
pub const AREA_EPS: f64 = 1e-12;
/// Relative length threshold for coincident frame points.
pub const LEN_EPS: f64 = 1e-12;
/// Barycentric slack accepted by [`locate`].
pub const LOCATE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("degenerate triangle")]
    DegenerateTriangle,
    #[error("coincident frame points")]
    CoincidentPoints,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vector {
    pub dx: f64,
    pub dy: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Cartesian coordinate `x^[j]` for `j = 1, 2`.
    pub fn coord(&self, j: usize) -> f64 {
        match j {
            1 => self.x,
            2 => self.y,
            _ => panic!("coordinate index {j} out of range"),
        }
    }

    pub fn to_vector(self) -> Vector {
        Vector::new(self.x, self.y)
    }

    /// Affine combination `(1 - t) self + t other`.
    pub fn lerp(self, other: Point, t: f64) -> Point {
        Point::new(
            (1.0 - t) * self.x + t * other.x,
            (1.0 - t) * self.y + t * other.y,
        )
    }
}

impl Vector {
    pub const ZERO: Vector = Vector { dx: 0.0, dy: 0.0 };

    pub const fn new(dx: f64, dy: f64) -> Self {
        Self { dx, dy }
    }

    /// Canonical frame vector `e^[i]`; `e^[0]` is the zero vector.
    pub fn frame(i: usize) -> Vector {
        match i {
            0 => Vector::ZERO,
            1 => Vector::new(1.0, 0.0),
            2 => Vector::new(0.0, 1.0),
            _ => panic!("frame index {i} out of range"),
        }
    }

    pub fn dot(self, other: Vector) -> f64 {
        self.dx * other.dx + self.dy * other.dy
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.dx.hypot(self.dy)
    }

    pub fn coord(&self, j: usize) -> f64 {
        match j {
            1 => self.dx,
            2 => self.dy,
            _ => panic!("coordinate index {j} out of range"),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.dx.is_finite() && self.dy.is_finite()
    }
}

impl Sub for Point {
    type Output = Vector;
    fn sub(self, rhs: Point) -> Vector {
        Vector::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Add<Vector> for Point {
    type Output = Point;
    fn add(self, rhs: Vector) -> Point {
        Point::new(self.x + rhs.dx, self.y + rhs.dy)
    }
}

impl Add for Vector {
    type Output = Vector;
    fn add(self, rhs: Vector) -> Vector {
        Vector::new(self.dx + rhs.dx, self.dy + rhs.dy)
    }
}

impl Sub for Vector {
    type Output = Vector;
    fn sub(self, rhs: Vector) -> Vector {
        Vector::new(self.dx - rhs.dx, self.dy - rhs.dy)
    }
}

impl Neg for Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        Vector::new(-self.dx, -self.dy)
    }
}

impl Mul<f64> for Vector {
    type Output = Vector;
    fn mul(self, rhs: f64) -> Vector {
        Vector::new(self.dx * rhs, self.dy * rhs)
    }
}

impl Mul<Vector> for f64 {
    type Output = Vector;
    fn mul(self, rhs: Vector) -> Vector {
        rhs * self
    }
}

/// `det(u, v) = u_x v_y - v_x u_y`.
pub fn det(u: Vector, v: Vector) -> f64 {
    u.dx * v.dy - v.dx * u.dy
}

/// Right multiplication by the quarter-turn matrix `R`.
pub fn rot90(v: Vector) -> Vector {
    Vector::new(-v.dy, v.dx)
}

/// A triangle with vertices `a`, `b` and a distinguished vertex `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Triangle {
    pub a: Point,
    pub b: Point,
    pub p: Point,
}

impl Triangle {
    pub const fn new(a: Point, b: Point, p: Point) -> Self {
        Self { a, b, p }
    }

    pub fn longest_edge(&self) -> f64 {
        let ab = (self.b - self.a).norm();
        let bp = (self.p - self.b).norm();
        let pa = (self.a - self.p).norm();
        ab.max(bp).max(pa)
    }

    /// Same as `longest_edge`; triangles are scaled by their diameter.
    pub fn diameter(&self) -> f64 {
        self.longest_edge()
    }

    pub fn is_degenerate(&self) -> bool {
        let l = self.longest_edge();
        // NaN areas count as degenerate
        signed_area(self).abs().partial_cmp(&(AREA_EPS * l * l)) != Some(std::cmp::Ordering::Greater)
    }

    pub fn ensure_non_degenerate(&self) -> Result<(), GeometryError> {
        if self.is_degenerate() {
            Err(GeometryError::DegenerateTriangle)
        } else {
            Ok(())
        }
    }

    pub fn centroid(&self) -> Point {
        Point::new(
            (self.a.x + self.b.x + self.p.x) / 3.0,
            (self.a.y + self.b.y + self.p.y) / 3.0,
        )
    }

    /// Point with barycentric weights `(la, lb, lp)`.
    pub fn point_at(&self, la: f64, lb: f64, lp: f64) -> Point {
        Point::new(
            la * self.a.x + lb * self.b.x + lp * self.p.x,
            la * self.a.y + lb * self.b.y + lp * self.p.y,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarycentricTriple {
    pub lam_a: f64,
    pub lam_b: f64,
    pub lam_p: f64,
}

impl BarycentricTriple {
    pub fn min(&self) -> f64 {
        self.lam_a.min(self.lam_b).min(self.lam_p)
    }

    pub fn clamped(&self) -> Self {
        Self {
            lam_a: self.lam_a.clamp(0.0, 1.0),
            lam_b: self.lam_b.clamp(0.0, 1.0),
            lam_p: self.lam_p.clamp(0.0, 1.0),
        }
    }
}

/// `1/2 det(b - a, p - a)`; positive iff `(a, b, p)` is counterclockwise.
pub fn signed_area(t: &Triangle) -> f64 {
    0.5 * det(t.b - t.a, t.p - t.a)
}

/// Barycentric coordinate of `w` in the triangle `{u, v, w}` evaluated at `x`,
/// in inner-product form `<(v - u)R | x - u> / <(v - u)R | w - u>`.
fn lambda_inner(u: Point, v: Point, w: Point, x: Point) -> f64 {
    let n = rot90(v - u);
    n.dot(x - u) / n.dot(w - u)
}

/// Barycentric coordinates of `x` with respect to `t`.
pub fn barycentric(t: &Triangle, x: Point) -> Result<BarycentricTriple, GeometryError> {
    t.ensure_non_degenerate()?;
    Ok(BarycentricTriple {
        lam_a: lambda_inner(t.b, t.p, t.a, x),
        lam_b: lambda_inner(t.p, t.a, t.b, x),
        lam_p: lambda_inner(t.a, t.b, t.p, x),
    })
}

/// Determinant-ratio form `det(x - u, x - v) / det(w - u, w - v)`.
pub fn barycentric_det(t: &Triangle, x: Point) -> Result<BarycentricTriple, GeometryError> {
    t.ensure_non_degenerate()?;
    let ratio = |u: Point, v: Point, w: Point| det(x - u, x - v) / det(w - u, w - v);
    Ok(BarycentricTriple {
        lam_a: ratio(t.b, t.p, t.a),
        lam_b: ratio(t.p, t.a, t.b),
        lam_p: ratio(t.a, t.b, t.p),
    })
}

/// Constant gradient `g^w_{u,v} = (u - v)R / <(u - v)R | w - u>` of the
/// barycentric coordinate of `w` in the triangle `{u, v, w}`.
pub fn lambda_gradient(u: Point, v: Point, w: Point) -> Vector {
    let n = rot90(u - v);
    n * (1.0 / n.dot(w - u))
}

/// Returns `(grad lam_a, grad lam_b, grad lam_p)`.
pub fn barycentric_gradients(t: &Triangle) -> Result<(Vector, Vector, Vector), GeometryError> {
    t.ensure_non_degenerate()?;
    Ok((
        lambda_gradient(t.b, t.p, t.a),
        lambda_gradient(t.a, t.p, t.b),
        lambda_gradient(t.a, t.b, t.p),
    ))
}

/// Coordinates `(xi, xibar)` of `v` in the orthogonal frame with origin `a`
/// spanned by `p - a` and `(p - a)R`, normalized by `|p - a|^2`.
pub fn frame_coords(p: Point, a: Point, v: Point) -> Result<(f64, f64), GeometryError> {
    let d = p - a;
    let scale = p.x.abs().max(p.y.abs()).max(a.x.abs()).max(a.y.abs());
    let len = d.norm();
    if len == 0.0 || len <= LEN_EPS * scale {
        return Err(GeometryError::CoincidentPoints);
    }
    let n2 = d.norm_sq();
    let w = v - a;
    Ok((w.dot(d) / n2, w.dot(rot90(d)) / n2))
}

/// Result of a successful [`locate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Location {
    pub triangle: usize,
    /// Clamped to `[0, 1]`; for reporting only.
    pub barycentric: BarycentricTriple,
}

/// Lowest-index triangle whose barycentric coordinates at `x` are all
/// `>= -LOCATE_EPS`, or `None` when `x` lies outside the mesh.
pub fn locate(mesh: &Mesh, x: Point) -> Option<Location> {
    (0..mesh.num_triangles()).find_map(|k| {
        let tri = mesh.triangle(k);
        let bc = barycentric(&tri, x).ok()?;
        (bc.min() >= -LOCATE_EPS).then(|| Location {
            triangle: k,
            barycentric: bc.clamped(),
        })
    })
}
