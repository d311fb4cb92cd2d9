//! Numerical checks of the scheme's guarantees: C1 continuity across edges,
//! vertex interpolation, edge shape uniformity, behaviour under affine maps,
//! polynomial degree, and a finite-difference oracle for gradients.
//!
//! Every randomized check takes an explicit seed and is deterministic for it.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::basis::{
    basis_eval, BasisKind, BivariatePoly, ConstantK, DensePoly, KProvider, ProcedureConfig,
    RProvider,
};
use crate::geometry::{rot90, GeometryError, Point, Triangle, Vector};
use crate::mesh::{adjacent_pairs, random_data, Mesh, VertexData};
use crate::shape::{make_shape_family, ShapeFamily, UnivariatePolynomial};
use crate::spline::{SplineError, SplineField};

pub const DEFAULT_SEED: u64 = 0x7215_9C1E_5EED_0001;

pub const C1_TOLERANCE: f64 = 1e-9;
pub const FD_PROBE_TOLERANCE: f64 = 1e-5;
pub const VERTEX_TOLERANCE: f64 = 1e-10;
pub const EDGE_SHAPE_TOLERANCE: f64 = 1e-11;
pub const INVARIANCE_TOLERANCE: f64 = 1e-9;
/// A shear counts as breaking invariance above this deviation.
pub const SHEAR_THRESHOLD: f64 = 1e-3;
pub const DEGREE_TOLERANCE: f64 = 1e-7;

/// Random triangles with `area / diameter^2` below this are redrawn.
const MIN_SHAPE_RATIO: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("affine map is singular")]
    SingularMap,
    #[error(transparent)]
    Spline(#[from] SplineError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Outcome of one check. `per_edge` holds one entry per checked item (edge,
/// vertex, triangle or chord depending on the check).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report<T> {
    pub check: String,
    pub max_jump: f64,
    pub per_edge: Vec<T>,
    pub pass: bool,
    pub tolerance: f64,
}

impl<T: Serialize> Report<T> {
    fn finish(check: &str, per_edge: Vec<T>, max_jump: f64, tolerance: f64) -> Self {
        Self {
            check: check.to_string(),
            max_jump,
            pass: max_jump <= tolerance,
            per_edge,
            tolerance,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdgeJump {
    pub edge: [usize; 2],
    pub triangles: [usize; 2],
    pub samples: usize,
    pub value_jump: f64,
    pub gradient_jump: f64,
}

pub type C1Report = Report<EdgeJump>;

impl C1Report {
    pub fn max_value_jump(&self) -> f64 {
        self.per_edge.iter().map(|e| e.value_jump).fold(0.0, f64::max)
    }

    pub fn max_gradient_jump(&self) -> f64 {
        self.per_edge.iter().map(|e| e.gradient_jump).fold(0.0, f64::max)
    }
}

/// Evaluates both polynomial pieces at `samples` interior points
/// `u + k/(samples+1) (v - u)` of every interior edge. `max_jump` is the
/// larger of the value and Euclidean gradient jumps.
pub fn check_c1(field: &SplineField, samples: usize, tolerance: f64) -> Result<C1Report, SplineError> {
    let mesh = field.mesh();
    let mut per_edge = Vec::new();
    for pair in adjacent_pairs(mesh) {
        let (u, v) = (mesh.vertices()[pair.edge.0], mesh.vertices()[pair.edge.1]);
        let mut value_jump: f64 = 0.0;
        let mut gradient_jump: f64 = 0.0;
        for k in 1..=samples {
            let x = u.lerp(v, k as f64 / (samples + 1) as f64);
            let l = field.eval_in_triangle(pair.first, x)?;
            let r = field.eval_in_triangle(pair.second, x)?;
            value_jump = value_jump.max((l.value - r.value).abs());
            gradient_jump = gradient_jump.max((l.grad - r.grad).norm());
        }
        per_edge.push(EdgeJump {
            edge: [pair.edge.0, pair.edge.1],
            triangles: [pair.first, pair.second],
            samples,
            value_jump,
            gradient_jump,
        });
    }
    let max = per_edge
        .iter()
        .map(|e| e.value_jump.max(e.gradient_jump))
        .fold(0.0, f64::max);
    Ok(Report::finish("c1", per_edge, max, tolerance))
}

/// Continuity of the assembled field's gradient probed with finite
/// differences only. At each sample point on an interior edge the gradient is
/// estimated on both sides from central differences at offsets `delta` and
/// `2 delta` along the normal, extrapolated back to the edge. Jumps are
/// relative to `max(|gradient|, 1)`.
pub fn probe_c1_fd(field: &SplineField, samples: usize) -> Result<C1Report, SplineError> {
    let mesh = field.mesh();
    let mut per_edge = Vec::new();
    for pair in adjacent_pairs(mesh) {
        let (u, v) = (mesh.vertices()[pair.edge.0], mesh.vertices()[pair.edge.1]);
        let len = (v - u).norm();
        let normal = rot90(v - u) * (1.0 / len);
        let delta = 1e-5 * len;
        let h = delta / 4.0;
        let mut gradient_jump: f64 = 0.0;
        for k in 1..=samples {
            let x = u.lerp(v, k as f64 / (samples + 1) as f64);
            let side = |sign: f64| -> Result<Vector, SplineError> {
                let mut g = [Vector::ZERO; 2];
                for (i, m) in [1.0, 2.0].into_iter().enumerate() {
                    let y = x + normal * (sign * m * delta);
                    g[i] = fd_gradient_checked(|z| crate::spline::spline_value(field, z), y, h)?;
                }
                Ok(g[0] * 2.0 - g[1])
            };
            let gl = side(1.0)?;
            let gr = side(-1.0)?;
            let scale = gl.norm().max(gr.norm()).max(1.0);
            gradient_jump = gradient_jump.max((gl - gr).norm() / scale);
        }
        per_edge.push(EdgeJump {
            edge: [pair.edge.0, pair.edge.1],
            triangles: [pair.first, pair.second],
            samples,
            value_jump: 0.0,
            gradient_jump,
        });
    }
    let max = per_edge.iter().map(|e| e.gradient_jump).fold(0.0, f64::max);
    Ok(Report::finish("c1-fd", per_edge, max, FD_PROBE_TOLERANCE))
}

/// Central-difference gradient of `f` at `x` with step `h`.
pub fn fd_gradient(f: impl Fn(Point) -> f64, x: Point, h: f64) -> Vector {
    assert!(h > 0.0, "step must be positive");
    let dx = (f(Point::new(x.x + h, x.y)) - f(Point::new(x.x - h, x.y))) / (2.0 * h);
    let dy = (f(Point::new(x.x, x.y + h)) - f(Point::new(x.x, x.y - h))) / (2.0 * h);
    Vector::new(dx, dy)
}

fn fd_gradient_checked<E>(
    f: impl Fn(Point) -> Result<f64, E>,
    x: Point,
    h: f64,
) -> Result<Vector, E> {
    let dx = (f(Point::new(x.x + h, x.y))? - f(Point::new(x.x - h, x.y))?) / (2.0 * h);
    let dy = (f(Point::new(x.x, x.y + h))? - f(Point::new(x.x, x.y - h))?) / (2.0 * h);
    Ok(Vector::new(dx, dy))
}

/// `|analytic - fd| / max(|analytic|, 1)`.
pub fn relative_gradient_error(analytic: Vector, fd: Vector) -> f64 {
    (analytic - fd).norm() / analytic.norm().max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VertexDeviation {
    pub vertex: usize,
    pub value_deviation: f64,
    pub gradient_deviation: f64,
}

/// Evaluates every polynomial piece at each of its corners and compares with
/// the vertex data. The tolerance is `1e-10 (1 + max |data|)`.
pub fn check_vertex_conditions(field: &SplineField) -> Result<Report<VertexDeviation>, SplineError> {
    let mesh = field.mesh();
    let data = field.data();
    let mut per_vertex: Vec<VertexDeviation> = (0..mesh.num_vertices())
        .map(|vertex| VertexDeviation {
            vertex,
            value_deviation: 0.0,
            gradient_deviation: 0.0,
        })
        .collect();
    for (k, tri) in mesh.triangles().iter().enumerate() {
        for &i in tri {
            let r = field.eval_in_triangle(k, mesh.vertices()[i])?;
            let d = data[i];
            let e = &mut per_vertex[i];
            e.value_deviation = e.value_deviation.max((r.value - d.f).abs());
            e.gradient_deviation = e
                .gradient_deviation
                .max((r.grad - Vector::new(d.fx, d.fy)).norm());
        }
    }
    let max = per_vertex
        .iter()
        .map(|e| e.value_deviation.max(e.gradient_deviation))
        .fold(0.0, f64::max);
    let scale = data.iter().map(VertexData::max_abs).fold(0.0, f64::max);
    Ok(Report::finish("vertex", per_vertex, max, VERTEX_TOLERANCE * (1.0 + scale)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeShapeItem {
    pub edge: &'static str,
    pub max_deviation: f64,
}

pub const EDGE_SHAPE_SAMPLES: usize = 20;

/// Along both edges through `p`, at `y_t = (1-t) q + t p` for 20 values of
/// `t` in `[0, 1]`, checks `phi(y_t) = Phi(t)` and
/// `psi^(j)(y_t) = x^[j](p - q) Psi(t)`; on the opposite edge checks that all
/// three functions and their gradients vanish.
pub fn check_edge_shape(cfg: &ProcedureConfig, tri: &Triangle) -> Result<Report<EdgeShapeItem>, GeometryError> {
    tri.ensure_non_degenerate()?;
    let shapes = cfg.shapes();
    let (phi, psi) = (shapes.phi(), shapes.psi());
    let ts: Vec<f64> = (0..EDGE_SHAPE_SAMPLES)
        .map(|k| k as f64 / (EDGE_SHAPE_SAMPLES - 1) as f64)
        .collect();
    let mut items = Vec::new();
    for (name, q) in [("a-p", tri.a), ("b-p", tri.b)] {
        let mut dev: f64 = 0.0;
        for &t in &ts {
            let y = q.lerp(tri.p, t);
            for kind in BasisKind::ALL {
                let expected = match kind {
                    BasisKind::Value => phi.eval_f64(t),
                    _ => (tri.p - q).coord(kind.index()) * psi.eval_f64(t),
                };
                let got = basis_eval(cfg, tri, kind, y)?.value;
                dev = dev.max((got - expected).abs());
            }
        }
        items.push(EdgeShapeItem {
            edge: name,
            max_deviation: dev,
        });
    }
    let mut dev: f64 = 0.0;
    for &t in &ts {
        let y = tri.a.lerp(tri.b, t);
        for kind in BasisKind::ALL {
            let r = basis_eval(cfg, tri, kind, y)?;
            dev = dev.max(r.value.abs()).max(r.grad.norm());
        }
    }
    items.push(EdgeShapeItem {
        edge: "a-b",
        max_deviation: dev,
    });
    let max = items.iter().map(|i| i.max_deviation).fold(0.0, f64::max);
    Ok(Report::finish("shape", items, max, EDGE_SHAPE_TOLERANCE))
}

/// How vertex gradients are carried through an affine map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pushforward {
    /// `g (A^T)^-1`, the chain rule for `G(x) = xA + w`.
    #[default]
    ChainRule,
    /// `g A^-1`. Agrees with the chain rule only for symmetric `A`.
    Literal,
}

/// `G(x) = x A + w` with `x` a row vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AffineMap {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
    pub w: Vector,
}

impl AffineMap {
    pub fn new(a11: f64, a12: f64, a21: f64, a22: f64, w: Vector) -> Self {
        Self { a11, a12, a21, a22, w }
    }

    pub fn identity() -> Self {
        Self::new(1.0, 0.0, 0.0, 1.0, Vector::ZERO)
    }

    /// Counterclockwise rotation by `theta`, then translation.
    pub fn rotation(theta: f64, w: Vector) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(c, s, -s, c, w)
    }

    /// `x -> scale * x`, mirrored in the y-axis first when `reflect`, then
    /// rotated by `theta` and translated.
    pub fn similarity(theta: f64, scale: f64, reflect: bool, w: Vector) -> Self {
        let r = Self::rotation(theta, w);
        let m = if reflect { -1.0 } else { 1.0 };
        Self::new(m * scale * r.a11, m * scale * r.a12, scale * r.a21, scale * r.a22, w)
    }

    /// `(x, y) -> (x + y, y)`.
    pub fn shear() -> Self {
        Self::new(1.0, 0.0, 1.0, 1.0, Vector::ZERO)
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn is_invertible(&self) -> bool {
        let norm = self.a11.abs().max(self.a12.abs()).max(self.a21.abs()).max(self.a22.abs());
        self.det().abs() > 1e-12 * norm * norm
    }

    pub fn apply(&self, x: Point) -> Point {
        Point::new(
            x.x * self.a11 + x.y * self.a21 + self.w.dx,
            x.x * self.a12 + x.y * self.a22 + self.w.dy,
        )
    }

    pub fn inverse(&self) -> Result<AffineMap, VerifyError> {
        if !self.is_invertible() {
            return Err(VerifyError::SingularMap);
        }
        let d = self.det();
        let (b11, b12, b21, b22) = (self.a22 / d, -self.a12 / d, -self.a21 / d, self.a11 / d);
        let w = Vector::new(
            -(self.w.dx * b11 + self.w.dy * b21),
            -(self.w.dx * b12 + self.w.dy * b22),
        );
        Ok(Self::new(b11, b12, b21, b22, w))
    }

    /// Image of a vertex gradient.
    pub fn push_gradient(&self, g: Vector, mode: Pushforward) -> Result<Vector, VerifyError> {
        let inv = self.inverse()?;
        Ok(match mode {
            // g B^T with B = A^-1
            Pushforward::ChainRule => Vector::new(
                g.dx * inv.a11 + g.dy * inv.a12,
                g.dx * inv.a21 + g.dy * inv.a22,
            ),
            Pushforward::Literal => Vector::new(
                g.dx * inv.a11 + g.dy * inv.a21,
                g.dx * inv.a12 + g.dy * inv.a22,
            ),
        })
    }

    pub fn push_data(&self, data: &[VertexData], mode: Pushforward) -> Result<Vec<VertexData>, VerifyError> {
        data.iter()
            .map(|d| {
                let g = self.push_gradient(Vector::new(d.fx, d.fy), mode)?;
                Ok(VertexData::new(d.f, g.dx, g.dy))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TriangleDeviation {
    pub triangle: usize,
    pub max_deviation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvarianceOptions {
    pub samples: usize,
    pub seed: u64,
    pub pushforward: Pushforward,
    pub tolerance: f64,
}

impl Default for InvarianceOptions {
    fn default() -> Self {
        Self {
            samples: 200,
            seed: DEFAULT_SEED,
            pushforward: Pushforward::ChainRule,
            tolerance: INVARIANCE_TOLERANCE,
        }
    }
}

/// Compares `f_{T,F}(x)` with `f_{G(T), G#F}(G(x))` at random points of
/// random triangles, using the same triangle index in both meshes.
pub fn check_invariance(
    field: &SplineField,
    map: &AffineMap,
    opts: &InvarianceOptions,
) -> Result<Report<TriangleDeviation>, VerifyError> {
    map.inverse()?;
    let mesh = field.mesh();
    let mapped_mesh = mesh
        .map_points(|x| map.apply(x))
        .map_err(|e| VerifyError::InvalidArgument(e.to_string()))?;
    let mapped_data = map.push_data(field.data(), opts.pushforward)?;
    let mapped = SplineField::new(mapped_mesh, mapped_data, field.config().clone())?;

    let n = mesh.num_triangles();
    let mut per_tri: Vec<TriangleDeviation> = (0..n)
        .map(|triangle| TriangleDeviation {
            triangle,
            max_deviation: 0.0,
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.samples {
        let k = rng.gen_range(0..n);
        let x = random_point_in(&mesh.triangle(k), &mut rng);
        let here = field.eval_in_triangle(k, x)?.value;
        let there = mapped.eval_in_triangle(k, map.apply(x))?.value;
        let e = &mut per_tri[k];
        e.max_deviation = e.max_deviation.max((here - there).abs());
    }
    let max = per_tri.iter().map(|t| t.max_deviation).fold(0.0, f64::max);
    Ok(Report::finish("invariance", per_tri, max, opts.tolerance))
}

/// Largest `|(order+1)`-th divided difference`|` of `kind`'s basic function
/// along random chords of `tri`, each parametrized by `s` in `[0, 1]`
/// between points on two different edges and sampled at `order + 2`
/// equally spaced values of `s`. The divided difference is the leading
/// coefficient of the interpolant in `s`, so it vanishes when the function
/// has degree at most `order`.
pub fn check_degree(
    cfg: &ProcedureConfig,
    tri: &Triangle,
    kind: BasisKind,
    order: usize,
    chords: usize,
    seed: u64,
) -> Result<f64, VerifyError> {
    Ok(degree_residuals(cfg, tri, kind, order, chords, seed)?
        .into_iter()
        .fold(0.0, f64::max))
}

/// Per-chord residuals behind [`check_degree`].
pub fn degree_residuals(
    cfg: &ProcedureConfig,
    tri: &Triangle,
    kind: BasisKind,
    order: usize,
    chords: usize,
    seed: u64,
) -> Result<Vec<f64>, VerifyError> {
    if order < 1 {
        return Err(VerifyError::InvalidArgument("order must be at least 1".into()));
    }
    tri.ensure_non_degenerate()?;
    let f = crate::basis::BasisFunction::new(cfg, tri, kind)?;
    let corners = [tri.a, tri.b, tri.p];
    let n = order + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(chords);
    for _ in 0..chords {
        let e1 = rng.gen_range(0..3);
        let e2 = (e1 + rng.gen_range(1..3)) % 3;
        let start = corners[e1].lerp(corners[(e1 + 1) % 3], rng.gen());
        let end = corners[e2].lerp(corners[(e2 + 1) % 3], rng.gen());
        let mut diff: Vec<f64> = (0..=n)
            .map(|i| f.eval(start.lerp(end, i as f64 / n as f64)).value)
            .collect();
        for _ in 0..n {
            for i in 0..diff.len() - 1 {
                diff[i] = diff[i + 1] - diff[i];
            }
            diff.pop();
        }
        // forward difference -> divided difference with step 1/n
        let factorial: f64 = (1..=n).map(|i| i as f64).product();
        let step_pow = (1.0 / n as f64).powi(n as i32);
        out.push(diff[0].abs() / (factorial * step_pow));
    }
    Ok(out)
}

/// On `T = Co{0, rho e1, b}` with distinguished vertex `0`, the largest of
/// `|d phi/dy|`, `|d psi1/dy|` and `|psi2|` at `samples` points of the edge
/// on the x-axis.
pub fn reflection_residual(
    cfg: &ProcedureConfig,
    rho: f64,
    b: Point,
    samples: usize,
) -> Result<f64, GeometryError> {
    let tri = Triangle::new(Point::new(rho, 0.0), b, Point::new(0.0, 0.0));
    let mut worst: f64 = 0.0;
    for k in 0..=samples {
        let u = Point::new(rho * k as f64 / samples.max(1) as f64, 0.0);
        worst = worst
            .max(basis_eval(cfg, &tri, BasisKind::Value, u)?.grad.dy.abs())
            .max(basis_eval(cfg, &tri, BasisKind::SlopeX, u)?.grad.dy.abs())
            .max(basis_eval(cfg, &tri, BasisKind::SlopeY, u)?.value.abs());
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// Random inputs

/// Uniform point strictly inside `tri`.
pub fn random_point_in(tri: &Triangle, rng: &mut impl Rng) -> Point {
    let (mut s, mut t): (f64, f64) = (rng.gen(), rng.gen());
    if s + t > 1.0 {
        s = 1.0 - s;
        t = 1.0 - t;
    }
    tri.point_at(1.0 - s - t, s, t)
}

/// Triangle with vertices in the unit square and `area / diam^2 >= 0.02`.
pub fn random_triangle(rng: &mut impl Rng) -> Triangle {
    loop {
        let mut pt = || Point::new(rng.gen(), rng.gen());
        let tri = Triangle::new(pt(), pt(), pt());
        let d = tri.diameter();
        if crate::geometry::signed_area(&tri).abs() >= MIN_SHAPE_RATIO * d * d {
            return tri;
        }
    }
}

/// Integer-coefficient polynomial of degree at most `degree` with
/// coefficients in `[-5, 5]`.
pub fn random_perturbation(rng: &mut impl Rng, degree: usize) -> UnivariatePolynomial {
    let coeffs: Vec<i128> = (0..=degree).map(|_| rng.gen_range(-5..=5)).collect();
    UnivariatePolynomial::from_integers(&coeffs)
}

pub fn random_family(rng: &mut impl Rng) -> ShapeFamily {
    let phi1 = random_perturbation(rng, 4);
    let psi1 = random_perturbation(rng, 4);
    make_shape_family(phi1, psi1).expect("small perturbations are admissible")
}

fn mix(mut h: u64, v: u64) -> u64 {
    // splitmix64 finalizer over the running state
    h ^= v.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(h << 6).wrapping_add(h >> 2);
    h = (h ^ (h >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    h ^ (h >> 31)
}

fn point_rng(seed: u64, kind: BasisKind, pts: &[Point]) -> ChaCha8Rng {
    let mut h = mix(seed, kind.index() as u64);
    for p in pts {
        h = mix(mix(h, (p.x + 0.0).to_bits()), (p.y + 0.0).to_bits());
    }
    ChaCha8Rng::seed_from_u64(h)
}

/// `k` options drawn pseudo-randomly from the coordinates of the two points,
/// so that triangles sharing an edge see the same polynomial.
#[derive(Debug, Clone, Copy)]
pub struct HashedK {
    pub seed: u64,
    pub degree: usize,
    pub amplitude: f64,
}

impl KProvider for HashedK {
    fn k(&self, kind: BasisKind, p: Point, c: Point) -> DensePoly {
        let mut rng = point_rng(self.seed, kind, &[p, c]);
        DensePoly(
            (0..=self.degree)
                .map(|_| self.amplitude * rng.gen_range(-1.0..1.0))
                .collect(),
        )
    }
}

/// `R` options drawn pseudo-randomly from the coordinates of the three points.
#[derive(Debug, Clone, Copy)]
pub struct HashedR {
    pub seed: u64,
    pub degree: usize,
    pub amplitude: f64,
}

impl RProvider for HashedR {
    fn r(&self, kind: BasisKind, p: Point, q: Point, r: Point) -> BivariatePoly {
        let mut rng = point_rng(self.seed, kind, &[p, q, r]);
        BivariatePoly::new(
            (0..=self.degree)
                .map(|m| {
                    (0..=self.degree - m)
                        .map(|_| self.amplitude * rng.gen_range(-1.0..1.0))
                        .collect()
                })
                .collect(),
        )
    }
}

/// Random shape family with coordinate-hashed `k` and `R` options of degree
/// at most 2.
pub fn random_family_config(rng: &mut impl Rng) -> ProcedureConfig {
    let shapes = random_family(rng);
    ProcedureConfig::new(shapes)
        .with_k(HashedK {
            seed: rng.gen(),
            degree: 2,
            amplitude: 1.0,
        })
        .with_r(HashedR {
            seed: rng.gen(),
            degree: 2,
            amplitude: 1.0,
        })
}

/// Rotation, optional reflection and translation, with a uniform scale in
/// `[0.5, 2]` when `with_scale`.
pub fn random_similarity(rng: &mut impl Rng, with_scale: bool) -> AffineMap {
    let theta = rng.gen_range(0.0..2.0 * PI);
    let scale = if with_scale { rng.gen_range(0.5..2.0) } else { 1.0 };
    let reflect = rng.gen_bool(0.5);
    let w = Vector::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
    AffineMap::similarity(theta, scale, reflect, w)
}

// ---------------------------------------------------------------------------
// Fixed witnesses

/// Two triangles `Co{a, b, p}` and `Co{a, b', p}` with `a = (0,0)`,
/// `p = (0,1)`, `b = (1,0)`, `b' = (-1,0)` and unit value data at `p`.
pub fn pairing_witness(cfg: ProcedureConfig) -> SplineField {
    let mesh = Mesh::new(
        vec![
            Point::new(0.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(1.0, 0.0),
            Point::new(-1.0, 0.0),
        ],
        vec![[0, 2, 1], [0, 1, 3]],
    )
    .expect("static mesh");
    let mut data = vec![VertexData::ZERO; 4];
    data[1].f = 1.0;
    SplineField::new(mesh, data, cfg).expect("data matches mesh")
}

/// Gradient jump of the pairing witness at the edge midpoint `(0, 1/2)`.
pub fn pairing_jump(cfg: ProcedureConfig) -> f64 {
    let field = pairing_witness(cfg);
    let x = Point::new(0.0, 0.5);
    let l = field.eval_in_triangle(0, x).expect("static triangle");
    let r = field.eval_in_triangle(1, x).expect("static triangle");
    (l.grad - r.grad).norm()
}

/// Data for the frozen shear witness on the unit square.
pub const SHEAR_WITNESS_DATA: [VertexData; 4] = [
    VertexData::new(0.0, 0.0, 0.0),
    VertexData::new(0.0, 0.0, 0.0),
    VertexData::new(1.0, 0.0, 0.0),
    VertexData::new(0.0, 0.0, 0.0),
];

/// Minimal-config spline on the unit square with [`SHEAR_WITNESS_DATA`];
/// paired with [`AffineMap::shear`] it is not invariant.
pub fn shear_witness() -> SplineField {
    SplineField::new(
        crate::mesh::unit_square(),
        SHEAR_WITNESS_DATA.to_vec(),
        ProcedureConfig::minimal(),
    )
    .expect("data matches mesh")
}

/// Unit right triangle with unit value data at `(0, 1)` and a constant
/// `k = 1` on the value functions, paired with the mirror `x -> -x`. The
/// mirror flips the sign of every `xibar` coordinate while leaving value data
/// unchanged, so the `k` terms change sign.
pub fn k_reflection_witness() -> (SplineField, AffineMap) {
    let mesh = Mesh::new(
        vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)],
        vec![[0, 1, 2]],
    )
    .expect("static mesh");
    let mut data = vec![VertexData::ZERO; 3];
    data[2].f = 1.0;
    let cfg = ProcedureConfig::minimal().with_k(ConstantK {
        poly: DensePoly::constant(1.0),
        kind: Some(BasisKind::Value),
    });
    let field = SplineField::new(mesh, data, cfg).expect("data matches mesh");
    let mirror = AffineMap::new(-1.0, 0.0, 0.0, 1.0, Vector::ZERO);
    (field, mirror)
}

/// Random data on `mesh` from `seed`.
pub fn seeded_data(mesh: &Mesh, seed: u64) -> Vec<VertexData> {
    random_data(mesh, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::Pairing;
    use crate::mesh::{grid, unit_square};

    fn unit() -> Triangle {
        Triangle::new(Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0))
    }

    #[test]
    fn fd_examples() {
        let g = fd_gradient(|p| p.x * p.x, Point::new(1.0, 0.0), 1e-6);
        assert!((g.dx - 2.0).abs() < 1e-9 && g.dy == 0.0);
        assert_eq!(fd_gradient(|_| 3.5, Point::new(0.2, 0.1), 1e-3), Vector::ZERO);
    }

    #[test]
    fn c1_on_square() {
        let m = unit_square();
        let data = seeded_data(&m, DEFAULT_SEED);
        let field = SplineField::new(m, data, ProcedureConfig::minimal()).unwrap();
        let r = check_c1(&field, 50, C1_TOLERANCE).unwrap();
        assert!(r.pass, "{}", r.to_json());
        assert_eq!(r.per_edge.len(), 1);
        assert_eq!(r.per_edge[0].samples, 50);
        let fd = probe_c1_fd(&field, 5).unwrap();
        assert!(fd.pass, "{}", fd.to_json());
    }

    #[test]
    fn c1_family_config() {
        let cfg = ProcedureConfig::new(
            make_shape_family(
                UnivariatePolynomial::from_integers(&[0, 1]),
                UnivariatePolynomial::from_integers(&[1, -1]),
            )
            .unwrap(),
        );
        let m = grid(2);
        let field = SplineField::new(m.clone(), seeded_data(&m, 3), cfg).unwrap();
        assert!(check_c1(&field, 50, C1_TOLERANCE).unwrap().pass);
    }

    #[test]
    fn swapped_pairing_jump() {
        let general = pairing_jump(ProcedureConfig::minimal());
        let swapped = pairing_jump(ProcedureConfig::minimal().with_pairing(Pairing::Swapped));
        assert!(general <= 1e-12, "{general}");
        assert!((swapped - 1.875).abs() <= 1e-9, "{swapped}");
    }

    #[test]
    fn vertex_conditions() {
        let m = grid(2);
        let field = SplineField::new(m.clone(), seeded_data(&m, 9), ProcedureConfig::minimal()).unwrap();
        assert!(check_vertex_conditions(&field).unwrap().pass);
        let zero = SplineField::new(m, vec![VertexData::ZERO; 9], ProcedureConfig::minimal()).unwrap();
        assert_eq!(check_vertex_conditions(&zero).unwrap().max_jump, 0.0);
    }

    #[test]
    fn edge_shape_examples() {
        let cfg = ProcedureConfig::minimal();
        let tri = unit();
        let v = basis_eval(&cfg, &tri, BasisKind::SlopeY, Point::new(0.0, 0.5)).unwrap();
        assert!((v.value + 5.0 / 32.0).abs() < 1e-15);
        assert_eq!(basis_eval(&cfg, &tri, BasisKind::Value, tri.a).unwrap().value, 0.0);
        assert_eq!(basis_eval(&cfg, &tri, BasisKind::Value, tri.p).unwrap().value, 1.0);
        assert!(check_edge_shape(&cfg, &tri).unwrap().pass);
        let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
        let scalene = random_triangle(&mut rng);
        assert!(check_edge_shape(&cfg, &scalene).unwrap().pass);
        let flat = Triangle::new(Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(2.0, 0.0));
        assert_eq!(check_edge_shape(&cfg, &flat).unwrap_err(), GeometryError::DegenerateTriangle);
    }

    #[test]
    fn affine_map_basics() {
        let g = AffineMap::rotation(PI / 6.0, Vector::new(3.0, -2.0));
        let inv = g.inverse().unwrap();
        let x = Point::new(0.3, -0.7);
        let back = inv.apply(g.apply(x));
        assert!((back - x).norm() < 1e-15);
        // rotation: pushed gradient is the rotated gradient
        let pushed = g.push_gradient(Vector::new(1.0, 0.0), Pushforward::ChainRule).unwrap();
        assert!((pushed - Vector::new(g.a11, g.a12)).norm() < 1e-15);
        let singular = AffineMap::new(1.0, 2.0, 2.0, 4.0, Vector::ZERO);
        assert_eq!(singular.inverse().unwrap_err(), VerifyError::SingularMap);
        let sh = AffineMap::shear();
        assert_eq!(sh.apply(Point::new(1.0, 2.0)), Point::new(3.0, 2.0));
    }

    #[test]
    fn rotation_invariance() {
        let m = grid(2);
        let field = SplineField::new(m.clone(), seeded_data(&m, 5), ProcedureConfig::minimal()).unwrap();
        let g = AffineMap::rotation(PI / 6.0, Vector::new(3.0, -2.0));
        let r = check_invariance(&field, &g, &InvarianceOptions::default()).unwrap();
        assert!(r.pass, "{}", r.max_jump);
        let h = AffineMap::similarity(0.0, 2.0, true, Vector::ZERO);
        assert!(check_invariance(&field, &h, &InvarianceOptions::default()).unwrap().pass);
    }

    #[test]
    fn shear_breaks_invariance() {
        let r = check_invariance(&shear_witness(), &AffineMap::shear(), &InvarianceOptions::default()).unwrap();
        assert!(r.max_jump > SHEAR_THRESHOLD, "{}", r.max_jump);
    }

    #[test]
    fn degree_examples() {
        let cfg = ProcedureConfig::minimal();
        let tri = unit();
        assert!(check_degree(&cfg, &tri, BasisKind::Value, 5, 20, 1).unwrap() <= DEGREE_TOLERANCE);
        assert!(check_degree(&cfg, &tri, BasisKind::Value, 4, 20, 1).unwrap() > 1e-3);
        assert!(check_degree(&cfg, &tri, BasisKind::Value, 0, 20, 1).is_err());
    }

    #[test]
    fn reflection_identity() {
        let cfg = ProcedureConfig::minimal();
        let r = reflection_residual(&cfg, 1.3, Point::new(0.4, 0.9), 20).unwrap();
        assert!(r <= 1e-10, "{r}");
    }

    #[test]
    fn hashed_options_are_deterministic() {
        let k = HashedK { seed: 1, degree: 2, amplitude: 1.0 };
        let p = Point::new(0.5, 0.25);
        let c = Point::new(1.0, 0.0);
        assert_eq!(k.k(BasisKind::Value, p, c), k.k(BasisKind::Value, p, c));
        assert_ne!(k.k(BasisKind::Value, p, c), k.k(BasisKind::Value, c, p));
        assert_ne!(k.k(BasisKind::Value, p, c), k.k(BasisKind::SlopeX, p, c));
    }
}
