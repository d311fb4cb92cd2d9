//! Basic functions of a triangle with a distinguished vertex.
//!
//! For `T = Co{a, b, p}` and kind `i` the basic function is
//!
//! ```text
//! f = Phi^[i](lam_p) x^[i]_p + lam_p^2 lam_a lam_b C(lam_b, lam_a)
//! ```
//!
//! with `Phi^[0] = Phi`, `Phi^[1] = Phi^[2] = Theta`, `x^[0]_p = 1` and
//! `x^[j]_p = x^[j] - x^[j](p)`. The correction `C` (called `P` for values and
//! `Q^j` for slopes) is
//!
//! ```text
//! C(s, t) = s { xi^a_{p,b} X(b) F(s) + xibar^a_{p,b} k_b(s) }
//!         + t { xi^b_{p,a} X(a) F(t) + xibar^b_{p,a} k_a(t) }
//!         + s t R_{a,b}(s, t)
//! ```
//!
//! where `F = A` and `X = 1` for values, `F = B` and `X = x^[j]_p` for
//! slopes. The `s` argument is always `lam_b`, so the `xi^a_{p,b}` term is
//! the one weighted by `lam_b`.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::geometry::{frame_coords, lambda_gradient, GeometryError, Point, Triangle, Vector};
use crate::shape::{ShapeFamily, UnivariatePolynomial};

/// Which of the three basic functions at a vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum BasisKind {
    /// `phi`, paired with the vertex value.
    Value,
    /// `psi^(1)`, paired with the x-derivative.
    SlopeX,
    /// `psi^(2)`, paired with the y-derivative.
    SlopeY,
}

impl BasisKind {
    pub const ALL: [BasisKind; 3] = [BasisKind::Value, BasisKind::SlopeX, BasisKind::SlopeY];

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn index(self) -> usize {
        match self {
            BasisKind::Value => 0,
            BasisKind::SlopeX => 1,
            BasisKind::SlopeY => 2,
        }
    }

    /// `x^[i]_p` evaluated at `x`.
    pub fn local_coord(self, p: Point, x: Point) -> f64 {
        match self {
            BasisKind::Value => 1.0,
            BasisKind::SlopeX => x.x - p.x,
            BasisKind::SlopeY => x.y - p.y,
        }
    }

    /// `grad x^[i]_p = e^[i]`.
    pub fn frame_vector(self) -> Vector {
        Vector::frame(self.index())
    }
}

/// Dense univariate polynomial over `f64`, ascending degree.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DensePoly(pub Vec<f64>);

impl DensePoly {
    pub fn zero() -> Self {
        Self(Vec::new())
    }

    pub fn constant(c: f64) -> Self {
        Self(vec![c])
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    /// Value and first derivative by Horner's scheme.
    pub fn eval_with_derivative(&self, t: f64) -> (f64, f64) {
        let mut v = 0.0;
        let mut d = 0.0;
        for &c in self.0.iter().rev() {
            d = d * t + v;
            v = v * t + c;
        }
        (v, d)
    }

    /// `alpha self + beta other`.
    fn combine(alpha: f64, a: &DensePoly, beta: f64, b: &DensePoly) -> DensePoly {
        let n = a.0.len().max(b.0.len());
        DensePoly(
            (0..n)
                .map(|k| {
                    alpha * a.0.get(k).copied().unwrap_or(0.0)
                        + beta * b.0.get(k).copied().unwrap_or(0.0)
                })
                .collect(),
        )
    }
}

impl From<&UnivariatePolynomial> for DensePoly {
    fn from(p: &UnivariatePolynomial) -> Self {
        DensePoly(p.to_f64())
    }
}

/// Dense bivariate polynomial: `coeffs[m][n]` multiplies `s^m t^n`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BivariatePoly {
    coeffs: Vec<Vec<f64>>,
}

impl BivariatePoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn new(coeffs: Vec<Vec<f64>>) -> Self {
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[Vec<f64>] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().flatten().all(|&c| c == 0.0)
    }

    /// `Q(s, t) = self(t, s)`.
    pub fn swapped(&self) -> Self {
        let rows = self.coeffs.len();
        let cols = self.coeffs.iter().map(Vec::len).max().unwrap_or(0);
        let mut out = vec![vec![0.0; rows]; cols];
        for (m, row) in self.coeffs.iter().enumerate() {
            for (n, &c) in row.iter().enumerate() {
                out[n][m] = c;
            }
        }
        Self { coeffs: out }
    }

    fn average(a: &Self, b: &Self) -> Self {
        let rows = a.coeffs.len().max(b.coeffs.len());
        let get = |p: &Self, m: usize, n: usize| {
            p.coeffs.get(m).and_then(|r| r.get(n)).copied().unwrap_or(0.0)
        };
        let coeffs = (0..rows)
            .map(|m| {
                let cols = a
                    .coeffs
                    .get(m)
                    .map_or(0, Vec::len)
                    .max(b.coeffs.get(m).map_or(0, Vec::len));
                (0..cols).map(|n| 0.5 * (get(a, m, n) + get(b, m, n))).collect()
            })
            .collect();
        Self { coeffs }
    }

    pub fn eval(&self, s: f64, t: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, row| acc * s + DensePoly::eval_slice(row, t))
    }

    /// `(value, d/ds, d/dt)`.
    pub fn eval_with_partials(&self, s: f64, t: f64) -> (f64, f64, f64) {
        let mut v = 0.0;
        let mut ds = 0.0;
        let mut dt = 0.0;
        for row in self.coeffs.iter().rev() {
            let (rv, rd) = DensePoly::eval_slice_with_derivative(row, t);
            ds = ds * s + v;
            v = v * s + rv;
            dt = dt * s + rd;
        }
        (v, ds, dt)
    }
}

impl DensePoly {
    fn eval_slice(c: &[f64], t: f64) -> f64 {
        c.iter().rev().fold(0.0, |acc, &x| acc * t + x)
    }

    fn eval_slice_with_derivative(c: &[f64], t: f64) -> (f64, f64) {
        let mut v = 0.0;
        let mut d = 0.0;
        for &x in c.iter().rev() {
            d = d * t + v;
            v = v * t + x;
        }
        (v, d)
    }
}

/// Assigns a polynomial `k^{i,p}_c` to each kind and ordered pair of distinct
/// points. Implementations must be deterministic functions of their inputs.
pub trait KProvider: Send + Sync + fmt::Debug {
    fn k(&self, kind: BasisKind, p: Point, c: Point) -> DensePoly;

    /// Lets evaluation skip the `k` terms entirely.
    fn is_zero(&self) -> bool {
        false
    }
}

/// Assigns a bivariate polynomial `R^{i,p}_{q,r}` to each kind and ordered
/// triple of points. The configuration symmetrizes the result, so a provider
/// need not satisfy `R_{q,r}(s,t) = R_{r,q}(t,s)` itself.
pub trait RProvider: Send + Sync + fmt::Debug {
    fn r(&self, kind: BasisKind, p: Point, q: Point, r: Point) -> BivariatePoly;

    fn is_zero(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroK;

impl KProvider for ZeroK {
    fn k(&self, _: BasisKind, _: Point, _: Point) -> DensePoly {
        DensePoly::zero()
    }
    fn is_zero(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroR;

impl RProvider for ZeroR {
    fn r(&self, _: BasisKind, _: Point, _: Point, _: Point) -> BivariatePoly {
        BivariatePoly::zero()
    }
    fn is_zero(&self) -> bool {
        true
    }
}

/// The same polynomial for every pair of points, optionally restricted to
/// one kind.
#[derive(Debug, Clone)]
pub struct ConstantK {
    pub poly: DensePoly,
    pub kind: Option<BasisKind>,
}

impl KProvider for ConstantK {
    fn k(&self, kind: BasisKind, _: Point, _: Point) -> DensePoly {
        match self.kind {
            Some(only) if only != kind => DensePoly::zero(),
            _ => self.poly.clone(),
        }
    }
}

type PointKey = (u64, u64);

fn key(p: Point) -> PointKey {
    (p.x.to_bits(), p.y.to_bits())
}

/// Table of `k` polynomials keyed by exact point coordinates; missing
/// entries are zero.
#[derive(Debug, Clone, Default)]
pub struct KTable {
    entries: HashMap<(BasisKind, PointKey, PointKey), DensePoly>,
}

impl KTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, kind: BasisKind, p: Point, c: Point, poly: DensePoly) {
        self.entries.insert((kind, key(p), key(c)), poly);
    }
}

impl KProvider for KTable {
    fn k(&self, kind: BasisKind, p: Point, c: Point) -> DensePoly {
        self.entries
            .get(&(kind, key(p), key(c)))
            .cloned()
            .unwrap_or_default()
    }
}

/// Closure-backed `k` provider.
pub struct FnK<F>(pub F);

impl<F> fmt::Debug for FnK<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FnK")
    }
}

impl<F> KProvider for FnK<F>
where
    F: Fn(BasisKind, Point, Point) -> DensePoly + Send + Sync,
{
    fn k(&self, kind: BasisKind, p: Point, c: Point) -> DensePoly {
        (self.0)(kind, p, c)
    }
}

/// Closure-backed `R` provider.
pub struct FnR<F>(pub F);

impl<F> fmt::Debug for FnR<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FnR")
    }
}

impl<F> RProvider for FnR<F>
where
    F: Fn(BasisKind, Point, Point, Point) -> BivariatePoly + Send + Sync,
{
    fn r(&self, kind: BasisKind, p: Point, q: Point, r: Point) -> BivariatePoly {
        (self.0)(kind, p, q, r)
    }
}

/// How the geometric coefficients are attached to the two barycentric
/// arguments of the correction.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pairing {
    /// `xi^a_{p,b}` weights `lam_b` and `xi^b_{p,a}` weights `lam_a`.
    #[default]
    General,
    /// Swapped pairing (`xi^b_{p,a}` with `lam_b`). Not C1; kept only to
    /// demonstrate the gradient jump it produces.
    Swapped,
}

/// Shape family plus the `k` and `R` options.
#[derive(Debug, Clone)]
pub struct ProcedureConfig {
    shapes: ShapeFamily,
    k: Arc<dyn KProvider>,
    r: Arc<dyn RProvider>,
    pairing: Pairing,
    phi: DensePoly,
    theta: DensePoly,
    a_poly: DensePoly,
    b_poly: DensePoly,
}

impl Default for ProcedureConfig {
    fn default() -> Self {
        Self::minimal()
    }
}

impl ProcedureConfig {
    pub fn new(shapes: ShapeFamily) -> Self {
        Self {
            phi: shapes.phi().into(),
            theta: shapes.theta().into(),
            a_poly: shapes.a_poly().into(),
            b_poly: shapes.b_poly().into(),
            shapes,
            k: Arc::new(ZeroK),
            r: Arc::new(ZeroR),
            pairing: Pairing::General,
        }
    }

    /// The degree-5 procedure with all options zero.
    pub fn minimal() -> Self {
        Self::new(ShapeFamily::minimal())
    }

    pub fn with_k(mut self, k: impl KProvider + 'static) -> Self {
        self.k = Arc::new(k);
        self
    }

    pub fn with_r(mut self, r: impl RProvider + 'static) -> Self {
        self.r = Arc::new(r);
        self
    }

    #[doc(hidden)]
    pub fn with_pairing(mut self, pairing: Pairing) -> Self {
        self.pairing = pairing;
        self
    }

    pub fn shapes(&self) -> &ShapeFamily {
        &self.shapes
    }

    pub fn pairing(&self) -> Pairing {
        self.pairing
    }

    /// Minimal shapes, zero options, general pairing.
    pub fn is_minimal(&self) -> bool {
        self.shapes.is_minimal()
            && self.k.is_zero()
            && self.r.is_zero()
            && self.pairing == Pairing::General
    }

    pub fn has_zero_options(&self) -> bool {
        self.k.is_zero() && self.r.is_zero()
    }

    /// `Phi^[i]` as a float polynomial.
    pub fn profile(&self, kind: BasisKind) -> &DensePoly {
        match kind {
            BasisKind::Value => &self.phi,
            _ => &self.theta,
        }
    }

    /// `A` for values, `B` for slopes.
    pub fn edge_factor(&self, kind: BasisKind) -> &DensePoly {
        match kind {
            BasisKind::Value => &self.a_poly,
            _ => &self.b_poly,
        }
    }

    pub fn k_poly(&self, kind: BasisKind, p: Point, c: Point) -> DensePoly {
        if self.k.is_zero() {
            DensePoly::zero()
        } else {
            self.k.k(kind, p, c)
        }
    }

    /// `R^{i,p}_{q,r}` symmetrized so that `R_{q,r}(s,t) = R_{r,q}(t,s)`.
    pub fn r_poly(&self, kind: BasisKind, p: Point, q: Point, r: Point) -> BivariatePoly {
        if self.r.is_zero() {
            return BivariatePoly::zero();
        }
        let forward = self.r.r(kind, p, q, r);
        let backward = self.r.r(kind, p, r, q).swapped();
        BivariatePoly::average(&forward, &backward)
    }
}

/// Value and gradient of a function at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalResult {
    pub value: f64,
    pub grad: Vector,
}

impl EvalResult {
    pub const ZERO: EvalResult = EvalResult {
        value: 0.0,
        grad: Vector::ZERO,
    };

    pub fn scaled_add(self, w: f64, other: EvalResult) -> EvalResult {
        EvalResult {
            value: self.value + w * other.value,
            grad: self.grad + other.grad * w,
        }
    }
}

/// The correction polynomial `C(s, t) = s U(s) + t V(t) + s t R(s, t)` of one
/// basic function, with its geometric coefficients already folded in.
#[derive(Debug, Clone, PartialEq)]
pub struct Correction {
    pub u: DensePoly,
    pub v: DensePoly,
    pub r: BivariatePoly,
}

impl Correction {
    pub fn eval(&self, s: f64, t: f64) -> f64 {
        s * self.u.eval(s) + t * self.v.eval(t) + s * t * self.r.eval(s, t)
    }

    /// `(C, dC/ds, dC/dt)`.
    pub fn eval_with_partials(&self, s: f64, t: f64) -> (f64, f64, f64) {
        let (u, du) = self.u.eval_with_derivative(s);
        let (v, dv) = self.v.eval_with_derivative(t);
        let (r, rs, rt) = self.r.eval_with_partials(s, t);
        (
            s * u + t * v + s * t * r,
            u + s * du + t * r + s * t * rs,
            v + t * dv + s * r + s * t * rt,
        )
    }
}

/// Builds the correction of `kind` for `tri` with distinguished vertex
/// `tri.p`.
pub fn correction(
    cfg: &ProcedureConfig,
    tri: &Triangle,
    kind: BasisKind,
) -> Result<Correction, GeometryError> {
    tri.ensure_non_degenerate()?;
    let Triangle { a, b, p } = *tri;
    let (xi_a, xibar_a) = frame_coords(p, b, a)?;
    let (xi_b, xibar_b) = frame_coords(p, a, b)?;
    let (xi_s, xi_t) = match cfg.pairing {
        Pairing::General => (xi_a, xi_b),
        Pairing::Swapped => (xi_b, xi_a),
    };
    let x_b = kind.local_coord(p, b);
    let x_a = kind.local_coord(p, a);
    let f = cfg.edge_factor(kind);
    let u = DensePoly::combine(xi_s * x_b, f, xibar_a, &cfg.k_poly(kind, p, b));
    let v = DensePoly::combine(xi_t * x_a, f, xibar_b, &cfg.k_poly(kind, p, a));
    Ok(Correction {
        u,
        v,
        r: cfg.r_poly(kind, p, a, b),
    })
}

/// The value correction `P^p_{a,b}`.
pub fn correction_p(cfg: &ProcedureConfig, tri: &Triangle) -> Result<Correction, GeometryError> {
    correction(cfg, tri, BasisKind::Value)
}

/// The slope correction `Q^{j,p}_{a,b}` for `j` in `{1, 2}`.
pub fn correction_q(
    cfg: &ProcedureConfig,
    tri: &Triangle,
    j: usize,
) -> Result<Correction, GeometryError> {
    let kind = match j {
        1 => BasisKind::SlopeX,
        2 => BasisKind::SlopeY,
        _ => panic!("slope index {j} must be 1 or 2"),
    };
    correction(cfg, tri, kind)
}

/// One basic function `f^{i,p}_{a,b}` ready for repeated evaluation.
#[derive(Debug, Clone)]
pub struct BasisFunction {
    tri: Triangle,
    kind: BasisKind,
    grad_a: Vector,
    grad_b: Vector,
    grad_p: Vector,
    profile: DensePoly,
    correction: Correction,
}

impl BasisFunction {
    pub fn new(
        cfg: &ProcedureConfig,
        tri: &Triangle,
        kind: BasisKind,
    ) -> Result<Self, GeometryError> {
        let correction = correction(cfg, tri, kind)?;
        Ok(Self {
            tri: *tri,
            kind,
            grad_a: lambda_gradient(tri.b, tri.p, tri.a),
            grad_b: lambda_gradient(tri.a, tri.p, tri.b),
            grad_p: lambda_gradient(tri.a, tri.b, tri.p),
            profile: cfg.profile(kind).clone(),
            correction,
        })
    }

    pub fn triangle(&self) -> &Triangle {
        &self.tri
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn correction(&self) -> &Correction {
        &self.correction
    }

    pub fn eval(&self, x: Point) -> EvalResult {
        let Triangle { a, b, .. } = self.tri;
        // each lam vanishes on the opposite edge, which contains the anchor
        let lp = self.grad_p.dot(x - a);
        let la = self.grad_a.dot(x - b);
        let lb = self.grad_b.dot(x - a);

        let xl = self.kind.local_coord(self.tri.p, x);
        let (prof, dprof) = self.profile.eval_with_derivative(lp);

        let bubble = lp * lp * la * lb;
        let grad_bubble = self.grad_p * (2.0 * lp * la * lb)
            + self.grad_a * (lp * lp * lb)
            + self.grad_b * (lp * lp * la);
        let (c, cs, ct) = self.correction.eval_with_partials(lb, la);
        let grad_c = self.grad_b * cs + self.grad_a * ct;

        let value = prof * xl + bubble * c;
        let grad = self.grad_p * (dprof * xl)
            + self.kind.frame_vector() * prof
            + grad_bubble * c
            + grad_c * bubble;
        EvalResult { value, grad }
    }
}

pub fn basis_eval(
    cfg: &ProcedureConfig,
    tri: &Triangle,
    kind: BasisKind,
    x: Point,
) -> Result<EvalResult, GeometryError> {
    Ok(BasisFunction::new(cfg, tri, kind)?.eval(x))
}

pub fn basis_value(
    cfg: &ProcedureConfig,
    tri: &Triangle,
    kind: BasisKind,
    x: Point,
) -> Result<f64, GeometryError> {
    basis_eval(cfg, tri, kind, x).map(|r| r.value)
}

pub fn basis_gradient(
    cfg: &ProcedureConfig,
    tri: &Triangle,
    kind: BasisKind,
    x: Point,
) -> Result<Vector, GeometryError> {
    basis_eval(cfg, tri, kind, x).map(|r| r.grad)
}

/// Closed-form gradient along the edge `Co{a, p}` at `y_t = (1-t)a + tp`:
///
/// ```text
/// grad f(y_t) = x^[i]((1-t)(a-p)) [Phi^[i]]'(t) g^p_{a,b}
///             + Phi^[i](t) e^[i]
///             + t^2 (1-t) C(0, 1-t) g^b_{a,p}
/// ```
///
/// Built from the shape polynomials and frame coordinates directly, without
/// going through [`BasisFunction`].
pub fn edge_gradient_reference(
    cfg: &ProcedureConfig,
    tri: &Triangle,
    kind: BasisKind,
    t: f64,
) -> Result<Vector, GeometryError> {
    tri.ensure_non_degenerate()?;
    let Triangle { a, b, p } = *tri;
    let g_p = lambda_gradient(a, b, p);
    let g_b = lambda_gradient(a, p, b);

    let tau = 1.0 - t;
    let x_edge = match kind {
        BasisKind::Value => 1.0,
        BasisKind::SlopeX => tau * (a.x - p.x),
        BasisKind::SlopeY => tau * (a.y - p.y),
    };
    let (prof, dprof) = cfg.profile(kind).eval_with_derivative(t);

    let (xi_b, xibar_b) = frame_coords(p, a, b)?;
    let x_a = kind.local_coord(p, a);
    let c_edge = tau
        * (xi_b * x_a * cfg.edge_factor(kind).eval(tau)
            + xibar_b * cfg.k_poly(kind, p, a).eval(tau));

    Ok(g_p * (x_edge * dprof) + kind.frame_vector() * prof + g_b * (t * t * tau * c_edge))
}
