//! Assembly of the spline from per-triangle basic functions, point
//! evaluation and grid sampling.

use std::io::{self, Write};
use std::sync::OnceLock;

use rayon::prelude::*;
use thiserror::Error;

use crate::basis::{BasisFunction, BasisKind, EvalResult, ProcedureConfig};
use crate::geometry::{locate, GeometryError, Point, Vector};
use crate::mesh::{Mesh, VertexData};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SplineError {
    #[error("point ({}, {}) is outside the mesh", .0.x, .0.y)]
    OutsideDomain(Point),
    #[error("mesh has no gradient data")]
    MissingData,
    #[error("{got} data records for {expected} vertices")]
    DataLength { expected: usize, got: usize },
    #[error("non-finite data at vertex {0}")]
    NonFiniteData(usize),
    #[error("triangle {triangle}: {source}")]
    Geometry {
        triangle: usize,
        source: GeometryError,
    },
    #[error("grid needs at least 2 points per axis, got {0}x{1}")]
    BadGrid(usize, usize),
}

/// The nine basic functions of one triangle, three per corner, in stored
/// corner order.
type TriangleBasis = [BasisFunction; 9];

/// Interpolating spline of gradient data over a mesh.
#[derive(Debug)]
pub struct SplineField {
    mesh: Mesh,
    data: Vec<VertexData>,
    cfg: ProcedureConfig,
    cache: Option<Vec<OnceLock<Result<TriangleBasis, GeometryError>>>>,
}

impl SplineField {
    pub fn new(mesh: Mesh, data: Vec<VertexData>, cfg: ProcedureConfig) -> Result<Self, SplineError> {
        if data.len() != mesh.num_vertices() {
            return Err(SplineError::DataLength {
                expected: mesh.num_vertices(),
                got: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|d| !d.is_finite()) {
            return Err(SplineError::NonFiniteData(i));
        }
        let cache = Some((0..mesh.num_triangles()).map(|_| OnceLock::new()).collect());
        Ok(Self {
            mesh,
            data,
            cfg,
            cache,
        })
    }

    /// Like [`SplineField::new`] with data that may be absent.
    pub fn from_parts(
        mesh: Mesh,
        data: Option<Vec<VertexData>>,
        cfg: ProcedureConfig,
    ) -> Result<Self, SplineError> {
        Self::new(mesh, data.ok_or(SplineError::MissingData)?, cfg)
    }

    /// Rebuilds basic functions on every evaluation instead of caching them.
    pub fn without_cache(mut self) -> Self {
        self.cache = None;
        self
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn data(&self) -> &[VertexData] {
        &self.data
    }

    pub fn config(&self) -> &ProcedureConfig {
        &self.cfg
    }

    fn build_basis(&self, k: usize) -> Result<TriangleBasis, GeometryError> {
        let mut out = Vec::with_capacity(9);
        for corner in 0..3 {
            let tri = self.mesh.triangle_at(k, corner);
            for kind in BasisKind::ALL {
                out.push(BasisFunction::new(&self.cfg, &tri, kind)?);
            }
        }
        Ok(out.try_into().expect("nine basic functions"))
    }

    /// Polynomial piece of triangle `k` evaluated at `x`, which may lie
    /// outside the triangle.
    pub fn eval_in_triangle(&self, k: usize, x: Point) -> Result<EvalResult, SplineError> {
        let geom = |source| SplineError::Geometry { triangle: k, source };
        let built;
        let basis = match &self.cache {
            Some(cache) => cache[k].get_or_init(|| self.build_basis(k)).as_ref().map_err(|e| geom(*e))?,
            None => {
                built = self.build_basis(k).map_err(geom)?;
                &built
            }
        };
        let idx = self.mesh.triangles()[k];
        let mut acc = EvalResult::ZERO;
        for corner in 0..3 {
            let d = self.data[idx[corner]];
            for (kind, w) in BasisKind::ALL.into_iter().zip([d.f, d.fx, d.fy]) {
                if w != 0.0 {
                    acc = acc.scaled_add(w, basis[3 * corner + kind.index()].eval(x));
                }
            }
        }
        Ok(acc)
    }

    /// Value and gradient at `x` together with the triangle used.
    pub fn evaluate(&self, x: Point) -> Result<(EvalResult, usize), SplineError> {
        let loc = locate(&self.mesh, x).ok_or(SplineError::OutsideDomain(x))?;
        Ok((self.eval_in_triangle(loc.triangle, x)?, loc.triangle))
    }
}

pub fn spline_value(field: &SplineField, x: Point) -> Result<f64, SplineError> {
    field.evaluate(x).map(|(r, _)| r.value)
}

pub fn spline_gradient(field: &SplineField, x: Point) -> Result<Vector, SplineError> {
    field.evaluate(x).map(|(r, _)| r.grad)
}

/// Axis-aligned box `(x0, y0)`-`(x1, y1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl BBox {
    pub fn of_mesh(mesh: &Mesh) -> Self {
        let (lo, hi) = mesh.bbox();
        Self {
            x0: lo.x,
            y0: lo.y,
            x1: hi.x,
            y1: hi.y,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleRow {
    pub x: f64,
    pub y: f64,
    /// `None` outside the mesh.
    pub hit: Option<(EvalResult, usize)>,
}

/// Row-major samples (x fastest) on an `nx` by `ny` grid that includes the
/// box corners.
pub fn sample_grid(
    field: &SplineField,
    bbox: BBox,
    nx: usize,
    ny: usize,
) -> Result<Vec<SampleRow>, SplineError> {
    if nx < 2 || ny < 2 {
        return Err(SplineError::BadGrid(nx, ny));
    }
    let coord = |lo: f64, hi: f64, i: usize, n: usize| {
        if i == n - 1 {
            hi
        } else {
            lo + (hi - lo) * (i as f64 / (n - 1) as f64)
        }
    };
    (0..nx * ny)
        .into_par_iter()
        .map(|idx| {
            let x = coord(bbox.x0, bbox.x1, idx % nx, nx);
            let y = coord(bbox.y0, bbox.y1, idx / nx, ny);
            let hit = match field.evaluate(Point::new(x, y)) {
                Ok(r) => Some(r),
                Err(SplineError::OutsideDomain(_)) => None,
                Err(e) => return Err(e),
            };
            Ok(SampleRow { x, y, hit })
        })
        .collect()
}

/// Formats like C's `%.17g`: shortest of fixed and scientific notation with
/// 17 significant digits, trailing zeros removed, `-0` printed as `0`.
pub fn fmt_g17(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{v:.16e}");
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let fixed = format!("{:.*}", (16 - exp) as usize, v);
        strip_zeros(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", strip_zeros(mant), sign, exp.abs())
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub const CSV_HEADER: &str = "x,y,f,fx,fy,tri";

pub fn write_csv<W: Write>(rows: &[SampleRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for row in rows {
        match row.hit {
            Some((r, tri)) => writeln!(
                out,
                "{},{},{},{},{},{}",
                fmt_g17(row.x),
                fmt_g17(row.y),
                fmt_g17(r.value),
                fmt_g17(r.grad.dx),
                fmt_g17(r.grad.dy),
                tri
            )?,
            None => writeln!(out, "{},{},,,,-1", fmt_g17(row.x), fmt_g17(row.y))?,
        }
    }
    Ok(())
}
