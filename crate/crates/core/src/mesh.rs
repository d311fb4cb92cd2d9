//! Conforming triangular meshes, their validation and the JSON file format.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{barycentric, signed_area, Point, Triangle};
use crate::shape::UnivariatePolynomial;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("triangle {triangle} references missing vertex {vertex}")]
    Index { triangle: usize, vertex: usize },
    #[error("triangle {0} repeats a vertex index")]
    RepeatedIndex(usize),
    #[error("vertex {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error("f/fx/fy must be present on all vertices or none (vertex {0})")]
    PartialData(usize),
    #[error("{expected} data records for {got} vertices")]
    DataLength { expected: usize, got: usize },
}

/// Undirected edge, stored with the smaller index first.
pub type Edge = (usize, usize);

pub fn edge(u: usize, v: usize) -> Edge {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

/// Vertex value and gradient `(f, fx, fy)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VertexData {
    pub f: f64,
    pub fx: f64,
    pub fy: f64,
}

impl VertexData {
    pub const ZERO: VertexData = VertexData {
        f: 0.0,
        fx: 0.0,
        fy: 0.0,
    };

    pub const fn new(f: f64, fx: f64, fy: f64) -> Self {
        Self { f, fx, fy }
    }

    pub fn is_finite(&self) -> bool {
        self.f.is_finite() && self.fx.is_finite() && self.fy.is_finite()
    }

    pub fn max_abs(&self) -> f64 {
        self.f.abs().max(self.fx.abs()).max(self.fy.abs())
    }
}

/// Per-vertex gradient data, one record per mesh vertex.
pub type VertexGradientData = Vec<VertexData>;

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    edge_map: BTreeMap<Edge, Vec<usize>>,
    flipped: usize,
}

impl Mesh {
    /// Checks indices, flips clockwise triangles to counterclockwise and
    /// builds the edge map. Geometric problems (degeneracy, overlap,
    /// non-conformity) are left to [`validate_mesh`].
    pub fn new(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        if let Some(i) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(MeshError::NonFinite(i));
        }
        let mut triangles = triangles;
        let mut flipped = 0;
        for (k, t) in triangles.iter_mut().enumerate() {
            if let Some(&v) = t.iter().find(|&&v| v >= vertices.len()) {
                return Err(MeshError::Index { triangle: k, vertex: v });
            }
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(MeshError::RepeatedIndex(k));
            }
            let tri = Triangle::new(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
            if signed_area(&tri) < 0.0 {
                t.swap(1, 2);
                flipped += 1;
            }
        }
        let mut edge_map: BTreeMap<Edge, Vec<usize>> = BTreeMap::new();
        for (k, t) in triangles.iter().enumerate() {
            for i in 0..3 {
                edge_map.entry(edge(t[i], t[(i + 1) % 3])).or_default().push(k);
            }
        }
        Ok(Self {
            vertices,
            triangles,
            edge_map,
            flipped,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edge_map(&self) -> &BTreeMap<Edge, Vec<usize>> {
        &self.edge_map
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edge_map.len()
    }

    /// Number of input triangles that were reoriented on construction.
    pub fn flipped_on_load(&self) -> usize {
        self.flipped
    }

    /// Triangle `k` with its first stored vertex as the distinguished one.
    pub fn triangle(&self, k: usize) -> Triangle {
        self.triangle_at(k, 0)
    }

    /// Triangle `k` with stored corner `corner` distinguished; the other two
    /// follow in counterclockwise order.
    pub fn triangle_at(&self, k: usize, corner: usize) -> Triangle {
        let t = self.triangles[k];
        Triangle::new(
            self.vertices[t[(corner + 1) % 3]],
            self.vertices[t[(corner + 2) % 3]],
            self.vertices[t[corner]],
        )
    }

    /// Longest bounding-box side.
    pub fn scale(&self) -> f64 {
        let (lo, hi) = self.bbox();
        (hi.x - lo.x).max(hi.y - lo.y)
    }

    pub fn bbox(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            lo.x = lo.x.min(v.x);
            lo.y = lo.y.min(v.y);
            hi.x = hi.x.max(v.x);
            hi.y = hi.y.max(v.y);
        }
        (lo, hi)
    }

    /// Image of the mesh under a point map, triangle order preserved.
    pub fn map_points(&self, f: impl Fn(Point) -> Point) -> Result<Mesh, MeshError> {
        Mesh::new(self.vertices.iter().map(|&v| f(v)).collect(), self.triangles.clone())
    }
}

/// One shared interior edge and the two triangles meeting there.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AdjacentPair {
    pub first: usize,
    pub second: usize,
    pub edge: Edge,
}

/// Every edge shared by exactly two triangles, in edge order.
pub fn adjacent_pairs(mesh: &Mesh) -> Vec<AdjacentPair> {
    mesh.edge_map
        .iter()
        .filter(|(_, tris)| tris.len() == 2)
        .map(|(&edge, tris)| AdjacentPair {
            first: tris[0],
            second: tris[1],
            edge,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub pass: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub details: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub pass: bool,
    pub vertices: usize,
    pub triangles: usize,
    pub edges: usize,
    pub checks: Vec<CheckOutcome>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn check(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failed(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.checks.iter().filter(|c| !c.pass).map(|c| c.name)
    }
}

const OVERLAP_SAMPLES: usize = 100;
const OVERLAP_SEED: u64 = 0x0B5E_55ED;

/// Runs the mesh checks. Never fails; failures are carried in the report.
pub fn validate_mesh(mesh: &Mesh) -> ValidationReport {
    let mut checks = Vec::new();
    let mut warnings = Vec::new();

    let degenerate: Vec<String> = (0..mesh.num_triangles())
        .filter(|&k| mesh.triangle(k).is_degenerate())
        .map(|k| format!("triangle {k}"))
        .collect();
    checks.push(CheckOutcome {
        name: "non-degeneracy",
        pass: degenerate.is_empty(),
        details: degenerate,
    });

    let crowded: Vec<String> = mesh
        .edge_map
        .iter()
        .filter(|(_, t)| t.len() > 2)
        .map(|(e, t)| format!("edge {}-{} has {} triangles", e.0, e.1, t.len()))
        .collect();
    checks.push(CheckOutcome {
        name: "edge multiplicity",
        pass: crowded.is_empty(),
        details: crowded,
    });

    let hanging = hanging_vertices(mesh);
    checks.push(CheckOutcome {
        name: "conformity",
        pass: hanging.is_empty(),
        details: hanging,
    });

    let overlaps = overlap_spot_check(mesh);
    checks.push(CheckOutcome {
        name: "interior disjointness",
        pass: overlaps.is_empty(),
        details: overlaps,
    });

    let clockwise: Vec<String> = (0..mesh.num_triangles())
        .filter(|&k| signed_area(&mesh.triangle(k)) < 0.0)
        .map(|k| format!("triangle {k}"))
        .collect();
    checks.push(CheckOutcome {
        name: "orientation",
        pass: clockwise.is_empty(),
        details: clockwise,
    });
    if mesh.flipped > 0 {
        warnings.push(format!(
            "{} triangle(s) reoriented counterclockwise on load",
            mesh.flipped
        ));
    }

    let mut seen: BTreeMap<(u64, u64), usize> = BTreeMap::new();
    for (i, v) in mesh.vertices.iter().enumerate() {
        // +0.0 and -0.0 are the same location
        let k = ((v.x + 0.0).to_bits(), (v.y + 0.0).to_bits());
        if let Some(j) = seen.insert(k, i) {
            warnings.push(format!("vertices {j} and {i} share coordinates"));
        }
    }

    ValidationReport {
        pass: checks.iter().all(|c| c.pass),
        vertices: mesh.num_vertices(),
        triangles: mesh.num_triangles(),
        edges: mesh.num_edges(),
        checks,
        warnings,
    }
}

/// Vertices lying strictly inside a boundary edge they are not an endpoint
/// of (T-junctions).
fn hanging_vertices(mesh: &Mesh) -> Vec<String> {
    let scale = mesh.scale().max(f64::MIN_POSITIVE);
    let mut found = Vec::new();
    for (&(u, v), tris) in &mesh.edge_map {
        if tris.len() != 1 {
            continue;
        }
        let (pu, pv) = (mesh.vertices[u], mesh.vertices[v]);
        let d = pv - pu;
        let len2 = d.norm_sq();
        if len2 == 0.0 {
            continue;
        }
        for (w, &pw) in mesh.vertices.iter().enumerate() {
            if w == u || w == v {
                continue;
            }
            let r = pw - pu;
            let t = r.dot(d) / len2;
            let dist = crate::geometry::det(d, r).abs() / len2.sqrt();
            if t > 1e-9 && t < 1.0 - 1e-9 && dist <= 1e-9 * scale {
                found.push(format!("vertex {w} splits edge {u}-{v}"));
            }
        }
    }
    found
}

/// Samples points inside each triangle and reports any that fall strictly
/// inside another triangle too.
fn overlap_spot_check(mesh: &Mesh) -> Vec<String> {
    let n = mesh.num_triangles();
    if n < 2 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(OVERLAP_SEED);
    let mut found = Vec::new();
    for _ in 0..OVERLAP_SAMPLES {
        let k = rng.gen_range(0..n);
        let tri = mesh.triangle(k);
        if tri.is_degenerate() {
            continue;
        }
        let (mut s, mut t): (f64, f64) = (rng.gen(), rng.gen());
        if s + t > 1.0 {
            s = 1.0 - s;
            t = 1.0 - t;
        }
        let x = tri.point_at(1.0 - s - t, s, t);
        let inside = (0..n)
            .filter(|&j| {
                let tj = mesh.triangle(j);
                !tj.is_degenerate()
                    && barycentric(&tj, x).is_ok_and(|bc| bc.min() > 1e-9)
            })
            .count();
        if inside > 1 {
            found.push(format!("point ({}, {}) inside {} triangles", x.x, x.y, inside));
        }
    }
    found.sort();
    found.dedup();
    found
}

// ---------------------------------------------------------------------------
// JSON file format

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConfigRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi1: Option<UnivariatePolynomial>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi1: Option<UnivariatePolynomial>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct VertexRecord {
    x: f64,
    y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    f: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fx: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fy: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MeshFile {
    vertices: Vec<VertexRecord>,
    triangles: Vec<[usize; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    config: Option<ConfigRecord>,
}

/// Contents of a mesh file.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshDocument {
    pub mesh: Mesh,
    pub data: Option<VertexGradientData>,
    pub config: Option<ConfigRecord>,
}

pub fn parse_mesh(text: &str) -> Result<MeshDocument, MeshError> {
    let file: MeshFile = serde_json::from_str(text).map_err(|e| MeshError::Parse(e.to_string()))?;
    let vertices: Vec<Point> = file.vertices.iter().map(|v| Point::new(v.x, v.y)).collect();

    let has = |v: &VertexRecord| [v.f, v.fx, v.fy].map(|c| c.is_some());
    let with_data = file.vertices.first().is_some_and(|v| has(v) == [true; 3]);
    for (i, v) in file.vertices.iter().enumerate() {
        let flags = has(v);
        if flags != [with_data; 3] {
            return Err(MeshError::PartialData(i));
        }
    }
    let data = with_data.then(|| {
        file.vertices
            .iter()
            .map(|v| VertexData::new(v.f.unwrap(), v.fx.unwrap(), v.fy.unwrap()))
            .collect()
    });

    let mesh = Mesh::new(vertices, file.triangles)?;
    Ok(MeshDocument {
        mesh,
        data,
        config: file.config,
    })
}

pub fn serialize_mesh(
    mesh: &Mesh,
    data: Option<&[VertexData]>,
    config: Option<&ConfigRecord>,
) -> Result<String, MeshError> {
    if let Some(d) = data {
        if d.len() != mesh.num_vertices() {
            return Err(MeshError::DataLength {
                expected: mesh.num_vertices(),
                got: d.len(),
            });
        }
    }
    let vertices = mesh
        .vertices
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let d = data.map(|d| d[i]);
            VertexRecord {
                x: v.x,
                y: v.y,
                f: d.map(|d| d.f),
                fx: d.map(|d| d.fx),
                fy: d.map(|d| d.fy),
            }
        })
        .collect();
    let file = MeshFile {
        vertices,
        triangles: mesh.triangles.clone(),
        config: config.cloned(),
    };
    serde_json::to_string_pretty(&file).map_err(|e| MeshError::Parse(e.to_string()))
}

// ---------------------------------------------------------------------------
// Standard meshes

/// Unit square split along the diagonal from `(0,0)` to `(1,1)`.
pub fn unit_square() -> Mesh {
    Mesh::new(
        vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ],
        vec![[0, 1, 2], [0, 2, 3]],
    )
    .expect("static mesh")
}

/// Four triangles fanned around the origin over the upper half disk.
pub fn half_disk_fan() -> Mesh {
    let mut vertices = vec![Point::new(0.0, 0.0)];
    for k in 0..=4 {
        let a = std::f64::consts::PI * k as f64 / 4.0;
        vertices.push(Point::new(a.cos(), a.sin()));
    }
    let triangles = (1..=4).map(|k| [0, k, k + 1]).collect();
    Mesh::new(vertices, triangles).expect("static mesh")
}

/// `[0,1]^2` divided into `n x n` squares, each split along its rising
/// diagonal: `(n+1)^2` vertices and `2 n^2` triangles.
pub fn grid(n: usize) -> Mesh {
    assert!(n >= 1, "grid needs at least one cell");
    let h = 1.0 / n as f64;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(Point::new(i as f64 * h, j as f64 * h));
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    Mesh::new(vertices, triangles).expect("static mesh")
}

/// Draws gradient data uniformly from `[-1, 1]^3` per vertex.
pub fn random_data(mesh: &Mesh, rng: &mut impl Rng) -> VertexGradientData {
    (0..mesh.num_vertices())
        .map(|_| {
            VertexData::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            )
        })
        .collect()
}
