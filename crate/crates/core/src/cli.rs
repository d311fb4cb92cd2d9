//! Command-line front end.
//!
//! Exit codes: 0 success, 1 domain or check failure, 2 usage, parse or
//! missing-data errors. Reports go to stdout as JSON, diagnostics to stderr.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::basis::{BasisKind, ProcedureConfig};
use crate::geometry::Point;
use crate::mesh::{self, parse_mesh, serialize_mesh, validate_mesh, ConfigRecord, Mesh, MeshDocument, VertexData};
use crate::shape::{make_shape_family, UnivariatePolynomial};
use crate::spline::{fmt_g17, sample_grid, write_csv, BBox, SplineError, SplineField};
use crate::verify::{
    self, check_c1, check_degree, check_edge_shape, check_invariance, check_vertex_conditions,
    random_similarity, AffineMap, InvarianceOptions, Report, C1_TOLERANCE, DEFAULT_SEED,
    DEGREE_TOLERANCE, EDGE_SHAPE_TOLERANCE, INVARIANCE_TOLERANCE, SHEAR_THRESHOLD,
};

pub const SEED_ENV: &str = "TRISPLINE_SEED";

#[derive(Debug, Parser)]
#[command(name = "trispline", version, about = "C1 spline interpolation of gradient data on triangular meshes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a mesh file and print the validation report.
    Validate { path: PathBuf },
    /// Evaluate the spline and its gradient at one point.
    Eval {
        path: PathBuf,
        /// Query point as `x,y`.
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        at: (f64, f64),
        /// JSON file with `phi1`/`psi1`, or a mesh file with a `config` block.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Sample the spline on a regular grid and write CSV.
    Sample {
        path: PathBuf,
        /// `x0,y0,x1,y1`; defaults to the mesh bounding box.
        #[arg(long, value_parser = parse_bbox, allow_hyphen_values = true)]
        bbox: Option<BBox>,
        /// Grid size as `NX,NY`, both at least 2.
        #[arg(long, value_parser = parse_grid)]
        grid: (usize, usize),
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run a verification suite. Without a mesh file, the unit square with
    /// seeded random data is used.
    Check {
        path: Option<PathBuf>,
        #[arg(long, value_enum)]
        suite: Suite,
        /// Overridden by the TRISPLINE_SEED environment variable.
        #[arg(long)]
        seed: Option<u64>,
        /// Samples per edge (c1) or per map (invariance).
        #[arg(long)]
        samples: Option<usize>,
        /// With `--suite invariance`: pass when a shear breaks invariance.
        #[arg(long)]
        shear: bool,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Write a mesh file with data sampled from an analytic field.
    Demo {
        #[arg(long, value_enum)]
        field: DemoField,
        /// `square`, `fan` or `grid N`.
        #[arg(long, num_args = 1..=2, default_values_t = [String::from("square")])]
        mesh: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    C1,
    Vertex,
    Shape,
    Invariance,
    Degree,
}

/// Analytic fields for demo data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DemoField {
    /// `1`
    Constant,
    /// `1 + 2x - 3y`
    Linear,
    /// `x^2 + xy`
    Quadratic,
    /// `sin(x) cos(y)`
    Trig,
}

impl DemoField {
    pub fn value(self, p: Point) -> f64 {
        let (x, y) = (p.x, p.y);
        match self {
            DemoField::Constant => 1.0,
            DemoField::Linear => 1.0 + 2.0 * x - 3.0 * y,
            DemoField::Quadratic => x * x + x * y,
            DemoField::Trig => x.sin() * y.cos(),
        }
    }

    pub fn gradient(self, p: Point) -> (f64, f64) {
        let (x, y) = (p.x, p.y);
        match self {
            DemoField::Constant => (0.0, 0.0),
            DemoField::Linear => (2.0, -3.0),
            DemoField::Quadratic => (2.0 * x + y, x),
            DemoField::Trig => (x.cos() * y.cos(), -x.sin() * y.sin()),
        }
    }

    pub fn data(self, mesh: &Mesh) -> Vec<VertexData> {
        mesh.vertices()
            .iter()
            .map(|&p| {
                let (fx, fy) = self.gradient(p);
                VertexData::new(self.value(p), fx, fy)
            })
            .collect()
    }
}

/// Builds one of the named demo meshes.
pub fn demo_mesh(words: &[String]) -> Result<Mesh, String> {
    match words {
        [name] if name == "square" => Ok(mesh::unit_square()),
        [name] if name == "fan" => Ok(mesh::half_disk_fan()),
        [name, n] if name == "grid" => match n.parse::<usize>() {
            Ok(n) if (1..=1000).contains(&n) => Ok(mesh::grid(n)),
            _ => Err(format!("grid size must be an integer in 1..=1000, got {n:?}")),
        },
        [name] if name == "grid" => Err("grid needs a size, e.g. `grid 4`".into()),
        _ => Err(format!("unknown mesh {:?}", words.join(" "))),
    }
}

fn parse_floats(s: &str, n: usize) -> Result<Vec<f64>, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    if parts.len() != n {
        return Err(format!("expected {n} comma-separated numbers"));
    }
    if parts.iter().any(|v| !v.is_finite()) {
        return Err("numbers must be finite".into());
    }
    Ok(parts)
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let v = parse_floats(s, 2)?;
    Ok((v[0], v[1]))
}

fn parse_bbox(s: &str) -> Result<BBox, String> {
    let v = parse_floats(s, 4)?;
    Ok(BBox {
        x0: v[0],
        y0: v[1],
        x1: v[2],
        y1: v[3],
    })
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected NX,NY")?;
    let nx: usize = a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?;
    let ny: usize = b.trim().parse().map_err(|e| format!("{b:?}: {e}"))?;
    if nx < 2 || ny < 2 {
        return Err("grid needs at least 2 points per axis".into());
    }
    Ok((nx, ny))
}

/// Failure carrying its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    fn domain(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<SplineError> for Failure {
    fn from(e: SplineError) -> Self {
        match e {
            SplineError::OutsideDomain(_) | SplineError::Geometry { .. } => Failure::domain(e.to_string()),
            _ => Failure::usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

type Outcome = Result<i32, Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = if code == 0 {
                write!(out, "{e}")
            } else {
                write!(err, "{e}")
            };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn execute(command: Command, out: &mut dyn Write) -> Outcome {
    match command {
        Command::Validate { path } => cmd_validate(&path, out),
        Command::Eval { path, at, config } => cmd_eval(&path, at, config.as_deref(), out),
        Command::Sample {
            path,
            bbox,
            grid,
            out: dest,
            config,
        } => cmd_sample(&path, bbox, grid, dest.as_deref(), config.as_deref(), out),
        Command::Check {
            path,
            suite,
            seed,
            samples,
            shear,
            config,
        } => {
            let seed = resolve_seed(seed)?;
            cmd_check(path.as_deref(), suite, seed, samples, shear, config.as_deref(), out)
        }
        Command::Demo { field, mesh, out: dest } => cmd_demo(field, &mesh, dest.as_deref(), out),
    }
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, Failure> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::usage(format!("{SEED_ENV} must be an unsigned integer, got {v:?}"))),
        Err(_) => Ok(flag.unwrap_or(DEFAULT_SEED)),
    }
}

fn load(path: &Path) -> Result<MeshDocument, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    parse_mesh(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn config_from_record(rec: &ConfigRecord) -> Result<ProcedureConfig, Failure> {
    let phi1 = rec.phi1.clone().unwrap_or_else(UnivariatePolynomial::zero);
    let psi1 = rec.psi1.clone().unwrap_or_else(UnivariatePolynomial::zero);
    let shapes = make_shape_family(phi1, psi1).map_err(|e| Failure::usage(format!("config: {e}")))?;
    Ok(ProcedureConfig::new(shapes))
}

/// `--config` file if given, else the mesh file's own `config` block, else
/// the minimal procedure.
fn resolve_config(doc: &MeshDocument, path: Option<&Path>) -> Result<ProcedureConfig, Failure> {
    let Some(path) = path else {
        return match &doc.config {
            Some(rec) => config_from_record(rec),
            None => Ok(ProcedureConfig::minimal()),
        };
    };
    let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let block = value.get("config").cloned().unwrap_or(value);
    let rec: ConfigRecord =
        serde_json::from_value(block).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    config_from_record(&rec)
}

fn print_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::usage(e.to_string()))?;
    writeln!(out, "{text}")?;
    Ok(())
}

fn cmd_validate(path: &Path, out: &mut dyn Write) -> Outcome {
    let doc = load(path)?;
    let report = validate_mesh(&doc.mesh);
    print_json(out, &report)?;
    Ok(if report.pass { 0 } else { 1 })
}

fn field_from(doc: MeshDocument, config: Option<&Path>) -> Result<SplineField, Failure> {
    let cfg = resolve_config(&doc, config)?;
    Ok(SplineField::from_parts(doc.mesh, doc.data, cfg)?)
}

fn cmd_eval(path: &Path, at: (f64, f64), config: Option<&Path>, out: &mut dyn Write) -> Outcome {
    let field = field_from(load(path)?, config)?;
    let (r, tri) = field.evaluate(Point::new(at.0, at.1))?;
    writeln!(
        out,
        "f={} fx={} fy={} tri={}",
        fmt_g17(r.value),
        fmt_g17(r.grad.dx),
        fmt_g17(r.grad.dy),
        tri
    )?;
    Ok(0)
}

fn cmd_sample(
    path: &Path,
    bbox: Option<BBox>,
    (nx, ny): (usize, usize),
    dest: Option<&Path>,
    config: Option<&Path>,
    out: &mut dyn Write,
) -> Outcome {
    let field = field_from(load(path)?, config)?;
    let bbox = bbox.unwrap_or_else(|| BBox::of_mesh(field.mesh()));
    let rows = sample_grid(&field, bbox, nx, ny)?;
    match dest {
        Some(p) => {
            let mut buf = Vec::new();
            write_csv(&rows, &mut buf)?;
            fs::write(p, buf).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?;
        }
        None => write_csv(&rows, &mut *out)?,
    }
    Ok(0)
}

#[derive(Debug, Serialize)]
struct ShapeItem {
    triangle: usize,
    corner: usize,
    max_deviation: f64,
}

#[derive(Debug, Serialize)]
struct DegreeItem {
    triangle: usize,
    kind: BasisKind,
    order: usize,
    residual: f64,
}

#[derive(Debug, Serialize)]
struct MapItem {
    map: AffineMap,
    max_deviation: f64,
}

fn finish<T: Serialize>(check: &str, per_edge: Vec<T>, max_jump: f64, tolerance: f64, pass: bool) -> Report<T> {
    Report {
        check: check.into(),
        max_jump,
        per_edge,
        pass,
        tolerance,
    }
}

const INVARIANCE_MAPS: usize = 20;

#[allow(clippy::too_many_arguments)]
fn cmd_check(
    path: Option<&Path>,
    suite: Suite,
    seed: u64,
    samples: Option<usize>,
    shear: bool,
    config: Option<&Path>,
    out: &mut dyn Write,
) -> Outcome {
    if shear && suite != Suite::Invariance {
        return Err(Failure::usage("--shear only applies to --suite invariance"));
    }
    let field = match path {
        Some(p) => {
            let doc = load(p)?;
            let cfg = resolve_config(&doc, config)?;
            let data = doc.data.clone().unwrap_or_else(|| verify::seeded_data(&doc.mesh, seed));
            SplineField::new(doc.mesh, data, cfg)?
        }
        None if shear => verify::shear_witness(),
        None => {
            let m = mesh::unit_square();
            let data = verify::seeded_data(&m, seed);
            SplineField::new(m, data, ProcedureConfig::minimal())?
        }
    };
    let geometry = |e| Failure::domain(format!("{e}"));

    let pass = match suite {
        Suite::C1 => {
            let r = check_c1(&field, samples.unwrap_or(50), C1_TOLERANCE)?;
            print_json(out, &r)?;
            r.pass
        }
        Suite::Vertex => {
            let r = check_vertex_conditions(&field)?;
            print_json(out, &r)?;
            r.pass
        }
        Suite::Shape => {
            let mesh = field.mesh();
            let mut items = Vec::new();
            for k in 0..mesh.num_triangles() {
                for corner in 0..3 {
                    let r = check_edge_shape(field.config(), &mesh.triangle_at(k, corner)).map_err(geometry)?;
                    items.push(ShapeItem {
                        triangle: k,
                        corner,
                        max_deviation: r.max_jump,
                    });
                }
            }
            let max = items.iter().map(|i| i.max_deviation).fold(0.0, f64::max);
            let r = finish("shape", items, max, EDGE_SHAPE_TOLERANCE, max <= EDGE_SHAPE_TOLERANCE);
            print_json(out, &r)?;
            r.pass
        }
        Suite::Degree => {
            let mesh = field.mesh();
            let order = field.config().shapes().degree();
            let tolerance = DEGREE_TOLERANCE * mesh.scale().max(1.0);
            let mut items = Vec::new();
            for k in 0..mesh.num_triangles() {
                for kind in BasisKind::ALL {
                    let residual = check_degree(field.config(), &mesh.triangle(k), kind, order, 20, seed)
                        .map_err(|e| Failure::domain(e.to_string()))?;
                    items.push(DegreeItem {
                        triangle: k,
                        kind,
                        order,
                        residual,
                    });
                }
            }
            let max = items.iter().map(|i| i.residual).fold(0.0, f64::max);
            let r = finish("degree", items, max, tolerance, max <= tolerance);
            print_json(out, &r)?;
            r.pass
        }
        Suite::Invariance if shear => {
            let opts = InvarianceOptions {
                samples: samples.unwrap_or(200),
                seed,
                ..InvarianceOptions::default()
            };
            let r = check_invariance(&field, &AffineMap::shear(), &opts)
                .map_err(|e| Failure::domain(e.to_string()))?;
            let r = finish("invariance-shear", r.per_edge, r.max_jump, SHEAR_THRESHOLD, r.max_jump > SHEAR_THRESHOLD);
            print_json(out, &r)?;
            r.pass
        }
        Suite::Invariance => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let opts = InvarianceOptions {
                samples: samples.unwrap_or(200),
                seed,
                ..InvarianceOptions::default()
            };
            let mut items = Vec::new();
            for i in 0..INVARIANCE_MAPS {
                let map = random_similarity(&mut rng, i % 2 == 1);
                let r = check_invariance(&field, &map, &opts).map_err(|e| Failure::domain(e.to_string()))?;
                items.push(MapItem {
                    map,
                    max_deviation: r.max_jump,
                });
            }
            let max = items.iter().map(|i| i.max_deviation).fold(0.0, f64::max);
            let r = finish("invariance", items, max, INVARIANCE_TOLERANCE, max <= INVARIANCE_TOLERANCE);
            print_json(out, &r)?;
            r.pass
        }
    };
    Ok(if pass { 0 } else { 1 })
}

fn cmd_demo(field: DemoField, mesh_words: &[String], dest: Option<&Path>, out: &mut dyn Write) -> Outcome {
    let mesh = demo_mesh(mesh_words).map_err(Failure::usage)?;
    let data = field.data(&mesh);
    let text = serialize_mesh(&mesh, Some(&data), None).map_err(|e| Failure::usage(e.to_string()))?;
    match dest {
        Some(p) => fs::write(p, text + "\n").map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?,
        None => writeln!(out, "{text}")?,
    }
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("trispline").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn demo_fields_have_exact_gradients() {
        let p = Point::new(0.3, -0.8);
        let h = 1e-6;
        for f in [DemoField::Constant, DemoField::Linear, DemoField::Quadratic, DemoField::Trig] {
            let g = verify::fd_gradient(|q| f.value(q), p, h);
            let (fx, fy) = f.gradient(p);
            assert!((g.dx - fx).abs() < 1e-8 && (g.dy - fy).abs() < 1e-8, "{f:?}");
        }
    }

    #[test]
    fn demo_meshes() {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        assert_eq!(demo_mesh(&s(&["square"])).unwrap().num_triangles(), 2);
        assert_eq!(demo_mesh(&s(&["fan"])).unwrap().num_triangles(), 4);
        let g = demo_mesh(&s(&["grid", "4"])).unwrap();
        assert_eq!((g.num_vertices(), g.num_triangles()), (25, 32));
        assert!(demo_mesh(&s(&["grid"])).is_err());
        assert!(demo_mesh(&s(&["grid", "x"])).is_err());
        assert!(demo_mesh(&s(&["hexagon"])).is_err());
    }

    #[test]
    fn flag_parsers() {
        assert_eq!(parse_pair("0.5,-1").unwrap(), (0.5, -1.0));
        assert!(parse_pair("1").is_err());
        assert!(parse_pair("1,nan").is_err());
        assert_eq!(parse_grid("17,9").unwrap(), (17, 9));
        assert!(parse_grid("1,9").is_err());
        assert!(parse_bbox("0,0,1").is_err());
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run_args(&[]).0, 2);
        assert_eq!(run_args(&["frobnicate"]).0, 2);
        assert_eq!(run_args(&["demo", "--field", "cubic"]).0, 2);
        assert_eq!(run_args(&["demo", "--field", "trig", "--mesh", "hexagon"]).0, 2);
        assert_eq!(run_args(&["check", "--suite", "c1", "--shear"]).0, 2);
        assert_eq!(run_args(&["--help"]).0, 0);
    }

    #[test]
    fn default_check_suites_pass() {
        for suite in ["c1", "vertex", "shape", "degree"] {
            let (code, out, _) = run_args(&["check", "--suite", suite]);
            assert_eq!(code, 0, "{suite}: {out}");
        }
    }

    #[test]
    fn demo_to_stdout() {
        let (code, out, _) = run_args(&["demo", "--field", "linear", "--mesh", "grid", "2"]);
        assert_eq!(code, 0);
        let doc = parse_mesh(&out).unwrap();
        assert_eq!(doc.mesh.num_vertices(), 9);
        let d = doc.data.unwrap();
        assert_eq!(d[8], VertexData::new(0.0, 2.0, -3.0));
    }
}
