//! Acceptance criteria, one line per criterion. Exits non-zero if any fails.

use std::fs;
use std::process::{Command, ExitCode};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trispline::basis::{basis_eval, edge_gradient_reference, BasisKind, Pairing, ProcedureConfig};
use trispline::geometry::{Point, Triangle, Vector};
use trispline::mesh::{grid, parse_mesh, serialize_mesh, VertexData};
use trispline::shape::{
    make_shape_family, phi_star, psi_star, verify_shape_constraints, UnivariatePolynomial,
};
use trispline::spline::{spline_value, SplineField};
use trispline::verify::{
    check_c1, check_degree, check_edge_shape, check_invariance, fd_gradient,
    k_reflection_witness, pairing_jump, random_family, random_family_config, random_point_in,
    random_similarity, random_triangle, relative_gradient_error, seeded_data, shear_witness,
    AffineMap, InvarianceOptions, DEFAULT_SEED,
};

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rng(offset: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(DEFAULT_SEED.wrapping_add(offset))
}

fn corners(t: &Triangle) -> [Triangle; 3] {
    [
        Triangle::new(t.a, t.b, t.p),
        Triangle::new(t.b, t.p, t.a),
        Triangle::new(t.p, t.a, t.b),
    ]
}

fn shape_identities() -> Outcome {
    let one = UnivariatePolynomial::from_integers(&[1]);
    let t = UnivariatePolynomial::from_integers(&[0, 1]);
    let phi = phi_star();
    let psi = psi_star();
    let id1 = phi.checked_add(&phi.reflect().unwrap()).unwrap() == one;
    let id2 = phi
        .checked_add(&psi)
        .and_then(|s| s.checked_sub(&psi.reflect()?))
        .unwrap()
        == t;
    let mut r = rng(1);
    let families = (0..50)
        .filter(|_| verify_shape_constraints(&random_family(&mut r)).all_pass())
        .count();
    outcome(
        id1 && id2 && families == 50,
        format!("Phi*(t)+Phi*(1-t)=1: {id1}, Phi*+Psi*(t)-Psi*(1-t)=t: {id2}, endpoint conditions {families}/50 families"),
    )
}

fn cardinal_interpolation() -> Outcome {
    let mut r = rng(2);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let t = random_triangle(&mut r);
        let cfg = if i % 2 == 0 { ProcedureConfig::minimal() } else { random_family_config(&mut r) };
        for kind in BasisKind::ALL {
            let at = |x| basis_eval(&cfg, &t, kind, x).unwrap();
            let rp = at(t.p);
            let (v, g) = match kind {
                BasisKind::Value => (1.0, Vector::ZERO),
                _ => (0.0, kind.frame_vector()),
            };
            worst = worst.max((rp.value - v).abs()).max((rp.grad - g).norm());
            for q in [t.a, t.b] {
                let rq = at(q);
                worst = worst.max(rq.value.abs()).max(rq.grad.norm());
            }
        }
    }
    outcome(worst <= 1e-10, format!("max deviation {worst:.3e} over 100 triangles (tol 1e-10)"))
}

fn edge_shape() -> Outcome {
    let mut r = rng(3);
    let mut configs = vec![ProcedureConfig::minimal()];
    configs.extend((0..10).map(|_| random_family_config(&mut r)));
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let t = random_triangle(&mut r);
        for cfg in &configs {
            worst = worst.max(check_edge_shape(cfg, &t).unwrap().max_jump);
        }
    }
    outcome(worst <= 1e-11, format!("max deviation {worst:.3e}, 50 triangles x 11 configs (tol 1e-11)"))
}

fn c1_certification() -> Outcome {
    let mut r = rng(4);
    let mesh = grid(4);
    let mut configs = vec![ProcedureConfig::minimal()];
    configs.extend((0..10).map(|_| random_family_config(&mut r)));
    let mut worst: f64 = 0.0;
    for cfg in configs {
        let data = seeded_data(&mesh, r.gen());
        let field = SplineField::new(mesh.clone(), data, cfg).unwrap();
        worst = worst.max(check_c1(&field, 50, 1e-9).unwrap().max_jump);
    }
    outcome(
        worst <= 1e-9,
        format!("max jump {worst:.3e} on {} triangles, 11 configs (tol 1e-9)", mesh.num_triangles()),
    )
}

fn erratum_pin() -> Outcome {
    let swapped = pairing_jump(ProcedureConfig::minimal().with_pairing(Pairing::Swapped));
    let general = pairing_jump(ProcedureConfig::minimal());
    outcome(
        (swapped - 1.875).abs() <= 1e-9 && general <= 1e-12,
        format!("swapped pairing jump {swapped:.12}, general pairing jump {general:.3e}"),
    )
}

fn partition_of_unity() -> Outcome {
    let cfg = ProcedureConfig::minimal();
    let mut r = rng(6);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let t = random_triangle(&mut r);
        let x = random_point_in(&t, &mut r);
        let sum: f64 = corners(&t)
            .iter()
            .map(|c| basis_eval(&cfg, c, BasisKind::Value, x).unwrap().value)
            .sum();
        worst = worst.max((sum - 1.0).abs());
    }
    let o = Point::new(0.0, 0.0);
    let e1 = Point::new(1.0, 0.0);
    let e2 = Point::new(0.0, 1.0);
    let x = Point::new(0.5, 0.25);
    let spots = [
        (Triangle::new(o, e1, e2), 83.0),
        (Triangle::new(e1, e2, o), 143.0),
        (Triangle::new(e2, o, e1), 286.0),
    ];
    let mut spot_dev: f64 = 0.0;
    for (t, want) in spots {
        let v = basis_eval(&cfg, &t, BasisKind::Value, x).unwrap().value;
        spot_dev = spot_dev.max((v - want / 512.0).abs());
    }
    outcome(
        worst <= 1e-12 && spot_dev <= 1e-13,
        format!("max |sum - 1| {worst:.3e} at 1000 points; spot values (83,143,286)/512 dev {spot_dev:.3e}"),
    )
}

fn non_reproduction() -> Outcome {
    let mesh = trispline::mesh::Mesh::new(
        vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)],
        vec![[0, 1, 2]],
    )
    .unwrap();
    let data = mesh.vertices().iter().map(|v| VertexData::new(v.x, 1.0, 0.0)).collect();
    let field = SplineField::new(mesh, data, ProcedureConfig::minimal()).unwrap();
    let v = spline_value(&field, Point::new(1.0 / 3.0, 1.0 / 3.0)).unwrap();
    let dev = (v - 26.0 / 81.0).abs();
    outcome(dev <= 1e-13, format!("h=x at centroid = {v:.16} (26/81 dev {dev:.3e})"))
}

fn gradient_fd() -> Outcome {
    let cfg = ProcedureConfig::minimal();
    let mut r = rng(8);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let t = random_triangle(&mut r);
        let fns: Vec<_> = corners(&t)
            .into_iter()
            .flat_map(|c| BasisKind::ALL.map(|k| (c, k)))
            .collect();
        for _ in 0..50 {
            let x = random_point_in(&t, &mut r);
            for (c, k) in &fns {
                let g = basis_eval(&cfg, c, *k, x).unwrap().grad;
                let fd = fd_gradient(|z| basis_eval(&cfg, c, *k, z).unwrap().value, x, 1e-6);
                worst = worst.max(relative_gradient_error(g, fd));
            }
        }
    }
    outcome(worst <= 1e-5, format!("max relative error {worst:.3e}, 20 triangles x 50 points x 9 functions"))
}

fn degree() -> Outcome {
    let mut r = rng(9);
    let t = random_triangle(&mut r);
    let minimal = ProcedureConfig::minimal();
    let seed = r.gen();
    let mut d5: f64 = 0.0;
    let mut d4 = f64::INFINITY;
    for kind in BasisKind::ALL {
        d5 = d5.max(check_degree(&minimal, &t, kind, 5, 20, seed).unwrap());
        d4 = d4.min(check_degree(&minimal, &t, kind, 4, 20, seed).unwrap());
    }
    let phi1_t = ProcedureConfig::new(
        make_shape_family(UnivariatePolynomial::from_integers(&[0, 1]), UnivariatePolynomial::zero()).unwrap(),
    );
    let d7 = check_degree(&phi1_t, &t, BasisKind::Value, 7, 20, seed).unwrap();
    let scale = t.diameter().max(1.0);
    outcome(
        d5 <= 1e-7 * scale && d4 > 1e-3 && d7 <= 1e-7 * scale,
        format!("order-5 residual {d5:.3e}, order-4 residual {d4:.3e} (min over kinds), Phi1=t order-7 residual {d7:.3e}"),
    )
}

fn invariance() -> Outcome {
    let mesh = grid(3);
    let data = seeded_data(&mesh, DEFAULT_SEED);
    let field = SplineField::new(mesh, data, ProcedureConfig::minimal()).unwrap();
    let mut r = rng(10);
    let opts = InvarianceOptions::default();
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let map = random_similarity(&mut r, i % 2 == 1);
        worst = worst.max(check_invariance(&field, &map, &opts).unwrap().max_jump);
    }
    let shear = check_invariance(&shear_witness(), &AffineMap::shear(), &opts).unwrap().max_jump;
    let (kf, mirror) = k_reflection_witness();
    let kdev = check_invariance(&kf, &mirror, &opts).unwrap().max_jump;
    outcome(
        worst <= 1e-9 && shear > 1e-3 && kdev > 1e-6,
        format!("similarities max dev {worst:.3e}; shear witness dev {shear:.3e}; constant-k mirror dev {kdev:.3e}"),
    )
}

fn edge_reference() -> Outcome {
    let cfg = ProcedureConfig::minimal();
    let mut r = rng(11);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let t = random_triangle(&mut r);
        for k in 0..20 {
            let s = k as f64 / 19.0;
            let y = t.a.lerp(t.p, s);
            for kind in BasisKind::ALL {
                let reference = edge_gradient_reference(&cfg, &t, kind, s).unwrap();
                let g = basis_eval(&cfg, &t, kind, y).unwrap().grad;
                worst = worst.max((reference - g).norm());
            }
        }
    }
    outcome(worst <= 1e-12, format!("max deviation {worst:.3e}, 20 triangles x 20 parameters"))
}

fn roundtrip_and_cli() -> Outcome {
    let mesh = grid(3);
    let data = seeded_data(&mesh, 12);
    let text = serialize_mesh(&mesh, Some(&data), None).unwrap();
    let doc = parse_mesh(&text).unwrap();
    let bits = |v: &[VertexData]| v.iter().flat_map(|d| [d.f.to_bits(), d.fx.to_bits(), d.fy.to_bits()]).collect::<Vec<_>>();
    let roundtrip = doc.mesh == mesh
        && doc.mesh.vertices().iter().zip(mesh.vertices()).all(|(a, b)| a.x.to_bits() == b.x.to_bits() && a.y.to_bits() == b.y.to_bits())
        && bits(doc.data.as_deref().unwrap()) == bits(&data);

    let dir = tempfile::TempDir::new().unwrap();
    let path = dir.path().join("demo.json");
    let csv = dir.path().join("out.csv");
    let p = path.to_string_lossy().into_owned();
    let c = csv.to_string_lossy().into_owned();
    let steps: [&[&str]; 4] = [
        &["demo", "--field", "trig", "--mesh", "grid", "4", "--out", &p],
        &["validate", &p],
        &["check", &p, "--suite", "c1"],
        &["sample", &p, "--grid", "17,9", "--out", &c],
    ];
    let mut codes = Vec::new();
    for args in steps {
        let status = Command::new(env!("CARGO_BIN_EXE_trispline"))
            .args(args)
            .env_remove("TRISPLINE_SEED")
            .output()
            .map(|o| o.status.code().unwrap_or(-1))
            .unwrap_or(-1);
        codes.push(status);
    }
    let counts = parse_mesh(&fs::read_to_string(&path).unwrap_or_default())
        .map(|d| (d.mesh.num_vertices(), d.mesh.num_triangles()))
        .ok();
    let rows = fs::read_to_string(&csv).map(|t| t.lines().count() - 1).unwrap_or(0);
    outcome(
        roundtrip && codes.iter().all(|&c| c == 0) && counts == Some((25, 32)) && rows == 153,
        format!("bit-identical roundtrip: {roundtrip}; exit codes {codes:?}; demo mesh {counts:?}; csv rows {rows}"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("shape-function identities", shape_identities),
        ("cardinal interpolation", cardinal_interpolation),
        ("edge-shape uniformity", edge_shape),
        ("C1 certification", c1_certification),
        ("erratum pin", erratum_pin),
        ("partition of unity", partition_of_unity),
        ("non-reproduction regression", non_reproduction),
        ("gradient correctness", gradient_fd),
        ("degree", degree),
        ("invariance battery", invariance),
        ("edge gradient reference", edge_reference),
        ("round-trip and CLI", roundtrip_and_cli),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {:>2} {name}: {}", i + 1, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
