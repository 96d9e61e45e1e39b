mod common;

use nalgebra::{Matrix3, Rotation3, Vector3};
use nnoid::complexrat::ExtC;
use nnoid::looplab::IwasawaOptions;
use nnoid::mat2::{self, mat, Mat2, ZERO};
use nnoid::moebius::{build_group, GroupLabel};
use nnoid::monodromy::{LambdaGrid, OdeOptions, Path};
use nnoid::surface::*;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::dressed_pipeline;

fn small_grid() -> GridOptions {
    GridOptions {
        radial: 10,
        angular: 20,
        annulus_rings: 3,
        ..Default::default()
    }
}

#[test]
fn sym_of_constant_frame_vanishes() {
    let u = mat(
        Complex64::new(0.6, 0.0),
        Complex64::new(0.0, 0.8),
        Complex64::new(0.0, 0.8),
        Complex64::new(0.6, 0.0),
    );
    let (p, defect) = sym_point(&u, &u, &u, 1e-3);
    assert_eq!(p, [0.0, 0.0, 0.0]);
    assert_eq!(defect, 0.0);
}

#[test]
fn sym_of_diagonal_rotation() {
    let eps = 1e-3;
    let f = |t: f64| {
        mat(
            Complex64::from_polar(1.0, t / 2.0),
            ZERO,
            ZERO,
            Complex64::from_polar(1.0, -t / 2.0),
        )
    };
    let (p, defect) = sym_point(&f(-eps), &f(0.0), &f(eps), eps);
    assert!(p[0].abs() < 1e-12 && p[1].abs() < 1e-12);
    assert!((p[2] - 1.0).abs() < 1e-10);
    assert!(defect < 1e-10);
}

#[test]
fn procrustes_recovers_isometries() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let pts: Vec<[f64; 3]> = (0..20)
        .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
        .collect();
    let rot = Rotation3::from_axis_angle(&Vector3::y_axis(), 0.7).into_inner();
    let mirror = Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, 1.0));
    let t = Vector3::new(0.3, -2.0, 1.0);
    for (r, reflect) in [(rot, false), (rot * mirror, true)] {
        let target: Vec<[f64; 3]> = pts
            .iter()
            .map(|p| {
                let q = r * Vector3::new(p[0], p[1], p[2]) + t;
                [q[0], q[1], q[2]]
            })
            .collect();
        let (iso, rms) = procrustes(&pts, &target, reflect).unwrap();
        assert!(rms < 1e-12);
        assert!((iso.rotation - r).norm() < 1e-12);
        assert!((iso.translation - t).norm() < 1e-12);
    }
    let flat: Vec<[f64; 3]> = pts.iter().map(|p| [p[0], p[1], 0.0]).collect();
    assert!(procrustes(&flat, &flat, true).is_err());
}

#[test]
fn domain_grid_respects_cuts() {
    let ends: Vec<ExtC> = (0..3)
        .map(|k| ExtC::Finite(Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / 3.0)))
        .collect();
    let opts = small_grid();
    let g = domain_grid(&ends, &opts);
    let inner = opts.inner_ratio * opts.r_cut;
    for &z in &g.points {
        let d = ends.iter().map(|e| e.chordal(ExtC::Finite(z))).fold(f64::INFINITY, f64::min);
        assert!(d > inner * (1.0 - 1e-9));
        assert!(ExtC::Infinity.chordal(ExtC::Finite(z)) > opts.infinity_hole * (1.0 - 1e-9));
    }
    assert!(g.faces.iter().flatten().all(|&i| i < g.points.len()));
    // Annuli hold `rings × angular` points each.
    let annulus = ends.len() * opts.annulus_rings * opts.angular;
    assert!(g.points.len() > annulus);
}

#[test]
fn obj_layout_and_round_trip() {
    let dir = std::env::temp_dir().join(format!("nnoid-obj-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let mesh = Mesh {
        vertices: vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.1, 1.0 / 3.0, -2.5e-7]],
        faces: vec![[0, 1, 2]],
        ..Default::default()
    };
    let path = dir.join("tri.obj");
    export_obj(&mesh, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert_eq!(text.lines().last().unwrap(), "f 1 2 3");
    let (v, f) = import_obj(&path).unwrap();
    assert_eq!(v, mesh.vertices);
    assert_eq!(f, mesh.faces);
    let again = dir.join("again.obj");
    export_obj(
        &Mesh {
            vertices: v,
            faces: f,
            ..Default::default()
        },
        &again,
    )
    .unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&again).unwrap());

    let empty = dir.join("empty.obj");
    export_obj(&Mesh::default(), &empty).unwrap();
    assert_eq!(std::fs::read_to_string(&empty).unwrap(), "");
    assert!(export_obj(&mesh, &dir.join("missing").join("x.obj")).is_err());
    std::fs::remove_dir_all(&dir).ok();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn full_group_composition_matches_action(a in 0usize..12, b in 0usize..12, re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let g = build_group(GroupLabel::Dihedral(3)).unwrap();
        let el = |k: usize| FullElement { g: g.elements()[k % 6], reflect: k >= 6 };
        let z = ExtC::Finite(Complex64::new(re, im));
        let lhs = el(a).compose(&el(b)).apply(z);
        let rhs = el(a).apply(el(b).apply(z));
        prop_assert!(lhs.chordal(rhs) < 1e-10);
    }
}

#[test]
fn single_point_grid_gives_no_faces() {
    let (spec, un, grid) = dressed_pipeline(GroupLabel::Cyclic(3), [0.0, 0.0, 0.4]);
    let field = FrameField::new(&spec, &un, grid, OdeOptions::default(), IwasawaOptions::default()).unwrap();
    let g = DomainGrid {
        points: vec![Complex64::new(0.1, 0.2)],
        faces: vec![],
    };
    let (mesh, stats) = frame_mesh(&field, &g, &small_grid());
    assert_eq!(mesh.vertices.len(), 1);
    assert!(mesh.faces.is_empty());
    assert!(stats.dropped.is_empty());
}

#[test]
fn cyclic_surface_closes_and_has_pyramidal_symmetry() {
    let (spec, un, grid) = dressed_pipeline(GroupLabel::Cyclic(3), [0.0, 0.0, 0.4]);
    let ode = OdeOptions::default();
    let iw = IwasawaOptions::default();
    let field = FrameField::new(&spec, &un, grid, ode, iw).unwrap();
    let opts = small_grid();
    let dg = domain_grid(&field.end_points, &opts);
    let (mesh, stats) = frame_mesh(&field, &dg, &opts);
    assert!(stats.dropped.is_empty(), "{:?}", stats.dropped.first());
    assert!(stats.max_defect < ANTI_HERMITIAN_TOL);
    let diam = mesh.diameter();

    // The frame at the basepoint is the unitary factor of the dressing.
    let at_base = field.frame_at(field.basepoint).unwrap();
    let direct = field.unitary_factor(&vec![mat2::identity(); grid.len()]).unwrap();
    assert_eq!(at_base.one, direct.one);
    assert!(mat2::unitarity_residual(&at_base.one) < 1e-8);

    let closure = closure_check(&field).unwrap();
    assert_eq!(closure.loops.len(), 3);
    assert!(closure.max_residual < 1e-4 * diam, "{}", closure.max_residual);
    let bare = FrameField::undressed(&spec, grid, ode, iw).unwrap();
    let open = closure_check(&bare).unwrap();
    assert!(open.max_residual > 1e-2 * diam, "{}", open.max_residual);

    // A loop enclosing no end changes nothing.
    let lp = Path::loop_around(field.basepoint, field.basepoint + Complex64::new(0.05, 0.1), 0.08, true, "none");
    let t = field.transport(&lp).unwrap();
    let phi = field.holomorphic_frame(Complex64::new(0.1, 0.3)).unwrap();
    let moved: Vec<Mat2> = t.iter().zip(&phi).map(|(a, b)| a * b).collect();
    let (fa, fb) = (field.unitary_factor(&phi).unwrap(), field.unitary_factor(&moved).unwrap());
    let pa = sym_point(&fa.minus, &fa.one, &fa.plus, grid.eps).0;
    let pb = sym_point(&fb.minus, &fb.one, &fb.plus, grid.eps).0;
    assert!(distance(&pa, &pb) < 1e-8);

    let sym = symmetry_check(&field, &mesh, true, 24, 0.2).unwrap();
    assert_eq!(sym.order, 6);
    assert!(sym.injective);
    assert!(sym.identity_defect < 1e-9);
    assert!(sym.max_residual < 1e-3 * diam);
    assert!(sym.homomorphism_defect < 1e-6);
    let flips = sym.entries.iter().filter(|e| e.determinant < 0.0).count();
    assert_eq!(flips, 3);
}

#[test]
fn halving_epsilon_is_second_order() {
    let (spec, un, grid) = dressed_pipeline(GroupLabel::Cyclic(3), [0.0, 0.0, 0.4]);
    let ode = OdeOptions::default();
    let iw = IwasawaOptions::default();
    let z = Complex64::new(-0.4, 0.3);
    let at = |eps: f64| {
        let g = LambdaGrid { eps, ..grid };
        FrameField::new(&spec, &un, g, ode, iw).unwrap().point_at(z).unwrap().0
    };
    let (p1, p2, p4) = (at(4e-3), at(2e-3), at(1e-3));
    let d1 = distance(&p1, &p2);
    let d2 = distance(&p2, &p4);
    // Error K ε² changes by ¾ K ε² per halving; the ratio of successive
    // changes is 4 for a second-order scheme.
    let ratio = d1 / d2;
    assert!(ratio > 2.0 && ratio < 8.0, "{d1:e} {d2:e}");
}

#[test]
fn dihedral_surface_has_prismatic_symmetry() {
    let (spec, un, grid) = dressed_pipeline(GroupLabel::Dihedral(3), [0.3, 0.3, 0.3]);
    let field = FrameField::new(&spec, &un, grid, OdeOptions::default(), IwasawaOptions::default()).unwrap();
    let opts = GridOptions {
        annulus_rings: 0,
        ..small_grid()
    };
    let dg = domain_grid(&field.end_points, &opts);
    let (mesh, stats) = frame_mesh(&field, &dg, &opts);
    assert!(stats.dropped.is_empty());
    let diam = mesh.diameter();
    let sym = symmetry_check(&field, &mesh, true, 16, 0.2).unwrap();
    assert_eq!(sym.order, 12);
    assert!(sym.injective);
    assert!(sym.max_residual < 1e-3 * diam);
    assert!(sym.homomorphism_defect < 1e-6);
}
