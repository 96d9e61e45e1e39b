use nnoid::mat2::{self, Mat2};
use nnoid::moebius::{build_group, GroupLabel};
use nnoid::monodromy::*;
use nnoid::potentials::{PotentialSpec, ResidueConvention, WeightTriple};
use num_complex::Complex64;

fn spec(label: GroupLabel, w: [f64; 3]) -> PotentialSpec {
    PotentialSpec::new(label, WeightTriple::new(w[0], w[1], w[2]), ResidueConvention::ScaledW16N2).unwrap()
}

#[test]
fn eigenvalue_formula_dihedral_and_cyclic() {
    let opts = OdeOptions::default();
    for (label, w) in [(GroupLabel::Dihedral(3), [0.3, 0.3, 0.3]), (GroupLabel::Cyclic(3), [0.0, 0.0, 0.4])] {
        let s = spec(label, w);
        let rep = monodromies_downstairs(&s, BASEPOINT, LambdaGrid::new(16), &opts).unwrap();
        assert!(rep.product_residual() < 1e-7);
        assert!(rep.det_residual() < 1e-8);
        let r = trace_formula_residual(&s, &rep);
        assert!(r < 1e-5, "{label}: {r:e}");
    }
}

#[test]
fn lambda_one_eigenvalues_ignore_weights() {
    let s = spec(GroupLabel::Octahedral, [1.0, -0.5, 0.7]);
    let rep = monodromies_downstairs(&s, BASEPOINT, LambdaGrid::new(4), &OdeOptions::default()).unwrap();
    for k in 0..3 {
        let n = s.branch.multiplicities[k] as f64;
        let expect = 2.0 * (2.0 * std::f64::consts::PI * (0.5 - 1.0 / (2.0 * n))).cos();
        assert!((mat2::trace(&rep.generators[k][0]) - expect).norm() < 1e-7);
    }
}

#[test]
fn homotopic_loops_agree() {
    let s = spec(GroupLabel::Dihedral(3), [0.3, 0.3, 0.3]);
    let l = Complex64::from_polar(1.0, 1.3);
    let pot = |u: Complex64| nnoid::potentials::eta_at(&s, u, l);
    let opts = OdeOptions::default();
    let a = integrate(
        &pot,
        &Path::loop_around(BASEPOINT, Complex64::new(0.0, 0.0), 0.25, true, "0"),
        &opts,
    )
    .unwrap();
    let square = Path::polyline(&[
        BASEPOINT,
        Complex64::new(0.3, 0.3),
        Complex64::new(-0.3, 0.3),
        Complex64::new(-0.3, -0.3),
        Complex64::new(0.3, -0.3),
        Complex64::new(0.3, 0.3),
        BASEPOINT,
    ]);
    let b = integrate(&pot, &square, &opts).unwrap();
    assert!(mat2::norm(&(a - b)) < 1e-7);
}

#[test]
fn moving_the_basepoint_conjugates() {
    let s = spec(GroupLabel::Dihedral(3), [0.3, 0.3, 0.3]);
    let opts = OdeOptions::default();
    let grid = LambdaGrid::new(4);
    let other = Complex64::new(0.45, 0.35);
    let a = monodromies_downstairs(&s, BASEPOINT, grid, &opts).unwrap();
    let b = monodromies_downstairs(&s, other, grid, &opts).unwrap();
    for (j, l) in grid.points().iter().enumerate() {
        let pot = |u: Complex64| nnoid::potentials::eta_at(&s, u, *l);
        let c = integrate(&pot, &Path::segment(BASEPOINT, other), &opts).unwrap();
        for k in 0..3 {
            let conj: Mat2 = mat2::adj(&c) * a.generators[k][j] * c;
            assert!(mat2::dist_up_to_sign(&conj, &b.generators[k][j]) < 1e-7);
        }
    }
}

#[test]
fn descent_cyclic_and_tetrahedral() {
    let opts = OdeOptions::default();
    let grid = LambdaGrid::new(8);
    for (label, w) in [(GroupLabel::Cyclic(3), [0.0, 0.0, 0.4]), (GroupLabel::Tetrahedral, [0.3, 0.2, 0.1])] {
        let s = spec(label, w);
        let g = build_group(label).unwrap();
        let tau = g.elements().iter().find(|e| e.order(60) == Some(3)).unwrap();
        let r = descent_check(&s, tau, grid, &opts).unwrap();
        assert_eq!(r.order, 3);
        assert!(r.residual < 1e-6, "{label}: {}", r.residual);
        let id = descent_check(&s, &g.elements()[0], grid, &opts).unwrap();
        assert_eq!(id.residual, 0.0);
    }
}
