use nnoid::complexrat::{schwarzian, ExtC, Poly, RationalMap};
use nnoid::mat2::{self, Mat2};
use nnoid::moebius::{build_group, BranchData, GroupLabel};
use nnoid::potentials::*;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rand_c(rng: &mut ChaCha8Rng, r: f64) -> Complex64 {
    Complex64::new(rng.gen_range(-r..r), rng.gen_range(-r..r))
}

fn gauge_identity_residual(spec: &PotentialSpec, trials: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < trials {
        let z = rand_c(&mut rng, 1.5);
        let lambda = Complex64::from_polar(rng.gen_range(0.3..1.5), rng.gen_range(0.0..std::f64::consts::TAU));
        let Ok(xi) = xi_at(spec, z, lambda) else { continue };
        let Ok((g, dg, _)) = schwartz_gauge_full(&spec.u, z, lambda, None) else {
            continue;
        };
        let Some(uz) = spec.u.eval(z).finite() else { continue };
        let Ok(eta) = eta_at(spec, uz, lambda) else { continue };
        let du = spec.u.eval_derivative(z).unwrap();
        let lhs = gauge_apply(&xi, &g, &dg).unwrap();
        let rhs = eta * du;
        worst = worst.max(mat2::norm(&(lhs - rhs)) / (1.0 + mat2::norm(&rhs)));
        done += 1;
    }
    worst
}

#[test]
fn gauge_identity_a4_and_d3() {
    for label in [GroupLabel::Tetrahedral, GroupLabel::Dihedral(3)] {
        let spec = PotentialSpec::new(label, WeightTriple::new(0.3, 0.2, 0.1), ResidueConvention::ScaledW16N2).unwrap();
        let r = gauge_identity_residual(&spec, 100);
        assert!(r < 1e-9, "{label}: {r:e}");
    }
}

#[test]
fn alpha_pulls_back_to_schwarzian_for_every_group() {
    let mut labels: Vec<GroupLabel> = (2..=6).flat_map(|n| [GroupLabel::Cyclic(n), GroupLabel::Dihedral(n)]).collect();
    labels.extend([GroupLabel::Tetrahedral, GroupLabel::Octahedral, GroupLabel::Icosahedral]);
    for label in labels {
        let spec = PotentialSpec::new(label, WeightTriple::new(0.0, 0.0, 0.0), ResidueConvention::ScaledW16N2);
        assert!(spec.is_ok(), "{label}: {:?}", spec.err());
    }
}

#[test]
fn alpha_for_power_map() {
    for n in 2..7usize {
        let nf = n as f64;
        let branch = BranchData {
            multiplicities: [n, 1, n],
            orbits: Default::default(),
            degree: n,
        };
        let alpha = alpha_downstairs(&branch);
        // ((n⁻² − 1)/2) du²/u²
        let k = (1.0 / (nf * nf) - 1.0) / 2.0;
        let expect = RationalMap::new(Poly::from_real(&[k]), Poly::from_real(&[0.0, 0.0, 1.0])).unwrap();
        assert!(alpha.coeff().cross_residual(&expect) < 1e-14);
        let u = RationalMap::monomial(n);
        let pulled = alpha.pullback(&u).unwrap();
        assert!(pulled.coeff().cross_residual(schwarzian(&u).unwrap().coeff()) < 1e-13);
        assert!(alpha_pullback_residual(&u, &alpha).unwrap() < 1e-12);
    }
}

#[test]
fn dihedral_alpha_residues() {
    let spec = PotentialSpec::new(
        GroupLabel::Dihedral(5),
        WeightTriple::new(1.0, 0.0, 0.0),
        ResidueConvention::ScaledW16N2,
    )
    .unwrap();
    let r = |p| spec.alpha.quad_residue(p).unwrap().re;
    assert!((r(ExtC::zero()) + 0.375).abs() < 1e-13);
    assert!((r(ExtC::Finite(Complex64::new(1.0, 0.0))) + 0.375).abs() < 1e-13);
    assert!((r(ExtC::Infinity) - (1.0 / 25.0 - 1.0) / 2.0).abs() < 1e-13);
}

#[test]
fn xi_lower_left_is_pulled_back_hopf() {
    let spec = PotentialSpec::new(
        GroupLabel::Octahedral,
        WeightTriple::new(0.4, -0.2, 0.3),
        ResidueConvention::PaperW16,
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let z = rand_c(&mut rng, 1.2);
        let lambda = Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
        let uz = spec.u.eval(z).finite().unwrap();
        let du = spec.u.eval_derivative(z).unwrap();
        let q = spec.q.eval(uz).unwrap();
        let expect = (1.0 - lambda) * (1.0 - lambda) * q * du * du;
        let xi = xi_at(&spec, z, lambda).unwrap();
        assert!((xi[(1, 0)] - expect).norm() < 1e-9 * (1.0 + expect.norm()));
        assert!((xi[(0, 1)] - lambda.inv()).norm() < 1e-15);
        assert_eq!(xi[(0, 0)], Complex64::new(0.0, 0.0));
        let at_one = xi_at(&spec, z, Complex64::new(1.0, 0.0)).unwrap();
        assert_eq!(at_one[(1, 0)], Complex64::new(0.0, 0.0));
    }
}

#[test]
fn eta_at_lambda_one_is_half_alpha() {
    let spec = PotentialSpec::new(
        GroupLabel::Tetrahedral,
        WeightTriple::new(0.4, 0.1, 0.3),
        ResidueConvention::ScaledW16N2,
    )
    .unwrap();
    let u = Complex64::new(0.3, 0.7);
    let eta = eta_at(&spec, u, Complex64::new(1.0, 0.0)).unwrap();
    assert!((eta[(1, 0)] - 0.5 * spec.alpha.eval(u).unwrap()).norm() < 1e-14);
    assert!(eta_at(&spec, Complex64::new(0.0, 0.0), Complex64::new(0.5, 0.0)).is_err());
}

#[test]
fn zero_weights_give_nilpotent_potential() {
    let spec = PotentialSpec::new(
        GroupLabel::Dihedral(3),
        WeightTriple::new(0.0, 0.0, 0.0),
        ResidueConvention::ScaledW16N2,
    )
    .unwrap();
    let xi = xi_at(&spec, Complex64::new(0.2, 0.1), Complex64::new(0.3, 0.4)).unwrap();
    assert_eq!(xi[(1, 0)], Complex64::new(0.0, 0.0));
}

#[test]
fn symmetry_acts_by_schwartz_gauge() {
    let spec = PotentialSpec::new(
        GroupLabel::Tetrahedral,
        WeightTriple::new(0.3, 0.2, 0.1),
        ResidueConvention::ScaledW16N2,
    )
    .unwrap();
    let group = build_group(GroupLabel::Tetrahedral).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for tau in group.elements().iter().skip(1).take(5) {
        let t = tau.as_rational_map().unwrap();
        for _ in 0..10 {
            let z = rand_c(&mut rng, 1.0);
            let lambda = Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
            let tz = t.eval(z).finite().unwrap();
            let lhs: Mat2 = xi_at(&spec, tz, lambda).unwrap() * t.eval_derivative(z).unwrap();
            let (g, dg, _) = schwartz_gauge_full(&t, z, lambda, None).unwrap();
            let rhs = gauge_apply(&xi_at(&spec, z, lambda).unwrap(), &g, &dg).unwrap();
            assert!(mat2::norm(&(lhs - rhs)) < 1e-9 * (1.0 + mat2::norm(&lhs)));
        }
    }
}

#[test]
fn gauge_composition_up_to_sign() {
    let u = RationalMap::new(Poly::from_real(&[0.5, 0.0, 1.0]), Poly::from_real(&[1.0, 2.0])).unwrap();
    let v = RationalMap::monomial(3);
    let vu = v.compose(&u).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let z = rand_c(&mut rng, 1.0);
        let lambda = Complex64::from_polar(0.8, rng.gen_range(0.0..std::f64::consts::TAU));
        let lhs = schwartz_gauge(&vu, z, lambda).unwrap();
        let uz = u.eval(z).finite().unwrap();
        let rhs = schwartz_gauge(&u, z, lambda).unwrap() * schwartz_gauge(&v, uz, lambda).unwrap();
        assert!(mat2::dist_up_to_sign(&lhs, &rhs) < 1e-10 * (1.0 + mat2::norm(&lhs)));
    }
}
