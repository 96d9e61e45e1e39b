use nnoid::complexrat::{ExtC, Poly, RationalMap};
use nnoid::moebius::*;
use num_complex::Complex64;

fn labels() -> Vec<GroupLabel> {
    let mut v = Vec::new();
    for n in 2..=8 {
        v.push(GroupLabel::Cyclic(n));
        v.push(GroupLabel::Dihedral(n));
    }
    v.extend([GroupLabel::Tetrahedral, GroupLabel::Octahedral, GroupLabel::Icosahedral]);
    v
}

#[test]
fn table_and_riemann_hurwitz() {
    for label in labels() {
        let g = build_group(label).unwrap();
        let u = invariant_map(&g).unwrap();
        assert_eq!(u.degree(), label.order(), "{label}");
        let b = branch_data(&g, &u).unwrap_or_else(|e| panic!("{label}: {e}"));
        assert_eq!(b.multiplicities, label.multiplicities());
        assert_eq!(b.riemann_hurwitz_sum(), 2 * label.order() - 2);
    }
}

#[test]
fn orbit_cardinalities() {
    let cases = [
        (GroupLabel::Dihedral(5), [5, 5, 2]),
        (GroupLabel::Tetrahedral, [4, 4, 6]),
        (GroupLabel::Octahedral, [6, 8, 12]),
        (GroupLabel::Icosahedral, [12, 20, 30]),
    ];
    for (label, card) in cases {
        let g = build_group(label).unwrap();
        let b = branch_data(&g, &invariant_map(&g).unwrap()).unwrap();
        assert_eq!(b.cardinalities(), card, "{label}");
    }
}

#[test]
fn invariance_and_reflection() {
    for label in labels() {
        let g = build_group(label).unwrap();
        let u = invariant_map(&g).unwrap();
        assert!(verify_invariance(&u, &g) < 1e-8, "{label}");
        assert!(conj_symmetry_residual(&u) < 1e-8, "{label}");
    }
}

#[test]
fn generic_fibers_are_orbits() {
    for label in [
        GroupLabel::Dihedral(3),
        GroupLabel::Tetrahedral,
        GroupLabel::Octahedral,
        GroupLabel::Icosahedral,
    ] {
        let g = build_group(label).unwrap();
        let u = invariant_map(&g).unwrap();
        for x in [Complex64::new(0.3, 0.2), Complex64::new(-1.7, -0.4)] {
            assert!(fiber_orbit_defect(&u, &g, x).unwrap() < 1e-6, "{label}");
        }
    }
}

#[test]
fn fiber_points_share_multiplicity() {
    let g = build_group(GroupLabel::Octahedral).unwrap();
    let u = invariant_map(&g).unwrap();
    let b = branch_data(&g, &u).unwrap();
    for k in 0..3 {
        for p in &b.orbits[k] {
            let refined = g.orbit(*p);
            assert_eq!(refined.len(), b.orbits[k].len());
        }
    }
    // Exact multiplicity at a vertex of the octahedron.
    assert_eq!(u.mult_at(ExtC::zero()).unwrap(), 4);
    assert_eq!(u.mult_at(ExtC::Infinity).unwrap(), 4);
}

#[test]
fn power_map_convention() {
    // u = z^n is invariant with multiplicities (n, 1, n) over (0, 1, ∞).
    let n = 5;
    let g = build_group(GroupLabel::Cyclic(n)).unwrap();
    let u = RationalMap::monomial(n);
    assert!(verify_invariance(&u, &g) < 1e-10);
    assert_eq!(u.mult_at(ExtC::zero()).unwrap(), n);
    assert_eq!(u.mult_at(ExtC::Finite(Complex64::new(1.0, 0.0))).unwrap(), 1);
    assert_eq!(u.mult_at(ExtC::Infinity).unwrap(), n);
}

#[test]
fn dihedral_map_has_poles_at_apexes() {
    let g = build_group(GroupLabel::Dihedral(4)).unwrap();
    let u = invariant_map(&g).unwrap();
    assert!(u.eval(Complex64::new(0.0, 0.0)) == ExtC::Infinity);
    assert_eq!(u.mult_at(ExtC::Infinity).unwrap(), 4);
    let _ = Poly::one();
}
