use std::f64::consts::TAU;

use nnoid::complexrat::{schwarzian, schwarzian_at, ExtC, Poly, RationalMap};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn random_poly(rng: &mut ChaCha8Rng, deg: usize) -> Poly {
    Poly::new((0..=deg).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect())
}

fn random_map(rng: &mut ChaCha8Rng) -> RationalMap {
    loop {
        let (a, b) = (rng.gen_range(0..=4usize), rng.gen_range(0..=4usize));
        let (p, q) = (random_poly(rng, a), random_poly(rng, b));
        if let Ok(r) = RationalMap::new(p, q) {
            if (1..=4).contains(&r.degree()) {
                return r;
            }
        }
    }
}

/// Derivatives of `f` at `z` by the trapezoid rule on the Cauchy integral
/// over a circle of radius `r` (exponentially accurate for analytic `f`).
fn cauchy_jet(f: &RationalMap, z: Complex64, r: f64) -> [Complex64; 4] {
    let m = 128;
    let mut d = [Complex64::new(0.0, 0.0); 4];
    for j in 0..m {
        let w = Complex64::from_polar(1.0, TAU * j as f64 / m as f64);
        let v = f.eval(z + r * w).finite().unwrap();
        for (k, dk) in d.iter_mut().enumerate() {
            *dk += v * w.powi(-(k as i32));
        }
    }
    let fact = [1.0, 1.0, 2.0, 6.0];
    let mut out = d;
    for k in 0..4 {
        out[k] = d[k] / m as f64 * fact[k] / r.powi(k as i32);
    }
    out
}

fn pole_clearance(f: &RationalMap, z: Complex64) -> f64 {
    f.den()
        .roots()
        .unwrap()
        .iter()
        .map(|p| (p - z).norm())
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn schwarzian_of_power_closed_form() {
    for n in 2..=6usize {
        let f = RationalMap::monomial(n);
        let z = c(0.7, -0.4);
        let expect = (1.0 - (n * n) as f64) / (2.0 * z * z);
        assert!((schwarzian_at(&f, z).unwrap() - expect).norm() < 1e-12 * expect.norm());
    }
}

#[test]
fn pointwise_matches_cauchy_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    while checked < 30 {
        let f = random_map(&mut rng);
        let z = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let r = 0.3 * pole_clearance(&f, z).min(1.0);
        if r < 0.02 {
            continue;
        }
        let j = cauchy_jet(&f, z, r);
        if j[1].norm() < 1e-2 {
            continue;
        }
        let oracle = j[3] / j[1] - 1.5 * (j[2] / j[1]).powi(2);
        let s = schwarzian_at(&f, z).unwrap();
        assert!((s - oracle).norm() < 1e-7 * (1.0 + oracle.norm()), "{f:?} at {z}: {s} vs {oracle}");
        checked += 1;
    }
}

#[test]
fn chain_rule_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    while checked < 100 {
        let (f, g) = (random_map(&mut rng), random_map(&mut rng));
        let fg = f.compose(&g).unwrap();
        let z = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let Some(gz) = g.eval(z).finite() else { continue };
        let (Ok(lhs), Ok(sf), Ok(sg), Ok(dg)) = (
            schwarzian_at(&fg, z),
            schwarzian_at(&f, gz),
            schwarzian_at(&g, z),
            g.eval_derivative(z),
        ) else {
            continue;
        };
        let rhs = sf * dg * dg + sg;
        if rhs.norm() > 1e6 {
            continue;
        }
        worst = worst.max((lhs - rhs).norm() / (1.0 + rhs.norm()));
        checked += 1;
    }
    assert!(worst < 1e-10, "{worst:e}");
}

#[test]
fn symbolic_and_pointwise_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let f = random_map(&mut rng);
        let z = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let (Ok(p), Ok(q)) = (schwarzian_at(&f, z), schwarzian(&f).and_then(|s| s.eval(z))) else {
            continue;
        };
        assert!((p - q).norm() < 1e-8 * (1.0 + p.norm()));
    }
}

proptest! {
    #[test]
    fn postcomposing_with_mobius_leaves_schwarzian(
        seed in any::<u64>(),
        a in prop::array::uniform4(-2.0f64..2.0),
        re in -1.0f64..1.0,
        im in -1.0f64..1.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_map(&mut rng);
        let det = a[0] * a[3] - a[1] * a[2];
        prop_assume!(det.abs() > 0.1);
        let m = RationalMap::mobius(a[0].into(), a[1].into(), a[2].into(), a[3].into()).unwrap();
        let mf = m.compose(&f).unwrap();
        let z = c(re, im);
        let fz = f.eval(z);
        prop_assume!(fz.finite().is_some() && m.eval_ext(fz).finite().is_some());
        let (Ok(s), Ok(t)) = (schwarzian_at(&f, z), schwarzian_at(&mf, z)) else { return Ok(()) };
        prop_assume!(s.norm() < 1e6);
        prop_assert!((s - t).norm() < 1e-8 * (1.0 + s.norm()));
    }

    #[test]
    fn mobius_maps_have_zero_schwarzian(a in prop::array::uniform4(-2.0f64..2.0), re in -1.0f64..1.0, im in -1.0f64..1.0) {
        prop_assume!((a[0] * a[3] - a[1] * a[2]).abs() > 0.1);
        let m = RationalMap::mobius(a[0].into(), a[1].into(), a[2].into(), a[3].into()).unwrap();
        let z = c(re, im);
        prop_assume!(m.eval(z).finite().is_some_and(|w| w.norm() < 1e6));
        prop_assert!(schwarzian_at(&m, z).unwrap().norm() < 1e-9);
        prop_assert!(schwarzian(&m).unwrap().is_zero());
    }
}

#[test]
fn chordal_distance_basics() {
    let z = ExtC::Finite(c(0.3, -1.2));
    assert_eq!(z.chordal(z), 0.0);
    assert!((ExtC::zero().chordal(ExtC::Infinity) - 2.0).abs() < 1e-15);
    assert!((ExtC::from_sphere(z.to_sphere()).chordal(z)) < 1e-14);
}
