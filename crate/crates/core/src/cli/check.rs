//! The invariant and property suite behind the `check` subcommand.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::complexrat::{schwarzian_at, Poly, RationalMap};
use crate::error::Result;
use crate::looplab::{iwasawa, IwasawaOptions, LoopSL2};
use crate::mat2::{self, mat};
use crate::moebius::{build_group, conj_symmetry_residual, invariant_map, verify_invariance, GroupLabel};
use crate::monodromy::{
    check_closing_upstairs, descent_check, monodromies_downstairs, trace_formula_residual, LambdaGrid, OdeOptions, BASEPOINT,
};
use crate::potentials::{eta_at, gauge_apply, schwartz_gauge_full, xi_at, PotentialSpec, ResidueConvention, WeightTriple};
use crate::unitarize::{check_weights, pointwise_unitarizer};

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
}

impl CheckResult {
    fn below(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: value < tolerance,
            value,
            tolerance,
        }
    }

    fn flag(name: &str, passed: bool) -> Self {
        Self {
            name: name.into(),
            passed,
            value: if passed { 0.0 } else { 1.0 },
            tolerance: 0.5,
        }
    }
}

/// Max residual of `ξ.g = u*η` at `samples` random `(z, λ)`, relative to
/// the size of the terms of `g⁻¹ξg + g⁻¹dg` (which grow like `|g|²` near
/// the branch points).
pub fn gauge_identity_residual(spec: &PotentialSpec, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    let mut tries = 0;
    while done < samples && tries < 100 * samples {
        tries += 1;
        let z = Complex64::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
        let lambda = Complex64::from_polar(rng.gen_range(0.3..1.5), rng.gen_range(0.0..std::f64::consts::TAU));
        let Ok(xi) = xi_at(spec, z, lambda) else { continue };
        let Ok((g, dg, _)) = schwartz_gauge_full(&spec.u, z, lambda, None) else {
            continue;
        };
        let Some(uz) = spec.u.eval(z).finite() else { continue };
        let (Ok(eta), Ok(du)) = (eta_at(spec, uz, lambda), spec.u.eval_derivative(z)) else {
            continue;
        };
        let Ok(lhs) = gauge_apply(&xi, &g, &dg) else { continue };
        let rhs = eta * du;
        let Some(gi) = mat2::inv(&g) else { continue };
        let scale = mat2::norm(&gi) * (mat2::norm(&xi) * mat2::norm(&g) + mat2::norm(&dg)) + mat2::norm(&rhs);
        worst = worst.max(mat2::norm(&(lhs - rhs)) / scale);
        done += 1;
    }
    worst
}

fn random_rational(rng: &mut ChaCha8Rng) -> Option<RationalMap> {
    let (a, b) = (rng.gen_range(0..=4usize), rng.gen_range(0..=4usize));
    let mut poly = |deg: usize| {
        Poly::new(
            (0..=deg)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect(),
        )
    };
    let r = RationalMap::new(poly(a), poly(b)).ok()?;
    (r.degree() >= 1).then_some(r)
}

/// Max relative residual of `S(f∘g) = (S f ∘ g) g'² + S g` over random pairs
/// of degree at most four.
pub fn schwarzian_chain_rule_residual(pairs: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < pairs {
        let (Some(f), Some(g)) = (random_rational(&mut rng), random_rational(&mut rng)) else {
            continue;
        };
        let Ok(fg) = f.compose(&g) else { continue };
        let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
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
        if !rhs.is_finite() || rhs.norm() > 1e6 {
            continue;
        }
        worst = worst.max((lhs - rhs).norm() / (1.0 + rhs.norm()));
        done += 1;
    }
    worst
}

fn expected_multiplicities(label: GroupLabel) -> [usize; 3] {
    match label {
        GroupLabel::Cyclic(n) => [n, n, 1],
        GroupLabel::Dihedral(n) => [2, 2, n],
        GroupLabel::Tetrahedral => [3, 3, 2],
        GroupLabel::Octahedral => [4, 3, 2],
        GroupLabel::Icosahedral => [5, 3, 2],
    }
}

fn all_labels() -> Vec<GroupLabel> {
    let mut labels: Vec<GroupLabel> = (2..=8).flat_map(|n| [GroupLabel::Cyclic(n), GroupLabel::Dihedral(n)]).collect();
    labels.extend([GroupLabel::Tetrahedral, GroupLabel::Octahedral, GroupLabel::Icosahedral]);
    labels
}

/// Unitarity of `F`, `B ∈ Λ⁺` reconstruction and idempotence on random
/// loops `X = U · P` with `U` a product of SU(2) constants and diagonal
/// powers and `P` a unipotent polynomial loop.
fn iwasawa_residual(loops: usize, rng: &mut ChaCha8Rng) -> Result<f64> {
    let opts = IwasawaOptions::default();
    let mut worst: f64 = 0.0;
    for _ in 0..loops {
        let mut c = || Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let (p0, p1, a) = (c(), c(), c());
        let x = LoopSL2::from_fn(opts.grid, |l| {
            mat(mat2::ONE, p0 + p1 * l, mat2::ZERO, mat2::ONE) * mat(mat2::ONE, mat2::ZERO, a / l, mat2::ONE)
        });
        let fact = iwasawa(&x, opts)?;
        let recon = fact.f.mul(&fact.b).distance(&x, opts.grid);
        let unit = fact.f.samples(opts.grid).iter().map(mat2::unitarity_residual).fold(0.0, f64::max);
        let again = iwasawa(&fact.f, opts)?;
        let unique = again.f.distance(&fact.f, opts.grid);
        worst = worst.max(recon).max(unit).max(unique);
    }
    Ok(worst)
}

pub fn run_checks(seed: u64) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let mut table_ok = true;
    let mut rh_ok = true;
    let mut invariance: f64 = 0.0;
    for label in all_labels() {
        let spec = PotentialSpec::new(label, WeightTriple::new(0.0, 0.0, 0.0), ResidueConvention::default())?;
        table_ok &= spec.branch.multiplicities == expected_multiplicities(label);
        rh_ok &= spec.branch.riemann_hurwitz_sum() == 2 * spec.branch.degree - 2;
        let group = build_group(label)?;
        let u = invariant_map(&group)?;
        invariance = invariance.max(verify_invariance(&u, &group)).max(conj_symmetry_residual(&u));
    }
    out.push(CheckResult::flag("multiplicity table", table_ok));
    out.push(CheckResult::flag("Riemann-Hurwitz", rh_ok));
    out.push(CheckResult::below("invariance and reflection", invariance, 1e-8));
    out.push(CheckResult::below(
        "Schwarzian chain rule",
        schwarzian_chain_rule_residual(100, seed),
        1e-10,
    ));

    let d3 = PotentialSpec::new(
        GroupLabel::Dihedral(3),
        WeightTriple::new(0.3, 0.3, 0.3),
        ResidueConvention::ScaledW16N2,
    )?;
    let z3 = PotentialSpec::new(
        GroupLabel::Cyclic(3),
        WeightTriple::new(0.0, 0.0, 0.4),
        ResidueConvention::ScaledW16N2,
    )?;
    let a4 = PotentialSpec::new(
        GroupLabel::Tetrahedral,
        WeightTriple::new(0.3, 0.2, 0.1),
        ResidueConvention::ScaledW16N2,
    )?;
    let gauge = gauge_identity_residual(&a4, 100, seed).max(gauge_identity_residual(&d3, 100, seed));
    out.push(CheckResult::below("gauge identity", gauge, 1e-9));

    let ode = OdeOptions::default();
    let mut formula: f64 = 0.0;
    let mut closing_value: f64 = 0.0;
    let mut closing_derivative: f64 = 0.0;
    let mut unitarity: f64 = 0.0;
    for spec in [&d3, &z3] {
        let rep = monodromies_downstairs(spec, BASEPOINT, LambdaGrid::new(16), &ode)?;
        formula = formula.max(trace_formula_residual(spec, &rep));
        for k in 0..3 {
            let c = check_closing_upstairs(&rep.generators[k], spec.branch.multiplicities[k], &rep.grid);
            closing_value = closing_value.max(c.value_residual);
            closing_derivative = closing_derivative.max(c.derivative_norm);
        }
        let un = pointwise_unitarizer(&rep)?;
        unitarity = unitarity.max(un.unitarity_residual(&rep, &[rep.grid.index_of_one()]));
    }
    out.push(CheckResult::below("eigenvalue formula", formula, 1e-5));
    out.push(CheckResult::below("closing value", closing_value, 1e-5));
    out.push(CheckResult::below("closing derivative", closing_derivative, 1e-4));
    out.push(CheckResult::below("pointwise unitarization", unitarity, 1e-7));

    let mults = GroupLabel::Cyclic(3).multiplicities();
    let anchor = [0.1, 0.4, 0.8]
        .iter()
        .all(|&v| check_weights(WeightTriple::new(0.0, 0.0, v), mults, ResidueConvention::ScaledW16N2, 64).admissible)
        && !check_weights(WeightTriple::new(0.0, 0.0, 2.0), mults, ResidueConvention::ScaledW16N2, 64).admissible;
    out.push(CheckResult::flag("cyclic admissibility anchor", anchor));

    let mut descent: f64 = 0.0;
    for spec in [&z3, &a4] {
        let tau = spec
            .group
            .elements()
            .iter()
            .find(|e| e.order(60) == Some(3))
            .copied()
            .expect("group has an element of order 3");
        descent = descent.max(descent_check(spec, &tau, LambdaGrid::new(8), &ode)?.residual);
    }
    out.push(CheckResult::below("descent", descent, 1e-6));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    out.push(CheckResult::below("Iwasawa factorization", iwasawa_residual(50, &mut rng)?, 1e-8));
    Ok(out)
}
