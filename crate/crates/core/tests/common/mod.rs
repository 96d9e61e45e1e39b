#![allow(dead_code)]

use nnoid::looplab::LoopSL2;
use nnoid::mat2::{self, mat, Mat2, ONE, ZERO};
use num_complex::Complex64;
use rand::Rng;

pub fn cnum<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

pub fn random_su2<R: Rng>(rng: &mut R) -> Mat2 {
    let a = cnum(rng);
    let b = cnum(rng);
    let s = (a.norm_sqr() + b.norm_sqr()).sqrt();
    let (a, b) = (a / s, b / s);
    mat(a, b, -b.conj(), a.conj())
}

fn poly_at(c: &[Complex64], l: Complex64) -> Complex64 {
    c.iter().rev().fold(ZERO, |acc, x| acc * l + x)
}

/// A loop `U·B0` with `U` unitary on the circle and `B0 ∈ Λ⁺` whose inverse
/// is polynomial, so the factors are known in closed form.
pub struct KnownFactors {
    pub u: Box<dyn Fn(Complex64) -> Mat2>,
    pub b: Box<dyn Fn(Complex64) -> Mat2>,
}

pub fn random_factored_loop<R: Rng>(rng: &mut R) -> KnownFactors {
    let v = random_su2(rng);
    let w = random_su2(rng);
    let k = rng.gen_range(0..3i32);
    let p: Vec<Complex64> = (0..3).map(|_| cnum(rng)).collect();
    let q: Vec<Complex64> = (0..2).map(|_| cnum(rng)).collect();
    let a: f64 = rng.gen_range(0.5..2.0);
    let u = move |l: Complex64| v * mat(l.powi(k), ZERO, ZERO, l.powi(-k)) * w;
    let b = move |l: Complex64| {
        mat(ONE, poly_at(&p, l), ZERO, ONE)
            * mat(ONE, ZERO, l * poly_at(&q, l), ONE)
            * mat(Complex64::from(a), ZERO, ZERO, Complex64::from(1.0 / a))
    };
    KnownFactors {
        u: Box::new(u),
        b: Box::new(b),
    }
}

pub fn sampled(len: usize, f: &dyn Fn(Complex64) -> Mat2) -> LoopSL2 {
    LoopSL2::from_fn(len, f)
}

pub fn max_dist(a: &[Mat2], b: &[Mat2]) -> f64 {
    a.iter().zip(b).map(|(x, y)| mat2::norm(&(x - y))).fold(0.0, f64::max)
}

/// Spec, downstairs unitarizer and λ grid sized for the default Iwasawa
/// grid.
pub fn dressed_pipeline(
    label: nnoid::moebius::GroupLabel,
    w: [f64; 3],
) -> (
    nnoid::potentials::PotentialSpec,
    nnoid::unitarize::Unitarizer,
    nnoid::monodromy::LambdaGrid,
) {
    use nnoid::looplab::IwasawaOptions;
    use nnoid::monodromy::{monodromies_downstairs, LambdaGrid, OdeOptions, BASEPOINT};
    use nnoid::potentials::{PotentialSpec, ResidueConvention, WeightTriple};
    let spec = PotentialSpec::new(label, WeightTriple::new(w[0], w[1], w[2]), ResidueConvention::ScaledW16N2).unwrap();
    let grid = LambdaGrid::new(IwasawaOptions::default().grid);
    let rep = monodromies_downstairs(&spec, BASEPOINT, grid, &OdeOptions::default()).unwrap();
    let un = nnoid::unitarize::pointwise_unitarizer(&rep).unwrap();
    (spec, un, grid)
}
