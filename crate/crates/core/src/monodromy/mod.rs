//! Parallel transport of `dΦ = Φ ξ` along paths in punctured spheres,
//! monodromy generators, eigenvalue exponents, closing and descent checks.

pub mod ode;

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::complexrat::{ExtC, RationalMap};
use crate::error::{Error, Result};
use crate::mat2::{self, Mat2, ONE};
use crate::moebius::{fiber, MoebiusElem};
use crate::potentials::{eta_at, schwartz_gauge_full, xi_at, PotentialSpec, ResidueConvention};

pub use ode::OdeOptions;

/// Default downstairs basepoint.
pub const BASEPOINT: Complex64 = Complex64::new(0.37, 0.21);
pub const DEFAULT_LAMBDA_SAMPLES: usize = 64;
pub const AUX_EPS: f64 = 1e-3;
const NEAR_ONE: f64 = 0.1;
pub const NEAR_ONE_TOL: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Segment {
    Line {
        a: Complex64,
        b: Complex64,
    },
    /// `center + radius e^{i(start + t·sweep)}`, `t ∈ [0, 1]`.
    Arc {
        center: Complex64,
        radius: f64,
        start: f64,
        sweep: f64,
    },
}

impl Segment {
    pub fn point(&self, t: f64) -> Complex64 {
        match *self {
            Segment::Line { a, b } => a + (b - a) * t,
            Segment::Arc {
                center,
                radius,
                start,
                sweep,
            } => center + Complex64::from_polar(radius, start + t * sweep),
        }
    }

    pub fn velocity(&self, t: f64) -> Complex64 {
        match *self {
            Segment::Line { a, b } => b - a,
            Segment::Arc { radius, start, sweep, .. } => Complex64::new(0.0, sweep) * Complex64::from_polar(radius, start + t * sweep),
        }
    }

    pub fn start(&self) -> Complex64 {
        self.point(0.0)
    }

    pub fn end(&self) -> Complex64 {
        self.point(1.0)
    }

    pub fn reversed(&self) -> Segment {
        match *self {
            Segment::Line { a, b } => Segment::Line { a: b, b: a },
            Segment::Arc {
                center,
                radius,
                start,
                sweep,
            } => Segment::Arc {
                center,
                radius,
                start: start + sweep,
                sweep: -sweep,
            },
        }
    }

    /// Smallest distance from the segment to `p` (sampled for arcs).
    fn distance_to(&self, p: Complex64) -> f64 {
        match *self {
            Segment::Line { a, b } => {
                let d = b - a;
                let t = if d.norm_sqr() == 0.0 {
                    0.0
                } else {
                    (((p - a) * d.conj()).re / d.norm_sqr()).clamp(0.0, 1.0)
                };
                (a + d * t - p).norm()
            }
            Segment::Arc { .. } => (0..=256)
                .map(|k| (self.point(k as f64 / 256.0) - p).norm())
                .fold(f64::INFINITY, f64::min),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum PathKind {
    LoopAround { puncture: String, base: [f64; 2] },
    Segment,
}

#[derive(Clone, Debug)]
pub struct Path {
    pub segments: Vec<Segment>,
    pub kind: PathKind,
}

impl Path {
    pub fn segment(a: Complex64, b: Complex64) -> Self {
        Self {
            segments: vec![Segment::Line { a, b }],
            kind: PathKind::Segment,
        }
    }

    pub fn polyline(points: &[Complex64]) -> Self {
        Self {
            segments: points.windows(2).map(|w| Segment::Line { a: w[0], b: w[1] }).collect(),
            kind: PathKind::Segment,
        }
    }

    /// Straight tail from `base` to the circle of radius `radius` about
    /// `center`, one full turn (counterclockwise if `ccw`), and back.
    pub fn loop_around(base: Complex64, center: Complex64, radius: f64, ccw: bool, label: &str) -> Self {
        let dir = base - center;
        let start = dir.arg();
        let touch = center + Complex64::from_polar(radius, start);
        let tail = Segment::Line { a: base, b: touch };
        let sweep = if ccw { 2.0 * PI } else { -2.0 * PI };
        Self {
            segments: vec![
                tail,
                Segment::Arc {
                    center,
                    radius,
                    start,
                    sweep,
                },
                tail.reversed(),
            ],
            kind: PathKind::LoopAround {
                puncture: label.to_string(),
                base: [base.re, base.im],
            },
        }
    }

    pub fn then(mut self, other: &Path) -> Self {
        self.segments.extend_from_slice(&other.segments);
        self
    }

    pub fn reversed(&self) -> Self {
        Self {
            segments: self.segments.iter().rev().map(|s| s.reversed()).collect(),
            kind: self.kind.clone(),
        }
    }

    pub fn start(&self) -> Complex64 {
        self.segments[0].start()
    }

    pub fn end(&self) -> Complex64 {
        self.segments[self.segments.len() - 1].end()
    }

    /// Distance of the path to the nearest of `punctures`.
    pub fn clearance(&self, punctures: &[Complex64]) -> f64 {
        self.segments
            .iter()
            .flat_map(|s| punctures.iter().map(move |p| s.distance_to(*p)))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Transport `T` with `Φ(end) = Φ(start) T` for `dΦ = Φ A(z) dz`.
pub fn integrate(potential: &(dyn Fn(Complex64) -> Result<Mat2> + Sync), path: &Path, opts: &OdeOptions) -> Result<Mat2> {
    let mut y = mat2::identity();
    for seg in &path.segments {
        let f = |t: f64| -> Result<Mat2> { Ok(potential(seg.point(t))? * seg.velocity(t)) };
        y = ode::integrate(&f, y, 0.0, 1.0, opts).map_err(|e| match e {
            Error::StepUnderflow { at } => Error::StepUnderflow {
                at: format!("{at} on segment {:?}", seg),
            },
            other => other,
        })?;
    }
    Ok(y)
}

/// `m` equispaced points on the unit circle (index 0 is λ = 1) followed by
/// the two auxiliary points `e^{±iε}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LambdaGrid {
    pub m: usize,
    pub eps: f64,
}

impl LambdaGrid {
    pub fn new(m: usize) -> Self {
        Self { m, eps: AUX_EPS }
    }

    pub fn points(&self) -> Vec<Complex64> {
        let mut v: Vec<Complex64> = (0..self.m)
            .map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / self.m as f64))
            .collect();
        v.push(Complex64::from_polar(1.0, self.eps));
        v.push(Complex64::from_polar(1.0, -self.eps));
        v
    }

    pub fn len(&self) -> usize {
        self.m + 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index_of_one(&self) -> usize {
        0
    }

    pub fn aux_indices(&self) -> (usize, usize) {
        (self.m, self.m + 1)
    }
}

/// Monodromy generators around the punctures `0, 1, ∞` of the u-sphere,
/// sampled on a λ grid.
#[derive(Clone, Debug)]
pub struct MonodromyRep {
    pub basepoint: Complex64,
    pub grid: LambdaGrid,
    pub lambdas: Vec<Complex64>,
    /// `generators[k][j]` is `M_k(λ_j)`.
    pub generators: [Vec<Mat2>; 3],
}

impl MonodromyRep {
    pub fn at(&self, j: usize) -> [Mat2; 3] {
        [self.generators[0][j], self.generators[1][j], self.generators[2][j]]
    }

    /// Max over λ of `min_± ‖M0 M1 M∞ ∓ I‖`.
    pub fn product_residual(&self) -> f64 {
        (0..self.lambdas.len())
            .map(|j| {
                let [a, b, c] = self.at(j);
                mat2::dist_up_to_sign(&(a * b * c), &mat2::identity())
            })
            .fold(0.0, f64::max)
    }

    pub fn det_residual(&self) -> f64 {
        self.generators
            .iter()
            .flatten()
            .map(|m| (mat2::det(m) - ONE).norm())
            .fold(0.0, f64::max)
    }
}

/// The three based loops around `0`, `1` (counterclockwise) and `∞`
/// (a large clockwise circle), so that `M0 M1 M∞ = I`.
pub fn downstairs_loops(base: Complex64) -> [Path; 3] {
    let r = 0.25;
    let center = Complex64::new(0.5, 0.0);
    let big = 2.0;
    [
        Path::loop_around(base, Complex64::new(0.0, 0.0), r, true, "0"),
        Path::loop_around(base, Complex64::new(1.0, 0.0), r, true, "1"),
        Path::loop_around(base, center, big, false, "inf"),
    ]
}

pub fn monodromies_downstairs(spec: &PotentialSpec, basepoint: Complex64, grid: LambdaGrid, opts: &OdeOptions) -> Result<MonodromyRep> {
    let loops = downstairs_loops(basepoint);
    let lambdas = grid.points();
    let coeffs = eta_coefficients(spec);
    let mut generators: [Vec<Mat2>; 3] = Default::default();
    for (k, path) in loops.iter().enumerate() {
        generators[k] = transport_split(&coeffs, path, &lambdas, opts)?;
    }
    let rep = MonodromyRep {
        basepoint,
        grid,
        lambdas,
        generators,
    };
    let res = rep.product_residual();
    if res > 1e-7 {
        return Err(Error::Verification(format!(
            "M0 M1 Minf deviates from ±I by {res:.2e}; tighten the integration tolerance"
        )));
    }
    Ok(rep)
}

/// Coefficients `(p, r, s)` of a potential in pencil form
/// `[[0, λ⁻¹ p], [(1−λ)² r + λ s, 0]]`, evaluated at one point.
pub type PencilCoefficients<'a> = dyn Fn(Complex64) -> Result<[Complex64; 3]> + Sync + 'a;

/// Pencil coefficients of `η` in the `u` coordinate.
pub fn eta_coefficients(spec: &PotentialSpec) -> impl Fn(Complex64) -> Result<[Complex64; 3]> + Sync + '_ {
    move |u| {
        let pole = || Error::Domain(format!("η has a pole at u = {u}"));
        let q = spec.q.eval(u).map_err(|_| pole())?;
        let a = spec.alpha.eval(u).map_err(|_| pole())?;
        if !q.is_finite() || !a.is_finite() {
            return Err(pole());
        }
        Ok([ONE, q, 0.5 * a])
    }
}

/// Pencil coefficients of `ξ` in the `z` coordinate.
pub fn xi_coefficients(spec: &PotentialSpec) -> impl Fn(Complex64) -> Result<[Complex64; 3]> + Sync + '_ {
    move |z| Ok([ONE, spec.pulled_back_q(z)?, Complex64::new(0.0, 0.0)])
}

/// Transports along `path` for every λ in `lambdas` at once, sharing the
/// step size, so each point of the path costs one coefficient evaluation.
pub fn transport_pencil(coeffs: &PencilCoefficients, path: &Path, lambdas: &[Complex64], opts: &OdeOptions) -> Result<Vec<Mat2>> {
    let factors: Vec<[Complex64; 3]> = lambdas
        .iter()
        .map(|&l| {
            if l.norm() == 0.0 {
                return Err(Error::Domain("λ = 0".into()));
            }
            Ok([l.inv(), (ONE - l) * (ONE - l), l])
        })
        .collect::<Result<_>>()?;
    let mut y = vec![mat2::identity(); lambdas.len()];
    for seg in &path.segments {
        let rhs = |t: f64, ys: &[Mat2], out: &mut [Mat2]| -> Result<()> {
            let [p, r, s] = coeffs(seg.point(t))?;
            let dz = seg.velocity(t);
            let (p, r, s) = (p * dz, r * dz, s * dz);
            for ((o, m), f) in out.iter_mut().zip(ys).zip(&factors) {
                let x = f[0] * p;
                let w = f[1] * r + f[2] * s;
                *o = mat2::mat(m[(0, 1)] * w, m[(0, 0)] * x, m[(1, 1)] * w, m[(1, 0)] * x);
            }
            Ok(())
        };
        y = ode::integrate_batch(&rhs, y, 0.0, 1.0, opts).map_err(|e| match e {
            Error::StepUnderflow { at } => Error::StepUnderflow {
                at: format!("{at} on segment {:?}", seg),
            },
            other => other,
        })?;
    }
    Ok(y)
}

/// As [`transport_pencil`], with the λ near 1 integrated separately at the
/// tighter tolerance of [`near_one_options`].
pub fn transport_split(coeffs: &PencilCoefficients, path: &Path, lambdas: &[Complex64], opts: &OdeOptions) -> Result<Vec<Mat2>> {
    let (near, far): (Vec<usize>, Vec<usize>) = (0..lambdas.len()).partition(|&j| (lambdas[j] - ONE).norm() < NEAR_ONE);
    let mut out = vec![mat2::identity(); lambdas.len()];
    for (idx, local) in [(far, *opts), (near, near_one_options(opts, ONE))] {
        if idx.is_empty() {
            continue;
        }
        let ls: Vec<Complex64> = idx.iter().map(|&j| lambdas[j]).collect();
        for (j, m) in idx.into_iter().zip(transport_pencil(coeffs, path, &ls, &local)?) {
            out[j] = m;
        }
    }
    Ok(out)
}

/// Near λ = 1 the weight terms are of size `|1−λ|²`, and generators whose
/// exponent vanishes there approach the identity; resolving their deviation
/// needs a tighter tolerance.
pub fn near_one_options(opts: &OdeOptions, lambda: Complex64) -> OdeOptions {
    let mut local = *opts;
    if (lambda - ONE).norm() < NEAR_ONE {
        local.tol = local.tol.min(NEAR_ONE_TOL);
    }
    local
}

/// `μ(w, λ) = ½ − (1/2n) √(1 + λ⁻¹(1−λ)² w/4)`, principal root.
pub fn mu_formula(w: f64, lambda: Complex64, n: usize) -> Complex64 {
    let rad = ONE + lambda.inv() * (ONE - lambda) * (ONE - lambda) * (w / 4.0);
    0.5 - rad.sqrt() / (2.0 * n as f64)
}

/// The weight entering the eigenvalue formula for a given convention.
pub fn effective_weight(w: f64, n: usize, convention: ResidueConvention) -> f64 {
    match convention {
        ResidueConvention::ScaledW16N2 => w,
        ResidueConvention::PaperW16 => w * (n * n) as f64,
    }
}

/// Max over generators and λ of `|tr M_k − 2 cos(2π μ_k)|`.
pub fn trace_formula_residual(spec: &PotentialSpec, rep: &MonodromyRep) -> f64 {
    let w = spec.weights.as_array();
    let n = spec.branch.multiplicities;
    let mut worst: f64 = 0.0;
    for k in 0..3 {
        let we = effective_weight(w[k], n[k], spec.convention);
        for (j, l) in rep.lambdas.iter().enumerate() {
            let mu = mu_formula(we, *l, n[k]);
            let expect = 2.0 * (2.0 * PI * mu).cos();
            worst = worst.max((mat2::trace(&rep.generators[k][j]) - expect).norm());
        }
    }
    worst
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ClosingReport {
    /// `min_± ‖M(1) ∓ I‖`
    pub value_residual: f64,
    /// Central difference estimate of `‖dM/dθ‖` at λ = 1.
    pub derivative_norm: f64,
}

pub fn check_closing(values: &[Mat2], grid: &LambdaGrid) -> ClosingReport {
    let m1 = values[grid.index_of_one()];
    let (p, q) = grid.aux_indices();
    let d = (values[p] - values[q]) / Complex64::from(2.0 * grid.eps);
    ClosingReport {
        value_residual: mat2::dist_up_to_sign(&m1, &mat2::identity()),
        derivative_norm: mat2::norm(&d),
    }
}

/// Closing conditions for the upstairs loop around a preimage of a puncture
/// of multiplicity `n`, whose monodromy is `M^n`.
pub fn check_closing_upstairs(values: &[Mat2], n: usize, grid: &LambdaGrid) -> ClosingReport {
    let powered: Vec<Mat2> = values.iter().map(|m| (1..n).fold(*m, |acc, _| acc * m)).collect();
    check_closing(&powered, grid)
}

/// The preimage of `b` of smallest modulus with positive imaginary part
/// (ties broken by argument).
pub fn upstairs_basepoint(u: &RationalMap, b: Complex64) -> Result<Complex64> {
    let mut pts: Vec<Complex64> = fiber(u, ExtC::Finite(b))?
        .into_iter()
        .filter_map(|(p, _)| p.finite())
        .filter(|z| z.im > 0.0)
        .collect();
    pts.sort_by(|a, b| {
        (a.norm(), a.arg())
            .partial_cmp(&(b.norm(), b.arg()))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let z = *pts
        .first()
        .ok_or_else(|| Error::Numerical("no upstairs basepoint in the upper half plane".into()))?;
    // Polish against the map itself.
    let mut z = z;
    for _ in 0..8 {
        let (Some(v), Ok(d)) = (u.eval(z).finite(), u.eval_derivative(z)) else {
            break;
        };
        z -= (v - b) / d;
    }
    Ok(z)
}

/// Upstairs potential `ξ` as a `z`-evaluator at fixed λ.
pub fn xi_evaluator(spec: &PotentialSpec, lambda: Complex64) -> impl Fn(Complex64) -> Result<Mat2> + Sync + '_ {
    move |z| xi_at(spec, z, lambda)
}

/// Pulled-back downstairs potential `u*η` as a `z`-evaluator.
pub fn pulled_eta_evaluator(spec: &PotentialSpec, lambda: Complex64) -> impl Fn(Complex64) -> Result<Mat2> + Sync + '_ {
    move |z| {
        let u = spec
            .u
            .eval(z)
            .finite()
            .ok_or_else(|| Error::Domain(format!("u has a pole at {z}")))?;
        Ok(eta_at(spec, u, lambda)? * spec.u.eval_derivative(z)?)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DescentReport {
    pub order: usize,
    /// Max over λ of `min_± ‖T_up − g h^m g⁻¹‖ / ‖T_up‖`.
    pub residual: f64,
}

/// Polyline approximating the rotation arc of `tau` (a rotation about the
/// sphere point `axis`) from `q0` to `tau^k(q0)`, `k` rotation steps.
fn rotation_arc(axis: [f64; 3], angle: f64, q0: Complex64, pieces: usize) -> Vec<Complex64> {
    (0..=pieces)
        .map(|i| {
            let t = angle * i as f64 / pieces as f64;
            MoebiusElem::rotation(axis, t)
                .apply(ExtC::Finite(q0))
                .finite()
                .expect("arc stays finite")
        })
        .collect()
}

/// For a rotation `τ ∈ G` of order `m` fixing the finite point `p`,
/// transports `ξ` upstairs once around `p` (the lift of `τ^m`) and compares
/// it with `g(z_b) h^m g(z_b)⁻¹`, where `h` is the downstairs monodromy
/// along `u∘(tail · arc(q0 → τ q0) · τ(tail)⁻¹)`.
pub fn descent_check(spec: &PotentialSpec, tau: &MoebiusElem, grid: LambdaGrid, opts: &OdeOptions) -> Result<DescentReport> {
    let m = tau.order(120).ok_or_else(|| Error::Domain("τ is not of finite order".into()))?;
    let zb = upstairs_basepoint(&spec.u, BASEPOINT)?;
    if m == 1 {
        return Ok(DescentReport { order: 1, residual: 0.0 });
    }
    // Rotation axis through the fixed point whose sense of rotation is +2π/m.
    let p = tau
        .fixed_points()
        .into_iter()
        .filter_map(|q| q.finite())
        .min_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap())
        .ok_or_else(|| Error::Domain("no finite fixed point".into()))?;
    let mut axis = ExtC::Finite(p).to_sphere();
    let probe = ExtC::Finite(p + 0.01);
    let step = 2.0 * PI / m as f64;
    let fits = |ax: [f64; 3]| MoebiusElem::rotation(ax, step).apply(probe).chordal(tau.apply(probe));
    if fits(axis) > fits(axis.map(|x| -x)) {
        axis = axis.map(|x| -x);
    }
    // Start of the arc: a point on the sphere at angle 0.15 from the axis,
    // in the direction of the basepoint.
    let zs = ExtC::Finite(zb).to_sphere();
    let dot: f64 = (0..3).map(|k| zs[k] * axis[k]).sum();
    let mut perp = [0, 1, 2].map(|k| zs[k] - dot * axis[k]);
    let pn = perp.iter().map(|x| x * x).sum::<f64>().sqrt();
    perp = perp.map(|x| x / pn);
    let rho: f64 = 0.15;
    let q0 = ExtC::from_sphere([0, 1, 2].map(|k| rho.cos() * axis[k] + rho.sin() * perp[k]))
        .finite()
        .ok_or_else(|| Error::Domain("arc start at infinity".into()))?;
    let tail_pts: Vec<Complex64> = (0..=32).map(|i| zb + (q0 - zb) * (i as f64 / 32.0)).collect();
    let tail = Path::polyline(&tail_pts);
    let full = Path::polyline(&rotation_arc(axis, 2.0 * PI, q0, 32 * m));
    let up_path = tail.clone().then(&full).then(&tail.reversed());
    let moved: Vec<Complex64> = tail_pts
        .iter()
        .map(|z| tau.apply(ExtC::Finite(*z)).finite())
        .collect::<Option<_>>()
        .ok_or_else(|| Error::Domain("τ(tail) passes through ∞".into()))?;
    let tau_tail = Path::polyline(&moved);
    let down_path = tail
        .clone()
        .then(&Path::polyline(&rotation_arc(axis, step, q0, 32)))
        .then(&tau_tail.reversed());

    let lambdas = grid.points();
    let residuals: Vec<f64> = lambdas
        .par_iter()
        .map(|&l| -> Result<f64> {
            let t_up = integrate(&xi_evaluator(spec, l), &up_path, opts)?;
            let h = integrate(&pulled_eta_evaluator(spec, l), &down_path, opts)?;
            let (g, _, _) = schwartz_gauge_full(&spec.u, zb, l, None)?;
            let mut hm = mat2::identity();
            for _ in 0..m {
                hm *= h;
            }
            let predicted = g * hm * mat2::adj(&g);
            Ok(mat2::dist_up_to_sign(&t_up, &predicted) / mat2::norm(&t_up))
        })
        .collect::<Result<_>>()?;
    Ok(DescentReport {
        order: m,
        residual: residuals.into_iter().fold(0.0, f64::max),
    })
}
