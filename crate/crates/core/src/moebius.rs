//! Finite subgroups of PSU(2) acting on the Riemann sphere, their invariant
//! rational maps and the branch data of those maps.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::complexrat::{ExtC, Poly, RationalMap};
use crate::error::{Error, Result};
use crate::mat2::{self, Mat2};

const ELEM_TOL: f64 = 1e-9;
const POINT_TOL: f64 = 1e-7;
/// Chordal radius used to group numerically computed roots of one fiber.
const FIBER_CLUSTER_TOL: f64 = 5e-2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MoebiusElem {
    matrix: Mat2,
}

impl MoebiusElem {
    /// Rescales to determinant one.
    pub fn new(matrix: Mat2) -> Result<Self> {
        let matrix = mat2::normalize_det(&matrix).ok_or_else(|| Error::Domain("singular Möbius matrix".into()))?;
        Ok(Self { matrix })
    }

    pub fn identity() -> Self {
        Self { matrix: mat2::identity() }
    }

    /// Rotation of the unit sphere by `angle` about the unit vector `axis`,
    /// transported to the sphere coordinate `z = (x + iy)/(1 - h)`.
    pub fn rotation(axis: [f64; 3], angle: f64) -> Self {
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        let (nx, ny, nz) = (axis[0] / n, axis[1] / n, axis[2] / n);
        let (s, c) = (angle / 2.0).sin_cos();
        let a = Complex64::new(c, nz * s);
        let b = Complex64::new(-ny * s, nx * s);
        Self {
            matrix: mat2::mat(a, b, -b.conj(), a.conj()),
        }
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.matrix
    }

    pub fn apply(&self, p: ExtC) -> ExtC {
        let m = &self.matrix;
        let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
        match p {
            ExtC::Infinity => {
                if c.norm() <= 1e-13 * a.norm() {
                    ExtC::Infinity
                } else {
                    ExtC::Finite(a / c)
                }
            }
            ExtC::Finite(z) => {
                let den = c * z + d;
                let top = a * z + b;
                if den.norm() <= 1e-13 * top.norm() {
                    ExtC::Infinity
                } else {
                    ExtC::Finite(top / den)
                }
            }
        }
    }

    /// `self ∘ other`
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            matrix: self.matrix * other.matrix,
        }
    }

    pub fn inverse(&self) -> Self {
        Self {
            matrix: mat2::adj(&self.matrix),
        }
    }

    /// The map `z ↦ conj(τ(conj z))`.
    pub fn conjugate(&self) -> Self {
        Self {
            matrix: self.matrix.map(|c| c.conj()),
        }
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        mat2::dist_up_to_sign(&self.matrix, &other.matrix) < tol
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.approx_eq(&Self::identity(), tol)
    }

    pub fn unitarity_residual(&self) -> f64 {
        mat2::unitarity_residual(&self.matrix)
    }

    /// Smallest `k ≥ 1` with `g^k = ±I`.
    pub fn order(&self, max: usize) -> Option<usize> {
        let mut acc = *self;
        for k in 1..=max {
            if acc.is_identity(ELEM_TOL) {
                return Some(k);
            }
            acc = acc.compose(self);
        }
        None
    }

    pub fn as_rational_map(&self) -> Result<RationalMap> {
        let m = &self.matrix;
        RationalMap::mobius(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)])
    }

    /// Fixed points on the sphere (one or two).
    pub fn fixed_points(&self) -> Vec<ExtC> {
        let m = &self.matrix;
        let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
        if c.norm() < 1e-14 {
            let mut out = vec![ExtC::Infinity];
            if (a - d).norm() > 1e-14 {
                out.push(ExtC::Finite(b / (d - a)));
            }
            return out;
        }
        // c z^2 + (d - a) z - b = 0
        let disc = ((d - a) * (d - a) + 4.0 * b * c).sqrt();
        let z1 = (a - d + disc) / (2.0 * c);
        let z2 = (a - d - disc) / (2.0 * c);
        if (z1 - z2).norm() < 1e-12 {
            vec![ExtC::Finite(z1)]
        } else {
            vec![ExtC::Finite(z1), ExtC::Finite(z2)]
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupLabel {
    Cyclic(usize),
    Dihedral(usize),
    Tetrahedral,
    Octahedral,
    Icosahedral,
}

impl GroupLabel {
    pub fn order(&self) -> usize {
        match *self {
            GroupLabel::Cyclic(n) => n,
            GroupLabel::Dihedral(n) => 2 * n,
            GroupLabel::Tetrahedral => 12,
            GroupLabel::Octahedral => 24,
            GroupLabel::Icosahedral => 60,
        }
    }

    /// Multiplicities `(n0, n1, n_inf)` of the invariant map over `0, 1, ∞`.
    /// Cyclic groups use `(n, n, 1)`: the third value is not a branch value.
    pub fn multiplicities(&self) -> [usize; 3] {
        match *self {
            GroupLabel::Cyclic(n) => [n, n, 1],
            GroupLabel::Dihedral(n) => [2, 2, n],
            GroupLabel::Tetrahedral => [3, 3, 2],
            GroupLabel::Octahedral => [4, 3, 2],
            GroupLabel::Icosahedral => [5, 3, 2],
        }
    }

    pub fn is_cyclic(&self) -> bool {
        matches!(self, GroupLabel::Cyclic(_))
    }

    pub fn name(&self) -> String {
        match *self {
            GroupLabel::Cyclic(n) => format!("Z{n}"),
            GroupLabel::Dihedral(n) => format!("D{n}"),
            GroupLabel::Tetrahedral => "A4".into(),
            GroupLabel::Octahedral => "S4".into(),
            GroupLabel::Icosahedral => "A5".into(),
        }
    }

    /// Parses `cyclic`/`dihedral` (with `n` supplied separately) or a short
    /// name such as `Z3`, `D4`, `A4`, `S4`, `A5`.
    pub fn parse(s: &str, n: Option<usize>) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        let need_n = || n.ok_or_else(|| Error::Config(format!("group '{s}' needs n")));
        let label = match t.as_str() {
            "cyclic" | "z" | "c" => GroupLabel::Cyclic(need_n()?),
            "dihedral" | "d" => GroupLabel::Dihedral(need_n()?),
            "tetrahedral" | "a4" => GroupLabel::Tetrahedral,
            "octahedral" | "s4" => GroupLabel::Octahedral,
            "icosahedral" | "a5" => GroupLabel::Icosahedral,
            _ => {
                let (head, tail) = t.split_at(1);
                let k: usize = tail.parse().map_err(|_| Error::Config(format!("unknown group '{s}'")))?;
                match head {
                    "z" | "c" => GroupLabel::Cyclic(k),
                    "d" => GroupLabel::Dihedral(k),
                    _ => return Err(Error::Config(format!("unknown group '{s}'"))),
                }
            }
        };
        Ok(label)
    }
}

impl fmt::Display for GroupLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for GroupLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        GroupLabel::parse(s, None)
    }
}

#[derive(Clone, Debug)]
pub struct FiniteMoebiusGroup {
    label: GroupLabel,
    elements: Vec<MoebiusElem>,
}

impl FiniteMoebiusGroup {
    pub fn label(&self) -> GroupLabel {
        self.label
    }

    pub fn elements(&self) -> &[MoebiusElem] {
        &self.elements
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    /// Index of `g` in the element list, up to sign.
    pub fn index_of(&self, g: &MoebiusElem) -> Option<usize> {
        self.elements.iter().position(|h| h.approx_eq(g, ELEM_TOL))
    }

    /// Orbit of a point, deduplicated.
    pub fn orbit(&self, p: ExtC) -> Vec<ExtC> {
        let mut out: Vec<ExtC> = Vec::new();
        for g in &self.elements {
            let q = g.apply(p);
            if !out.iter().any(|r| r.chordal(q) < POINT_TOL) {
                out.push(q);
            }
        }
        out
    }

    pub fn stabilizer_order(&self, p: ExtC) -> usize {
        self.order() / self.orbit(p).len()
    }

    /// Max defect of closure under products and inverses.
    pub fn closure_defect(&self) -> f64 {
        let dist = |g: &MoebiusElem| {
            self.elements
                .iter()
                .map(|h| mat2::dist_up_to_sign(g.matrix(), h.matrix()))
                .fold(f64::INFINITY, f64::min)
        };
        let mut worst: f64 = 0.0;
        for a in &self.elements {
            worst = worst.max(dist(&a.inverse()));
            for b in &self.elements {
                worst = worst.max(dist(&a.compose(b)));
            }
        }
        worst
    }

    /// The special orbits (those with nontrivial stabilizer, plus for cyclic
    /// groups the orbit of 1), each with its stabilizer order.
    fn special_orbits(&self) -> Vec<(Vec<ExtC>, usize)> {
        let reps: Vec<ExtC> = match self.label {
            GroupLabel::Cyclic(_) => vec![ExtC::zero(), ExtC::Infinity, one()],
            GroupLabel::Dihedral(n) => vec![
                ExtC::zero(),
                one(),
                ExtC::Finite(Complex64::from_polar(1.0, std::f64::consts::PI / n as f64)),
            ],
            GroupLabel::Tetrahedral => {
                let s = 2f64.sqrt();
                vec![ExtC::from_sphere([s, 0.0, 1.0]), ExtC::from_sphere([-s, 0.0, -1.0]), ExtC::Infinity]
            }
            GroupLabel::Octahedral => vec![ExtC::zero(), ExtC::from_sphere([1.0, 1.0, 1.0]), ExtC::from_sphere([1.0, 1.0, 0.0])],
            GroupLabel::Icosahedral => {
                let phi = golden();
                vec![
                    ExtC::from_sphere([0.0, 1.0, phi]),
                    ExtC::from_sphere([phi, 0.0, 2.0 * phi + 1.0]),
                    ExtC::Infinity,
                ]
            }
        };
        reps.into_iter()
            .map(|p| {
                let orbit = sorted(self.orbit(p));
                let m = self.order() / orbit.len();
                (orbit, m)
            })
            .collect()
    }

    /// Orbits assigned to the values `0, 1, ∞` of the invariant map.
    pub fn branch_orbits(&self) -> Result<[Vec<ExtC>; 3]> {
        let mults = self.label.multiplicities();
        let mut pool = self.special_orbits();
        pool.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| lex_cmp(&a.0, &b.0)));
        let mut out: [Vec<ExtC>; 3] = Default::default();
        for (slot, &m) in mults.iter().enumerate() {
            let k = pool
                .iter()
                .position(|(_, s)| *s == m)
                .ok_or_else(|| Error::Normalization(format!("no orbit with stabilizer {m}")))?;
            out[slot] = pool.remove(k).0;
        }
        Ok(out)
    }
}

fn one() -> ExtC {
    ExtC::Finite(Complex64::new(1.0, 0.0))
}

fn golden() -> f64 {
    (1.0 + 5f64.sqrt()) / 2.0
}

fn sorted(mut v: Vec<ExtC>) -> Vec<ExtC> {
    v.sort_by(|a, b| {
        let (ka, kb) = (a.lex_key(), b.lex_key());
        ka.partial_cmp(&kb).unwrap_or(std::cmp::Ordering::Equal)
    });
    v
}

fn lex_cmp(a: &[ExtC], b: &[ExtC]) -> std::cmp::Ordering {
    for (p, q) in a.iter().zip(b) {
        let o = p.lex_key().partial_cmp(&q.lex_key()).unwrap_or(std::cmp::Ordering::Equal);
        if o != std::cmp::Ordering::Equal {
            return o;
        }
    }
    a.len().cmp(&b.len())
}

fn generators(label: GroupLabel) -> Result<Vec<MoebiusElem>> {
    use std::f64::consts::PI;
    let z = [0.0, 0.0, 1.0];
    let x = [1.0, 0.0, 0.0];
    Ok(match label {
        GroupLabel::Cyclic(n) | GroupLabel::Dihedral(n) if n < 2 => return Err(Error::Domain(format!("n = {n} must be at least 2"))),
        GroupLabel::Cyclic(n) => vec![MoebiusElem::rotation(z, 2.0 * PI / n as f64)],
        GroupLabel::Dihedral(n) => vec![MoebiusElem::rotation(z, 2.0 * PI / n as f64), MoebiusElem::rotation(x, PI)],
        GroupLabel::Tetrahedral => vec![
            MoebiusElem::rotation([2f64.sqrt(), 0.0, 1.0], 2.0 * PI / 3.0),
            MoebiusElem::rotation(z, PI),
        ],
        GroupLabel::Octahedral => vec![MoebiusElem::rotation(z, PI / 2.0), MoebiusElem::rotation(x, PI / 2.0)],
        GroupLabel::Icosahedral => vec![
            MoebiusElem::rotation([0.0, 1.0, golden()], 2.0 * PI / 5.0),
            MoebiusElem::rotation(z, PI),
        ],
    })
}

pub fn build_group(label: GroupLabel) -> Result<FiniteMoebiusGroup> {
    let gens = generators(label)?;
    let mut elements = vec![MoebiusElem::identity()];
    let mut frontier = elements.clone();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for h in &frontier {
            for g in &gens {
                let p = g.compose(h);
                if !elements.iter().any(|e| e.approx_eq(&p, ELEM_TOL)) {
                    elements.push(p);
                    next.push(p);
                }
            }
        }
        if elements.len() > 200 {
            return Err(Error::Numerical("group closure did not terminate".into()));
        }
        frontier = next;
    }
    if elements.len() != label.order() {
        return Err(Error::Numerical(format!(
            "{label}: generated {} elements, expected {}",
            elements.len(),
            label.order()
        )));
    }
    Ok(FiniteMoebiusGroup { label, elements })
}

fn orbit_poly(orbit: &[ExtC], m: usize) -> Poly {
    let roots: Vec<Complex64> = orbit.iter().filter_map(|p| p.finite()).collect();
    Poly::from_roots(&roots).pow(m)
}

/// The normalized invariant map: `u ∘ g = u`, `deg u = |G|`, with branch
/// values `0, 1, ∞` in table order (`0, 1` for cyclic groups, where the
/// value `∞` is taken over the orbit of `1`).
pub fn invariant_map(group: &FiniteMoebiusGroup) -> Result<RationalMap> {
    let orbits = group.branch_orbits()?;
    let mults = group.label().multiplicities();
    let num = orbit_poly(&orbits[0], mults[0]);
    let den = orbit_poly(&orbits[2], mults[2]);
    let u0 = RationalMap::from_coprime(num, den)?;
    let c = match u0.eval_ext(orbits[1][0]) {
        ExtC::Finite(c) if c.norm() > 1e-12 => c,
        _ => return Err(Error::Normalization("third branch value collides with 0 or ∞".into())),
    };
    let u = u0.scale(c.inv());
    // Real normalization: coefficients become real up to rounding.
    let real = |p: &Poly| Poly::new(p.coeffs().iter().map(|z| Complex64::new(z.re, 0.0)).collect());
    if u.imaginary_residual() > 1e-8 {
        return Err(Error::Normalization(format!(
            "normalized map is not real (residual {:.2e})",
            u.imaginary_residual()
        )));
    }
    RationalMap::from_coprime(real(u.num()), real(u.den()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchData {
    pub multiplicities: [usize; 3],
    pub orbits: [Vec<ExtC>; 3],
    pub degree: usize,
}

impl BranchData {
    pub fn cardinalities(&self) -> [usize; 3] {
        [self.orbits[0].len(), self.orbits[1].len(), self.orbits[2].len()]
    }

    /// `Σ_p (mult_p u − 1)` over the three fibers.
    pub fn riemann_hurwitz_sum(&self) -> usize {
        (0..3).map(|k| self.orbits[k].len() * (self.multiplicities[k] - 1)).sum()
    }
}

/// Points of `u^{-1}(x)` with multiplicities, from polynomial roots grouped
/// by chordal distance.
pub fn fiber(u: &RationalMap, x: ExtC) -> Result<Vec<(ExtC, usize)>> {
    let d = u.degree();
    let p = match x {
        ExtC::Infinity => u.den().clone(),
        ExtC::Finite(c) => u.num() - &u.den().scale(c),
    };
    let p = p.trimmed(1e-13);
    let mut pts: Vec<ExtC> = p.roots()?.into_iter().map(ExtC::Finite).collect();
    let finite = pts.len();
    pts.extend(std::iter::repeat_n(ExtC::Infinity, d.saturating_sub(finite)));
    let mut clusters: Vec<(Vec<ExtC>, usize)> = Vec::new();
    for q in pts {
        match clusters.iter_mut().find(|(c, _)| c[0].chordal(q) < FIBER_CLUSTER_TOL) {
            Some(c) => {
                c.0.push(q);
                c.1 += 1;
            }
            None => clusters.push((vec![q], 1)),
        }
    }
    Ok(clusters
        .into_iter()
        .map(|(members, m)| (refine(&p, centroid(&members), m), m))
        .collect())
}

/// Newton on `p^{(m-1)}`, which has a simple root at an `m`-fold root of `p`.
fn refine(p: &Poly, start: ExtC, m: usize) -> ExtC {
    let Some(mut z) = start.finite() else {
        return start;
    };
    let q = p.nth_derivative(m - 1);
    let dq = q.derivative();
    for _ in 0..20 {
        let d = dq.eval(z);
        if d.norm() == 0.0 {
            break;
        }
        let step = q.eval(z) / d;
        z -= step;
        if step.norm() <= 1e-15 * (1.0 + z.norm()) {
            break;
        }
    }
    if ExtC::Finite(z).chordal(start) < FIBER_CLUSTER_TOL {
        ExtC::Finite(z)
    } else {
        start
    }
}

fn centroid(points: &[ExtC]) -> ExtC {
    let mut acc = [0.0; 3];
    for p in points {
        let s = p.to_sphere();
        for k in 0..3 {
            acc[k] += s[k];
        }
    }
    ExtC::from_sphere(acc)
}

pub fn branch_data(group: &FiniteMoebiusGroup, u: &RationalMap) -> Result<BranchData> {
    let d = group.order();
    if u.degree() != d {
        return Err(Error::Verification(format!("deg u = {} but |G| = {d}", u.degree())));
    }
    let targets = [ExtC::zero(), one(), ExtC::Infinity];
    let expected = group.label().multiplicities();
    let mut multiplicities = [0usize; 3];
    let mut orbits: [Vec<ExtC>; 3] = Default::default();
    for k in 0..3 {
        let fib = fiber(u, targets[k])?;
        let m = fib[0].1;
        if fib.iter().any(|(_, mk)| *mk != m) {
            return Err(Error::Verification(format!("fiber over {} has mixed multiplicities", targets[k])));
        }
        if fib.len() * m != d {
            return Err(Error::Verification(format!(
                "fiber over {}: {} points of multiplicity {m}, degree {d}",
                targets[k],
                fib.len()
            )));
        }
        multiplicities[k] = m;
        orbits[k] = sorted(fib.into_iter().map(|(p, _)| p).collect());
    }
    if multiplicities != expected {
        return Err(Error::Verification(format!(
            "multiplicities {multiplicities:?}, table says {expected:?}"
        )));
    }
    let data = BranchData {
        multiplicities,
        orbits,
        degree: d,
    };
    if data.riemann_hurwitz_sum() != 2 * d - 2 {
        return Err(Error::Verification(format!(
            "Riemann–Hurwitz sum {} != {}",
            data.riemann_hurwitz_sum(),
            2 * d - 2
        )));
    }
    Ok(data)
}

fn sample_points(count: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
        .collect()
}

/// `max_{g, z} |u(g z) − u(z)| / (1 + |u(z)|)` over 50 sample points.
pub fn verify_invariance(u: &RationalMap, group: &FiniteMoebiusGroup) -> f64 {
    let mut worst: f64 = 0.0;
    for z in sample_points(50, 0x5eed) {
        let uz = match u.eval(z) {
            ExtC::Finite(v) => v,
            ExtC::Infinity => continue,
        };
        for g in group.elements() {
            let r = match u.eval_ext(g.apply(ExtC::Finite(z))) {
                ExtC::Finite(v) => (v - uz).norm() / (1.0 + uz.norm()),
                ExtC::Infinity => f64::INFINITY,
            };
            worst = worst.max(r);
        }
    }
    worst
}

/// `max_z |conj(u(conj z)) − u(z)| / (1 + |u(z)|)` over 50 sample points.
pub fn conj_symmetry_residual(u: &RationalMap) -> f64 {
    let mut worst: f64 = 0.0;
    for z in sample_points(50, 0xc0de) {
        if let (ExtC::Finite(a), ExtC::Finite(b)) = (u.eval(z), u.eval(z.conj())) {
            worst = worst.max((b.conj() - a).norm() / (1.0 + a.norm()));
        }
    }
    worst
}

/// Checks that `u^{-1}(x)` consists of `|G|` distinct points forming a
/// single orbit; returns the largest chordal mismatch.
pub fn fiber_orbit_defect(u: &RationalMap, group: &FiniteMoebiusGroup, x: Complex64) -> Result<f64> {
    let fib = fiber(u, ExtC::Finite(x))?;
    if fib.len() != group.order() || fib.iter().any(|(_, m)| *m != 1) {
        return Err(Error::Verification(format!(
            "fiber over {x} has {} clusters, expected {} simple points",
            fib.len(),
            group.order()
        )));
    }
    let orbit = group.orbit(fib[0].0);
    let mut worst: f64 = 0.0;
    for (p, _) in &fib {
        let d = orbit.iter().map(|q| q.chordal(*p)).fold(f64::INFINITY, f64::min);
        worst = worst.max(d);
    }
    Ok(worst)
}
