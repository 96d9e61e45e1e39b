//! Spherical triangle inequalities, admissible-weight scans and pointwise
//! simultaneous unitarization of monodromy generators.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mat2::{self, Mat2, ONE, ZERO};
use crate::monodromy::{effective_weight, mu_formula, LambdaGrid, MonodromyRep};
use crate::potentials::{ResidueConvention, WeightTriple};

const BOUNDARY_TOL: f64 = 1e-12;
/// Required ratio between the two smallest singular values of the
/// invariant-form system.
const KERNEL_GAP: f64 = 1e6;
/// Largest relative singular value still counted as a kernel direction.
const KERNEL_TOL: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TriangleStatus {
    Strict,
    Boundary,
    Fail,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TriangleVerdict {
    pub status: TriangleStatus,
    /// `1 − Σ|ν|`, then `|ν_j| + |ν_k| − |ν_i|` for `i = 1, 2, 3`.
    pub margins: [f64; 4],
}

pub fn triangle_inequalities(nu1: f64, nu2: f64, nu3: f64) -> TriangleVerdict {
    let (a, b, c) = (nu1.abs(), nu2.abs(), nu3.abs());
    let margins = [1.0 - a - b - c, b + c - a, a + c - b, a + b - c];
    let status = if margins.iter().all(|m| *m > BOUNDARY_TOL) {
        TriangleStatus::Strict
    } else if margins.iter().all(|m| *m >= -BOUNDARY_TOL) {
        TriangleStatus::Boundary
    } else {
        TriangleStatus::Fail
    };
    TriangleVerdict { status, margins }
}

/// Representative of a real exponent in `[−½, ½]`; `None` for non-real
/// exponents (eigenvalues off the unit circle).
pub fn reduce_exponent(mu: Complex64) -> Option<f64> {
    if mu.im.abs() > 1e-12 {
        return None;
    }
    Some(mu.re - mu.re.round())
}

/// Verdict for the eigenvalue exponents `μ_k(w_k, λ)`.
pub fn verdict_at(weights: WeightTriple, mults: [usize; 3], convention: ResidueConvention, lambda: Complex64) -> TriangleVerdict {
    let w = weights.as_array();
    let nu: Vec<Option<f64>> = (0..3)
        .map(|k| reduce_exponent(mu_formula(effective_weight(w[k], mults[k], convention), lambda, mults[k])))
        .collect();
    match (nu[0], nu[1], nu[2]) {
        (Some(a), Some(b), Some(c)) => triangle_inequalities(a, b, c),
        _ => TriangleVerdict {
            status: TriangleStatus::Fail,
            margins: [f64::NEG_INFINITY; 4],
        },
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WeightScanEntry {
    pub weights: WeightTriple,
    pub admissible: bool,
    /// Smallest margin over λ ≠ 1.
    pub min_margin: f64,
    pub status_at_one: TriangleStatus,
}

/// Admissible iff STRICT at every `λ_j ≠ 1` of an `m`-point grid and at
/// least BOUNDARY at `λ = 1`.
pub fn check_weights(weights: WeightTriple, mults: [usize; 3], convention: ResidueConvention, m: usize) -> WeightScanEntry {
    let at_one = verdict_at(weights, mults, convention, ONE);
    let mut min_margin = f64::INFINITY;
    let mut strict = true;
    for j in 1..m {
        let l = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / m as f64);
        let v = verdict_at(weights, mults, convention, l);
        min_margin = min_margin.min(v.margins.iter().cloned().fold(f64::INFINITY, f64::min));
        strict &= v.status == TriangleStatus::Strict;
    }
    WeightScanEntry {
        weights,
        admissible: strict && at_one.status != TriangleStatus::Fail,
        min_margin,
        status_at_one: at_one.status,
    }
}

pub fn weight_region_scan(mults: [usize; 3], convention: ResidueConvention, weights: &[WeightTriple], m: usize) -> Vec<WeightScanEntry> {
    weights.par_iter().map(|w| check_weights(*w, mults, convention, m)).collect()
}

/// Grid over the box `[lo, hi]³` with the given step.
pub fn box_grid(lo: f64, hi: f64, step: f64) -> Vec<WeightTriple> {
    let k = ((hi - lo) / step).round() as i64;
    let vals: Vec<f64> = (0..=k).map(|i| lo + step * i as f64).collect();
    let mut out = Vec::new();
    for a in &vals {
        for b in &vals {
            for c in &vals {
                out.push(WeightTriple::new(*a, *b, *c));
            }
        }
    }
    out
}

/// The line `(0, 0, v)` for `v ∈ [lo, hi]`.
pub fn cyclic_line(lo: f64, hi: f64, step: f64) -> Vec<WeightTriple> {
    let k = ((hi - lo) / step).round() as i64;
    (0..=k).map(|i| WeightTriple::new(0.0, 0.0, lo + step * i as f64)).collect()
}

/// Hermitian `H = [[a, c + id], [c − id, b]]` from `(a, b, c, d)`.
fn hermitian(p: [f64; 4]) -> Mat2 {
    mat2::mat(
        Complex64::from(p[0]),
        Complex64::new(p[2], p[3]),
        Complex64::new(p[2], -p[3]),
        Complex64::from(p[1]),
    )
}

/// The det-1 positive-definite `H` with `M_k^† H M_k = H` for all `k`.
pub fn invariant_form(gens: &[Mat2], label: &str) -> Result<Mat2> {
    let basis = [
        hermitian([1.0, 0.0, 0.0, 0.0]),
        hermitian([0.0, 1.0, 0.0, 0.0]),
        hermitian([0.0, 0.0, 1.0, 0.0]),
        hermitian([0.0, 0.0, 0.0, 1.0]),
    ];
    let rows = 8 * gens.len();
    let mut a = DMatrix::<f64>::zeros(rows, 4);
    for (g, m) in gens.iter().enumerate() {
        let scale = 1.0 / (mat2::norm(m) * mat2::norm(m)).max(1.0);
        for (col, e) in basis.iter().enumerate() {
            let r = (m.adjoint() * e * m - e) * Complex64::from(scale);
            for (i, z) in r.iter().enumerate() {
                a[(8 * g + 2 * i, col)] = z.re;
                a[(8 * g + 2 * i + 1, col)] = z.im;
            }
        }
    }
    let svd = a.svd(false, true);
    let vt = svd.v_t.ok_or_else(|| Error::Numerical("SVD failed".into()))?;
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|i, j| svd.singular_values[*i].partial_cmp(&svd.singular_values[*j]).unwrap());
    let smin = svd.singular_values[order[0]];
    let snext = svd.singular_values[order[1]];
    let smax = svd.singular_values[order[3]];
    if smin > KERNEL_TOL * smax {
        return Err(Error::NotUnitarizable { samples: vec![] });
    }
    if snext < KERNEL_GAP * smin.max(1e-300) {
        return Err(Error::Reducible { lambda: label.to_string() });
    }
    let row = vt.row(order[0]);
    let mut h = hermitian([row[0], row[1], row[2], row[3]]);
    if (h[(0, 0)] + h[(1, 1)]).re < 0.0 {
        h = -h;
    }
    let det = mat2::det(&h).re;
    if det <= 0.0 || h[(0, 0)].re <= 0.0 {
        return Err(Error::NotUnitarizable { samples: vec![] });
    }
    Ok(h / Complex64::from(det.sqrt()))
}

/// Upper-triangular `C` with positive diagonal and `H = C^† C`.
pub fn cholesky_upper(h: &Mat2) -> Result<Mat2> {
    let herm = (h + h.adjoint()) * Complex64::from(0.5);
    let l = Cholesky::new(herm).ok_or_else(|| Error::NotUnitarizable { samples: vec![] })?.l();
    Ok(l.adjoint())
}

#[derive(Clone, Debug)]
pub struct Unitarizer {
    pub lambdas: Vec<Complex64>,
    pub c: Vec<Mat2>,
    pub h: Vec<Mat2>,
}

impl Unitarizer {
    /// Max over samples and generators of `‖(C M C⁻¹)^†(C M C⁻¹) − I‖`,
    /// skipping the indices in `skip`.
    pub fn unitarity_residual(&self, rep: &MonodromyRep, skip: &[usize]) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.lambdas.len() {
            if skip.contains(&j) {
                continue;
            }
            let c = self.c[j];
            let ci = mat2::adj(&c);
            for k in 0..3 {
                let m = c * rep.generators[k][j] * ci;
                worst = worst.max(mat2::unitarity_residual(&m));
            }
        }
        worst
    }

    /// Largest jump of `H` between neighbouring equispaced samples, relative
    /// to the median jump.
    pub fn continuity_ratio(&self, m: usize) -> f64 {
        let jumps: Vec<f64> = (0..m).map(|j| mat2::norm(&(self.h[(j + 1) % m] - self.h[j]))).collect();
        let mut sorted = jumps.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = sorted[m / 2].max(1e-300);
        jumps.iter().cloned().fold(0.0, f64::max) / median
    }

    /// Relative energy of negative Fourier modes of `C` on the first `m`
    /// (equispaced) samples.
    pub fn negative_mode_energy(&self, m: usize) -> f64 {
        let l = crate::looplab::LoopSL2::from_samples(self.c[..m].to_vec());
        let coeffs = l.laurent(m / 2 - 1);
        let half = m / 2 - 1;
        let mut neg = 0.0;
        let mut total = 0.0;
        for (i, c) in coeffs.iter().enumerate() {
            let e = mat2::norm(c).powi(2);
            total += e;
            if i < half {
                neg += e;
            }
        }
        (neg / total.max(1e-300)).sqrt()
    }
}

/// The form at λ = 1, where the monodromy is reducible. The even parts
/// `H̄(θ) = (H(e^{iθ}) + H(e^{−iθ}))/2` at the first three grid angles are
/// extrapolated to θ = 0 through `H̄ = H₀ + aθ² + bθ⁴ + O(θ⁶)`; coarse grids
/// fall back to the auxiliary pair.
fn form_at_one(h: &[Mat2], grid: &LambdaGrid) -> Mat2 {
    let m = grid.m;
    let even = |j: usize, k: usize| (h[j] + h[k]) * Complex64::from(0.5);
    let value = if m >= 8 {
        (even(1, m - 1) * Complex64::from(15.0) - even(2, m - 2) * Complex64::from(6.0) + even(3, m - 3)) / Complex64::from(10.0)
    } else {
        let (p, q) = grid.aux_indices();
        even(p, q)
    };
    value / mat2::det(&value).sqrt()
}

/// Pointwise unitarizer on the λ grid of `rep`. At λ = 1 the form is
/// extrapolated from its neighbours.
pub fn pointwise_unitarizer(rep: &MonodromyRep) -> Result<Unitarizer> {
    let one = rep.grid.index_of_one();
    let forms: Vec<std::result::Result<Mat2, Error>> = (0..rep.lambdas.len())
        .into_par_iter()
        .map(|j| {
            if j == one {
                Ok(Mat2::zeros())
            } else {
                invariant_form(&rep.at(j), &format!("{}", rep.lambdas[j]))
            }
        })
        .collect();
    let mut bad = Vec::new();
    let mut h = Vec::with_capacity(forms.len());
    for (j, f) in forms.into_iter().enumerate() {
        match f {
            Ok(m) => h.push(m),
            Err(Error::NotUnitarizable { .. }) => {
                bad.push(j);
                h.push(Mat2::zeros());
            }
            Err(e) => return Err(e),
        }
    }
    if !bad.is_empty() {
        return Err(Error::NotUnitarizable { samples: bad });
    }
    h[one] = form_at_one(&h, &rep.grid);
    let c = h.iter().map(cholesky_upper).collect::<Result<Vec<_>>>()?;
    Ok(Unitarizer {
        lambdas: rep.lambdas.clone(),
        c,
        h,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct IrreducibilitySample {
    pub lambda: [f64; 2],
    pub max_commutator: f64,
    /// Smallest sine of the angle between an eigenline of `M0` and its
    /// image under `M1` (0 for a common eigenline).
    pub eigenline_sine: f64,
    pub reducible: bool,
}

fn eigenvectors(m: &Mat2) -> Vec<[Complex64; 2]> {
    let tr = mat2::trace(m);
    let disc = (tr * tr - 4.0 * mat2::det(m)).sqrt();
    let mut out = Vec::new();
    for ev in [(tr + disc) / 2.0, (tr - disc) / 2.0] {
        let a = m[(0, 0)] - ev;
        let b = m[(0, 1)];
        let c = m[(1, 0)];
        let d = m[(1, 1)] - ev;
        let v = if a.norm() + b.norm() >= c.norm() + d.norm() {
            [b, -a]
        } else {
            [d, -c]
        };
        let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
        if n > 1e-300 {
            out.push([v[0] / n, v[1] / n]);
        } else {
            out.push([ONE, ZERO]);
        }
    }
    out
}

pub fn irreducibility_check(rep: &MonodromyRep) -> Vec<IrreducibilitySample> {
    (0..rep.lambdas.len())
        .map(|j| {
            let g = rep.at(j);
            let mut comm: f64 = 0.0;
            for a in 0..3 {
                for b in a + 1..3 {
                    comm = comm.max(mat2::norm(&(g[a] * g[b] - g[b] * g[a])));
                }
            }
            let mut sine = f64::INFINITY;
            for v in eigenvectors(&g[0]) {
                let w0 = g[1][(0, 0)] * v[0] + g[1][(0, 1)] * v[1];
                let w1 = g[1][(1, 0)] * v[0] + g[1][(1, 1)] * v[1];
                let wn = (w0.norm_sqr() + w1.norm_sqr()).sqrt();
                let cross = (v[0] * w1 - v[1] * w0).norm() / wn.max(1e-300);
                sine = sine.min(cross);
            }
            IrreducibilitySample {
                lambda: [rep.lambdas[j].re, rep.lambdas[j].im],
                max_commutator: comm,
                eigenline_sine: sine,
                reducible: comm < 1e-8,
            }
        })
        .collect()
}
