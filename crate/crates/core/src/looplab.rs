//! SL(2,C)-valued loops in the spectral parameter λ: the ∗-involution,
//! unitarity on the circle and numerical Iwasawa factorization.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::mat2::{self, Mat2};

pub const DEFAULT_TRUNCATION: usize = 16;
pub const DEFAULT_GRID: usize = 256;
pub const DEFAULT_TOL: f64 = 1e-8;
const TAIL_WARN: f64 = 1e-8;
const MAX_CONDITION: f64 = 1e13;

#[derive(Clone, Debug)]
enum Repr {
    /// `coeffs[i]` multiplies `λ^(min_power + i)`.
    Laurent { min_power: i64, coeffs: Vec<Mat2> },
    /// Values at `λ_j = r e^{2πij/len}`.
    Samples(Vec<Mat2>),
}

#[derive(Clone, Debug)]
pub struct LoopSL2 {
    radius: f64,
    repr: Repr,
}

/// Equispaced points `r e^{2πij/len}`.
pub fn circle_grid(len: usize, radius: f64) -> Vec<Complex64> {
    (0..len)
        .map(|j| Complex64::from_polar(radius, 2.0 * PI * j as f64 / len as f64))
        .collect()
}

impl LoopSL2 {
    pub fn from_laurent(min_power: i64, coeffs: Vec<Mat2>) -> Self {
        Self {
            radius: 1.0,
            repr: Repr::Laurent { min_power, coeffs },
        }
    }

    pub fn from_samples(values: Vec<Mat2>) -> Self {
        Self::from_samples_on_radius(values, 1.0)
    }

    pub fn from_samples_on_radius(values: Vec<Mat2>, radius: f64) -> Self {
        Self {
            radius,
            repr: Repr::Samples(values),
        }
    }

    pub fn from_fn(len: usize, f: impl Fn(Complex64) -> Mat2) -> Self {
        Self::from_samples(circle_grid(len, 1.0).into_iter().map(f).collect())
    }

    pub fn constant(m: Mat2) -> Self {
        Self::from_laurent(0, vec![m])
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn is_sampled(&self) -> bool {
        matches!(self.repr, Repr::Samples(_))
    }

    pub fn grid_len(&self) -> Option<usize> {
        match &self.repr {
            Repr::Samples(v) => Some(v.len()),
            Repr::Laurent { .. } => None,
        }
    }

    /// Value at an arbitrary λ (Laurent representation only, or a grid node).
    pub fn eval(&self, lambda: Complex64) -> Mat2 {
        match &self.repr {
            Repr::Laurent { min_power, coeffs } => {
                let mut acc = Mat2::zeros();
                for (i, c) in coeffs.iter().enumerate() {
                    acc += c * lambda.powi((*min_power + i as i64) as i32);
                }
                acc
            }
            Repr::Samples(_) => {
                let (p, c) = self.laurent_full();
                LoopSL2::from_laurent(p, c).eval(lambda)
            }
        }
    }

    /// Values on the grid of size `len`.
    pub fn samples(&self, len: usize) -> Vec<Mat2> {
        match &self.repr {
            Repr::Samples(v) if v.len() == len => v.clone(),
            _ => circle_grid(len, self.radius).into_iter().map(|l| self.eval(l)).collect(),
        }
    }

    fn laurent_full(&self) -> (i64, Vec<Mat2>) {
        match &self.repr {
            Repr::Laurent { min_power, coeffs } => (*min_power, coeffs.clone()),
            Repr::Samples(v) => {
                let len = v.len();
                let raw = fft_coefficients(v);
                let half = (len / 2) as i64;
                let lo = -(half - 1).max(0);
                let coeffs = (lo..=half - 1)
                    .map(|k| raw[k.rem_euclid(len as i64) as usize] / Complex64::from(self.radius.powi(k as i32)))
                    .collect();
                (lo, coeffs)
            }
        }
    }

    /// Laurent coefficients `A_k` for `k = -n..=n`.
    pub fn laurent(&self, n: usize) -> Vec<Mat2> {
        let (p, c) = self.laurent_full();
        (-(n as i64)..=n as i64)
            .map(|k| {
                let i = k - p;
                if i >= 0 && (i as usize) < c.len() {
                    c[i as usize]
                } else {
                    Mat2::zeros()
                }
            })
            .collect()
    }

    /// Laurent representation truncated to `|k| ≤ n`.
    pub fn to_laurent(&self, n: usize) -> LoopSL2 {
        LoopSL2 {
            radius: self.radius,
            repr: Repr::Laurent {
                min_power: -(n as i64),
                coeffs: self.laurent(n),
            },
        }
    }

    /// Relative energy of the Laurent coefficients with `|k| > n`.
    pub fn tail_energy(&self, n: usize) -> f64 {
        let (p, c) = self.laurent_full();
        let mut total = 0.0;
        let mut tail = 0.0;
        for (i, m) in c.iter().enumerate() {
            let e = mat2::norm(m).powi(2);
            total += e;
            if (p + i as i64).unsigned_abs() as usize > n {
                tail += e;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            (tail / total).sqrt()
        }
    }

    /// `X*(λ) = X(1/conj λ)^†`, i.e. `(X*)_k = (X_{-k})^†`.
    pub fn star(&self) -> LoopSL2 {
        match &self.repr {
            Repr::Samples(v) if self.radius == 1.0 => LoopSL2::from_samples(v.iter().map(mat2::dagger).collect()),
            _ => {
                let (p, c) = self.laurent_full();
                let len = c.len() as i64;
                let coeffs = c.iter().rev().map(mat2::dagger).collect();
                LoopSL2 {
                    radius: 1.0 / self.radius,
                    repr: Repr::Laurent {
                        min_power: -(p + len - 1),
                        coeffs,
                    },
                }
            }
        }
    }

    /// Pointwise product.
    pub fn mul(&self, other: &LoopSL2) -> LoopSL2 {
        match (&self.repr, &other.repr) {
            (Repr::Laurent { min_power: p, coeffs: a }, Repr::Laurent { min_power: q, coeffs: b }) => {
                let mut out = vec![Mat2::zeros(); a.len() + b.len() - 1];
                for (i, x) in a.iter().enumerate() {
                    for (j, y) in b.iter().enumerate() {
                        out[i + j] += x * y;
                    }
                }
                LoopSL2 {
                    radius: self.radius,
                    repr: Repr::Laurent {
                        min_power: p + q,
                        coeffs: out,
                    },
                }
            }
            _ => {
                let len = self.grid_len().or(other.grid_len()).unwrap_or(DEFAULT_GRID);
                let a = self.samples(len);
                let b = other.samples(len);
                LoopSL2::from_samples_on_radius(a.iter().zip(&b).map(|(x, y)| x * y).collect(), self.radius)
            }
        }
    }

    /// Pointwise inverse via the adjugate (valid for det = 1).
    pub fn inverse(&self) -> LoopSL2 {
        match &self.repr {
            Repr::Laurent { min_power, coeffs } => LoopSL2 {
                radius: self.radius,
                repr: Repr::Laurent {
                    min_power: *min_power,
                    coeffs: coeffs.iter().map(mat2::adj).collect(),
                },
            },
            Repr::Samples(v) => LoopSL2::from_samples_on_radius(v.iter().map(mat2::adj).collect(), self.radius),
        }
    }

    /// `dX/dθ` for `λ = e^{iθ}`: `(X')_k = i k X_k`.
    pub fn theta_derivative(&self) -> LoopSL2 {
        let (p, c) = self.laurent_full();
        let coeffs = c
            .iter()
            .enumerate()
            .map(|(i, m)| m * Complex64::new(0.0, (p + i as i64) as f64))
            .collect();
        LoopSL2 {
            radius: self.radius,
            repr: Repr::Laurent { min_power: p, coeffs },
        }
    }

    /// Max over the grid of `|det X − 1|`.
    pub fn det_residual(&self, len: usize) -> f64 {
        self.samples(len).iter().map(|m| (mat2::det(m) - 1.0).norm()).fold(0.0, f64::max)
    }

    /// Max distance between two loops on a grid.
    pub fn distance(&self, other: &LoopSL2, len: usize) -> f64 {
        self.samples(len)
            .iter()
            .zip(other.samples(len))
            .map(|(a, b)| mat2::norm(&(a - b)))
            .fold(0.0, f64::max)
    }

    /// `{k: [[[re, im], ...], ...]}` for `|k| ≤ n`.
    pub fn to_json(&self, n: usize) -> Value {
        let mut map = serde_json::Map::new();
        for (i, m) in self.laurent(n).iter().enumerate() {
            let k = i as i64 - n as i64;
            let rows: Vec<Value> = (0..2)
                .map(|r| json!([[m[(r, 0)].re, m[(r, 0)].im], [m[(r, 1)].re, m[(r, 1)].im]]))
                .collect();
            map.insert(k.to_string(), Value::Array(rows));
        }
        Value::Object(map)
    }
}

/// `Σ_j v_j e^{-2πijk/len} / len` for each matrix entry.
fn fft_coefficients(v: &[Mat2]) -> Vec<Mat2> {
    let len = v.len();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(len);
    let mut out = vec![Mat2::zeros(); len];
    for r in 0..2 {
        for c in 0..2 {
            let mut buf: Vec<Complex64> = v.iter().map(|m| m[(r, c)]).collect();
            fft.process(&mut buf);
            for (k, z) in buf.into_iter().enumerate() {
                out[k][(r, c)] = z / len as f64;
            }
        }
    }
    out
}

/// `(max_j ‖X*X − I‖ on the grid, residual < tol)`.
pub fn is_r_unitary(x: &LoopSL2, tol: f64) -> (bool, f64) {
    let len = x.grid_len().unwrap_or(DEFAULT_GRID);
    let a = x.samples(len);
    let b = x.star().samples(len);
    let res = a
        .iter()
        .zip(&b)
        .map(|(x, xs)| mat2::norm(&(xs * x - mat2::identity())))
        .fold(0.0, f64::max);
    (res < tol, res)
}

#[derive(Clone, Copy, Debug)]
pub struct IwasawaOptions {
    /// Degree of the truncated `B^{-1}`.
    pub truncation: usize,
    pub grid: usize,
}

impl Default for IwasawaOptions {
    fn default() -> Self {
        Self {
            truncation: DEFAULT_TRUNCATION,
            grid: DEFAULT_GRID,
        }
    }
}

/// `X = F B` with `F` unitary on the circle and `B ∈ Λ⁺`, `B(0)` upper
/// triangular with positive diagonal.
#[derive(Clone, Debug)]
pub struct Iwasawa {
    /// Taylor coefficients of `B^{-1}` before the determinant correction.
    inv_b: Vec<Mat2>,
    pub f: LoopSL2,
    pub b: LoopSL2,
    pub condition: f64,
    pub tail_energy: f64,
    pub warnings: Vec<String>,
}

impl Iwasawa {
    /// `B^{-1}(λ)`, defined for `|λ| ≤ 1`.
    pub fn b_inverse_at(&self, lambda: Complex64) -> Mat2 {
        let mut acc = Mat2::zeros();
        for c in self.inv_b.iter().rev() {
            acc = acc * lambda + c;
        }
        mat2::normalize_det(&acc).unwrap_or(acc)
    }

    pub fn b_at(&self, lambda: Complex64) -> Mat2 {
        mat2::adj(&self.b_inverse_at(lambda))
    }

    /// Unitary factor at an off-grid `λ`, given `X(λ)`.
    pub fn f_at(&self, x: &Mat2, lambda: Complex64) -> Mat2 {
        x * self.b_inverse_at(lambda)
    }
}

/// Iwasawa factorization on the unit circle by spectral factorization of
/// `X^† X = B^† B`: the Taylor coefficients of `B^{-1}` solve a block
/// Toeplitz system built from the Fourier coefficients of `X^† X`.
pub fn iwasawa(x: &LoopSL2, opts: IwasawaOptions) -> Result<Iwasawa> {
    if x.radius() != 1.0 {
        return Err(Error::Domain("Iwasawa factorization implemented for r = 1 only".into()));
    }
    let len = x.grid_len().unwrap_or(opts.grid);
    let n = opts.truncation;
    if len < 4 * n + 2 {
        return Err(Error::Domain(format!("grid of {len} points too coarse for truncation {n}")));
    }
    let xs = x.samples(len);
    let mut warnings = Vec::new();
    let tail = LoopSL2::from_samples(xs.clone()).tail_energy(n);
    if tail > TAIL_WARN {
        warnings.push(format!("Laurent tail energy {tail:.2e} beyond truncation {n}"));
    }
    let k_samples: Vec<Mat2> = xs.iter().map(|m| m.adjoint() * m).collect();
    let kc = fft_coefficients(&k_samples);
    let kcoef = |k: i64| kc[k.rem_euclid(len as i64) as usize];

    let dim = 2 * (n + 1);
    let mut t = DMatrix::<Complex64>::zeros(dim, dim);
    for bk in 0..=n {
        for bj in 0..=n {
            let blk = kcoef(bk as i64 - bj as i64);
            for r in 0..2 {
                for c in 0..2 {
                    t[(2 * bk + r, 2 * bj + c)] = blk[(r, c)];
                }
            }
        }
    }
    // Hermitian by construction; symmetrize rounding.
    let t = (&t + t.adjoint()) * Complex64::from(0.5);
    let sv = t.singular_values();
    let condition = sv.max() / sv.min();
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(Error::IllConditioned { cond: condition });
    }
    let mut rhs = DMatrix::<Complex64>::zeros(dim, 2);
    rhs[(0, 0)] = mat2::ONE;
    rhs[(1, 1)] = mat2::ONE;
    let chol = Cholesky::new(t.clone()).ok_or(Error::IllConditioned { cond: condition })?;
    let y = chol.solve(&rhs);
    let yk = |k: usize| Mat2::new(y[(2 * k, 0)], y[(2 * k, 1)], y[(2 * k + 1, 0)], y[(2 * k + 1, 1)]);

    let y0 = yk(0);
    let y0_inv = mat2::inv(&y0).ok_or(Error::IllConditioned { cond: condition })?;
    let h = (y0_inv + y0_inv.adjoint()) * Complex64::from(0.5);
    let lower = Cholesky::new(h)
        .ok_or_else(|| Error::Numerical("leading Toeplitz block not positive definite".into()))?
        .l();
    // B(0) = lower^†, B^{-1} = Y · B(0)^†.
    let inv_b: Vec<Mat2> = (0..=n).map(|k| yk(k) * lower).collect();

    let mut fact = Iwasawa {
        inv_b,
        f: LoopSL2::constant(mat2::identity()),
        b: LoopSL2::constant(mat2::identity()),
        condition,
        tail_energy: tail,
        warnings,
    };
    let grid = circle_grid(len, 1.0);
    let f: Vec<Mat2> = xs.iter().zip(&grid).map(|(m, l)| fact.f_at(m, *l)).collect();
    let b: Vec<Mat2> = grid.iter().map(|l| fact.b_at(*l)).collect();
    let det_drift = grid
        .iter()
        .map(|l| {
            let mut acc = Mat2::zeros();
            for c in fact.inv_b.iter().rev() {
                acc = acc * *l + c;
            }
            (mat2::det(&acc) - 1.0).norm()
        })
        .fold(0.0, f64::max);
    if det_drift > 1e-6 {
        fact.warnings.push(format!("det B^-1 deviates from 1 by {det_drift:.2e}"));
    }
    fact.f = LoopSL2::from_samples(f);
    fact.b = LoopSL2::from_samples(b);
    Ok(fact)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat2::{mat, I, ONE, ZERO};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn star_of_monomial_loop() {
        let x = LoopSL2::from_laurent(-1, vec![mat(ZERO, ZERO, ZERO, ONE), Mat2::zeros(), mat(ONE, ZERO, ZERO, ZERO)]);
        let s = x.star();
        let l = c(0.3, 0.8);
        let expect = mat(l.inv(), ZERO, ZERO, l);
        assert!(mat2::norm(&(s.eval(l) - expect)) < 1e-14);
    }

    #[test]
    fn star_of_unitary_constant_is_inverse() {
        let u = mat(c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.8), c(0.6, 0.0));
        let s = LoopSL2::constant(u).star();
        assert!(mat2::norm(&(s.eval(ONE) * u - mat2::identity())) < 1e-15);
        assert!(is_r_unitary(&LoopSL2::constant(u), 1e-14).0);
        assert!(!is_r_unitary(&LoopSL2::constant(mat(c(2.0, 0.0), ZERO, ZERO, c(0.5, 0.0))), 1e-3).0);
    }

    #[test]
    fn fft_round_trip() {
        let x = LoopSL2::from_laurent(-2, (0..5).map(|k| mat(c(k as f64, 1.0), I, ZERO, c(0.5, -(k as f64)))).collect());
        let s = LoopSL2::from_samples(x.samples(64));
        let back = s.laurent(2);
        for (a, b) in back.iter().zip(x.laurent(2)) {
            assert!(mat2::norm(&(a - b)) < 1e-13);
        }
        assert!(s.tail_energy(2) < 1e-14);
        assert!(s.tail_energy(1) > 0.1);
    }

    #[test]
    fn theta_derivative_of_monomial() {
        let x = LoopSL2::from_laurent(-1, vec![mat(ZERO, ZERO, ZERO, ONE), Mat2::zeros(), mat(ONE, ZERO, ZERO, ZERO)]);
        let l = c(0.0, 1.0);
        let d = x.theta_derivative().eval(l);
        assert!(mat2::norm(&(d - mat(I * l, ZERO, ZERO, -I / l))) < 1e-14);
    }

    #[test]
    fn iwasawa_of_constants() {
        let u = mat(c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.8), c(0.6, 0.0));
        let f = iwasawa(&LoopSL2::constant(u), IwasawaOptions::default()).unwrap();
        assert!(f.b.distance(&LoopSL2::constant(mat2::identity()), 64) < 1e-12);
        let d = mat(c(2.0, 0.0), ZERO, ZERO, c(0.5, 0.0));
        let f = iwasawa(&LoopSL2::constant(d), IwasawaOptions::default()).unwrap();
        assert!(f.f.distance(&LoopSL2::constant(mat2::identity()), 64) < 1e-12);
        let t = mat(c(1.5, 0.0), c(0.3, -2.0), ZERO, c(1.0 / 1.5, 0.0));
        let f = iwasawa(&LoopSL2::constant(t), IwasawaOptions::default()).unwrap();
        assert!(f.b.distance(&LoopSL2::constant(t), 64) < 1e-12);
    }
}
