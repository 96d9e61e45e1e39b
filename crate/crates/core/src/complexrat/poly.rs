//! Dense univariate polynomials with complex floating-point coefficients.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Polynomial stored in ascending degree order. The zero polynomial has no
/// coefficients and degree `None` (standing in for minus infinity).
#[derive(Clone, PartialEq, Default)]
pub struct Poly {
    coeffs: Vec<Complex64>,
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly[")?;
        for (k, c) in self.coeffs.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}{:+}i", c.re, c.im)?;
        }
        write!(f, "]")
    }
}

impl Poly {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        let mut p = Self { coeffs };
        p.trim();
        p
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![c])
    }

    pub fn one() -> Self {
        Self::constant(Complex64::new(1.0, 0.0))
    }

    /// The monomial `c z^k`.
    pub fn monomial(c: Complex64, k: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); k + 1];
        coeffs[k] = c;
        Self::new(coeffs)
    }

    /// `z - a`
    pub fn linear_root(a: Complex64) -> Self {
        Self::new(vec![-a, Complex64::new(1.0, 0.0)])
    }

    /// Monic polynomial with the given roots (repeated roots repeat).
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut coeffs = vec![Complex64::new(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
            for (k, &c) in coeffs.iter().enumerate() {
                next[k + 1] += c;
                next[k] -= c * r;
            }
            coeffs = next;
        }
        Self::new(coeffs)
    }

    fn trim(&mut self) {
        while matches!(self.coeffs.last(), Some(c) if *c == Complex64::new(0.0, 0.0)) {
            self.coeffs.pop();
        }
    }

    /// Drops leading coefficients whose modulus is below `rel * max|c|`.
    pub fn trimmed(&self, rel: f64) -> Self {
        let scale = self.max_abs();
        let mut coeffs = self.coeffs.clone();
        while matches!(coeffs.last(), Some(c) if c.norm() <= rel * scale) {
            coeffs.pop();
        }
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or_default()
    }

    pub fn leading(&self) -> Complex64 {
        self.coeffs.last().copied().unwrap_or_default()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Euclidean norm of the coefficient vector.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        self.scale(self.leading().inv())
    }

    pub fn derivative(&self) -> Self {
        Self::new(self.coeffs.iter().enumerate().skip(1).map(|(k, &c)| c * k as f64).collect())
    }

    pub fn nth_derivative(&self, n: usize) -> Self {
        (0..n).fold(self.clone(), |p, _| p.derivative())
    }

    pub fn pow(&self, n: usize) -> Self {
        let mut out = Self::one();
        for _ in 0..n {
            out = &out * self;
        }
        out
    }

    /// Coefficients of `p(a + h)` as a polynomial in `h`.
    pub fn taylor_shift(&self, a: Complex64) -> Self {
        let mut c = self.coeffs.clone();
        let n = c.len();
        for i in 0..n {
            for j in (i..n.saturating_sub(1)).rev() {
                let next = c[j + 1];
                c[j] += a * next;
            }
        }
        Self::new(c)
    }

    /// `z^n p(1/z)` for `n >= deg p`.
    pub fn reversed(&self, n: usize) -> Self {
        let mut c = vec![Complex64::new(0.0, 0.0); n + 1];
        for (k, &a) in self.coeffs.iter().enumerate() {
            c[n - k] = a;
        }
        Self::new(c)
    }

    /// Polynomial composition `self(g(z))`.
    pub fn compose(&self, g: &Poly) -> Self {
        let mut out = Self::zero();
        for &c in self.coeffs.iter().rev() {
            out = &(&out * g) + &Self::constant(c);
        }
        out
    }

    /// Long division. Errors on division by the zero polynomial.
    pub fn div_rem(&self, divisor: &Poly) -> Result<(Poly, Poly)> {
        let dd = divisor
            .degree()
            .ok_or_else(|| Error::Domain("division by the zero polynomial".into()))?;
        let Some(nd) = self.degree() else {
            return Ok((Self::zero(), Self::zero()));
        };
        if nd < dd {
            return Ok((Self::zero(), self.clone()));
        }
        let lead_inv = divisor.leading().inv();
        let mut rem = self.coeffs.clone();
        let mut quot = vec![Complex64::new(0.0, 0.0); nd - dd + 1];
        for k in (0..=nd - dd).rev() {
            let q = rem[k + dd] * lead_inv;
            quot[k] = q;
            for (j, &d) in divisor.coeffs.iter().enumerate() {
                rem[k + j] -= q * d;
            }
            rem[k + dd] = Complex64::new(0.0, 0.0);
        }
        rem.truncate(dd);
        Ok((Self::new(quot), Self::new(rem)))
    }

    /// Approximate monic gcd. Remainders whose norm falls below `rel` times
    /// the running scale are treated as zero. The result is validated by
    /// dividing both inputs; if either leaves a significant remainder the
    /// inputs are reported coprime (gcd 1).
    pub fn gcd(&self, other: &Poly, rel: f64) -> Poly {
        if self.is_zero() {
            return other.monic();
        }
        if other.is_zero() {
            return self.monic();
        }
        let scale = self.norm().max(other.norm());
        let (mut a, mut b) = if self.degree() >= other.degree() {
            (self.scale((1.0 / scale).into()), other.scale((1.0 / scale).into()))
        } else {
            (other.scale((1.0 / scale).into()), self.scale((1.0 / scale).into()))
        };
        loop {
            if b.degree() == Some(0) || b.is_zero() {
                break;
            }
            let (_, r) = a.div_rem(&b).expect("nonzero divisor");
            let r = r.trimmed(rel);
            let r_scale = r.norm() / b.norm().max(1.0);
            if r.is_zero() || r_scale <= rel {
                a = b;
                b = Self::zero();
                break;
            }
            a = b;
            b = r;
        }
        let g = if b.is_zero() { a.monic() } else { Self::one() };
        if g.degree().unwrap_or(0) == 0 {
            return Self::one();
        }
        let ok = |p: &Poly| {
            let (_, r) = p.div_rem(&g).expect("nonzero divisor");
            r.norm() <= 1e-8 * p.norm()
        };
        if ok(self) && ok(other) {
            g
        } else {
            Self::one()
        }
    }

    /// All complex roots, computed as companion-matrix eigenvalues and
    /// polished by a few Newton steps.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        let n = self.degree().ok_or_else(|| Error::Domain("roots of the zero polynomial".into()))?;
        if n == 0 {
            return Ok(Vec::new());
        }
        // Factor out roots at the origin exactly.
        let zeros = self.coeffs.iter().take_while(|c| c.norm() == 0.0).count();
        let reduced = Poly::new(self.coeffs[zeros..].to_vec()).monic();
        let m = n - zeros;
        let mut out = vec![Complex64::new(0.0, 0.0); zeros];
        if m == 0 {
            return Ok(out);
        }
        if m == 1 {
            out.push(-reduced.coeff(0));
            return Ok(out);
        }
        let mut comp = DMatrix::<Complex64>::zeros(m, m);
        for i in 1..m {
            comp[(i, i - 1)] = Complex64::new(1.0, 0.0);
        }
        for i in 0..m {
            comp[(i, m - 1)] = -reduced.coeff(i);
        }
        let eig = nalgebra::linalg::Schur::new(comp)
            .eigenvalues()
            .ok_or_else(|| Error::Numerical("companion Schur decomposition failed".into()))?;
        let dp = reduced.derivative();
        for mut z in eig.iter().copied() {
            for _ in 0..3 {
                let d = dp.eval(z);
                if d.norm() == 0.0 {
                    break;
                }
                let step = reduced.eval(z) / d;
                let next = z - step;
                if !next.re.is_finite() || !next.im.is_finite() {
                    break;
                }
                if reduced.eval(next).norm() < reduced.eval(z).norm() {
                    z = next;
                } else {
                    break;
                }
            }
            out.push(z);
        }
        Ok(out)
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut c = vec![Complex64::new(0.0, 0.0); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Poly::new(c)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Poly {
            type Output = Poly;
            fn $m(self, rhs: Poly) -> Poly {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
