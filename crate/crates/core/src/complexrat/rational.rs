//! Rational maps of the Riemann sphere as coprime polynomial pairs.

use num_complex::Complex64;

use super::poly::Poly;
use super::{ExtC, DEFAULT_GCD_TOL, DEFAULT_ORDER_TOL};
use crate::error::{Error, Result};

/// `num / den` with `den` monic and the pair coprime up to the gcd tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalMap {
    num: Poly,
    den: Poly,
}

impl RationalMap {
    /// Builds `num/den`, cancelling the approximate gcd.
    pub fn new(num: Poly, den: Poly) -> Result<Self> {
        Self::new_with_tol(num, den, DEFAULT_GCD_TOL)
    }

    pub fn new_with_tol(num: Poly, den: Poly, gcd_tol: f64) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::Domain("zero denominator".into()));
        }
        if num.is_zero() {
            return Ok(Self::constant(Complex64::new(0.0, 0.0)));
        }
        let g = num.gcd(&den, gcd_tol);
        let (num, den) = if g.degree().unwrap_or(0) > 0 {
            (num.div_rem(&g)?.0, den.div_rem(&g)?.0)
        } else {
            (num, den)
        };
        Self::from_coprime(num, den)
    }

    /// Trusts the caller that `num` and `den` share no root.
    pub fn from_coprime(num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::Domain("zero denominator".into()));
        }
        let lead = den.leading().inv();
        Ok(Self {
            num: num.scale(lead),
            den: den.scale(lead),
        })
    }

    pub fn constant(c: Complex64) -> Self {
        Self {
            num: Poly::constant(c),
            den: Poly::one(),
        }
    }

    pub fn identity() -> Self {
        Self::monomial(1)
    }

    /// `z^n`
    pub fn monomial(n: usize) -> Self {
        Self {
            num: Poly::monomial(Complex64::new(1.0, 0.0), n),
            den: Poly::one(),
        }
    }

    /// `(a z + b) / (c z + d)`; rejects singular coefficient matrices.
    pub fn mobius(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self> {
        if (a * d - b * c).norm() == 0.0 {
            return Err(Error::Domain("singular Moebius coefficients".into()));
        }
        Self::from_coprime(Poly::new(vec![b, a]), Poly::new(vec![d, c]))
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn degree(&self) -> usize {
        self.num.degree().unwrap_or(0).max(self.den.degree().unwrap_or(0))
    }

    pub fn is_constant(&self) -> bool {
        self.degree() == 0
    }

    pub fn eval(&self, z: Complex64) -> ExtC {
        let d = self.den.eval(z);
        let n = self.num.eval(z);
        if d.norm() == 0.0 {
            if n.norm() == 0.0 {
                // Only reachable through round-off; fall back to the limit.
                return self.limit_at(z);
            }
            return ExtC::Infinity;
        }
        ExtC::Finite(n / d)
    }

    fn limit_at(&self, z: Complex64) -> ExtC {
        let (order, series) = local_series(&self.num, &self.den, z, 1, DEFAULT_ORDER_TOL);
        match order {
            o if o < 0 => ExtC::Infinity,
            0 => ExtC::Finite(series[0]),
            _ => ExtC::Finite(Complex64::new(0.0, 0.0)),
        }
    }

    pub fn eval_ext(&self, p: ExtC) -> ExtC {
        match p {
            ExtC::Finite(z) => self.eval(z),
            ExtC::Infinity => {
                let dn = self.num.degree();
                let dd = self.den.degree().unwrap_or(0);
                match dn {
                    None => ExtC::Finite(Complex64::new(0.0, 0.0)),
                    Some(dn) if dn > dd => ExtC::Infinity,
                    Some(dn) if dn == dd => ExtC::Finite(self.num.leading() / self.den.leading()),
                    _ => ExtC::Finite(Complex64::new(0.0, 0.0)),
                }
            }
        }
    }

    /// Value at a finite point; errors at a pole.
    pub fn eval_finite(&self, z: Complex64) -> Result<Complex64> {
        self.eval(z).finite().ok_or_else(|| Error::Domain(format!("pole at {z}")))
    }

    /// `N'D - ND'`, the numerator of the derivative before cancellation.
    pub fn wronskian(&self) -> Poly {
        &(&self.num.derivative() * &self.den) - &(&self.num * &self.den.derivative())
    }

    pub fn derivative(&self) -> Result<Self> {
        Self::new(self.wronskian(), &self.den * &self.den)
    }

    /// First derivative evaluated pointwise without forming the rational map.
    pub fn eval_derivative(&self, z: Complex64) -> Result<Complex64> {
        let d = self.den.eval(z);
        if d.norm() == 0.0 {
            return Err(Error::Domain(format!("pole at {z}")));
        }
        let n = self.num.eval(z);
        let dn = self.num.derivative().eval(z);
        let dd = self.den.derivative().eval(z);
        Ok((dn * d - n * dd) / (d * d))
    }

    /// Value and first three derivatives at a finite non-pole point.
    pub fn jet3(&self, z: Complex64) -> Result<[Complex64; 4]> {
        let d0 = self.den.eval(z);
        if d0.norm() == 0.0 {
            return Err(Error::Domain(format!("pole at {z}")));
        }
        let n = [
            self.num.eval(z),
            self.num.derivative().eval(z),
            self.num.nth_derivative(2).eval(z),
            self.num.nth_derivative(3).eval(z),
        ];
        let d = [
            d0,
            self.den.derivative().eval(z),
            self.den.nth_derivative(2).eval(z),
            self.den.nth_derivative(3).eval(z),
        ];
        // f = n/d  =>  n = f d, differentiate and solve for f^(k).
        let f0 = n[0] / d[0];
        let f1 = (n[1] - f0 * d[1]) / d[0];
        let f2 = (n[2] - 2.0 * f1 * d[1] - f0 * d[2]) / d[0];
        let f3 = (n[3] - 3.0 * f2 * d[1] - 3.0 * f1 * d[2] - f0 * d[3]) / d[0];
        Ok([f0, f1, f2, f3])
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            num: self.num.scale(s),
            den: self.den.clone(),
        }
    }

    pub fn recip(&self) -> Result<Self> {
        if self.num.is_zero() {
            return Err(Error::Domain("reciprocal of zero".into()));
        }
        Self::from_coprime(self.den.clone(), self.num.clone())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Self::new(&(&self.num * &other.den) + &(&other.num * &self.den), &self.den * &other.den)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Self::new(&(&self.num * &other.den) - &(&other.num * &self.den), &self.den * &other.den)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        Self::new(&self.num * &other.num, &self.den * &other.den)
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        if other.num.is_zero() {
            return Err(Error::Domain("division by the zero function".into()));
        }
        Self::new(&self.num * &other.den, &self.den * &other.num)
    }

    /// `f ∘ g` for `f = self`.
    pub fn compose(&self, g: &Self) -> Result<Self> {
        if g.is_constant() {
            let c = g.eval_ext(ExtC::Infinity);
            return match self.eval_ext(c) {
                ExtC::Finite(v) => Ok(Self::constant(v)),
                ExtC::Infinity => Err(Error::Domain("constant map composed into a pole".into())),
            };
        }
        let a = self.num.degree().unwrap_or(0);
        let b = self.den.degree().unwrap_or(0);
        let m = a.max(b);
        let num = homogenize(&self.num, m, &g.num, &g.den);
        let den = homogenize(&self.den, m, &g.num, &g.den);
        Self::new(num, den)
    }

    /// The map `v ↦ f(1/v)`, i.e. this map read in the chart at infinity.
    pub fn in_chart_at_infinity(&self) -> Result<Self> {
        let a = self.num.degree().unwrap_or(0);
        let b = self.den.degree().unwrap_or(0);
        let m = a.max(b);
        Self::from_coprime(self.num.reversed(m), self.den.reversed(m))
    }

    /// Multiplicity `j` of `f` at `p`: `f(z) = f(p) + a_j (z-p)^j + ...`.
    pub fn mult_at(&self, p: ExtC) -> Result<usize> {
        self.mult_at_with_tol(p, DEFAULT_ORDER_TOL)
    }

    pub fn mult_at_with_tol(&self, p: ExtC, tol: f64) -> Result<usize> {
        if self.is_constant() {
            return Err(Error::ConstantMap);
        }
        let z = match p {
            ExtC::Infinity => return self.in_chart_at_infinity()?.mult_at_with_tol(ExtC::zero(), tol),
            ExtC::Finite(z) => z,
        };
        // Work with whichever of f, 1/f is bounded at p.
        let (top, bottom) = if self.den.eval(z).norm() >= self.num.eval(z).norm() {
            (&self.num, &self.den)
        } else {
            (&self.den, &self.num)
        };
        let c = top.eval(z) / bottom.eval(z);
        let shifted = (top - &bottom.scale(c)).taylor_shift(z);
        let mut coeffs = shifted.coeffs().to_vec();
        if let Some(c0) = coeffs.first_mut() {
            *c0 = Complex64::new(0.0, 0.0);
        }
        let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let j = coeffs.iter().position(|c| c.norm() > tol * scale).ok_or(Error::ConstantMap)?;
        let bottom_order = order_at(bottom, z, tol);
        Ok(j - bottom_order)
    }

    /// Real-coefficient test: max |Im c| / max |c| over numerator and denominator.
    pub fn imaginary_residual(&self) -> f64 {
        let scale = self.num.max_abs().max(self.den.max_abs());
        self.num
            .coeffs()
            .iter()
            .chain(self.den.coeffs())
            .map(|c| c.im.abs())
            .fold(0.0, f64::max)
            / scale
    }

    /// Relative coefficient residual of `self - other` after cross-multiplying.
    pub fn cross_residual(&self, other: &Self) -> f64 {
        let lhs = &self.num * &other.den;
        let rhs = &other.num * &self.den;
        let scale = lhs.norm().max(rhs.norm());
        if scale == 0.0 {
            return 0.0;
        }
        (&lhs - &rhs).norm() / scale
    }
}

/// `sum_k p_k N^k D^(m-k)`.
fn homogenize(p: &Poly, m: usize, n: &Poly, d: &Poly) -> Poly {
    let mut out = Poly::zero();
    let mut npow = Poly::one();
    let dpows: Vec<Poly> = {
        let mut v = vec![Poly::one()];
        for k in 1..=m {
            v.push(&v[k - 1] * d);
        }
        v
    };
    for k in 0..=m {
        let c = p.coeff(k);
        if c.norm() != 0.0 {
            out = &out + &(&npow * &dpows[m - k]).scale(c);
        }
        npow = &npow * n;
    }
    out
}

/// Order of vanishing of `p` at `z`, with coefficients below `tol * scale`
/// counted as zero.
pub(crate) fn order_at(p: &Poly, z: Complex64, tol: f64) -> usize {
    let shifted = p.taylor_shift(z);
    let scale = shifted.max_abs();
    shifted.coeffs().iter().position(|c| c.norm() > tol * scale).unwrap_or(0)
}

/// Laurent expansion of `num/den` at the finite point `z`: returns the lowest
/// order `o` and `terms` coefficients `c_o, c_(o+1), ...`.
pub(crate) fn local_series(num: &Poly, den: &Poly, z: Complex64, terms: usize, tol: f64) -> (i64, Vec<Complex64>) {
    let n = num.taylor_shift(z);
    let d = den.taylor_shift(z);
    let on = order_at(num, z, tol);
    let od = order_at(den, z, tol);
    let nc: Vec<Complex64> = (0..terms).map(|k| n.coeff(on + k)).collect();
    let dc: Vec<Complex64> = (0..terms).map(|k| d.coeff(od + k)).collect();
    let mut out = vec![Complex64::new(0.0, 0.0); terms];
    for k in 0..terms {
        let mut acc = nc[k];
        for j in 1..=k {
            acc -= dc[j] * out[k - j];
        }
        out[k] = acc / dc[0];
    }
    (on as i64 - od as i64, out)
}
