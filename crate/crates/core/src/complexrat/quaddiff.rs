//! Quadratic differentials `q(z) dz^2`, the Schwarzian derivative and pullbacks.

use num_complex::Complex64;

use super::poly::Poly;
use super::rational::{local_series, RationalMap};
use super::{ExtC, DEFAULT_ORDER_TOL};
use crate::error::{Error, Result};

/// `q(z) dz^2` in the standard chart; the chart at infinity is `v = 1/z`,
/// where the coefficient becomes `q(1/v) / v^4`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadDiff {
    coeff: RationalMap,
}

impl QuadDiff {
    pub fn new(coeff: RationalMap) -> Self {
        Self { coeff }
    }

    pub fn zero() -> Self {
        Self::new(RationalMap::constant(Complex64::new(0.0, 0.0)))
    }

    pub fn coeff(&self) -> &RationalMap {
        &self.coeff
    }

    pub fn is_zero(&self) -> bool {
        self.coeff.num().is_zero()
    }

    /// Coefficient `q(z)` at a finite point.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        self.coeff.eval_finite(z)
    }

    /// The coefficient function in the chart `v = 1/z`.
    pub fn at_infinity_chart(&self) -> Result<RationalMap> {
        let flipped = self.coeff.in_chart_at_infinity()?;
        let v4 = Poly::monomial(Complex64::new(1.0, 0.0), 4);
        RationalMap::new(flipped.num().clone(), flipped.den() * &v4)
    }

    /// Lowest Laurent order of the coefficient at `p` (negative for poles),
    /// together with the leading coefficients.
    fn expansion(&self, p: ExtC, terms: usize) -> Result<(i64, Vec<Complex64>)> {
        if self.is_zero() {
            return Ok((i64::MAX, vec![Complex64::new(0.0, 0.0); terms]));
        }
        Ok(match p {
            ExtC::Finite(z) => local_series(self.coeff.num(), self.coeff.den(), z, terms, DEFAULT_ORDER_TOL),
            ExtC::Infinity => {
                let chart = self.at_infinity_chart()?;
                local_series(chart.num(), chart.den(), Complex64::new(0.0, 0.0), terms, DEFAULT_ORDER_TOL)
            }
        })
    }

    /// Pole order at `p` (0 when regular).
    pub fn pole_order(&self, p: ExtC) -> Result<i64> {
        let (o, _) = self.expansion(p, 1)?;
        Ok(if o == i64::MAX { 0 } else { (-o).max(0) })
    }

    /// Coefficient of `(z-p)^-2 dz^2` in the local expansion.
    pub fn quad_residue(&self, p: ExtC) -> Result<Complex64> {
        let (o, series) = self.expansion(p, 3)?;
        if o == i64::MAX || o > -2 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        if o < -2 {
            return Err(Error::PoleOrder {
                order: -o,
                at: format!("{p}"),
            });
        }
        Ok(series[0])
    }

    /// Pullback `q(u(z)) u'(z)^2 dz^2`.
    pub fn pullback(&self, u: &RationalMap) -> Result<QuadDiff> {
        pullback_quaddiff(u, self)
    }

    /// Pointwise value of the pullback coefficient without forming it.
    pub fn eval_pullback(&self, u: &RationalMap, z: Complex64) -> Result<Complex64> {
        let j = u.jet3(z)?;
        Ok(self.eval(j[0])? * j[1] * j[1])
    }
}

/// Schwarzian derivative `S_z(f) = ((f''/f')' - (f''/f')^2 / 2) dz^2`.
///
/// With `f = N/D` and `W = N'D - ND'` this equals
/// `(2 W W'' - 3 W'^2 + 4 W (N''D' - N'D'')) / (2 W^2)`, which avoids
/// forming the higher derivatives of `f` as rational maps.
pub fn schwarzian(f: &RationalMap) -> Result<QuadDiff> {
    if f.is_constant() {
        return Err(Error::ConstantMap);
    }
    let n = f.num();
    let d = f.den();
    let w = f.wronskian();
    let w1 = w.derivative();
    let w2 = w1.derivative();
    let cross = &(&n.nth_derivative(2) * &d.derivative()) - &(&n.derivative() * &d.nth_derivative(2));
    let numer = &(&(&w * &w2).scale(2.0.into()) - &(&w1 * &w1).scale(3.0.into())) + &(&w * &cross).scale(4.0.into());
    let denom = (&w * &w).scale(2.0.into());
    if numer.trimmed(1e-14).is_zero() {
        return Ok(QuadDiff::zero());
    }
    Ok(QuadDiff::new(RationalMap::new(numer, denom)?))
}

/// Pointwise Schwarzian coefficient from the 3-jet of `f`.
pub fn schwarzian_at(f: &RationalMap, z: Complex64) -> Result<Complex64> {
    let j = f.jet3(z)?;
    if j[1].norm() == 0.0 {
        return Err(Error::Domain(format!("critical point at {z}")));
    }
    let a = j[2] / j[1];
    Ok(j[3] / j[1] - 1.5 * a * a)
}

/// `u^* q = q(u(z)) u'(z)^2 dz^2`.
pub fn pullback_quaddiff(u: &RationalMap, q: &QuadDiff) -> Result<QuadDiff> {
    if u.is_constant() {
        return Err(Error::ConstantMap);
    }
    if q.is_zero() {
        return Ok(QuadDiff::zero());
    }
    let composed = q.coeff().compose(u)?;
    let w = u.wronskian();
    let num = &(composed.num() * &w) * &w;
    let den = &(composed.den() * &u.den().pow(2)) * &u.den().pow(2);
    Ok(QuadDiff::new(RationalMap::new(num, den)?))
}
