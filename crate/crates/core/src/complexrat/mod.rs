//! Complex rational-function algebra: polynomials, rational maps of the
//! Riemann sphere, quadratic differentials and the Schwarzian derivative.

mod poly;
mod quaddiff;
mod rational;

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use poly::Poly;
pub use quaddiff::{pullback_quaddiff, schwarzian, schwarzian_at, QuadDiff};
pub use rational::RationalMap;

/// Relative tolerance for truncating Euclidean remainders in gcd.
pub const DEFAULT_GCD_TOL: f64 = 1e-12;
/// Relative tolerance below which a Taylor coefficient counts as zero.
pub const DEFAULT_ORDER_TOL: f64 = 1e-9;

/// A point of the Riemann sphere.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ExtC {
    Finite(Complex64),
    Infinity,
}

impl ExtC {
    pub fn zero() -> Self {
        ExtC::Finite(Complex64::new(0.0, 0.0))
    }

    pub fn finite(self) -> Option<Complex64> {
        match self {
            ExtC::Finite(z) => Some(z),
            ExtC::Infinity => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, ExtC::Infinity)
    }

    /// Chordal distance on the unit sphere (values in [0, 2]).
    pub fn chordal(self, other: ExtC) -> f64 {
        match (self, other) {
            (ExtC::Infinity, ExtC::Infinity) => 0.0,
            (ExtC::Finite(a), ExtC::Infinity) | (ExtC::Infinity, ExtC::Finite(a)) => 2.0 / (1.0 + a.norm_sqr()).sqrt(),
            (ExtC::Finite(a), ExtC::Finite(b)) => 2.0 * (a - b).norm() / ((1.0 + a.norm_sqr()).sqrt() * (1.0 + b.norm_sqr()).sqrt()),
        }
    }

    pub fn conj(self) -> Self {
        match self {
            ExtC::Finite(z) => ExtC::Finite(z.conj()),
            ExtC::Infinity => ExtC::Infinity,
        }
    }

    /// Inverse stereographic projection from the north pole:
    /// `z = (x + i y) / (1 - h)`.
    pub fn to_sphere(self) -> [f64; 3] {
        match self {
            ExtC::Infinity => [0.0, 0.0, 1.0],
            ExtC::Finite(z) => {
                let r2 = z.norm_sqr();
                [2.0 * z.re / (1.0 + r2), 2.0 * z.im / (1.0 + r2), (r2 - 1.0) / (r2 + 1.0)]
            }
        }
    }

    pub fn from_sphere(p: [f64; 3]) -> Self {
        let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        let (x, y, h) = (p[0] / n, p[1] / n, p[2] / n);
        if 1.0 - h < 1e-15 {
            ExtC::Infinity
        } else {
            ExtC::Finite(Complex64::new(x / (1.0 - h), y / (1.0 - h)))
        }
    }

    /// Lexicographic key (re, im), infinity last.
    pub fn lex_key(self) -> (f64, f64) {
        match self {
            ExtC::Finite(z) => (z.re, z.im),
            ExtC::Infinity => (f64::INFINITY, f64::INFINITY),
        }
    }
}

impl From<Complex64> for ExtC {
    fn from(z: Complex64) -> Self {
        ExtC::Finite(z)
    }
}

impl fmt::Display for ExtC {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtC::Finite(z) => write!(f, "{}{:+}i", z.re, z.im),
            ExtC::Infinity => write!(f, "inf"),
        }
    }
}
