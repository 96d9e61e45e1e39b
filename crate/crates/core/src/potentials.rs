//! Hopf differential, the correction differential α, the DPW potentials
//! upstairs (ξ, in z) and downstairs (η, in u), and the Schwartz gauge.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::complexrat::{schwarzian_at, ExtC, Poly, QuadDiff, RationalMap};
use crate::error::{Error, Result};
use crate::mat2::{self, mat, Mat2, ONE, ZERO};
use crate::moebius::{branch_data, build_group, invariant_map, BranchData, FiniteMoebiusGroup, GroupLabel};

/// Above this modulus of `u(z)` the pulled-back differential is evaluated in
/// the chart `1/u`.
const FAR: f64 = 1e3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightTriple {
    pub w0: f64,
    pub w1: f64,
    pub winf: f64,
}

impl WeightTriple {
    pub fn new(w0: f64, w1: f64, winf: f64) -> Self {
        Self { w0, w1, winf }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.w0, self.w1, self.winf]
    }

    pub fn is_zero(&self) -> bool {
        self.as_array().iter().all(|w| *w == 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.as_array().iter().any(|w| !w.is_finite()) {
            return Err(Error::Config("weights must be finite".into()));
        }
        Ok(())
    }
}

impl FromStr for WeightTriple {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let v: Vec<f64> = s
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("weights '{s}': {e}")))?;
        match v.as_slice() {
            [a, b, c] => Ok(Self::new(*a, *b, *c)),
            _ => Err(Error::Config(format!("expected three weights, got '{s}'"))),
        }
    }
}

/// How a weight `w_k` becomes the quadratic residue of `Q` at the `k`-th
/// branch value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum ResidueConvention {
    /// `ρ_k = w_k / 16`
    #[serde(rename = "paper")]
    PaperW16,
    /// `ρ_k = w_k / (16 n_k²)`
    #[default]
    #[serde(rename = "scaled")]
    ScaledW16N2,
}

impl ResidueConvention {
    pub fn residue(&self, w: f64, n: usize) -> f64 {
        match self {
            ResidueConvention::PaperW16 => w / 16.0,
            ResidueConvention::ScaledW16N2 => w / (16.0 * (n * n) as f64),
        }
    }
}

impl FromStr for ResidueConvention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "paper" | "paper_w16" => Ok(ResidueConvention::PaperW16),
            "scaled" | "scaled_w16n2" => Ok(ResidueConvention::ScaledW16N2),
            _ => Err(Error::Config(format!("unknown residue convention '{s}'"))),
        }
    }
}

impl fmt::Display for ResidueConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ResidueConvention::PaperW16 => "paper",
            ResidueConvention::ScaledW16N2 => "scaled",
        })
    }
}

/// `(a0 + a1 u + a2 u²) / (u² (u−1)²) du²` with quadratic residues
/// `ρ0, ρ1, ρ∞` at `0, 1, ∞`.
pub fn three_point_differential(rho: [f64; 3]) -> QuadDiff {
    let a0 = rho[0];
    let a2 = rho[2];
    let a1 = rho[1] - rho[0] - rho[2];
    if a0 == 0.0 && a1 == 0.0 && a2 == 0.0 {
        return QuadDiff::zero();
    }
    let num = Poly::from_real(&[a0, a1, a2]);
    // u²(u−1)² = u⁴ − 2u³ + u²
    let den = Poly::from_real(&[0.0, 0.0, 1.0, -2.0, 1.0]);
    QuadDiff::new(RationalMap::new(num, den).expect("nonzero denominator"))
}

pub fn hopf_downstairs(weights: WeightTriple, branch: &BranchData, convention: ResidueConvention) -> QuadDiff {
    let w = weights.as_array();
    let n = branch.multiplicities;
    three_point_differential([0, 1, 2].map(|k| convention.residue(w[k], n[k])))
}

/// Residues `(n_k⁻² − 1)/2`; verified against the Schwarzian when `u` is given.
pub fn alpha_downstairs(branch: &BranchData) -> QuadDiff {
    three_point_differential(branch.multiplicities.map(|n| (1.0 / (n * n) as f64 - 1.0) / 2.0))
}

/// Max relative mismatch of `u*α` and `S_z(u)` over 50 sample points.
pub fn alpha_pullback_residual(u: &RationalMap, alpha: &QuadDiff) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xa1fa);
    let mut worst: f64 = 0.0;
    let mut used = 0;
    while used < 50 {
        let z = Complex64::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
        let (Ok(s), Ok(p)) = (schwarzian_at(u, z), alpha.eval_pullback(u, z)) else {
            continue;
        };
        if !s.is_finite() || !p.is_finite() {
            continue;
        }
        worst = worst.max((s - p).norm() / (1.0 + s.norm()));
        used += 1;
    }
    Ok(worst)
}

#[derive(Clone, Debug)]
pub struct PotentialSpec {
    pub group: FiniteMoebiusGroup,
    pub u: RationalMap,
    pub branch: BranchData,
    pub weights: WeightTriple,
    pub q: QuadDiff,
    pub alpha: QuadDiff,
    pub convention: ResidueConvention,
    u_recip: RationalMap,
    q_inf: RationalMap,
}

impl PotentialSpec {
    pub fn new(label: GroupLabel, weights: WeightTriple, convention: ResidueConvention) -> Result<Self> {
        let group = build_group(label)?;
        let u = invariant_map(&group)?;
        let branch = branch_data(&group, &u)?;
        Self::from_parts(group, u, branch, weights, convention)
    }

    /// Assembles a spec from an explicit map and branch data, checking
    /// `u*α = S_z(u)` to 1e−9.
    pub fn from_parts(
        group: FiniteMoebiusGroup,
        u: RationalMap,
        branch: BranchData,
        weights: WeightTriple,
        convention: ResidueConvention,
    ) -> Result<Self> {
        weights.validate()?;
        let q = hopf_downstairs(weights, &branch, convention);
        let alpha = alpha_downstairs(&branch);
        let res = alpha_pullback_residual(&u, &alpha)?;
        if res > 1e-9 {
            return Err(Error::Verification(format!(
                "u*alpha differs from the Schwarzian of u by {res:.2e}"
            )));
        }
        let u_recip = u.recip()?;
        let q_inf = q.at_infinity_chart()?;
        Ok(Self {
            group,
            u,
            branch,
            weights,
            q,
            alpha,
            convention,
            u_recip,
            q_inf,
        })
    }

    /// Coefficient of `dz²` of `u*Q` at `z`.
    pub fn pulled_back_q(&self, z: Complex64) -> Result<Complex64> {
        if self.q.is_zero() {
            return Ok(ZERO);
        }
        let far = match self.u.eval(z) {
            ExtC::Infinity => true,
            ExtC::Finite(w) => w.norm() > FAR,
        };
        let pole = || Error::Domain(format!("pole of u*Q at z = {z}"));
        if far {
            let j = self.u_recip.jet3(z)?;
            let qv = self.q_inf.eval_finite(j[0]).map_err(|_| pole())?;
            Ok(qv * j[1] * j[1])
        } else {
            let j = self.u.jet3(z)?;
            let qv = self.q.eval(j[0]).map_err(|_| pole())?;
            if !qv.is_finite() {
                return Err(pole());
            }
            Ok(qv * j[1] * j[1])
        }
    }
}

fn offdiag(upper: Complex64, lower: Complex64) -> Mat2 {
    mat(ZERO, upper, lower, ZERO)
}

/// Upstairs potential `ξ = [[0, λ⁻¹], [(1−λ)² u*Q, 0]] dz`.
pub fn xi_at(spec: &PotentialSpec, z: Complex64, lambda: Complex64) -> Result<Mat2> {
    if lambda.norm() == 0.0 {
        return Err(Error::Domain("λ = 0".into()));
    }
    let s = (ONE - lambda) * (ONE - lambda);
    Ok(offdiag(lambda.inv(), s * spec.pulled_back_q(z)?))
}

/// Downstairs potential `η = [[0, λ⁻¹], [(1−λ)² Q + ½ λ α, 0]] du`.
pub fn eta_at(spec: &PotentialSpec, u: Complex64, lambda: Complex64) -> Result<Mat2> {
    if lambda.norm() == 0.0 {
        return Err(Error::Domain("λ = 0".into()));
    }
    let pole = || Error::Domain(format!("η has a pole at u = {u}"));
    let q = spec.q.eval(u).map_err(|_| pole())?;
    let a = spec.alpha.eval(u).map_err(|_| pole())?;
    if !q.is_finite() || !a.is_finite() {
        return Err(pole());
    }
    let s = (ONE - lambda) * (ONE - lambda);
    Ok(offdiag(lambda.inv(), s * q + 0.5 * lambda * a))
}

/// `g = [[v, 0], [−λ v', 1/v]]`, `v = (u')^{-1/2}`, together with `dg/dz`.
/// The square root is principal unless `branch` (a previous value of `v`)
/// selects the nearer sign.
pub fn schwartz_gauge_full(u: &RationalMap, z: Complex64, lambda: Complex64, branch: Option<Complex64>) -> Result<(Mat2, Mat2, Complex64)> {
    let j = u.jet3(z)?;
    let (d1, d2, d3) = (j[1], j[2], j[3]);
    if d1.norm() < 1e-300 || !d1.is_finite() {
        return Err(Error::Domain(format!("branch point of u at z = {z}")));
    }
    let mut v = d1.sqrt().inv();
    if let Some(prev) = branch {
        if (v + prev).norm() < (v - prev).norm() {
            v = -v;
        }
    }
    // v' = −½ u'' v³, v'' = −½ u''' v³ − (3/2) u'' v² v'
    let v1 = -0.5 * d2 * v * v * v;
    let v2 = -0.5 * d3 * v * v * v - 1.5 * d2 * v * v * v1;
    let g = mat(v, ZERO, -lambda * v1, v.inv());
    let dg = mat(v1, ZERO, -lambda * v2, -v1 / (v * v));
    Ok((g, dg, v))
}

pub fn schwartz_gauge(u: &RationalMap, z: Complex64, lambda: Complex64) -> Result<Mat2> {
    Ok(schwartz_gauge_full(u, z, lambda, None)?.0)
}

/// `g⁻¹ ξ g + g⁻¹ dg`
pub fn gauge_apply(xi: &Mat2, g: &Mat2, dg: &Mat2) -> Result<Mat2> {
    let gi = mat2::inv(g).ok_or_else(|| Error::Domain("singular gauge".into()))?;
    Ok(gi * xi * g + gi * dg)
}
