//! Unitary frames on the upstairs sphere, the Sym formula at λ = 1, meshes,
//! closing and symmetry verification, and OBJ export.

mod mesh;
mod symmetry;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::complexrat::ExtC;
use crate::error::{Error, Result};
use crate::looplab::{iwasawa, IwasawaOptions, LoopSL2};
use crate::mat2::{self, Mat2};
use crate::monodromy::{transport_pencil, upstairs_basepoint, xi_coefficients, LambdaGrid, OdeOptions, Path, BASEPOINT};
use crate::potentials::{schwartz_gauge, PotentialSpec};
use crate::unitarize::Unitarizer;

pub use mesh::{domain_grid, export_obj, import_obj, write_obj, DomainGrid, GridOptions, Mesh};
pub use symmetry::{procrustes, symmetry_check, FullElement, Isometry, SymmetryEntry, SymmetryReport};

/// Default half-width of the central θ difference.
pub const DEFAULT_EPSILON: f64 = 1e-3;
/// Sym points whose anti-Hermitian defect exceeds this carry a warning.
pub const ANTI_HERMITIAN_TOL: f64 = 1e-5;
/// Smallest distance a transport route keeps from an end.
const ROUTE_CLEARANCE: f64 = 0.04;

/// `F` at `e^{−iε}`, `1`, `e^{iε}`.
#[derive(Clone, Copy, Debug)]
pub struct FrameSample {
    pub minus: Mat2,
    pub one: Mat2,
    pub plus: Mat2,
    pub condition: f64,
}

/// Dressed holomorphic frame `X = C Φ` upstairs, sampled on the Iwasawa
/// grid plus the two auxiliary λ.
pub struct FrameField<'a> {
    pub spec: &'a PotentialSpec,
    pub basepoint: Complex64,
    /// Finite preimages of the weighted punctures.
    pub ends: Vec<Complex64>,
    pub end_points: Vec<ExtC>,
    pub grid: LambdaGrid,
    lambdas: Vec<Complex64>,
    dressing: Vec<Mat2>,
    pub ode: OdeOptions,
    pub iwasawa: IwasawaOptions,
}

/// Preimages of the punctures with nonzero weight.
pub fn end_points(spec: &PotentialSpec) -> Vec<ExtC> {
    let w = spec.weights.as_array();
    (0..3)
        .filter(|&k| w[k] != 0.0)
        .flat_map(|k| spec.branch.orbits[k].iter().copied())
        .collect()
}

impl<'a> FrameField<'a> {
    /// Dressing `C_up(λ) = C(λ) g(z_b, λ)⁻¹` from a downstairs unitarizer
    /// sampled on `grid`, whose first `m` points must be the Iwasawa grid.
    pub fn new(
        spec: &'a PotentialSpec,
        unitarizer: &Unitarizer,
        grid: LambdaGrid,
        ode: OdeOptions,
        iwasawa: IwasawaOptions,
    ) -> Result<Self> {
        let zb = upstairs_basepoint(&spec.u, BASEPOINT)?;
        let lambdas = grid.points();
        if unitarizer.c.len() != lambdas.len() {
            return Err(Error::Config(format!(
                "unitarizer has {} samples, λ grid has {}",
                unitarizer.c.len(),
                lambdas.len()
            )));
        }
        // The unitarizer at the auxiliary points is ill-resolved (the
        // monodromy is O(ε) from reducible there); use the interpolant of
        // the smooth grid loop instead.
        let m = grid.m;
        let smooth = LoopSL2::from_samples(unitarizer.c[..m].to_vec());
        let mut c_all = unitarizer.c.clone();
        let (p, q) = grid.aux_indices();
        c_all[p] = smooth.eval(lambdas[p]);
        c_all[q] = smooth.eval(lambdas[q]);
        let dressing = lambdas
            .iter()
            .zip(&c_all)
            .map(|(&l, c)| {
                let g = schwartz_gauge(&spec.u, zb, l)?;
                Ok(c * mat2::adj(&g))
            })
            .collect::<Result<_>>()?;
        Self::build(spec, zb, grid, dressing, ode, iwasawa)
    }

    /// Frame with the identity as dressing; closing fails for it unless the
    /// monodromy is already unitary.
    pub fn undressed(spec: &'a PotentialSpec, grid: LambdaGrid, ode: OdeOptions, iwasawa: IwasawaOptions) -> Result<Self> {
        let zb = upstairs_basepoint(&spec.u, BASEPOINT)?;
        Self::build(spec, zb, grid, vec![mat2::identity(); grid.len()], ode, iwasawa)
    }

    fn build(
        spec: &'a PotentialSpec,
        zb: Complex64,
        grid: LambdaGrid,
        dressing: Vec<Mat2>,
        ode: OdeOptions,
        iwasawa: IwasawaOptions,
    ) -> Result<Self> {
        if grid.m != iwasawa.grid {
            return Err(Error::Config(format!(
                "λ grid of {} points does not match the Iwasawa grid of {}",
                grid.m, iwasawa.grid
            )));
        }
        let end_points = end_points(spec);
        let ends = end_points.iter().filter_map(|p| p.finite()).collect();
        Ok(Self {
            spec,
            basepoint: zb,
            ends,
            end_points,
            grid,
            lambdas: grid.points(),
            dressing,
            ode,
            iwasawa,
        })
    }

    pub fn lambdas(&self) -> &[Complex64] {
        &self.lambdas
    }

    /// Transport of `ξ` along `path` at every λ sample.
    pub fn transport(&self, path: &Path) -> Result<Vec<Mat2>> {
        let coeffs = xi_coefficients(self.spec);
        transport_pencil(&coeffs, path, &self.lambdas, &self.ode)
    }

    /// Route from the basepoint to `z` keeping clear of the ends.
    pub fn route(&self, z: Complex64) -> Result<Path> {
        route_between(self.basepoint, z, &self.ends, ROUTE_CLEARANCE)
    }

    /// `Φ(z)` with `Φ(z_b) = I`, all λ samples.
    pub fn holomorphic_frame(&self, z: Complex64) -> Result<Vec<Mat2>> {
        if (z - self.basepoint).norm() == 0.0 {
            return Ok(vec![mat2::identity(); self.lambdas.len()]);
        }
        self.transport(&self.route(z)?)
    }

    /// Unitary factor near λ = 1 of `X = C Φ` for given `Φ` samples.
    pub fn unitary_factor(&self, phi: &[Mat2]) -> Result<FrameSample> {
        let x: Vec<Mat2> = self.dressing.iter().zip(phi).map(|(c, p)| c * p).collect();
        let m = self.grid.m;
        let fact = iwasawa(&LoopSL2::from_samples(x[..m].to_vec()), self.iwasawa)?;
        let (p, q) = self.grid.aux_indices();
        let one = self.grid.index_of_one();
        Ok(FrameSample {
            minus: fact.f_at(&x[q], self.lambdas[q]),
            one: fact.f_at(&x[one], self.lambdas[one]),
            plus: fact.f_at(&x[p], self.lambdas[p]),
            condition: fact.condition,
        })
    }

    pub fn frame_at(&self, z: Complex64) -> Result<FrameSample> {
        self.unitary_factor(&self.holomorphic_frame(z)?)
    }

    /// Sym point at `z`, with its anti-Hermitian defect.
    pub fn point_at(&self, z: Complex64) -> Result<([f64; 3], f64)> {
        let f = self.frame_at(z)?;
        Ok(sym_point(&f.minus, &f.one, &f.plus, self.grid.eps))
    }

    /// Points for many `z`; failures are reported per point.
    pub fn points(&self, zs: &[Complex64]) -> Vec<Result<([f64; 3], f64)>> {
        zs.par_iter().map(|&z| self.point_at(z)).collect()
    }
}

/// Straight segment if it keeps `clearance` from every puncture, otherwise
/// the first clear two-leg detour through a point off the segment. The
/// clearance shrinks to half the distance of either endpoint to the
/// punctures.
pub fn route_between(a: Complex64, b: Complex64, punctures: &[Complex64], clearance: f64) -> Result<Path> {
    let gap = |p: Complex64| punctures.iter().map(|e| (p - e).norm()).fold(f64::INFINITY, f64::min);
    let clearance = clearance.min(0.5 * gap(a)).min(0.5 * gap(b));
    let direct = Path::segment(a, b);
    if punctures.is_empty() || direct.clearance(punctures) >= clearance {
        return Ok(direct);
    }
    let mid = (a + b) * 0.5;
    let d = b - a;
    let len = d.norm().max(1e-3);
    let normal = Complex64::new(-d.im, d.re) / len;
    for scale in [0.25, 0.5, 1.0, 2.0] {
        for sign in [1.0, -1.0] {
            let w = mid + normal * (sign * scale * len.max(0.2));
            let path = Path::polyline(&[a, w, b]);
            if path.clearance(punctures) >= clearance {
                return Ok(path);
            }
        }
    }
    for scale in [0.25, 0.5, 1.0] {
        for k in 0..8 {
            let w1 = a + Complex64::from_polar(scale, k as f64 * std::f64::consts::FRAC_PI_4);
            let path = Path::polyline(&[a, w1, mid + (w1 - a), b]);
            if path.clearance(punctures) >= clearance {
                return Ok(path);
            }
        }
    }
    Err(Error::Domain(format!("no route from {a} to {b} clear of the ends")))
}

/// `f = F′(1) F(1)⁻¹` by a central difference in θ, taken in the Lie
/// algebra through `log(F(e^{±iε}) F(1)⁻¹)`, and mapped to R³ through
/// `f = (i/2)(x σ₁ + y σ₂ + z σ₃)`. Also returns the anti-Hermitian defect
/// `‖f + f^†‖`, which vanishes for unitary frames.
pub fn sym_point(minus: &Mat2, one: &Mat2, plus: &Mat2, eps: f64) -> ([f64; 3], f64) {
    let inv = mat2::adj(one);
    let f = (mat2::log_sl2(&(plus * inv)) - mat2::log_sl2(&(minus * inv))) / Complex64::from(2.0 * eps);
    let defect = mat2::norm(&(f + f.adjoint()));
    let anti = (f - f.adjoint()) * Complex64::from(0.5);
    let tr = mat2::trace(&anti) * 0.5;
    let anti = anti - mat2::identity() * tr;
    (mat2::su2_to_r3(&anti), defect)
}

pub fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

#[derive(Clone, Debug, Serialize)]
pub struct ClosureLoop {
    pub end: [f64; 2],
    pub radius: f64,
    /// `‖f(end) − f(start)‖` at each start point.
    pub residuals: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClosureReport {
    pub loops: Vec<ClosureLoop>,
    pub max_residual: f64,
}

/// For each finite end, transports the frame around a based loop enclosing
/// only that end and compares Sym points before and after at a few start
/// points on the way to the end.
pub fn closure_check(field: &FrameField) -> Result<ClosureReport> {
    let zb = field.basepoint;
    let mut loops = Vec::new();
    for (i, &e) in field.ends.iter().enumerate() {
        let others = field
            .ends
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, p)| (p - e).norm())
            .fold(f64::INFINITY, f64::min);
        let radius = (0.4 * others).min(0.5 * (zb - e).norm()).min(0.25);
        let path = Path::loop_around(zb, e, radius, true, "end");
        let monodromy = field.transport(&path)?;
        let starts = [zb, zb + (e - zb) * 0.3, zb + (e - zb) * 0.3 * Complex64::new(0.9, 0.4)];
        let mut residuals = Vec::new();
        for &s in &starts {
            let phi = field.holomorphic_frame(s)?;
            let moved: Vec<Mat2> = monodromy.iter().zip(&phi).map(|(t, p)| t * p).collect();
            let a = field.unitary_factor(&phi)?;
            let b = field.unitary_factor(&moved)?;
            let eps = field.grid.eps;
            let (pa, _) = sym_point(&a.minus, &a.one, &a.plus, eps);
            let (pb, _) = sym_point(&b.minus, &b.one, &b.plus, eps);
            residuals.push(distance(&pa, &pb));
        }
        loops.push(ClosureLoop {
            end: [e.re, e.im],
            radius,
            residuals,
        });
    }
    let max_residual = loops.iter().flat_map(|l| l.residuals.iter().copied()).fold(0.0, f64::max);
    Ok(ClosureReport { loops, max_residual })
}

#[derive(Clone, Debug, Serialize)]
pub struct DroppedPoint {
    pub z: [f64; 2],
    pub reason: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct MeshStats {
    pub dropped: Vec<DroppedPoint>,
    /// Largest anti-Hermitian defect of a Sym point.
    pub max_defect: f64,
    pub warnings: Vec<String>,
}

/// Sym points on every grid point; points whose frame fails are dropped
/// from the mesh and listed.
pub fn frame_mesh(field: &FrameField, grid: &DomainGrid, opts: &GridOptions) -> (Mesh, MeshStats) {
    let results = field.points(&grid.points);
    let mut stats = MeshStats {
        dropped: Vec::new(),
        max_defect: 0.0,
        warnings: Vec::new(),
    };
    let points: Vec<Option<[f64; 3]>> = results
        .into_iter()
        .zip(&grid.points)
        .map(|(r, z)| match r {
            Ok((p, defect)) => {
                stats.max_defect = stats.max_defect.max(defect);
                Some(p)
            }
            Err(e) => {
                stats.dropped.push(DroppedPoint {
                    z: [z.re, z.im],
                    reason: e.to_string(),
                });
                None
            }
        })
        .collect();
    if stats.max_defect > ANTI_HERMITIAN_TOL {
        stats.warnings.push(format!(
            "Sym points deviate from su(2) by up to {:.2e}; unitarity degraded",
            stats.max_defect
        ));
    }
    let mask = vec![opts.r_cut; field.end_points.len()];
    (Mesh::assemble(grid, &points, mask), stats)
}
