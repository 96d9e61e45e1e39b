use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use super::{distance, FrameField, Mesh};
use crate::complexrat::ExtC;
use crate::error::{Error, Result};
use crate::moebius::MoebiusElem;

/// Euclidean isometry `p ↦ R p + t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Isometry {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Isometry {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn apply(&self, p: &[f64; 3]) -> [f64; 3] {
        let q = self.rotation * Vector3::new(p[0], p[1], p[2]) + self.translation;
        [q[0], q[1], q[2]]
    }

    /// `self ∘ other`
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    /// Rotation difference plus translation difference relative to `scale`.
    pub fn distance(&self, other: &Self, scale: f64) -> f64 {
        (self.rotation - other.rotation).norm() + (self.translation - other.translation).norm() / scale
    }
}

/// Best isometry carrying `from[i]` to `to[i]` in the least-squares sense,
/// with its RMS residual. Reflections are allowed on request.
pub fn procrustes(from: &[[f64; 3]], to: &[[f64; 3]], allow_reflection: bool) -> Result<(Isometry, f64)> {
    if from.len() != to.len() || from.len() < 4 {
        return Err(Error::Domain("Procrustes needs at least four paired points".into()));
    }
    let n = from.len() as f64;
    let v = |p: &[f64; 3]| Vector3::new(p[0], p[1], p[2]);
    let ca = from.iter().map(v).sum::<Vector3<f64>>() / n;
    let cb = to.iter().map(v).sum::<Vector3<f64>>() / n;
    let mut h = Matrix3::zeros();
    let mut spread = Matrix3::zeros();
    for (a, b) in from.iter().zip(to) {
        let (da, db) = (v(a) - ca, v(b) - cb);
        h += da * db.transpose();
        spread += da * da.transpose();
    }
    let sv = spread.symmetric_eigenvalues();
    if sv.min() <= 1e-12 * sv.max() {
        return Err(Error::Numerical("Procrustes point cloud is rank deficient".into()));
    }
    let svd = h.svd(true, true);
    let (u, vt) = (svd.u.expect("u requested"), svd.v_t.expect("v requested"));
    let mut r = vt.transpose() * u.transpose();
    if !allow_reflection && r.determinant() < 0.0 {
        let mut d = Matrix3::identity();
        d[(2, 2)] = -1.0;
        r = vt.transpose() * d * u.transpose();
    }
    let iso = Isometry {
        rotation: r,
        translation: cb - r * ca,
    };
    let rms = (from.iter().zip(to).map(|(a, b)| distance(&iso.apply(a), b).powi(2)).sum::<f64>() / n).sqrt();
    Ok((iso, rms))
}

/// `z ↦ g(z)`, or `z ↦ g(conj z)` when `reflect`.
#[derive(Clone, Copy, Debug)]
pub struct FullElement {
    pub g: MoebiusElem,
    pub reflect: bool,
}

impl FullElement {
    pub fn apply(&self, p: ExtC) -> ExtC {
        self.g.apply(if self.reflect { p.conj() } else { p })
    }

    /// `self ∘ other`
    pub fn compose(&self, other: &Self) -> Self {
        let inner = if self.reflect { other.g.conjugate() } else { other.g };
        Self {
            g: self.g.compose(&inner),
            reflect: self.reflect ^ other.reflect,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SymmetryEntry {
    pub element: usize,
    pub reflect: bool,
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
    pub determinant: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SymmetryReport {
    pub entries: Vec<SymmetryEntry>,
    pub samples: usize,
    /// Diameter of the sample cloud, the scale for translations.
    pub scale: f64,
    pub max_residual: f64,
    pub identity_defect: f64,
    pub homomorphism_defect: f64,
    /// Number of distinct isometries found.
    pub order: usize,
    pub injective: bool,
}

/// Fits `ρ(τ)` with `f(τ z) ≈ ρ(τ) f(z)` for every element of the group
/// (and its compositions with `z ↦ conj z` when `include_reflection`),
/// recomputing `f(τ z)` from the frame field rather than reading it off the
/// mesh. Samples are mesh vertices whose whole orbit keeps `clearance` from
/// the ends and from `∞` unless `∞` is an end.
pub fn symmetry_check(
    field: &FrameField,
    mesh: &Mesh,
    include_reflection: bool,
    max_samples: usize,
    clearance: f64,
) -> Result<SymmetryReport> {
    let group = &field.spec.group;
    let mut elements: Vec<FullElement> = group.elements().iter().map(|&g| FullElement { g, reflect: false }).collect();
    if include_reflection {
        let mirrored: Vec<FullElement> = elements.iter().map(|e| FullElement { g: e.g, reflect: true }).collect();
        elements.extend(mirrored);
    }
    let infinity_is_end = field.end_points.iter().any(|e| e.is_infinite());
    let admissible = |p: ExtC| {
        p.finite().is_some()
            && field.end_points.iter().all(|e| e.chordal(p) >= clearance)
            && (infinity_is_end || ExtC::Infinity.chordal(p) >= clearance)
    };
    let candidates: Vec<usize> = (0..mesh.vertices.len())
        .filter(|&i| {
            let z = ExtC::Finite(mesh.domain_map[i]);
            elements.iter().all(|e| admissible(e.apply(z)))
        })
        .collect();
    if candidates.len() < 4 {
        return Err(Error::Numerical(format!(
            "only {} mesh vertices have orbits clear of the ends",
            candidates.len()
        )));
    }
    let take = max_samples.clamp(4, candidates.len());
    let chosen: Vec<usize> = (0..take).map(|k| candidates[k * candidates.len() / take]).collect();
    let base: Vec<[f64; 3]> = chosen.iter().map(|&i| mesh.vertices[i]).collect();
    let mut scale: f64 = 0.0;
    for (i, a) in base.iter().enumerate() {
        for b in &base[i + 1..] {
            scale = scale.max(distance(a, b));
        }
    }

    let mut fits = Vec::with_capacity(elements.len());
    let mut entries = Vec::with_capacity(elements.len());
    for (k, e) in elements.iter().enumerate() {
        let zs: Vec<_> = chosen
            .iter()
            .map(|&i| e.apply(ExtC::Finite(mesh.domain_map[i])).finite().expect("checked finite"))
            .collect();
        let images = field
            .points(&zs)
            .into_iter()
            .map(|r| r.map(|(p, _)| p))
            .collect::<Result<Vec<_>>>()?;
        let (iso, residual) = procrustes(&base, &images, include_reflection)?;
        let r = iso.rotation;
        entries.push(SymmetryEntry {
            element: k % group.order(),
            reflect: e.reflect,
            rotation: [0, 1, 2].map(|i| [r[(i, 0)], r[(i, 1)], r[(i, 2)]]),
            translation: [iso.translation[0], iso.translation[1], iso.translation[2]],
            determinant: r.determinant(),
            residual,
        });
        fits.push(iso);
    }

    let index_of = |e: &FullElement| -> Result<usize> {
        let i = group
            .index_of(&e.g)
            .ok_or_else(|| Error::Verification("composition left the group".into()))?;
        Ok(i + if e.reflect { group.order() } else { 0 })
    };
    let mut homomorphism_defect: f64 = 0.0;
    for (a, ea) in elements.iter().enumerate() {
        for (b, eb) in elements.iter().enumerate() {
            let c = index_of(&ea.compose(eb))?;
            let d = fits[c].distance(&fits[a].compose(&fits[b]), scale);
            homomorphism_defect = homomorphism_defect.max(d);
        }
    }
    let identity_defect = fits[0].distance(&Isometry::identity(), scale);
    let mut distinct: Vec<Isometry> = Vec::new();
    for f in &fits {
        if !distinct.iter().any(|d| d.distance(f, scale) < 1e-3) {
            distinct.push(*f);
        }
    }
    let kernel = fits.iter().filter(|f| f.distance(&Isometry::identity(), scale) < 1e-3).count();
    let max_residual = entries.iter().map(|e| e.residual).fold(0.0, f64::max);
    Ok(SymmetryReport {
        samples: chosen.len(),
        scale,
        max_residual,
        identity_defect,
        homomorphism_defect,
        order: distinct.len(),
        injective: kernel == 1 && distinct.len() == elements.len(),
        entries,
    })
}
