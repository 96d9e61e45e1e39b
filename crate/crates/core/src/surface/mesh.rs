use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::complexrat::ExtC;
use crate::error::{Error, Result};

/// Parameters of the domain grid on the upstairs sphere. Radii are chordal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridOptions {
    /// Latitude rings of the spherical grid.
    pub radial: usize,
    /// Samples per latitude ring and per annulus ring.
    pub angular: usize,
    /// Radius of the disc cut out around each end.
    pub r_cut: f64,
    pub annulus_rings: usize,
    /// Innermost annulus radius as a fraction of `r_cut`.
    pub inner_ratio: f64,
    /// Disc removed around `z = ∞` when it is not an end.
    pub infinity_hole: f64,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            radial: 24,
            angular: 48,
            r_cut: 0.3,
            annulus_rings: 8,
            inner_ratio: 0.1,
            infinity_hole: 0.15,
        }
    }
}

/// Sample points and triangles of the parameter domain, before any frame is
/// computed.
#[derive(Clone, Debug)]
pub struct DomainGrid {
    pub points: Vec<Complex64>,
    pub faces: Vec<[usize; 3]>,
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Adds the triangles of a ring-by-ring grid; `rows[i][j]` is the index of
/// sample `j` of ring `i`, absent when cut out.
fn stitch(rows: &[Vec<Option<usize>>], faces: &mut Vec<[usize; 3]>) {
    for pair in rows.windows(2) {
        let (r0, r1) = (&pair[0], &pair[1]);
        let n = r0.len();
        for j in 0..n {
            let k = (j + 1) % n;
            if let (Some(a), Some(b), Some(c)) = (r0[j], r1[j], r1[k]) {
                faces.push([a, b, c]);
            }
            if let (Some(a), Some(c), Some(d)) = (r0[j], r1[k], r0[k]) {
                faces.push([a, c, d]);
            }
        }
    }
}

/// Latitude–longitude grid on the sphere minus discs of radius `r_cut`
/// around the ends (and a hole at `∞` unless `∞` is an end), plus
/// geometric annuli around each end.
pub fn domain_grid(ends: &[ExtC], opts: &GridOptions) -> DomainGrid {
    let mut points = Vec::new();
    let mut faces = Vec::new();
    let infinity_is_end = ends.iter().any(|e| e.is_infinite());
    let mut rows = Vec::with_capacity(opts.radial);
    for i in 0..opts.radial {
        let theta = std::f64::consts::PI * (i as f64 + 0.5) / opts.radial as f64;
        let r = 1.0 / (theta / 2.0).tan();
        let row = (0..opts.angular)
            .map(|j| {
                let phi = 2.0 * std::f64::consts::PI * j as f64 / opts.angular as f64;
                let z = Complex64::from_polar(r, phi);
                let p = ExtC::Finite(z);
                let cut =
                    ends.iter().any(|e| e.chordal(p) < opts.r_cut) || (!infinity_is_end && ExtC::Infinity.chordal(p) < opts.infinity_hole);
                (!cut).then(|| {
                    points.push(z);
                    points.len() - 1
                })
            })
            .collect::<Vec<_>>();
        rows.push(row);
    }
    stitch(&rows, &mut faces);

    if opts.annulus_rings >= 1 {
        for end in ends {
            let p = end.to_sphere();
            let helper = if p[2].abs() < 0.9 { [0.0, 0.0, 1.0] } else { [1.0, 0.0, 0.0] };
            let t1 = normalize(cross(helper, p));
            let t2 = cross(p, t1);
            let outer = 0.9 * opts.r_cut;
            let inner = opts.inner_ratio * opts.r_cut;
            let steps = opts.annulus_rings.max(2) - 1;
            let mut rows = Vec::new();
            for k in 0..opts.annulus_rings {
                let rho = if opts.annulus_rings == 1 {
                    outer
                } else {
                    outer * (inner / outer).powf(k as f64 / steps as f64)
                };
                let alpha = 2.0 * (rho / 2.0).asin();
                let (sa, ca) = alpha.sin_cos();
                let row = (0..opts.angular)
                    .map(|j| {
                        let phi = 2.0 * std::f64::consts::PI * j as f64 / opts.angular as f64;
                        let (s, c) = phi.sin_cos();
                        let q = [0, 1, 2].map(|d| ca * p[d] + sa * (c * t1[d] + s * t2[d]));
                        ExtC::from_sphere(q).finite().map(|z| {
                            points.push(z);
                            points.len() - 1
                        })
                    })
                    .collect::<Vec<_>>();
                rows.push(row);
            }
            stitch(&rows, &mut faces);
        }
    }
    DomainGrid { points, faces }
}

/// Triangulated surface with the parameter point of every vertex.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Mesh {
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<[usize; 3]>,
    pub domain_map: Vec<Complex64>,
    /// Radii of the discs cut out around the ends.
    pub puncture_mask: Vec<f64>,
}

fn area(a: &[f64; 3], b: &[f64; 3], c: &[f64; 3]) -> f64 {
    let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let w = cross(u, v);
    0.5 * (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt()
}

impl Mesh {
    /// Assembles a mesh from per-point results; failed or non-finite
    /// points are dropped with their faces, as are degenerate triangles.
    pub fn assemble(grid: &DomainGrid, points: &[Option<[f64; 3]>], puncture_mask: Vec<f64>) -> Self {
        let mut index = vec![usize::MAX; grid.points.len()];
        let mut mesh = Mesh {
            puncture_mask,
            ..Default::default()
        };
        for (i, p) in points.iter().enumerate() {
            if let Some(p) = p {
                if p.iter().all(|c| c.is_finite()) {
                    index[i] = mesh.vertices.len();
                    mesh.vertices.push(*p);
                    mesh.domain_map.push(grid.points[i]);
                }
            }
        }
        for f in &grid.faces {
            let g = f.map(|i| index[i]);
            if g.contains(&usize::MAX) {
                continue;
            }
            if area(&mesh.vertices[g[0]], &mesh.vertices[g[1]], &mesh.vertices[g[2]]) > 1e-14 {
                mesh.faces.push(g);
            }
        }
        mesh
    }

    /// Largest distance between two vertices.
    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.vertices.iter().enumerate() {
            for b in &self.vertices[i + 1..] {
                d = d.max(super::distance(a, b));
            }
        }
        d
    }
}

pub fn write_obj(vertices: &[[f64; 3]], faces: &[[usize; 3]], out: &mut impl Write) -> std::io::Result<()> {
    for v in vertices {
        writeln!(out, "v {:.16e} {:.16e} {:.16e}", v[0], v[1], v[2])?;
    }
    for f in faces {
        writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
    }
    Ok(())
}

pub fn export_obj(mesh: &Mesh, path: &Path) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io)?;
    let mut out = BufWriter::new(file);
    write_obj(&mesh.vertices, &mesh.faces, &mut out).map_err(io)?;
    out.flush().map_err(io)
}

/// Vertices and 0-based faces.
pub type ObjData = (Vec<[f64; 3]>, Vec<[usize; 3]>);

/// Reads the `v` and `f` lines of an OBJ file (faces converted to 0-based).
pub fn import_obj(path: &Path) -> Result<ObjData> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let bad = |line: &str| Error::Config(format!("malformed OBJ line {line:?} in {}", path.display()));
    let file = File::open(path).map_err(io)?;
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(io)?;
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let c: Vec<f64> = parts
                    .map(|s| s.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad(&line))?;
                if c.len() != 3 {
                    return Err(bad(&line));
                }
                vertices.push([c[0], c[1], c[2]]);
            }
            Some("f") => {
                let c: Vec<usize> = parts
                    .map(|s| s.split('/').next().unwrap_or("").parse::<usize>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad(&line))?;
                if c.len() != 3 || c.contains(&0) {
                    return Err(bad(&line));
                }
                faces.push([c[0] - 1, c[1] - 1, c[2] - 1]);
            }
            _ => {}
        }
    }
    Ok((vertices, faces))
}
