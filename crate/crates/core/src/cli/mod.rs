//! Configuration, the pipeline behind the command line, and JSON reports.

pub mod check;
pub mod config;
pub mod json;

use std::path::Path;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::looplab::IwasawaOptions;
use crate::mat2;
use crate::moebius::{build_group, conj_symmetry_residual, invariant_map, verify_invariance, GroupLabel};
use crate::monodromy::{
    check_closing_upstairs, effective_weight, monodromies_downstairs, mu_formula, trace_formula_residual, LambdaGrid, MonodromyRep,
    OdeOptions, BASEPOINT,
};
use crate::potentials::{alpha_pullback_residual, PotentialSpec, ResidueConvention, WeightTriple};
use crate::surface::{closure_check, domain_grid, export_obj, frame_mesh, symmetry_check, FrameField};
use crate::unitarize::{
    box_grid, check_weights, cyclic_line, irreducibility_check, pointwise_unitarizer, reduce_exponent, weight_region_scan, Unitarizer,
};

pub use config::RunConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INADMISSIBLE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

/// Process exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => EXIT_CONFIG,
        Error::NotUnitarizable { .. } | Error::Reducible { .. } => EXIT_INADMISSIBLE,
        _ => EXIT_NUMERICAL,
    }
}

/// Mesh vertices whose orbits are used by the symmetry check.
const SYMMETRY_SAMPLES: usize = 48;
/// Chordal distance the symmetry samples keep from ends and holes.
const SYMMETRY_CLEARANCE: f64 = 0.2;

pub fn groups_table(n_max: usize) -> Result<Value> {
    let mut labels: Vec<GroupLabel> = (2..=n_max).map(GroupLabel::Cyclic).collect();
    labels.extend((2..=n_max).map(GroupLabel::Dihedral));
    labels.extend([GroupLabel::Tetrahedral, GroupLabel::Octahedral, GroupLabel::Icosahedral]);
    let rows = labels
        .into_iter()
        .map(|label| {
            let spec = PotentialSpec::new(label, WeightTriple::new(0.0, 0.0, 0.0), ResidueConvention::default())?;
            let b = &spec.branch;
            Ok(json!({
                "group": label.name(),
                "order": spec.group.order(),
                "degree": b.degree,
                "multiplicities": b.multiplicities,
                "cardinalities": b.cardinalities(),
                "riemann_hurwitz": [b.riemann_hurwitz_sum(), 2 * b.degree - 2],
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Value::Array(rows))
}

pub fn invariant_report(label: GroupLabel) -> Result<Value> {
    let group = build_group(label)?;
    let u = invariant_map(&group)?;
    Ok(json!({
        "group": label.name(),
        "degree": u.degree(),
        "num": json::poly(u.num()),
        "den": json::poly(u.den()),
        "invariance_residual": verify_invariance(&u, &group),
        "conj_symmetry_residual": conj_symmetry_residual(&u),
    }))
}

pub fn potential_report(label: GroupLabel, weights: WeightTriple, convention: ResidueConvention, seed: u64) -> Result<Value> {
    let spec = PotentialSpec::new(label, weights, convention)?;
    let n = spec.branch.multiplicities;
    let w = weights.as_array();
    Ok(json!({
        "group": label.name(),
        "weights": w,
        "convention": convention.to_string(),
        "multiplicities": n,
        "residues": ([0, 1, 2].map(|k| convention.residue(w[k], n[k]))),
        "q": {"num": json::poly(spec.q.coeff().num()), "den": json::poly(spec.q.coeff().den())},
        "alpha": {"num": json::poly(spec.alpha.coeff().num()), "den": json::poly(spec.alpha.coeff().den())},
        "alpha_pullback_residual": alpha_pullback_residual(&spec.u, &spec.alpha)?,
        "gauge_residual": check::gauge_identity_residual(&spec, 100, seed),
    }))
}

pub fn weights_report(
    label: GroupLabel,
    scan: &str,
    convention: ResidueConvention,
    samples: usize,
    range: (f64, f64, f64),
) -> Result<Value> {
    let (lo, hi, step) = range;
    if !(step > 0.0 && hi >= lo) {
        return Err(Error::Config(format!("bad scan range {lo}..{hi} step {step}")));
    }
    let grid = match scan {
        "box" => box_grid(lo, hi, step),
        "cyclic-line" => cyclic_line(lo, hi, step),
        other => return Err(Error::Config(format!("unknown scan '{other}' (box or cyclic-line)"))),
    };
    let entries = weight_region_scan(label.multiplicities(), convention, &grid, samples);
    let admissible: Vec<[f64; 3]> = entries.iter().filter(|e| e.admissible).map(|e| e.weights.as_array()).collect();
    Ok(json!({
        "group": label.name(),
        "scan": scan,
        "convention": convention.to_string(),
        "lambda_samples": samples,
        "admissible": admissible,
        "entries": entries,
    }))
}

pub fn monodromy_json(spec: &PotentialSpec, rep: &MonodromyRep) -> Value {
    let w = spec.weights.as_array();
    let n = spec.branch.multiplicities;
    let generators: Vec<Value> = (0..3)
        .map(|k| {
            let we = effective_weight(w[k], n[k], spec.convention);
            let traces: Vec<Value> = rep.generators[k].iter().map(|m| json::complex(mat2::trace(m))).collect();
            let exponents: Vec<Value> = rep
                .lambdas
                .iter()
                .map(|l| {
                    let mu = mu_formula(we, *l, n[k]);
                    json!({"mu": json::complex(mu), "nu": reduce_exponent(mu)})
                })
                .collect();
            json!({
                "puncture": (["0", "1", "inf"][k]),
                "traces": traces,
                "exponents": exponents,
                "closing": check_closing_upstairs(&rep.generators[k], n[k], &rep.grid),
            })
        })
        .collect();
    json!({
        "basepoint": json::complex(rep.basepoint),
        "lambdas": rep.lambdas.iter().map(|l| json::complex(*l)).collect::<Vec<_>>(),
        "generators": generators,
        "trace_formula_residual": trace_formula_residual(spec, rep),
        "product_residual": rep.product_residual(),
        "det_residual": rep.det_residual(),
    })
}

/// Per-λ maximum over generators of `‖U^†U − I‖`, `U = C M C⁻¹`.
pub fn per_lambda_unitarity(un: &Unitarizer, rep: &MonodromyRep) -> Vec<f64> {
    (0..rep.lambdas.len())
        .map(|j| {
            let c = un.c[j];
            let ci = mat2::adj(&c);
            (0..3)
                .map(|k| mat2::unitarity_residual(&(c * rep.generators[k][j] * ci)))
                .fold(0.0, f64::max)
        })
        .collect()
}

pub fn unitarizer_json(un: &Unitarizer, rep: &MonodromyRep) -> Value {
    let m = rep.grid.m;
    json!({
        "lambdas": un.lambdas.iter().map(|l| json::complex(*l)).collect::<Vec<_>>(),
        "residuals": per_lambda_unitarity(un, rep),
        "max_residual_off_one": un.unitarity_residual(rep, &[rep.grid.index_of_one()]),
        "continuity_ratio": un.continuity_ratio(m),
        "negative_mode_energy": un.negative_mode_energy(m),
        "c": un.c.iter().map(json::matrix).collect::<Vec<_>>(),
        "irreducibility": irreducibility_check(rep),
    })
}

pub fn monodromy_report(
    label: GroupLabel,
    weights: WeightTriple,
    convention: ResidueConvention,
    samples: usize,
    ode: &OdeOptions,
) -> Result<Value> {
    let spec = PotentialSpec::new(label, weights, convention)?;
    let rep = monodromies_downstairs(&spec, BASEPOINT, LambdaGrid::new(samples), ode)?;
    let mut v = monodromy_json(&spec, &rep);
    v["group"] = json!(label.name());
    v["weights"] = json!(weights.as_array());
    Ok(v)
}

pub fn unitarize_report(
    label: GroupLabel,
    weights: WeightTriple,
    convention: ResidueConvention,
    samples: usize,
    ode: &OdeOptions,
) -> Result<Value> {
    let spec = PotentialSpec::new(label, weights, convention)?;
    let rep = monodromies_downstairs(&spec, BASEPOINT, LambdaGrid::new(samples), ode)?;
    let un = pointwise_unitarizer(&rep)?;
    let mut v = unitarizer_json(&un, &rep);
    v["group"] = json!(label.name());
    v["weights"] = json!(weights.as_array());
    Ok(v)
}

/// Outcome of a full run: the report, and the error that stopped it, if any.
pub struct RunOutcome {
    pub report: Value,
    pub error: Option<Error>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        self.error.as_ref().map_or(EXIT_OK, exit_code)
    }
}

fn stage<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        e @ (Error::NotUnitarizable { .. } | Error::Reducible { .. }) => e,
        Error::Config(m) => Error::Config(format!("{name}: {m}")),
        Error::Io { path, source } => Error::Io { path, source },
        other => Error::Numerical(format!("{name}: {other}")),
    })
}

/// Runs groups → invariant → potential → monodromy → unitarize → surface and
/// writes the configured artifacts. Stages fill the report as they finish.
pub fn run(config: &RunConfig) -> RunOutcome {
    let mut report = json!({"config": config, "tolerances": tolerances(config)});
    let error = run_stages(config, &mut report).err();
    report["status"] = json!(match &error {
        None if report.get("degenerate").is_some() => "degenerate".to_string(),
        None => "ok".to_string(),
        Some(Error::NotUnitarizable { .. }) => "NOT_UNITARIZABLE".to_string(),
        Some(e) => format!("error: {e}"),
    });
    if let Some(Error::NotUnitarizable { samples }) = &error {
        report["failing_lambda_samples"] = json!(samples);
    }
    let error = match (&config.out.report, error) {
        (Some(path), error) => match write_report(&report, path) {
            Ok(()) => error,
            Err(e) => error.or(Some(e)),
        },
        (None, error) => error,
    };
    RunOutcome { report, error }
}

fn tolerances(config: &RunConfig) -> Value {
    json!({
        "ode_tol": config.ode_tol,
        "ode_tol_near_one": crate::monodromy::NEAR_ONE_TOL,
        "epsilon_theta": config.epsilon_theta,
        "iwasawa_N": config.iwasawa_n,
        "anti_hermitian": crate::surface::ANTI_HERMITIAN_TOL,
        "symmetry_samples": SYMMETRY_SAMPLES,
        "symmetry_clearance": SYMMETRY_CLEARANCE,
    })
}

pub fn write_report(report: &Value, path: &Path) -> Result<()> {
    let text = json::to_string(report).map_err(|e| Error::Numerical(e.to_string()))?;
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn run_stages(config: &RunConfig, report: &mut Value) -> Result<()> {
    config.validate()?;
    let label = config.label()?;
    let weights = config.weight_triple();

    let spec = stage("potential", PotentialSpec::new(label, weights, config.convention))?;
    let b = &spec.branch;
    report["group"] = json!({
        "name": label.name(),
        "order": spec.group.order(),
        "closure_defect": spec.group.closure_defect(),
        "multiplicities": b.multiplicities,
        "cardinalities": b.cardinalities(),
        "riemann_hurwitz": [b.riemann_hurwitz_sum(), 2 * b.degree - 2],
    });
    report["invariant"] = json!({
        "degree": spec.u.degree(),
        "invariance_residual": verify_invariance(&spec.u, &spec.group),
        "conj_symmetry_residual": conj_symmetry_residual(&spec.u),
    });
    report["potential"] = json!({
        "alpha_pullback_residual": stage("potential", alpha_pullback_residual(&spec.u, &spec.alpha))?,
        "gauge_residual": check::gauge_identity_residual(&spec, 100, config.seed),
    });

    if weights.is_zero() {
        report["degenerate"] = json!("all weights vanish: the monodromy is trivial and the surface degenerates to a sphere; no mesh");
        return Ok(());
    }
    let grid = config.lambda_grid();
    let scan = check_weights(weights, b.multiplicities, config.convention, config.lambda_samples);
    report["weights"] = json!(scan);
    if !scan.admissible {
        let failing: Vec<usize> = (0..config.lambda_samples)
            .filter(|&j| {
                let l = grid.points()[j];
                let v = crate::unitarize::verdict_at(weights, b.multiplicities, config.convention, l);
                if j == grid.index_of_one() {
                    v.status == crate::unitarize::TriangleStatus::Fail
                } else {
                    v.status != crate::unitarize::TriangleStatus::Strict
                }
            })
            .collect();
        return Err(Error::NotUnitarizable { samples: failing });
    }

    let ode = config.ode_options();
    let rep = stage("monodromy", monodromies_downstairs(&spec, BASEPOINT, grid, &ode))?;
    let closing: Vec<Value> = (0..3)
        .map(|k| json!(check_closing_upstairs(&rep.generators[k], b.multiplicities[k], &grid)))
        .collect();
    report["monodromy"] = json!({
        "trace_formula_residual": trace_formula_residual(&spec, &rep),
        "product_residual": rep.product_residual(),
        "det_residual": rep.det_residual(),
        "closing": closing,
    });

    let un = stage("unitarize", pointwise_unitarizer(&rep))?;
    report["unitarize"] = json!({
        "max_residual_off_one": un.unitarity_residual(&rep, &[grid.index_of_one()]),
        "continuity_ratio": un.continuity_ratio(grid.m),
        "negative_mode_energy": un.negative_mode_energy(grid.m),
    });

    let iw: IwasawaOptions = config.iwasawa_options();
    let field = stage("surface", FrameField::new(&spec, &un, grid, ode, iw))?;
    let gopts = config.grid_options();
    let dg = domain_grid(&field.end_points, &gopts);
    let (mesh, stats) = frame_mesh(&field, &dg, &gopts);
    let diameter = mesh.diameter();
    let closure = stage("surface", closure_check(&field))?;
    let bare = stage(
        "surface",
        FrameField::undressed(&spec, grid, ode, iw).and_then(|f| closure_check(&f)),
    )?;
    let symmetry = stage("surface", symmetry_check(&field, &mesh, true, SYMMETRY_SAMPLES, SYMMETRY_CLEARANCE))?;
    report["surface"] = json!({
        "basepoint": json::complex(field.basepoint),
        "ends": field.end_points.iter().map(|e| e.to_string()).collect::<Vec<_>>(),
        "vertices": mesh.vertices.len(),
        "faces": mesh.faces.len(),
        "diameter": diameter,
        "mesh_stats": stats,
        "closure": closure,
        "closure_relative": closure.max_residual / diameter,
        "closure_identity_dressing_relative": bare.max_residual / diameter,
        "symmetry": symmetry,
        "symmetry_relative": symmetry.max_residual / diameter,
    });
    if let Some(path) = &config.out.mesh {
        export_obj(&mesh, path)?;
    }
    Ok(())
}
