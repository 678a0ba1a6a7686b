use std::f64::consts::TAU;

use rayon::prelude::*;
use serde_json::{json, Map, Value};
use skewfib_core::certificate::Certificate;
use skewfib_core::contact::{
    certify_contact, certify_form, contact_checks, legendrian_lift, meridian_leaves, overtwisted_demo,
    scan_closed_leaves, LeafConfig, ScanConfig, ScanVerdict, SPHERE_TOL,
};
use skewfib_core::fibration::{
    catalog, certify_covering, certify_nondegenerate, certify_skew, direction_image, verify_line_field,
    CoveringOptions, FibrationSpec, PairSampling,
};
use skewfib_core::linespace::{definiteness_on_m, verify_claim, ClaimForm};
use skewfib_core::numeric::Grid3;
use skewfib_core::spherecorr::{certify_homotopy, normalize_spec, uniform_t};
use skewfib_core::Error;

use crate::config::{Check, Pairs, RunConfig};
use crate::report::{num, CsvTable, Outcome, Report, Status};
use crate::{CliError, Command};

/// `|c|` at most this on the radial demo grid shows the field is not contact.
const RADIAL_ZERO: f64 = 1e-6;

struct Body {
    results: Value,
    status: Status,
    errors: Vec<String>,
    csv: Option<CsvTable>,
}

impl Body {
    fn new(results: Value, status: Status) -> Body {
        Body { results, status, errors: Vec::new(), csv: None }
    }
}

/// Runs one command. Configuration and runtime errors end up in the report.
pub fn run(command: Command, config: &RunConfig) -> Outcome {
    let body = match command {
        Command::Certify => certify(config),
        Command::Foliation => foliation(config),
        Command::Lift => lift(config),
        Command::Homotopy => homotopy(config),
        Command::Demo => demo(config),
    };
    let body = body.unwrap_or_else(|e| Body {
        results: Value::Null,
        status: Status::Error,
        errors: vec![e.to_string()],
        csv: None,
    });
    let report = Report {
        tool: "skewfib",
        version: env!("CARGO_PKG_VERSION"),
        command: command.name(),
        config: serde_json::to_value(config).expect("config serializes"),
        status: body.status,
        results: body.results,
        errors: body.errors,
        csv: body.csv.as_ref().map(|t| t.name),
    };
    Outcome { report, csv: body.csv }
}

/// A failed precondition means the input lacks the property; anything else is a runtime error.
fn classify(e: &Error) -> Status {
    match e {
        Error::Precondition(_) | Error::LostTransversality { .. } => Status::Fail,
        _ => Status::Error,
    }
}

fn verdict_status(cert: &Certificate) -> Status {
    if cert.passed() {
        Status::Pass
    } else {
        Status::Fail
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("result serializes")
}

fn subject(spec: &FibrationSpec) -> Value {
    json!({ "label": spec.label(), "description": spec.describe() })
}

fn certify(cfg: &RunConfig) -> Result<Body, CliError> {
    let grid3 = cfg.grid3()?;
    let threshold = cfg.tolerances.contact_threshold;
    if cfg.form.is_some() {
        if cfg.fibration.is_some() {
            return Err(CliError::Config("give either a `fibration` or a `form`, not both".into()));
        }
        if cfg.certify.checks.as_ref().is_some_and(|c| c.iter().any(|&c| c != Check::Contact)) {
            return Err(CliError::Config("a `form` supports only the contact check".into()));
        }
        let form = cfg.form()?;
        let cert = certify_form(&form, &grid3, threshold);
        let status = verdict_status(&cert);
        return Ok(Body::new(json!({ "subject": { "label": form.label() }, "checks": { "contact": cert } }), status));
    }

    let spec = cfg.fibration()?;
    let grid = cfg.grid()?;
    let planar = spec.is_planar();
    let mut checks = match &cfg.certify.checks {
        Some(c) => c.clone(),
        None if planar => Check::PLANAR.to_vec(),
        None => Check::FIELD.to_vec(),
    };
    checks.sort();
    checks.dedup();
    if !planar {
        if let Some(c) = checks.iter().find(|c| !Check::FIELD.contains(c)) {
            return Err(CliError::Config(format!("check `{}` needs a B-map fibration", c.name())));
        }
    }
    let opts = &cfg.certify;
    let tol = &cfg.tolerances;

    let mut results = Map::new();
    let mut status = Status::Pass;
    let mut errors = Vec::new();
    for check in checks {
        let cert = match check {
            Check::Skew => {
                let sampling = match opts.pairs {
                    Pairs::All => PairSampling::All,
                    Pairs::Random { budget } => PairSampling::Random { budget, seed: cfg.seed },
                };
                certify_skew(&spec, &grid, sampling)
            }
            Check::Nondegenerate => certify_nondegenerate(&spec, &grid),
            Check::Covering => certify_covering(
                &spec,
                &opts.covering_radii,
                &CoveringOptions { angles: opts.covering_angles, threshold: None },
            ),
            Check::Definiteness => definiteness_on_m(&spec, &grid, opts.directions),
            Check::Claim => verify_claim(&spec, &grid, opts.directions, tol.claim_rel_tol, ClaimForm::Derived),
            Check::LineField => verify_line_field(&spec, &grid3, tol.line_field_tol),
            Check::Contact => Ok(certify_contact(&spec, &grid3, threshold)),
        };
        match cert {
            Ok(cert) => {
                status = status.and(verdict_status(&cert));
                results.insert(check.name().into(), to_value(&cert));
            }
            Err(e) => {
                status = status.and(classify(&e));
                errors.push(format!("{}: {e}", check.name()));
                results.insert(check.name().into(), json!({ "error": e.to_string() }));
            }
        }
    }

    let mut derived = Map::new();
    derived.insert("sigma".into(), to_value(&spec.orientation().map(|o| o.as_i8())));
    if planar {
        let image = match direction_image(&spec, &grid, tol.cap_tol) {
            Ok(image) => json!({
                "circumcenter": image.cap.center,
                "radius": image.cap.radius,
                "refined": image.cap.refined,
                "grid": grid.describe(),
                "cap_tol": tol.cap_tol,
            }),
            Err(e) => json!({ "error": e.to_string() }),
        };
        derived.insert("direction_image".into(), image);
    }
    let results = json!({ "subject": subject(&spec), "checks": results, "derived": derived });
    Ok(Body { results, status, errors, csv: None })
}

fn foliation(cfg: &RunConfig) -> Result<Body, CliError> {
    let spec = cfg.fibration()?;
    let fo = cfg.foliation.as_ref().ok_or_else(|| CliError::Config("`foliation.radii` is required".into()))?;
    if fo.radii.is_empty() || fo.radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(CliError::Config("`foliation.radii` must be a non-empty list of positive radii".into()));
    }
    if fo.samples < 2 || fo.csv_stride == 0 || !(fo.step > 0.0) {
        return Err(CliError::Config("foliation needs samples >= 2, csv_stride >= 1 and step > 0".into()));
    }
    let scan = ScanConfig {
        samples: fo.samples,
        polar_margin: fo.polar_margin,
        leaf: LeafConfig {
            step: fo.step,
            max_steps: fo.max_steps,
            eps_stop: fo.eps_stop,
            angle_tol: fo.angle_tol,
            stop_at_longitude: Some(TAU),
        },
        ..ScanConfig::default()
    };

    let mut per_radius = Vec::new();
    let mut rows = Vec::new();
    let mut status = Status::Pass;
    let mut errors = Vec::new();
    let mut max_sphere_defect = 0.0f64;
    for &r in &fo.radii {
        let outcome = scan_closed_leaves(&spec, r, &scan).and_then(|rep| Ok((rep, meridian_leaves(&spec, r, &scan)?)));
        match outcome {
            Ok((rep, leaves)) => {
                let verdict = match rep.verdict {
                    ScanVerdict::NoClosedLeaf => "no closed leaf found",
                    ScanVerdict::ClosedLeafCandidate { .. } => "closed leaf candidate",
                };
                if !matches!(rep.verdict, ScanVerdict::NoClosedLeaf) {
                    status = status.and(Status::Fail);
                }
                let mut leaf_summary = Vec::new();
                for (id, leaf) in leaves.iter().enumerate() {
                    let n = leaf.points.len();
                    for (k, (x, lon)) in leaf.points.iter().zip(&leaf.longitudes).enumerate() {
                        max_sphere_defect = max_sphere_defect.max((x.norm() - r).abs());
                        if k % fo.csv_stride == 0 || k + 1 == n {
                            rows.push(vec![
                                num(r),
                                id.to_string(),
                                k.to_string(),
                                num(x.x),
                                num(x.y),
                                num(x.z),
                                num(*lon),
                            ]);
                        }
                    }
                    leaf_summary.push(json!({
                        "leaf_id": id,
                        "points": n,
                        "termination": leaf.termination,
                        "longitude": leaf.longitude,
                    }));
                }
                per_radius.push(json!({ "radius": r, "verdict": verdict, "scan": rep, "leaves": leaf_summary }));
            }
            Err(e) => {
                status = status.and(classify(&e));
                errors.push(format!("radius {r}: {e}"));
                per_radius.push(json!({ "radius": r, "error": e.to_string() }));
            }
        }
    }
    if !(max_sphere_defect <= SPHERE_TOL) {
        status = status.and(Status::Error);
        errors.push(format!("exported leaf points leave the sphere by {max_sphere_defect:e}"));
    }
    let results = json!({
        "subject": subject(&spec),
        "radii": per_radius,
        "csv_checks": { "max_sphere_defect": max_sphere_defect, "sphere_tol": SPHERE_TOL },
    });
    let csv =
        CsvTable { name: "foliation.csv", header: vec!["radius", "leaf_id", "step", "x", "y", "z", "longitude"], rows };
    Ok(Body { results, status, errors, csv: Some(csv) })
}

fn lift(cfg: &RunConfig) -> Result<Body, CliError> {
    let spec = cfg.fibration()?;
    let lo = cfg.lift.as_ref().ok_or_else(|| CliError::Config("`lift.path` is required".into()))?;
    let s = &lo.settings;
    if !(s.arc_step > 0.0 && s.eps_trans > 0.0 && s.z_bound > 0.0 && lo.z0.is_finite()) {
        return Err(CliError::Config("lift needs arc_step, eps_trans, z_bound > 0 and a finite z0".into()));
    }
    let tol = cfg.tolerances.lift_residual;
    match legendrian_lift(&spec, &lo.path, lo.z0, s) {
        Ok(lift) => {
            let ok = lift.complete && lift.max_residual <= tol;
            let rows = (0..lift.t.len())
                .map(|i| {
                    let g = lift.plane[i];
                    vec![num(lift.t[i]), num(g.x), num(g.y), num(lift.z[i]), num(lift.residuals[i])]
                })
                .collect();
            let results = json!({
                "subject": subject(&spec),
                "path": lo.path,
                "z0": lo.z0,
                "z_end": lift.last_z(),
                "samples": lift.t.len(),
                "complete": lift.complete,
                "max_residual": lift.max_residual,
                "residual_tol": tol,
                "settings": s,
            });
            let mut body = Body::new(results, if ok { Status::Pass } else { Status::Fail });
            body.csv =
                Some(CsvTable { name: "lift.csv", header: vec!["t", "gamma1", "gamma2", "z", "residual"], rows });
            Ok(body)
        }
        Err(e) => {
            let mut body = Body::new(json!({ "subject": subject(&spec), "error": e.to_string() }), classify(&e));
            body.errors.push(e.to_string());
            Ok(body)
        }
    }
}

fn homotopy(cfg: &RunConfig) -> Result<Body, CliError> {
    let spec = cfg.fibration()?;
    let grid = cfg.grid()?;
    let n = cfg.homotopy.t_count;
    if n < 2 {
        return Err(CliError::Config("`homotopy.t_count` must be at least 2".into()));
    }
    let rejected = |e: Error| {
        let mut body = Body::new(json!({ "subject": subject(&spec), "rejected": e.to_string() }), classify(&e));
        body.errors.push(e.to_string());
        body
    };
    let norm = match normalize_spec(&spec, &grid, cfg.tolerances.cap_tol) {
        Ok(n) => n,
        Err(e) => return Ok(rejected(e)),
    };
    let path = match certify_homotopy(&norm.spec, &uniform_t(n), &grid) {
        Ok(p) => p,
        Err(e) => return Ok(rejected(e)),
    };
    let steps: Vec<Value> = path
        .steps
        .iter()
        .map(|s| {
            json!({
                "t": s.t,
                "verdict": s.certificate.verdict,
                "orientation": s.certificate.orientation.map(|o| o.as_i8()),
                "min_margin": s.min_margin,
                "max_convexity_gap": s.max_convexity_gap,
            })
        })
        .collect();
    let status = verdict_status(&path.certificate);
    let results = json!({
        "subject": subject(&spec),
        "normalization": {
            "circumcenter": norm.center,
            "cap_radius": norm.cap_radius,
            "base_point": norm.base_point,
            "frame": norm.frame,
            "fixed_point": norm.fixed_point,
            "normalized": norm.spec.label(),
        },
        "sigma": path.sigma.as_i8(),
        "steps": steps,
        "certificate": path.certificate,
        "grid": grid.describe(),
    });
    Ok(Body::new(results, status))
}

fn demo(cfg: &RunConfig) -> Result<Body, CliError> {
    let name = cfg.demo.as_ref().ok_or_else(|| CliError::Config("`demo.name` is required".into()))?.name.as_str();
    match name {
        "overtwisted" => {
            let rep = overtwisted_demo()?;
            let status = if rep.is_fibration { Status::Pass } else { Status::Fail };
            Ok(Body::new(json!({ "demo": name, "property": "fibration", "report": rep }), status))
        }
        "radial" => {
            // An even point count keeps the origin, where the field is undefined, off the grid.
            let grid = cfg.grid3.clone().unwrap_or(Grid3::new(-4.5, 4.5, 10));
            let spec = catalog::radial();
            let pts: Vec<_> = grid.points().into_iter().filter(|x| x.norm() > 1e-9).collect();
            let values = pts.par_iter().map(|&x| contact_checks(&spec, x)).collect::<Result<Vec<_>, _>>()?;
            let max = |f: fn(&skewfib_core::contact::ContactValue) -> f64| {
                values.iter().map(|v| f(v).abs()).fold(0.0, f64::max)
            };
            let max_c = max(|v| v.fd);
            let contact = max_c > RADIAL_ZERO;
            let results = json!({
                "demo": name,
                "property": "contact",
                "grid": grid.describe(),
                "points": pts.len(),
                "max_abs_c": max_c,
                "max_abs_c_exact": max(|v| v.exact),
                "max_abs_c_trace": max(|v| v.trace),
                "zero_tol": RADIAL_ZERO,
            });
            Ok(Body::new(results, if contact { Status::Pass } else { Status::Fail }))
        }
        other => Err(CliError::Config(format!("unknown demo `{other}` (expected overtwisted or radial)"))),
    }
}
