//! The plane field orthogonal to a fibration and its contact condition.
//!
//! With `V` the unit direction field, the contact function is
//! `c = <curl V, V>`, which is `*(alpha ^ d alpha)` for `alpha = V^flat` in the
//! right-handed orientation `dx ^ dy ^ dz > 0`.

mod foliation;
mod lift;
mod overtwisted;

pub use foliation::{
    char_foliation_field, height_critical_diagnostic, integrate_leaf, meridian_leaves, scan_closed_leaves,
    sphere_singularities, stray_singularities, FoliationLeaf, HeightDiagnostic, LeafConfig, ReturnMapRecord,
    ScanConfig, ScanReport, ScanVerdict, Termination, COPLANAR_TOL, SPHERE_TOL,
};
pub use lift::{legendrian_lift, Lift, LiftConfig, PlanePath};
pub use overtwisted::{overtwisted_demo, OvertwistedReport, VERTICAL_TOL};

use rayon::prelude::*;

use crate::certificate::{Certificate, Property, Verdict, Witness};
use crate::error::{Error, Result};
use crate::exprlang::Expr;
use crate::fibration::{FibrationSpec, Orientation, VField};
use crate::numeric::{det3, fd_jacobian3, Grid3, Mat3, UnitVec3, Vec3};

/// `|c|` below this is treated as a contact failure.
pub const CONTACT_THRESHOLD: f64 = 1e-4;

/// Finite-difference and exact curls must agree to this (relative to `max(1, |c|)`).
pub const CURL_AGREEMENT: f64 = 1e-4;

/// Values of `|c|` below this are ranked as exact zeros when ordering witnesses.
const ZERO_FLOOR: f64 = 1e-10;

/// A 1-form `a dx + b dy + c dz`.
#[derive(Clone, Debug)]
pub enum OneForm {
    Coefficients {
        label: String,
        coeffs: Box<[Expr; 3]>,
    },
    /// `V^flat` for the direction field of a fibration.
    Dual(FibrationSpec),
}

impl OneForm {
    pub fn parse(label: impl Into<String>, a: &str, b: &str, c: &str) -> Result<OneForm> {
        let p = |s: &str| Expr::parse(s, &VField::VARIABLES);
        Ok(OneForm::Coefficients { label: label.into(), coeffs: Box::new([p(a)?, p(b)?, p(c)?]) })
    }

    /// `dz + r^2 dtheta = -y dx + x dy + dz`.
    pub fn standard() -> OneForm {
        Self::parse("standard", "-y", "x", "1").expect("catalog form")
    }

    /// `dz - y dx`.
    pub fn planar_linear() -> OneForm {
        Self::parse("dz - y dx", "-y", "0", "1").expect("catalog form")
    }

    /// `cos r dz + r sin r dtheta`. Both `sin r / r` and `cos r` are evaluated by
    /// Taylor polynomials in `r^2` for `r^2 < 1e-6`, so they stay differentiable on the axis.
    pub fn overtwisted() -> OneForm {
        let sinc = "piecewise(x^2 + y^2 - 1e-6, sin(sqrt(x^2 + y^2)) / sqrt(x^2 + y^2), \
                    1 - (x^2 + y^2) / 6 + (x^2 + y^2)^2 / 120)";
        Self::parse(
            "overtwisted",
            &format!("-y * {sinc}"),
            &format!("x * {sinc}"),
            "piecewise(x^2 + y^2 - 1e-6, cos(sqrt(x^2 + y^2)), 1 - (x^2 + y^2) / 2 + (x^2 + y^2)^2 / 24)",
        )
        .expect("catalog form")
    }

    pub fn dual_of(spec: FibrationSpec) -> OneForm {
        OneForm::Dual(spec)
    }

    /// Looks up `standard`, `planar_linear` or `overtwisted`.
    pub fn builtin(name: &str) -> Result<OneForm> {
        match name {
            "standard" => Ok(Self::standard()),
            "planar_linear" => Ok(Self::planar_linear()),
            "overtwisted" => Ok(Self::overtwisted()),
            other => Err(Error::InvalidParameter(format!("unknown built-in form `{other}`"))),
        }
    }

    pub fn label(&self) -> &str {
        match self {
            OneForm::Coefficients { label, .. } => label,
            OneForm::Dual(spec) => spec.label(),
        }
    }

    /// `(a, b, c)` at `x`.
    pub fn coefficients(&self, x: Vec3) -> Result<Vec3> {
        match self {
            OneForm::Coefficients { coeffs, .. } => {
                let pt = x.to_array();
                Ok(Vec3::new(coeffs[0].eval(&pt)?, coeffs[1].eval(&pt)?, coeffs[2].eval(&pt)?))
            }
            OneForm::Dual(spec) => Ok(spec.direction(x)?.get()),
        }
    }

    /// `(*(alpha ^ d alpha), |d alpha|)` at `x`, where `|d alpha|` is the norm of the curl.
    pub fn wedge(&self, x: Vec3) -> Result<(f64, f64)> {
        match self {
            OneForm::Coefficients { coeffs, .. } => {
                let pt = x.to_array();
                let mut a = [0.0; 3];
                let mut rows = [Vec3::ZERO; 3];
                for (i, e) in coeffs.iter().enumerate() {
                    let d = e.eval_dual(&pt)?;
                    a[i] = d.value();
                    rows[i] = Vec3::new(d.partials()[0], d.partials()[1], d.partials()[2]);
                }
                let a = Vec3::from_array(a);
                if a == Vec3::ZERO {
                    return Err(Error::Precondition(format!("form vanishes at {:?}", x.to_array())));
                }
                let curl = Mat3::from_rows(rows[0], rows[1], rows[2]).curl();
                Ok((a.dot(curl), curl.norm()))
            }
            OneForm::Dual(spec) => {
                let c = contact_checks(spec, x)?;
                Ok((c.fd, c.curl_norm))
            }
        }
    }
}

/// Three independent evaluations of the contact function at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContactValue {
    /// `<curl V, V>` with the curl from central differences of `V`.
    pub fd: f64,
    /// `<curl V, V>` with the exact Jacobian.
    pub exact: f64,
    /// `sum_i det(e_i, dV e_i, V)` over an orthonormal basis of `V^perp`, exact Jacobian.
    pub trace: f64,
    pub curl_norm: f64,
}

/// Evaluates `c(x)` three ways; fails if the finite-difference and exact curls disagree.
pub fn contact_checks(spec: &FibrationSpec, x: Vec3) -> Result<ContactValue> {
    let v = spec.direction(x)?;
    let h = spec.solver().fd_step;
    let fd_jac = fd_jacobian3(|y| spec.direction(y).map(UnitVec3::get), x, h)?;
    let jac = spec.direction_jacobian(x)?;
    let fd = fd_jac.curl().dot(v.get());
    let exact = jac.curl().dot(v.get());
    let e1 = v.any_orthogonal().get();
    let e2 = v.get().cross(e1);
    let trace = det3(e1, jac * e1, v.get()) + det3(e2, jac * e2, v.get());
    if (fd - exact).abs() > CURL_AGREEMENT * exact.abs().max(1.0) {
        return Err(Error::InconsistentChecks(format!(
            "finite-difference curl gives c = {fd}, exact Jacobian gives {exact} at {:?}",
            x.to_array()
        )));
    }
    Ok(ContactValue { fd, exact, trace, curl_norm: jac.curl().norm() })
}

/// `c(x) = <curl V, V>` from central differences, cross-checked against the exact Jacobian.
pub fn contact_function(spec: &FibrationSpec, x: Vec3) -> Result<f64> {
    Ok(contact_checks(spec, x)?.fd)
}

/// Certifies `|c| >= threshold` with one sign over the grid.
pub fn certify_contact(spec: &FibrationSpec, grid: &Grid3, threshold: f64) -> Certificate {
    certify_values(&format!("{}, V", grid.describe()), grid, threshold, |x| {
        let c = contact_checks(spec, x)?;
        Ok((c.fd, c.curl_norm))
    })
}

/// Certifies `*(alpha ^ d alpha)` for a 1-form.
pub fn certify_form(form: &OneForm, grid: &Grid3, threshold: f64) -> Certificate {
    certify_values(&format!("{}, alpha = {}", grid.describe(), form.label()), grid, threshold, |x| form.wedge(x))
}

fn certify_values<F>(label: &str, grid: &Grid3, threshold: f64, f: F) -> Certificate
where
    F: Fn(Vec3) -> Result<(f64, f64)> + Sync,
{
    let rows: Vec<(Vec3, Result<(f64, f64)>)> = grid.points().into_par_iter().map(|x| (x, f(x))).collect();
    let mut cert = Certificate::new(Property::Contact, label).tolerance("threshold", threshold);
    let mut ok = Vec::with_capacity(rows.len());
    let mut failures = 0usize;
    for (x, r) in rows {
        match r {
            Ok((c, curl)) => ok.push((x, c, curl)),
            Err(_) => failures += 1,
        }
    }
    if ok.is_empty() {
        cert.metric("evaluation_failures", failures as f64);
        return cert;
    }
    let pos = ok.iter().filter(|r| r.1 >= threshold).count();
    let neg = ok.iter().filter(|r| r.1 <= -threshold).count();
    let major = if neg > pos { -1.0 } else { 1.0 };

    let mut small: Vec<_> = ok.iter().filter(|r| r.1.abs() < threshold).collect();
    let ranked = |r: &&(Vec3, f64, f64)| {
        if r.1.abs() < ZERO_FLOOR {
            0.0
        } else {
            r.1.abs()
        }
    };
    small.sort_by(|a, b| ranked(a).total_cmp(&ranked(b)).then(a.0.norm().total_cmp(&b.0.norm())));
    let mut flipped: Vec<_> = ok.iter().filter(|r| r.1.abs() >= threshold && r.1 * major < 0.0).collect();
    flipped.sort_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(a.0.norm().total_cmp(&b.0.norm())));
    if let Some(w) = small.first().or(flipped.first()) {
        cert.metric("curl_norm_at_first_witness", w.2);
    }
    let pt = |x: Vec3| vec![x.to_array().to_vec()];
    cert.add_violations(small.iter().map(|r| Witness::new("|c| below threshold", pt(r.0), r.1)));
    cert.add_violations(flipped.iter().map(|r| Witness::new("c has the minority sign", pt(r.0), r.1)));
    cert.settle();

    let min_c = ok.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let max_c = ok.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    let min_abs = ok.iter().map(|r| r.1.abs()).fold(f64::INFINITY, f64::min);
    cert.metric("min_c", min_c);
    cert.metric("max_c", max_c);
    cert.metric("min_abs_c", min_abs);
    cert.margin = min_abs - threshold;
    if cert.passed() {
        cert.orientation = Orientation::of(major);
    }
    if failures > 0 {
        cert.metric("evaluation_failures", failures as f64);
        if cert.verdict == Verdict::Pass {
            cert.verdict = Verdict::Inconclusive;
        }
    }
    cert
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fibration::catalog;
    use crate::fibration::Orientation;

    #[test]
    fn hopf_at_origin_is_two() {
        let hopf = catalog::hopf(Orientation::Positive);
        let c = contact_checks(&hopf, Vec3::ZERO).unwrap();
        for v in [c.fd, c.exact, c.trace] {
            assert!((v - 2.0).abs() < 1e-6, "{c:?}");
        }
    }

    /// For B = Jp the fiber through (x, y, z) has base (I - zJ)(x, y)/(1 + z^2),
    /// so V is proportional to (-y + zx, x + zy, 1 + z^2).
    #[test]
    fn hopf_matches_explicit_field() {
        let hopf = catalog::hopf(Orientation::Positive);
        let explicit = FibrationSpec::field("hopf explicit", VField::parse("-y + z*x", "x + z*y", "1 + z^2").unwrap());
        for x in [Vec3::new(0.3, -1.2, 0.7), Vec3::new(2.0, 1.0, -1.5), Vec3::new(-0.4, 0.0, 3.0)] {
            let a = contact_checks(&hopf, x).unwrap();
            let b = contact_checks(&explicit, x).unwrap();
            assert!((a.exact - b.exact).abs() < 1e-10, "{a:?} {b:?}");
            assert!((a.trace - a.fd).abs() < 1e-5);
        }
    }

    #[test]
    fn planar_twist_is_minus_f_prime() {
        let spec = catalog::planar_twist("y").unwrap();
        for x in [Vec3::ZERO, Vec3::new(1.0, 2.0, -3.0)] {
            assert!((contact_function(&spec, x).unwrap() + 1.0).abs() < 1e-8);
        }
        let spec = catalog::planar_twist("y^2/2").unwrap();
        let x = Vec3::new(0.5, 0.7, 0.0);
        assert!((contact_function(&spec, x).unwrap() + 0.7).abs() < 1e-8);
    }

    #[test]
    fn planar_linear_closed_form() {
        let spec = catalog::planar_linear();
        for y in [-3.0, 0.0, 0.5, 4.0] {
            let c = contact_function(&spec, Vec3::new(1.0, y, 2.0)).unwrap();
            assert!((c - 1.0 / (1.0 + y * y)).abs() < 1e-8);
        }
    }

    #[test]
    fn radial_field_is_not_contact() {
        let c = contact_function(&catalog::radial(), Vec3::new(2.0, 0.0, 0.0)).unwrap();
        assert!(c.abs() < 1e-9);
    }

    #[test]
    fn form_wedges() {
        let x = Vec3::new(0.7, -1.1, 2.0);
        assert_eq!(OneForm::planar_linear().wedge(x).unwrap().0, 1.0);
        assert_eq!(OneForm::standard().wedge(x).unwrap().0, 2.0);
        // (r + sin r cos r) / r, which tends to 2 at the axis.
        let ot = OneForm::overtwisted();
        let r = x.xy().norm();
        assert!((ot.wedge(x).unwrap().0 - (r + r.sin() * r.cos()) / r).abs() < 1e-12);
        assert!((ot.wedge(Vec3::new(0.0, 0.0, 1.0)).unwrap().0 - 2.0).abs() < 1e-12);
        assert_eq!(ot.coefficients(Vec3::ZERO).unwrap(), Vec3::Z);
    }

    #[test]
    fn dual_form_matches_spec() {
        let form = OneForm::dual_of(catalog::planar_linear());
        let x = Vec3::new(0.0, 2.0, 0.0);
        assert!((form.wedge(x).unwrap().0 - 0.2).abs() < 1e-8);
    }

    #[test]
    fn catalog_verdicts() {
        let grid = Grid3::default();
        let hopf = certify_contact(&catalog::hopf(Orientation::Positive), &grid, CONTACT_THRESHOLD);
        assert!(hopf.passed());
        assert_eq!(hopf.orientation, Some(Orientation::Positive));
        let neg = certify_contact(&catalog::hopf(Orientation::Negative), &grid, CONTACT_THRESHOLD);
        assert_eq!(neg.orientation, Some(Orientation::Negative));

        let deg = certify_contact(&catalog::degenerate(3).unwrap(), &grid, CONTACT_THRESHOLD);
        assert_eq!(deg.verdict, Verdict::Fail);
        assert_eq!(deg.witnesses[0].points[0], vec![0.0, 0.0, 0.0]);
        assert!(deg.metrics["curl_norm_at_first_witness"] <= 1e-8);

        let glued = certify_contact(&catalog::glued(), &grid, CONTACT_THRESHOLD);
        assert!(glued.passed(), "{:?}", glued.metrics);
        assert!(glued.metrics["min_c"] > 0.0);

        assert!(certify_form(&OneForm::planar_linear(), &grid, CONTACT_THRESHOLD).passed());
    }

    #[test]
    fn mixed_signs_fail() {
        let spec = catalog::planar_twist("y^3/3 - y").unwrap();
        let cert = certify_contact(&spec, &Grid3::new(-2.0, 2.0, 5), CONTACT_THRESHOLD);
        assert_eq!(cert.verdict, Verdict::Fail);
        assert!(cert.orientation.is_none());
    }
}
