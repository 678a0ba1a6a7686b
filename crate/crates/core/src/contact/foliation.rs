//! Characteristic foliations on round spheres about the world origin.
//!
//! The singular line field on `S_r` is `X(x) = x/|x| x V(x)`, which is tangent
//! to the sphere, orthogonal to `V` and vanishes where the sphere is tangent to
//! the plane field. The origin lies on the fiber `l` with direction `u0`, so
//! `+-r u0` are always singular.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fibration::{FibrationSpec, OrientedLine};
use crate::numeric::{rk4_step, NumericError, UnitVec3, Vec3};

/// Points farther than this from the sphere are rejected.
pub const SPHERE_TOL: f64 = 1e-8;

/// Leaf steps shrink linearly once a leaf is within this angle of a known singularity.
const SLOW_ZONE: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Termination {
    /// `|X| < eps_stop`; `sign` is `+1` near `r u0` and `-1` near `-r u0`.
    ReachedSingularity {
        sign: i8,
    },
    MaxSteps,
    /// Completed the requested longitude without closing up.
    FullTurn,
    /// Completed the requested longitude and came back within `angle_tol` of its start.
    ClosedCandidate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FoliationLeaf {
    pub radius: f64,
    pub points: Vec<Vec3>,
    /// Longitude swept up to each point.
    pub longitudes: Vec<f64>,
    pub termination: Termination,
    /// Signed longitude swept about the `u0` axis, radians.
    pub longitude: f64,
    /// Polar angle (from `u0`) where the requested longitude was reached.
    pub return_polar: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LeafConfig {
    /// Arc-length step away from singularities.
    pub step: f64,
    pub max_steps: usize,
    pub eps_stop: f64,
    pub angle_tol: f64,
    /// Stop once `|longitude|` reaches this value.
    pub stop_at_longitude: Option<f64>,
}

impl Default for LeafConfig {
    fn default() -> Self {
        Self { step: 1e-3, max_steps: 200_000, eps_stop: 1e-6, angle_tol: 1e-3, stop_at_longitude: None }
    }
}

/// `+-r u0` with `u0` the direction of the fiber through the origin.
pub fn sphere_singularities(spec: &FibrationSpec, r: f64) -> Result<[Vec3; 2]> {
    check_radius(r)?;
    let u0 = spec.direction(Vec3::ZERO)?.get();
    Ok([u0 * r, u0 * -r])
}

fn check_radius(r: f64) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("sphere radius must be positive, got {r}")));
    }
    Ok(())
}

fn check_on_sphere(x: Vec3, r: f64) -> Result<()> {
    let defect = (x.norm() - r).abs();
    if !(defect <= SPHERE_TOL) {
        return Err(Error::OffSphere { radius: r, defect });
    }
    Ok(())
}

/// `X(x) = x/|x| x V(x)` for `x` on `S_r`.
pub fn char_foliation_field(spec: &FibrationSpec, x: Vec3, r: f64) -> Result<Vec3> {
    check_on_sphere(x, r)?;
    field(spec, x)
}

fn field(spec: &FibrationSpec, x: Vec3) -> Result<Vec3> {
    let n = x / x.norm();
    Ok(n.cross(spec.direction(x)?.get()))
}

/// Orthonormal `(m1, m2)` completing `u0` to a right-handed frame.
fn axis_frame(u0: UnitVec3) -> (Vec3, Vec3) {
    let m1 = u0.any_orthogonal().get();
    (m1, u0.get().cross(m1))
}

struct Sphere {
    r: f64,
    u0: Vec3,
    m1: Vec3,
    m2: Vec3,
}

impl Sphere {
    fn new(spec: &FibrationSpec, r: f64) -> Result<Sphere> {
        check_radius(r)?;
        let u0 = spec.direction(Vec3::ZERO)?;
        let (m1, m2) = axis_frame(u0);
        Ok(Sphere { r, u0: u0.get(), m1, m2 })
    }

    fn polar(&self, x: Vec3) -> f64 {
        x.cross(self.u0).norm().atan2(x.dot(self.u0))
    }

    fn longitude(&self, x: Vec3) -> f64 {
        x.dot(self.m2).atan2(x.dot(self.m1))
    }

    /// Point at polar angle `phi` on the meridian of longitude 0.
    fn meridian(&self, phi: f64) -> Vec3 {
        (self.u0 * phi.cos() + self.m1 * phi.sin()) * self.r
    }

    fn project(&self, x: Vec3) -> Vec3 {
        x * (self.r / x.norm())
    }
}

fn wrap(a: f64) -> f64 {
    (a + PI).rem_euclid(TAU) - PI
}

/// Integrates the normalized field `X/|X|` from `x0` with RK4, projecting back
/// to the sphere after every step.
pub fn integrate_leaf(spec: &FibrationSpec, r: f64, x0: Vec3, cfg: &LeafConfig) -> Result<FoliationLeaf> {
    let sphere = Sphere::new(spec, r)?;
    check_on_sphere(x0, r)?;
    let x0_field = field(spec, x0)?.norm();
    if !(x0_field > cfg.eps_stop) {
        return Err(Error::Precondition(format!("start point is singular (|X| = {x0_field:e})")));
    }
    run_leaf(spec, &sphere, x0, cfg)
}

fn run_leaf(spec: &FibrationSpec, sphere: &Sphere, x0: Vec3, cfg: &LeafConfig) -> Result<FoliationLeaf> {
    let start_polar = sphere.polar(x0);
    let mut unit_field = |_: f64, y: &[f64; 3]| -> Result<[f64; 3]> {
        let x = sphere.project(Vec3::from_array(*y));
        let f = field(spec, x)?;
        let n = f.norm();
        if n == 0.0 {
            return Err(NumericError::ZeroVector.into());
        }
        Ok((f / n).to_array())
    };
    let mut x = x0;
    let mut points = vec![x0];
    let mut longitudes = vec![0.0];
    let mut longitude = 0.0;
    let leaf = |points, longitudes, termination, longitude, return_polar| FoliationLeaf {
        radius: sphere.r,
        points,
        longitudes,
        termination,
        longitude,
        return_polar,
    };
    for _ in 0..cfg.max_steps {
        if field(spec, x)?.norm() < cfg.eps_stop {
            let sign = if x.dot(sphere.u0) >= 0.0 { 1 } else { -1 };
            return Ok(leaf(points, longitudes, Termination::ReachedSingularity { sign }, longitude, None));
        }
        let polar = sphere.polar(x);
        let to_singularity = polar.min(PI - polar);
        let h = cfg.step * (to_singularity / SLOW_ZONE).min(1.0);
        let y = match rk4_step(&mut unit_field, 0.0, &x.to_array(), h) {
            Ok(y) => sphere.project(Vec3::from_array(y)),
            Err(Error::Numeric(NumericError::ZeroVector)) => {
                let sign = if x.dot(sphere.u0) >= 0.0 { 1 } else { -1 };
                return Ok(leaf(points, longitudes, Termination::ReachedSingularity { sign }, longitude, None));
            }
            Err(e) => return Err(e),
        };
        let prev = longitude;
        longitude += wrap(sphere.longitude(y) - sphere.longitude(x));
        points.push(y);
        longitudes.push(longitude);
        if let Some(target) = cfg.stop_at_longitude {
            if longitude.abs() >= target {
                let frac = (target - prev.abs()) / (longitude.abs() - prev.abs());
                let back = sphere.polar(x);
                let ret = back + frac * (sphere.polar(y) - back);
                let closed = (ret - start_polar).abs() <= cfg.angle_tol;
                let term = if closed { Termination::ClosedCandidate } else { Termination::FullTurn };
                return Ok(leaf(points, longitudes, term, longitude, Some(ret)));
            }
        }
        x = y;
    }
    Ok(leaf(points, longitudes, Termination::MaxSteps, longitude, None))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanConfig {
    pub samples: usize,
    /// Meridian samples run over `[margin, pi - margin]`.
    pub polar_margin: f64,
    pub leaf: LeafConfig,
    pub bisect_iters: usize,
    /// Meridians searched for singularities other than `+-r u0`.
    pub check_meridians: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            samples: 32,
            polar_margin: 0.05,
            leaf: LeafConfig { stop_at_longitude: Some(TAU), ..LeafConfig::default() },
            bisect_iters: 40,
            check_meridians: 24,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReturnMapRecord {
    pub phi: f64,
    /// `R(phi)`, present when the leaf completed a full turn.
    pub return_angle: Option<f64>,
    pub winding: i8,
    pub status: Termination,
}

impl ReturnMapRecord {
    fn defect(&self) -> Option<f64> {
        self.return_angle.map(|r| r - self.phi)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ScanVerdict {
    NoClosedLeaf,
    ClosedLeafCandidate { phi: f64, defect: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanReport {
    pub label: String,
    pub radius: f64,
    pub records: Vec<ReturnMapRecord>,
    pub verdict: ScanVerdict,
    /// Smallest `|R(phi) - phi|` over leaves that returned.
    pub min_margin: Option<f64>,
    pub tolerances: BTreeMap<String, f64>,
}

/// Interior polar angles on one meridian where `|X|` has a zero, away from `+-u0`.
///
/// Local minima of `|X|` on a 180-point sampling are refined by golden-section
/// search; a minimum below `eps_stop` is reported as a singularity.
pub fn stray_singularities(spec: &FibrationSpec, r: f64, meridians: usize, eps_stop: f64) -> Result<Vec<Vec3>> {
    let sphere = Sphere::new(spec, r)?;
    const N: usize = 180;
    const POLE_GAP: f64 = 0.05;
    let found: Vec<Vec<Vec3>> = (0..meridians.max(1))
        .into_par_iter()
        .map(|k| -> Result<Vec<Vec3>> {
            let lon = TAU * k as f64 / meridians.max(1) as f64;
            let (s, c) = lon.sin_cos();
            let at = |phi: f64| (sphere.u0 * phi.cos() + (sphere.m1 * c + sphere.m2 * s) * phi.sin()) * sphere.r;
            let mag = |phi: f64| field(spec, at(phi)).map(|f| f.norm());
            let phis: Vec<f64> = (0..=N).map(|i| POLE_GAP + (PI - 2.0 * POLE_GAP) * i as f64 / N as f64).collect();
            let vals: Vec<f64> = phis.iter().map(|&p| mag(p)).collect::<Result<_>>()?;
            let mut out = Vec::new();
            for i in 1..N {
                if vals[i] <= vals[i - 1] && vals[i] <= vals[i + 1] {
                    let (phi, v) = golden_min(&mag, phis[i - 1], phis[i + 1])?;
                    if v < eps_stop {
                        out.push(at(phi));
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(found.into_iter().flatten().collect())
}

fn golden_min(f: &dyn Fn(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<(f64, f64)> {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > 1e-12 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    let m = 0.5 * (a + b);
    Ok((m, f(m)?))
}

/// Return map of the characteristic foliation on `S_r` along one meridian.
pub fn scan_closed_leaves(spec: &FibrationSpec, r: f64, cfg: &ScanConfig) -> Result<ScanReport> {
    let sphere = Sphere::new(spec, r)?;
    if cfg.samples < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 meridian samples, got {}", cfg.samples)));
    }
    let stray = stray_singularities(spec, r, cfg.check_meridians, cfg.leaf.eps_stop)?;
    if let Some(x) = stray.first() {
        return Err(Error::Precondition(format!(
            "characteristic foliation on S_{r} has more than two singularities ({} found, e.g. {:?})",
            stray.len() + 2,
            x.to_array()
        )));
    }
    let mut leaf_cfg = cfg.leaf.clone();
    leaf_cfg.stop_at_longitude.get_or_insert(TAU);

    let record = |phi: f64| -> Result<ReturnMapRecord> {
        let leaf = run_leaf(spec, &sphere, sphere.meridian(phi), &leaf_cfg)?;
        let winding = if leaf.longitude > 0.0 {
            1
        } else if leaf.longitude < 0.0 {
            -1
        } else {
            0
        };
        Ok(ReturnMapRecord { phi, return_angle: leaf.return_polar, winding, status: leaf.termination })
    };
    let records: Vec<ReturnMapRecord> = sample_polars(cfg).into_par_iter().map(record).collect::<Result<_>>()?;

    let mut verdict = ScanVerdict::NoClosedLeaf;
    for w in records.windows(2) {
        let (Some(da), Some(db)) = (w[0].defect(), w[1].defect()) else {
            continue;
        };
        if da.signum() == db.signum() || w[0].winding != w[1].winding {
            continue;
        }
        if let Some((phi, defect)) = bisect_return(&record, w[0], w[1], cfg.bisect_iters)? {
            if defect.abs() <= cfg.leaf.angle_tol {
                verdict = ScanVerdict::ClosedLeafCandidate { phi, defect };
                break;
            }
        }
    }
    let min_margin = records.iter().filter_map(|r| r.defect()).map(f64::abs).reduce(f64::min);
    let tolerances = BTreeMap::from([
        ("angle_tol".to_string(), cfg.leaf.angle_tol),
        ("eps_stop".to_string(), cfg.leaf.eps_stop),
        ("polar_margin".to_string(), cfg.polar_margin),
        ("step".to_string(), cfg.leaf.step),
    ]);
    Ok(ScanReport { label: spec.label().to_string(), radius: r, records, verdict, min_margin, tolerances })
}

fn sample_polars(cfg: &ScanConfig) -> Vec<f64> {
    let span = PI - 2.0 * cfg.polar_margin;
    (0..cfg.samples).map(|k| cfg.polar_margin + span * k as f64 / (cfg.samples - 1) as f64).collect()
}

/// The leaves started by [`scan_closed_leaves`], one per meridian sample.
pub fn meridian_leaves(spec: &FibrationSpec, r: f64, cfg: &ScanConfig) -> Result<Vec<FoliationLeaf>> {
    let sphere = Sphere::new(spec, r)?;
    if cfg.samples < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 meridian samples, got {}", cfg.samples)));
    }
    let mut leaf_cfg = cfg.leaf.clone();
    leaf_cfg.stop_at_longitude.get_or_insert(TAU);
    sample_polars(cfg).into_par_iter().map(|phi| run_leaf(spec, &sphere, sphere.meridian(phi), &leaf_cfg)).collect()
}

/// Bisects a sign change of `R(phi) - phi`; `None` if a midpoint leaf fails to return.
fn bisect_return(
    record: &(dyn Fn(f64) -> Result<ReturnMapRecord> + Sync),
    mut lo: ReturnMapRecord,
    mut hi: ReturnMapRecord,
    iters: usize,
) -> Result<Option<(f64, f64)>> {
    for _ in 0..iters {
        let mid = record(0.5 * (lo.phi + hi.phi))?;
        let Some(dm) = mid.defect() else {
            return Ok(None);
        };
        if dm.signum() == lo.defect().unwrap_or(0.0).signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let best =
        if lo.defect().unwrap_or(f64::INFINITY).abs() <= hi.defect().unwrap_or(f64::INFINITY).abs() { lo } else { hi };
    Ok(best.defect().map(|d| (best.phi, d)))
}

/// Height-critical point of a closed curve on `S_r` and the fiber through it.
///
/// At a height extremum of a closed Legendrian curve, the fiber through the
/// point lies in the plane spanned by `u0` and the point, so it meets or is
/// parallel to `l`. The report measures how far the input is from that.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeightDiagnostic {
    pub index: usize,
    pub point: Vec3,
    pub height: f64,
    /// `|<T, V>|` at the critical point for the unit tangent `T`.
    pub tangent_defect: f64,
    pub max_tangent_defect: f64,
    /// Angle between the fiber through `q` and the plane `span(u0, q)`.
    pub fiber_plane_angle: f64,
    /// Angle between the fiber through `q` and `l`, folded into `[0, pi/2]`.
    pub fiber_axis_angle: f64,
    pub fiber_axis_distance: f64,
    pub intersects_or_parallel: bool,
}

/// Fibers closer than this to the plane `span(u0, q)` are flagged as coplanar with `l`.
pub const COPLANAR_TOL: f64 = 1e-6;

pub fn height_critical_diagnostic(spec: &FibrationSpec, curve: &[Vec3], r: f64) -> Result<HeightDiagnostic> {
    const MIN_SAMPLES: usize = 8;
    if curve.len() < MIN_SAMPLES {
        return Err(Error::DegenerateCurve { min: MIN_SAMPLES, got: curve.len() });
    }
    let sphere = Sphere::new(spec, r)?;
    let n = curve.len();
    let mut defects = Vec::with_capacity(n);
    for (i, &x) in curve.iter().enumerate() {
        check_on_sphere(x, r)?;
        let v = spec.direction(x)?;
        if x.normalized()?.get().cross(v.get()).norm() < LeafConfig::default().eps_stop {
            return Err(Error::Precondition(format!("curve passes through a singular point at sample {i}")));
        }
        let t = (curve[(i + 1) % n] - curve[(i + n - 1) % n]).normalized()?;
        defects.push(t.get().dot(v.get()).abs());
    }
    let (index, height) = curve
        .iter()
        .map(|x| x.dot(sphere.u0))
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, h)| if h > best.1 { (i, h) } else { best });
    let q = curve[index];
    let v = spec.direction(q)?.get();
    let normal = sphere.u0.cross(q).normalized()?.get();
    let fiber_plane_angle = v.dot(normal).abs().min(1.0).asin();
    let cos_axis = v.dot(sphere.u0).abs().min(1.0);
    let axis = OrientedLine::through(Vec3::ZERO, UnitVec3::try_from_unit(sphere.u0)?);
    let fiber = spec.line_through(q)?;
    Ok(HeightDiagnostic {
        index,
        point: q,
        height,
        tangent_defect: defects[index],
        max_tangent_defect: defects.iter().copied().fold(0.0, f64::max),
        fiber_plane_angle,
        fiber_axis_angle: cos_axis.acos(),
        fiber_axis_distance: axis.distance_between(&fiber),
        intersects_or_parallel: fiber_plane_angle <= COPLANAR_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fibration::{catalog, Orientation, VField};
    use crate::numeric::rotation_about;

    fn hopf() -> FibrationSpec {
        catalog::hopf(Orientation::Positive)
    }

    #[test]
    fn singularities_on_the_fiber_through_the_origin() {
        let [a, b] = sphere_singularities(&hopf(), 1.0).unwrap();
        assert_eq!((a, b), (Vec3::Z, -Vec3::Z));
        let [a, _] = sphere_singularities(&catalog::capped_arctan(), 3.0).unwrap();
        assert_eq!(a, Vec3::Z * 3.0);
        let [a, b] = sphere_singularities(&catalog::planar_twist("y").unwrap(), 2.0).unwrap();
        assert!((a - Vec3::Z * 2.0).norm() < 1e-15 && (b + Vec3::Z * 2.0).norm() < 1e-15);
        assert!(sphere_singularities(&hopf(), 0.0).is_err());
    }

    #[test]
    fn field_by_hand() {
        // (1, 0, 0) x (0, 1, 1)/sqrt2 = (0, -1, 1)/sqrt2.
        let x = char_foliation_field(&hopf(), Vec3::X, 1.0).unwrap();
        assert!((x - Vec3::new(0.0, -1.0, 1.0) / 2f64.sqrt()).norm() < 1e-15);
        assert!(char_foliation_field(&hopf(), Vec3::Z, 1.0).unwrap().norm() < 1e-8);
        let twist = catalog::planar_twist("y").unwrap();
        assert!(char_foliation_field(&twist, Vec3::Z * 2.0, 2.0).unwrap().norm() < 1e-15);
        assert!(matches!(char_foliation_field(&hopf(), Vec3::X * 1.1, 1.0), Err(Error::OffSphere { .. })));
    }

    #[test]
    fn field_is_tangent_and_in_the_plane_field() {
        let spec = catalog::capped_arctan();
        let x = Vec3::new(0.3, -1.1, 0.9).normalized().unwrap().get() * 2.0;
        let f = char_foliation_field(&spec, x, 2.0).unwrap();
        assert!(f.dot(x).abs() < 1e-14);
        assert!(f.dot(spec.direction(x).unwrap().get()).abs() < 1e-14);
    }

    #[test]
    fn hopf_equator_leaf_spirals_into_a_pole() {
        let cfg = LeafConfig::default();
        let leaf = integrate_leaf(&hopf(), 1.0, Vec3::X, &cfg).unwrap();
        assert!(matches!(leaf.termination, Termination::ReachedSingularity { .. }), "{:?}", leaf.termination);
        assert!(leaf.longitude.abs() > TAU);
        assert!(leaf.points.iter().all(|p| (p.norm() - 1.0).abs() <= SPHERE_TOL));

        let half = integrate_leaf(&hopf(), 1.0, Vec3::X, &LeafConfig { step: cfg.step / 2.0, ..cfg.clone() }).unwrap();
        assert_eq!(half.termination, leaf.termination);
        assert!((half.longitude - leaf.longitude).abs() < 1e-2 * leaf.longitude.abs());
    }

    #[test]
    fn near_singular_start_terminates_quickly() {
        let x0 = (Vec3::Z + Vec3::X * 0.01).normalized().unwrap().get();
        let leaf = integrate_leaf(&hopf(), 1.0, x0, &LeafConfig::default()).unwrap();
        let sink = integrate_leaf(&hopf(), 1.0, Vec3::X, &LeafConfig::default()).unwrap().termination;
        if leaf.termination == sink {
            assert!(leaf.points.len() < 5_000, "{}", leaf.points.len());
        }
        assert!(matches!(leaf.termination, Termination::ReachedSingularity { .. }));
    }

    #[test]
    fn degenerate_leaves_still_integrate() {
        let spec = catalog::degenerate(3).unwrap();
        let cfg = LeafConfig { max_steps: 2_000, ..LeafConfig::default() };
        let leaf = integrate_leaf(&spec, 1.0, Vec3::X, &cfg).unwrap();
        assert!(leaf.points.len() > 1);
    }

    #[test]
    fn singular_start_is_rejected() {
        assert!(matches!(integrate_leaf(&hopf(), 1.0, Vec3::Z, &LeafConfig::default()), Err(Error::Precondition(_))));
    }

    #[test]
    fn hopf_scan_finds_no_closed_leaf() {
        let cfg = ScanConfig { samples: 8, ..ScanConfig::default() };
        let report = scan_closed_leaves(&hopf(), 1.0, &cfg).unwrap();
        assert_eq!(report.verdict, ScanVerdict::NoClosedLeaf);
        for rec in &report.records {
            if let Some(r) = rec.return_angle {
                assert!(r > 0.0 && r < PI);
            }
        }
    }

    #[test]
    fn extra_singularities_fail_the_precondition() {
        // V = (x, y, 1) is normal to S_sqrt2 along the whole circle z = 1.
        let spec = FibrationSpec::field("normal on a latitude", VField::parse("x", "y", "1").unwrap());
        let r = 2f64.sqrt();
        assert!(!stray_singularities(&spec, r, 4, 1e-6).unwrap().is_empty());
        assert!(matches!(scan_closed_leaves(&spec, r, &ScanConfig::default()), Err(Error::Precondition(_))));
        assert!(stray_singularities(&hopf(), 1.0, 8, 1e-6).unwrap().is_empty());
    }

    fn circle(phi0: f64, tilt: f64, n: usize) -> Vec<Vec3> {
        let rot = rotation_about(Vec3::Y, tilt);
        (0..n)
            .map(|k| {
                let t = TAU * k as f64 / n as f64;
                rot * Vec3::new(phi0.sin() * t.cos(), phi0.sin() * t.sin(), phi0.cos())
            })
            .collect()
    }

    #[test]
    fn latitude_is_not_legendrian_for_hopf() {
        let d = height_critical_diagnostic(&hopf(), &circle(1.0, 0.0, 64), 1.0).unwrap();
        assert!(d.tangent_defect > 0.1, "{d:?}");
        assert!(!d.intersects_or_parallel);
    }

    #[test]
    fn coplanar_fiber_is_flagged() {
        // Planar twist fibers over y = 0 are vertical, so the top point of a
        // circle tilted about the y axis has its fiber parallel to l.
        let spec = catalog::planar_twist("y").unwrap();
        let d = height_critical_diagnostic(&spec, &circle(0.5, 0.3, 64), 1.0).unwrap();
        assert_eq!(d.index, 32);
        assert!(d.intersects_or_parallel, "{d:?}");
        assert!(d.fiber_axis_angle < 1e-12);
    }

    #[test]
    fn short_curves_are_rejected() {
        assert!(matches!(
            height_critical_diagnostic(&hopf(), &circle(1.0, 0.0, 5), 1.0),
            Err(Error::DegenerateCurve { min: 8, got: 5 })
        ));
    }
}
