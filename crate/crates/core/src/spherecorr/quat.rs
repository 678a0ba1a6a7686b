//! `S^3` as unit quaternions, with `(x1, x2, x3, x4) <-> x4 + x1 i + x2 j + x3 k`,
//! and central projection of the upper hemisphere `x4 > 0` to `R^3` from the
//! tangent point `(0, 0, 0, 1)`.

use std::ops::{Add, Mul};

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fibration::{FibrationSpec, OrientedLine};
use crate::numeric::{Mat3, UnitVec3, Vec3};

/// Samples with `x4` at or below this are not projected.
pub const UPPER_DELTA: f64 = 1e-3;

const UNIT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Quat {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quat {
    pub const ONE: Quat = Quat::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Quat = Quat::new(0.0, 1.0, 0.0, 0.0);

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Quat {
        Quat { w, x, y, z }
    }

    /// From `(x1, x2, x3, x4)`.
    pub fn from_r4(p: [f64; 4]) -> Quat {
        Quat::new(p[3], p[0], p[1], p[2])
    }

    pub fn to_r4(self) -> [f64; 4] {
        [self.x, self.y, self.z, self.w]
    }

    pub fn norm(self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn scale(self, s: f64) -> Quat {
        Quat::new(self.w * s, self.x * s, self.y * s, self.z * s)
    }

    pub fn normalized(self) -> Result<Quat> {
        let n = self.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InvalidParameter("cannot normalize a zero quaternion".into()));
        }
        Ok(self.scale(1.0 / n))
    }

    /// Uniform on `S^3`: a point of the unit ball by rejection, normalized.
    pub fn random_unit(rng: &mut impl Rng) -> Quat {
        loop {
            let mut c = || rng.gen_range(-1.0..=1.0);
            let q = Quat::new(c(), c(), c(), c());
            let n = q.norm();
            if n > 1e-3 && n <= 1.0 {
                return q.scale(1.0 / n);
            }
        }
    }
}

impl Mul for Quat {
    type Output = Quat;
    fn mul(self, o: Quat) -> Quat {
        Quat::new(
            self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        )
    }
}

impl Add for Quat {
    type Output = Quat;
    fn add(self, o: Quat) -> Quat {
        Quat::new(self.w + o.w, self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

fn check_unit(q: Quat) -> Result<()> {
    if (q.norm() - 1.0).abs() > UNIT_TOL {
        return Err(Error::InvalidParameter(format!("quaternion has norm {}, expected 1", q.norm())));
    }
    Ok(())
}

/// `cos t q + sin t (i q)`: the Hopf great circle through `q`.
pub fn hopf_great_circle(q: Quat, t: f64) -> Result<Quat> {
    check_unit(q)?;
    let (s, c) = t.sin_cos();
    Ok(q.scale(c) + (Quat::I * q).scale(s))
}

/// `n` points of the Hopf circle through `q`, evenly spaced in `t`.
pub fn great_circle_samples(q: Quat, n: usize) -> Result<Vec<Quat>> {
    (0..n).map(|k| hopf_great_circle(q, std::f64::consts::TAU * k as f64 / n as f64)).collect()
}

/// `(x1, x2, x3)/x4`, or `None` when `x4 <= UPPER_DELTA`.
pub fn project_point(q: Quat) -> Option<Vec3> {
    (q.w > UPPER_DELTA).then(|| Vec3::new(q.x, q.y, q.z) / q.w)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProjectedLine {
    pub line: OrientedLine,
    /// Max distance from a projected sample to the fitted line.
    pub residual: f64,
    pub used: usize,
}

/// Least-squares line through the projected upper-hemisphere samples, oriented
/// along the sample order.
pub fn central_project(samples: &[Quat]) -> Result<ProjectedLine> {
    let n = samples.len();
    let projected: Vec<Option<Vec3>> = samples.iter().map(|&q| project_point(q)).collect();
    let pts: Vec<Vec3> = projected.iter().flatten().copied().collect();
    if pts.len() < 2 {
        return Err(Error::NoUpperHemispherePoints);
    }
    let centroid = pts.iter().fold(Vec3::ZERO, |a, &p| a + p) / pts.len() as f64;
    let mut cov = Matrix3::<f64>::zeros();
    for p in &pts {
        let d = *p - centroid;
        let v = Vector3::new(d.x, d.y, d.z);
        cov += v * v.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let k = eig.eigenvalues.imax();
    let e = eig.eigenvectors.column(k);
    let mut u = Vec3::new(e[0], e[1], e[2]);
    let step = (0..n).find_map(|i| match (projected[i], projected[(i + 1) % n]) {
        (Some(a), Some(b)) if n > 1 => Some(b - a),
        _ => None,
    });
    if step.is_some_and(|s| s.dot(u) < 0.0) {
        u = -u;
    }
    let line = OrientedLine::through(centroid, u.normalized()?);
    let residual = pts.iter().map(|&p| line.distance_to(p)).fold(0.0, f64::max);
    Ok(ProjectedLine { line, residual, used: pts.len() })
}

/// Rotation carrying the projected Hopf family onto a planar spec, fitted to
/// three fibers, and its worst direction mismatch on random points.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HopfAlignment {
    pub rotation: Mat3,
    pub max_direction_error: f64,
    pub samples: usize,
}

const CIRCLE_SAMPLES: usize = 64;

/// Direction at `y` of the projected Hopf family.
fn projected_direction(y: Vec3) -> Result<Vec3> {
    let q = Quat::new(1.0, y.x, y.y, y.z).normalized()?;
    Ok(central_project(&great_circle_samples(q, CIRCLE_SAMPLES)?)?.line.u.get())
}

/// Proper rotation `R` minimizing `sum |R a_i - b_i|^2` (Kabsch).
fn kabsch(pairs: &[(Vec3, Vec3)]) -> Mat3 {
    let mut h = Matrix3::<f64>::zeros();
    for (a, b) in pairs {
        h += Vector3::new(a.x, a.y, a.z) * Vector3::new(b.x, b.y, b.z).transpose();
    }
    let svd = h.svd(true, true);
    let (u, vt) = (svd.u.expect("u requested"), svd.v_t.expect("v requested"));
    let v = vt.transpose();
    let d = (v * u.transpose()).determinant().signum();
    let r = v * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * u.transpose();
    let row = |i: usize| Vec3::new(r[(i, 0)], r[(i, 1)], r[(i, 2)]);
    Mat3::from_rows(row(0), row(1), row(2))
}

/// Aligns the projected family with `spec` using the fibers through the origin,
/// a unit vector `m` orthogonal to the origin fiber, and `d0 x m`, then compares
/// directions at `samples` random points of `[-2, 2]^3`.
pub fn align_projected_hopf(spec: &FibrationSpec, samples: usize, seed: u64) -> Result<HopfAlignment> {
    let d0 = projected_direction(Vec3::ZERO)?;
    let m = UnitVec3::new(d0)?.any_orthogonal().get();
    let m2 = d0.cross(m);
    let v = |x: Vec3| spec.direction(x).map(UnitVec3::get);
    let pairs = [
        (m, Vec3::X),
        (m2, Vec3::Y),
        (d0, v(Vec3::ZERO)?),
        (projected_direction(m)?, v(Vec3::X)?),
        (projected_direction(m2)?, v(Vec3::Y)?),
    ];
    let rotation = kabsch(&pairs);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let y = Vec3::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let err = (rotation * projected_direction(y)? - v(rotation * y)?).norm();
        worst = worst.max(err);
    }
    Ok(HopfAlignment { rotation, max_direction_error: worst, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fibration::{catalog, Orientation};

    #[test]
    fn products() {
        let j = Quat::new(0.0, 0.0, 1.0, 0.0);
        let k = Quat::new(0.0, 0.0, 0.0, 1.0);
        assert_eq!(Quat::I * j, k);
        assert_eq!(j * Quat::I, k.scale(-1.0));
        assert_eq!(Quat::I * Quat::I, Quat::ONE.scale(-1.0));
        assert_eq!(Quat::from_r4([1.0, 2.0, 3.0, 4.0]).to_r4(), [1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn circle_through_the_pole() {
        let t = 0.7;
        let c = hopf_great_circle(Quat::ONE, t).unwrap();
        assert_eq!(c.to_r4(), [t.sin(), 0.0, 0.0, t.cos()]);
        assert_eq!(hopf_great_circle(Quat::ONE, 0.0).unwrap(), Quat::ONE);
        assert!(hopf_great_circle(Quat::ONE.scale(2.0), 0.1).is_err());
    }

    #[test]
    fn circles_stay_on_the_sphere() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let q = Quat::random_unit(&mut rng);
            let t: f64 = rng.gen_range(-10.0..10.0);
            assert!((hopf_great_circle(q, t).unwrap().norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pole_fiber_projects_to_the_first_axis() {
        let fit = central_project(&great_circle_samples(Quat::ONE, 64).unwrap()).unwrap();
        assert!((fit.line.u.get() - Vec3::X).norm() < 1e-12);
        assert!(fit.line.v.norm() < 1e-12);
        assert!(fit.residual < 1e-8);
    }

    #[test]
    fn projected_fibers_are_straight_and_skew() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut lines = Vec::new();
        for _ in 0..100 {
            let q = Quat::random_unit(&mut rng);
            let fit = central_project(&great_circle_samples(q, 64).unwrap()).unwrap();
            assert!(fit.residual <= 1e-8, "{}", fit.residual);
            lines.push(fit.line);
        }
        for pair in lines.chunks(2) {
            let (a, b) = (pair[0], pair[1]);
            assert!(a.distance_between(&b) > 0.0);
            assert!(a.u.angle_to(b.u) > 1e-9);
        }
    }

    #[test]
    fn lower_hemisphere_only_is_an_error() {
        let below = [Quat::new(-0.5, 0.5, 0.5, 0.5), Quat::new(-1.0, 0.0, 0.0, 0.0)];
        assert!(matches!(central_project(&below), Err(Error::NoUpperHemispherePoints)));
    }

    #[test]
    fn projected_family_is_a_rotated_hopf() {
        let hopf = catalog::hopf(Orientation::Positive);
        let a = align_projected_hopf(&hopf, 50, 3).unwrap();
        assert!(a.max_direction_error < 1e-6, "{a:?}");
        assert!((a.rotation.det() - 1.0).abs() < 1e-12);
    }
}
