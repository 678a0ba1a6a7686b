use std::f64::consts::PI;

use serde::Serialize;

use crate::error::Result;
use crate::numeric::{Vec2, Vec3};

use super::OneForm;

/// Why the lines orthogonal to the overtwisted form do not fibre space.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OvertwistedReport {
    pub cylinder_radius: f64,
    pub cylinder_samples: usize,
    /// Max of `|W x e3| / |W|` on the circle `r = pi, z = 0`.
    pub max_vertical_defect: f64,
    pub interior_point: Vec3,
    pub interior_direction: Vec3,
    /// Parameter along the interior line where it reaches `r = pi`.
    pub crossing_t: f64,
    pub crossing_point: Vec3,
    pub expected_crossing_y: f64,
    pub crossing_y_error: f64,
    /// Direction of `W` at the crossing, the cylinder ruling through it.
    pub ruling_direction: Vec3,
    /// Angle between the two candidate fibers through the crossing.
    pub fiber_angle: f64,
    pub is_fibration: bool,
}

/// Cylinder rulings are vertical to this tolerance.
pub const VERTICAL_TOL: f64 = 1e-10;

pub fn overtwisted_demo() -> Result<OvertwistedReport> {
    const SAMPLES: usize = 360;
    let form = OneForm::overtwisted();
    let w = |x: Vec3| form.coefficients(x);

    let mut max_vertical_defect = 0.0f64;
    for k in 0..SAMPLES {
        let p = Vec2::from_polar(PI, 2.0 * PI * k as f64 / SAMPLES as f64);
        let v = w(p.extend(0.0))?;
        max_vertical_defect = max_vertical_defect.max(v.cross(Vec3::Z).norm() / v.norm());
    }

    let x0 = Vec3::new(2.0, 0.0, 0.0);
    let d = w(x0)?;
    let d = d / d.norm();
    // |xy(x0 + t d)| - pi is increasing in t from the interior; bisect to the last bit.
    let gap = |t: f64| (x0 + d * t).xy().norm() - PI;
    let (mut lo, mut hi) = (0.0, 1.0);
    while gap(hi) < 0.0 {
        hi *= 2.0;
    }
    while hi - lo > f64::EPSILON * hi {
        let mid = 0.5 * (lo + hi);
        if gap(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    let crossing = x0 + d * t;
    let expected_y = (PI * PI - 4.0).sqrt();
    let ruling = w(crossing)?;
    let ruling = ruling / ruling.norm();
    let fiber_angle = d.dot(ruling).abs().min(1.0).acos();
    Ok(OvertwistedReport {
        cylinder_radius: PI,
        cylinder_samples: SAMPLES,
        max_vertical_defect,
        interior_point: x0,
        interior_direction: d,
        crossing_t: t,
        crossing_point: crossing,
        expected_crossing_y: expected_y,
        crossing_y_error: (crossing.y - expected_y).abs(),
        ruling_direction: ruling,
        fiber_angle,
        is_fibration: !(ruling.cross(Vec3::Z).norm() <= VERTICAL_TOL && fiber_angle > VERTICAL_TOL),
    })
}
