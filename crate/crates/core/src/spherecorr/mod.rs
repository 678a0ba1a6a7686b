//! Deformation of a nondegenerate fibration to the Hopf fibration, and the
//! great-circle picture of the Hopf fibration on `S^3`.

mod hemisphere;
mod quat;

pub use hemisphere::{hemisphere_criterion, HemisphereOptions};
pub use quat::{
    align_projected_hopf, central_project, great_circle_samples, hopf_great_circle, project_point, HopfAlignment,
    ProjectedLine, Quat, UPPER_DELTA,
};

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::certificate::{Certificate, Property, Witness};
use crate::error::{Error, Result};
use crate::fibration::{
    certify_nondegenerate, direction_image, nondegeneracy_forms, BMap, FibrationSpec, Frame, Orientation,
};
use crate::numeric::{minimal_rotation, newton2, Grid2, Mat2, UnitVec3, Vec2};

/// Circumcenters and base points this close to the current ones are snapped to them.
pub const FIXED_POINT_TOL: f64 = 1e-12;

/// `<u*, e3>` below this means the circumcenter fiber is nearly parallel to the plane.
const MIN_VERTICAL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct Normalization {
    pub spec: FibrationSpec,
    /// Circumcenter of the direction image, world coordinates of the input.
    pub center: UnitVec3,
    pub cap_radius: f64,
    /// Base point of the fiber with direction `center`, input frame coordinates.
    pub base_point: Vec2,
    /// The new plane, in world coordinates of the input.
    pub frame: Frame,
    pub fixed_point: bool,
}

/// Moves the fiber whose direction is the circumcenter of the direction image
/// to the vertical axis, with the new plane orthogonal to it.
///
/// The new frame sits where that fiber meets the old plane and is the old
/// frame turned by the minimal rotation taking `e3` to the circumcenter. The
/// new map reads the old fibration on that plane, point by point.
pub fn normalize_spec(spec: &FibrationSpec, grid: &Grid2, cap_tol: f64) -> Result<Normalization> {
    let (frame, bmap) = spec.planar_parts()?;
    let nondegenerate = certify_nondegenerate(spec, grid)?;
    if !nondegenerate.passed() {
        return Err(Error::Precondition(format!("{} is not nondegenerate on {}", spec.label(), grid.describe())));
    }
    let image = direction_image(spec, grid, cap_tol)?;
    let mut center = image.cap.center;
    if center.angle_to(frame.e3) <= FIXED_POINT_TOL {
        center = frame.e3;
    }
    let local = frame.vec_to_local(center.get());
    if local.z < MIN_VERTICAL {
        return Err(Error::NearHorizontalFiber(local.z));
    }
    let target = Vec2::new(local.x / local.z, local.y / local.z);

    let pts = grid.points();
    let start = pts
        .iter()
        .map(|&p| bmap.jet(p).map(|j| ((j.value - target).norm(), p)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .chain([(bmap.jet(Vec2::ZERO)?.value - target).norm()].map(|d| (d, Vec2::ZERO)))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, p)| p)
        .unwrap_or(Vec2::ZERO);
    let mut cfg = spec.solver().clone();
    cfg.residual_tol *= target.norm().max(1.0);
    let sol = newton2(
        |p: Vec2| -> Result<(Vec2, Mat2)> {
            let j = bmap.jet(p)?;
            Ok((j.value - target, j.jacobian))
        },
        start,
        &cfg,
    )?;
    let mut base = sol.root;
    if base.norm() <= FIXED_POINT_TOL {
        base = Vec2::ZERO;
    }

    let label = format!("normalized({})", spec.label());
    if center == frame.e3 && base == Vec2::ZERO {
        let same = FibrationSpec::planar(label, Frame::STANDARD, bmap.clone()).with_solver(spec.solver().clone());
        return Ok(Normalization {
            spec: same,
            center,
            cap_radius: image.cap.radius,
            base_point: base,
            frame: *frame,
            fixed_point: true,
        });
    }
    let rotation = minimal_rotation(frame.e3, center) * frame.rotation();
    let new_frame = Frame::from_rotation(frame.to_world(base.extend(0.0)), &rotation)?;
    Ok(Normalization {
        spec: rebase(spec, new_frame, label),
        center,
        cap_radius: image.cap.radius,
        base_point: base,
        frame: new_frame,
        fixed_point: false,
    })
}

/// The fibration `spec` read on the plane of `frame`, in coordinates where
/// `frame` is the standard frame.
pub fn rebase(spec: &FibrationSpec, frame: Frame, label: impl Into<String>) -> FibrationSpec {
    let bmap = BMap::Rebased { inner: Arc::new(spec.clone()), frame };
    FibrationSpec::planar(label, Frame::STANDARD, bmap).with_solver(spec.solver().clone())
}

/// `B_t = (1 - t) B + t sigma J p`, with `sigma` the recorded orientation of `spec`.
pub fn homotopy_at(spec: &FibrationSpec, t: f64) -> Result<FibrationSpec> {
    let (frame, bmap) = spec.planar_parts()?;
    let sigma = spec
        .orientation()
        .ok_or_else(|| Error::Precondition(format!("orientation of {} is not known yet", spec.label())))?;
    let label = format!("{}@t={t}", spec.label());
    Ok(FibrationSpec::planar(label, *frame, BMap::homotopy(bmap.clone(), t, sigma)?).with_solver(spec.solver().clone()))
}

/// Lower-bound violations below this are ignored.
pub const CONVEXITY_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HomotopyStep {
    pub t: f64,
    pub certificate: Certificate,
    /// Minimum over the grid of `lambda_min(sigma S_t)`.
    pub min_margin: f64,
    /// Max over the grid of `(1 - t) m_0 + t m_1 - m_t`.
    pub max_convexity_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HomotopyPath {
    pub label: String,
    pub sigma: Orientation,
    pub steps: Vec<HomotopyStep>,
    pub certificate: Certificate,
}

/// Certifies nondegeneracy along the straight-line homotopy to Hopf at each
/// `t`, and checks pointwise that the margin is at least the convex
/// combination of its endpoint values.
pub fn certify_homotopy(spec: &FibrationSpec, t_values: &[f64], grid: &Grid2) -> Result<HomotopyPath> {
    if t_values.is_empty() || t_values.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(Error::InvalidParameter("homotopy parameters must lie in [0, 1]".into()));
    }
    let base = certify_nondegenerate(spec, grid)?;
    let Some(sigma) = base.orientation.filter(|_| base.passed()) else {
        return Err(Error::Precondition(format!("{} is not nondegenerate on {}", spec.label(), grid.describe())));
    };
    let pts = grid.points();
    let margins = |s: &FibrationSpec| -> Result<Vec<f64>> {
        pts.par_iter().map(|&p| Ok(nondegeneracy_forms(s.eval_b(p)?.jacobian).margin(sigma))).collect()
    };
    let m0 = margins(&homotopy_at(spec, 0.0)?)?;
    let m1 = margins(&homotopy_at(spec, 1.0)?)?;

    let steps: Vec<HomotopyStep> = t_values
        .iter()
        .map(|&t| {
            let st = homotopy_at(spec, t)?;
            let certificate = certify_nondegenerate(&st, grid)?;
            let mt = margins(&st)?;
            let gap = mt
                .iter()
                .zip(m0.iter().zip(&m1))
                .map(|(m, (a, b))| (1.0 - t) * a + t * b - m)
                .fold(f64::NEG_INFINITY, f64::max);
            let min_margin = mt.iter().copied().fold(f64::INFINITY, f64::min);
            Ok(HomotopyStep { t, certificate, min_margin, max_convexity_gap: gap })
        })
        .collect::<Result<_>>()?;

    let mut cert =
        Certificate::new(Property::Homotopy, format!("{} x {} values of t", grid.describe(), t_values.len()))
            .tolerance("convexity_slack", CONVEXITY_SLACK);
    cert.add_violations(
        steps
            .iter()
            .filter(|s| !s.certificate.passed() || s.certificate.orientation != Some(sigma))
            .map(|s| Witness::new("not nondegenerate with the base orientation", vec![vec![s.t]], s.min_margin)),
    );
    cert.add_violations(
        steps
            .iter()
            .filter(|s| s.max_convexity_gap > CONVEXITY_SLACK)
            .map(|s| Witness::new("margin below the convex bound", vec![vec![s.t]], s.max_convexity_gap)),
    );
    cert.settle();
    cert.margin = steps.iter().map(|s| s.min_margin).fold(f64::INFINITY, f64::min);
    cert.metric("max_convexity_gap", steps.iter().map(|s| s.max_convexity_gap).fold(f64::NEG_INFINITY, f64::max));
    if cert.passed() {
        cert.orientation = Some(sigma);
    }
    Ok(HomotopyPath { label: spec.label().to_string(), sigma, steps, certificate: cert })
}

/// `0, 1/(n-1), ..., 1`.
pub fn uniform_t(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}
