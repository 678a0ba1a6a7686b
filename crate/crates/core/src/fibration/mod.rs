//! Fibrations of R^3 by oriented lines.
//!
//! A fibration is given either by a B-map on a transverse plane, where the
//! fiber through the base point `p` is `t -> p + t (B(p), 1)` in frame
//! coordinates, or directly by a unit vector field whose integral curves are
//! the fibers.

mod bmap;
pub mod catalog;
mod certify;
mod vfield;

use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numeric::{newton2, Mat2, Mat3, SolverConfig, UnitVec3, Vec2, Vec3};

pub use bmap::{BMap, Profile};
pub use certify::{
    certify_covering, certify_nondegenerate, certify_skew, direction_image, nondegeneracy_forms,
    probe_continuity_at_infinity, skew_determinant, verify_line_field, CoveringOptions, DirectionImage,
    NondegeneracyForms, PairSampling, NONDEGENERATE_ZERO, SKEW_ZERO,
};
pub use vfield::VField;

/// Sign of a skew fibration: whether `det(p - q, B(p) - B(q))` is positive or negative.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Orientation {
    Positive,
    Negative,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Positive => 1.0,
            Orientation::Negative => -1.0,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Orientation::Positive => 1,
            Orientation::Negative => -1,
        }
    }

    pub fn from_i8(s: i8) -> Option<Orientation> {
        match s {
            1 => Some(Orientation::Positive),
            -1 => Some(Orientation::Negative),
            _ => None,
        }
    }

    /// Orientation of a nonzero real; `None` for zero or NaN.
    pub fn of(x: f64) -> Option<Orientation> {
        if x > 0.0 {
            Some(Orientation::Positive)
        } else if x < 0.0 {
            Some(Orientation::Negative)
        } else {
            None
        }
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:+}", self.as_i8())
    }
}

impl Serialize for Orientation {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i8(self.as_i8())
    }
}

/// Right-handed orthonormal frame; `e3` is the vertical, the plane is `origin + span(e1, e2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Frame {
    pub origin: Vec3,
    pub e1: UnitVec3,
    pub e2: UnitVec3,
    pub e3: UnitVec3,
}

impl Frame {
    pub const TOL: f64 = 1e-12;

    pub const STANDARD: Frame = Frame { origin: Vec3::ZERO, e1: UnitVec3::X, e2: UnitVec3::Y, e3: UnitVec3::Z };

    pub fn new(origin: Vec3, e1: Vec3, e2: Vec3, e3: Vec3) -> Result<Frame> {
        let unit = |v: Vec3, name: &str| {
            UnitVec3::try_from_unit(v).map_err(|_| Error::InvalidFrame(format!("{name} is not unit length")))
        };
        let frame = Frame { origin, e1: unit(e1, "e1")?, e2: unit(e2, "e2")?, e3: unit(e3, "e3")? };
        let worst = e1.dot(e2).abs().max(e1.dot(e3).abs()).max(e2.dot(e3).abs());
        if worst > Self::TOL {
            return Err(Error::InvalidFrame(format!("axes not orthogonal (|dot| = {worst:e})")));
        }
        let det = crate::numeric::det3(e1, e2, e3);
        if (det - 1.0).abs() > Self::TOL {
            return Err(Error::InvalidFrame(format!("not right-handed (det = {det})")));
        }
        if !origin.is_finite() {
            return Err(Error::InvalidFrame("origin is not finite".into()));
        }
        Ok(frame)
    }

    /// Frame whose axes are the columns of the rotation `r`.
    pub fn from_rotation(origin: Vec3, r: &Mat3) -> Result<Frame> {
        Frame::new(origin, r.col(0), r.col(1), r.col(2))
    }

    /// Columns are `e1, e2, e3`.
    pub fn rotation(&self) -> Mat3 {
        Mat3::from_columns(self.e1.get(), self.e2.get(), self.e3.get())
    }

    pub fn vec_to_world(&self, v: Vec3) -> Vec3 {
        self.e1.get() * v.x + self.e2.get() * v.y + self.e3.get() * v.z
    }

    pub fn vec_to_local(&self, w: Vec3) -> Vec3 {
        Vec3::new(w.dot(self.e1.get()), w.dot(self.e2.get()), w.dot(self.e3.get()))
    }

    pub fn to_world(&self, local: Vec3) -> Vec3 {
        self.origin + self.vec_to_world(local)
    }

    pub fn to_local(&self, world: Vec3) -> Vec3 {
        self.vec_to_local(world - self.origin)
    }
}

/// Value of a map R^2 -> R^2 with its Jacobian.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Jet2 {
    pub value: Vec2,
    pub jacobian: Mat2,
}

/// Oriented line as unit direction `u` and foot of perpendicular `v`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OrientedLine {
    pub u: UnitVec3,
    pub v: Vec3,
}

impl OrientedLine {
    /// The line through `a` with direction `u`.
    pub fn through(a: Vec3, u: UnitVec3) -> OrientedLine {
        let uv = u.get();
        OrientedLine { u, v: a - uv * a.dot(uv) }
    }

    pub fn distance_to(&self, x: Vec3) -> f64 {
        let w = x - self.v;
        (w - self.u.get() * w.dot(self.u.get())).norm()
    }

    /// Distance between the two lines; parallel lines use the foot offset.
    pub fn distance_between(&self, other: &OrientedLine) -> f64 {
        let n = self.u.get().cross(other.u.get());
        let nn = n.norm();
        if nn < 1e-12 {
            return self.distance_to(other.v);
        }
        ((other.v - self.v).dot(n) / nn).abs()
    }
}

/// Result of solving `p + z B(p) = (xi, eta)` for the base point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BaseSolution {
    pub p: Vec2,
    /// `I + z dB` at the solution.
    pub jacobian: Mat2,
    pub residual: f64,
    pub stages: usize,
}

#[derive(Clone, Debug)]
pub enum Representation {
    Planar { frame: Frame, bmap: BMap },
    Field(VField),
}

/// A fibration of R^3 by oriented lines. Immutable apart from the cached orientation.
#[derive(Clone, Debug)]
pub struct FibrationSpec {
    label: String,
    repr: Representation,
    solver: SolverConfig,
    orientation: Arc<OnceLock<Orientation>>,
}

impl FibrationSpec {
    pub fn planar(label: impl Into<String>, frame: Frame, bmap: BMap) -> FibrationSpec {
        FibrationSpec {
            label: label.into(),
            repr: Representation::Planar { frame, bmap },
            solver: SolverConfig::default(),
            orientation: Arc::default(),
        }
    }

    pub fn field(label: impl Into<String>, field: VField) -> FibrationSpec {
        FibrationSpec {
            label: label.into(),
            repr: Representation::Field(field),
            solver: SolverConfig::default(),
            orientation: Arc::default(),
        }
    }

    pub fn with_solver(mut self, solver: SolverConfig) -> FibrationSpec {
        self.solver = solver;
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn representation(&self) -> &Representation {
        &self.repr
    }

    pub fn solver(&self) -> &SolverConfig {
        &self.solver
    }

    pub fn is_planar(&self) -> bool {
        matches!(self.repr, Representation::Planar { .. })
    }

    pub fn planar_parts(&self) -> Result<(&Frame, &BMap)> {
        match &self.repr {
            Representation::Planar { frame, bmap } => Ok((frame, bmap)),
            Representation::Field(_) => Err(Error::WrongRepresentation { expected: "B-map" }),
        }
    }

    pub fn vfield(&self) -> Result<&VField> {
        match &self.repr {
            Representation::Field(v) => Ok(v),
            Representation::Planar { .. } => Err(Error::WrongRepresentation { expected: "vector-field" }),
        }
    }

    /// Distinguished vertical: `e3` of the frame, or world `z` for fields.
    pub fn vertical(&self) -> UnitVec3 {
        match &self.repr {
            Representation::Planar { frame, .. } => frame.e3,
            Representation::Field(_) => UnitVec3::Z,
        }
    }

    /// Orientation established by a passing certificate, if any.
    pub fn orientation(&self) -> Option<Orientation> {
        self.orientation.get().copied()
    }

    /// Caches `found`, or checks it against the cached value.
    pub fn record_orientation(&self, found: Orientation) -> Result<()> {
        let cached = *self.orientation.get_or_init(|| found);
        if cached != found {
            return Err(Error::OrientationMismatch { cached: cached.as_i8(), found: found.as_i8() });
        }
        Ok(())
    }

    /// `B(p)` and `dB_p` in frame coordinates.
    pub fn eval_b(&self, p: Vec2) -> Result<Jet2> {
        let (_, bmap) = self.planar_parts()?;
        bmap.jet(p)
    }

    /// Solves `p + z B(p) = (xi, eta)` for `local = (xi, eta, z)` in frame coordinates.
    ///
    /// Newton continuation over `m = max(1, ceil|z|)` stages at heights `z j / m`,
    /// each warm-started from the previous root. The residual tolerance is
    /// scaled by `max(1, |(xi, eta)|)`.
    pub fn solve_base(&self, local: Vec3) -> Result<BaseSolution> {
        let (_, bmap) = self.planar_parts()?;
        let target = local.xy();
        let z = local.z;
        if !local.is_finite() {
            return Err(Error::InvalidParameter(format!("non-finite point {local:?}")));
        }
        let mut cfg = self.solver.clone();
        cfg.residual_tol *= target.norm().max(1.0);
        let stages = if z == 0.0 { 0 } else { (z.abs().ceil() as usize).max(1) };
        let mut p = target;
        for j in 1..=stages {
            let zj = z * j as f64 / stages as f64;
            let sol = newton2(
                |q: Vec2| -> Result<(Vec2, Mat2)> {
                    let jet = bmap.jet(q)?;
                    Ok((q + jet.value * zj - target, Mat2::IDENTITY + jet.jacobian.scale(zj)))
                },
                p,
                &cfg,
            )?;
            p = sol.root;
        }
        let jet = bmap.jet(p)?;
        Ok(BaseSolution {
            p,
            jacobian: Mat2::IDENTITY + jet.jacobian.scale(z),
            residual: (p + jet.value * z - target).norm(),
            stages,
        })
    }

    /// Base point of the fiber through the world point `x`.
    pub fn base_point(&self, x: Vec3) -> Result<Vec2> {
        let (frame, _) = self.planar_parts()?;
        Ok(self.solve_base(frame.to_local(x))?.p)
    }

    /// World direction of the fiber with base point `p`, `(B(p), 1)/sqrt(1 + |B|^2)` in the frame.
    pub fn direction_at_base(&self, p: Vec2) -> Result<UnitVec3> {
        let (frame, bmap) = self.planar_parts()?;
        let b = bmap.jet(p)?.value;
        Ok(UnitVec3::new(frame.vec_to_world(b.extend(1.0)))?)
    }

    /// Unit direction of the fiber through the world point `x`.
    pub fn direction(&self, x: Vec3) -> Result<UnitVec3> {
        match &self.repr {
            Representation::Planar { .. } => self.direction_at_base(self.base_point(x)?),
            Representation::Field(v) => v.eval(x),
        }
    }

    /// Exact Jacobian of the direction field at `x` (rows are components).
    ///
    /// For B-maps this differentiates the implicit base solve:
    /// `dp = M^-1 [I | -B]` with `M = I + z dB`, then `du = (I - u u^T)/n [dB; 0] dp`.
    pub fn direction_jacobian(&self, x: Vec3) -> Result<Mat3> {
        match &self.repr {
            Representation::Field(v) => v.jacobian(x),
            Representation::Planar { frame, bmap } => {
                let local = frame.to_local(x);
                let sol = self.solve_base(local)?;
                let jet = bmap.jet(sol.p)?;
                let minv =
                    sol.jacobian.inverse().ok_or(crate::numeric::NumericError::SingularJacobian { point: sol.p })?;
                let a = jet.jacobian * minv;
                let b = jet.value;
                let w = b.extend(1.0);
                let n = w.norm();
                let u = w / n;
                let project = |h: Vec2| {
                    let h3 = h.extend(0.0);
                    (h3 - u * u.dot(h3)) / n
                };
                let local_jac = Mat3::from_columns(project(a.col(0)), project(a.col(1)), project(-(a * b)));
                let r = frame.rotation();
                Ok(r * local_jac * r.transpose())
            }
        }
    }

    /// The fiber through the world point `x`.
    pub fn line_through(&self, x: Vec3) -> Result<OrientedLine> {
        match &self.repr {
            Representation::Planar { .. } => self.line_at_base(self.base_point(x)?),
            Representation::Field(v) => Ok(OrientedLine::through(x, v.eval(x)?)),
        }
    }

    /// The fiber with base point `p`.
    pub fn line_at_base(&self, p: Vec2) -> Result<OrientedLine> {
        let (frame, _) = self.planar_parts()?;
        let a = frame.to_world(p.extend(0.0));
        Ok(OrientedLine::through(a, self.direction_at_base(p)?))
    }

    /// `d(p)`: distance from the world origin to the fiber with base point `p`.
    pub fn fiber_distance(&self, p: Vec2) -> Result<f64> {
        Ok(self.line_at_base(p)?.v.norm())
    }

    /// One-line description of the representation for reports.
    pub fn describe(&self) -> String {
        match &self.repr {
            Representation::Planar { bmap, .. } => {
                format!("{}: B-map {}", self.label, bmap.describe())
            }
            Representation::Field(v) => format!("{}: vector field {}", self.label, v.describe()),
        }
    }
}
