//! Lifts of plane paths to curves tangent to the plane field.
//!
//! The plane `P` is the frame plane of a B-map spec, or `z = 0` for a field
//! spec, with vertical `u*`. Over `gamma(t)` the lift is `gamma(t) + z(t) u*` with
//! `z' = -<gamma', V> / <V, u*>`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fibration::{FibrationSpec, Frame, Representation};
use crate::numeric::{rk4_step, Vec2, Vec3};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", deny_unknown_fields)]
pub enum PlanePath {
    Segment {
        from: Vec2,
        to: Vec2,
    },
    /// Counterclockwise from angle 0, `turns` times around.
    Circle {
        center: Vec2,
        radius: f64,
        turns: f64,
    },
    Polyline {
        points: Vec<Vec2>,
    },
}

/// A smooth piece on `s in [0, 1]`.
#[derive(Clone, Copy, Debug)]
enum Piece {
    Segment(Vec2, Vec2),
    Circle { center: Vec2, radius: f64, sweep: f64 },
}

impl Piece {
    fn eval(&self, s: f64) -> (Vec2, Vec2) {
        match *self {
            Piece::Segment(a, b) => (a + (b - a) * s, b - a),
            Piece::Circle { center, radius, sweep } => {
                let th = sweep * s;
                (center + Vec2::from_polar(radius, th), Vec2::from_polar(radius * sweep, th).perp())
            }
        }
    }

    fn length(&self) -> f64 {
        match *self {
            Piece::Segment(a, b) => (b - a).norm(),
            Piece::Circle { radius, sweep, .. } => (radius * sweep).abs(),
        }
    }
}

impl PlanePath {
    fn pieces(&self) -> Result<Vec<Piece>> {
        match self {
            PlanePath::Segment { from, to } => Ok(vec![Piece::Segment(*from, *to)]),
            PlanePath::Circle { center, radius, turns } => {
                if !(*radius >= 0.0 && radius.is_finite() && turns.is_finite()) {
                    return Err(Error::InvalidParameter(format!("bad circle radius {radius} / turns {turns}")));
                }
                Ok(vec![Piece::Circle { center: *center, radius: *radius, sweep: TAU * turns }])
            }
            PlanePath::Polyline { points } => {
                if points.len() < 2 {
                    return Err(Error::InvalidParameter("polyline needs at least two points".into()));
                }
                Ok(points.windows(2).map(|w| Piece::Segment(w[0], w[1])).collect())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LiftConfig {
    /// Minimum `<V, u*>` along the lift.
    pub eps_trans: f64,
    /// Plane arc length per RK4 step.
    pub arc_step: f64,
    /// The lift stops, incomplete, once `|z|` exceeds this.
    pub z_bound: f64,
}

impl Default for LiftConfig {
    fn default() -> Self {
        Self { eps_trans: 1e-4, arc_step: 1e-3, z_bound: 1e6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Lift {
    /// Path parameter in `[0, 1]`; polyline pieces get equal shares.
    pub t: Vec<f64>,
    pub z: Vec<f64>,
    /// Path points in plane coordinates.
    pub plane: Vec<Vec2>,
    pub points: Vec<Vec3>,
    /// `|<(gamma', z'), V>| / |(gamma', z')|` at each sample.
    pub residuals: Vec<f64>,
    /// Max of `|<(gamma', z'), V>| / |(gamma', z')|` over the samples.
    pub max_residual: f64,
    pub complete: bool,
}

impl Lift {
    pub fn last_z(&self) -> f64 {
        *self.z.last().expect("lift holds its initial point")
    }
}

fn plane_frame(spec: &FibrationSpec) -> Frame {
    match spec.representation() {
        Representation::Planar { frame, .. } => *frame,
        Representation::Field(_) => Frame::STANDARD,
    }
}

pub fn legendrian_lift(spec: &FibrationSpec, path: &PlanePath, z0: f64, cfg: &LiftConfig) -> Result<Lift> {
    let frame = plane_frame(spec);
    let u_star = frame.e3.get();
    let pieces = path.pieces()?;
    let m = pieces.len() as f64;

    // Returns (z', residual) at parameter s of `piece`, height z.
    let slope = |piece: &Piece, t: f64, s: f64, z: f64| -> Result<(f64, f64)> {
        let (g, dg) = piece.eval(s);
        let x = frame.to_world(g.extend(z));
        let v = spec.direction(x)?.get();
        let dot = v.dot(u_star);
        if !(dot >= cfg.eps_trans) {
            return Err(Error::LostTransversality { t, dot });
        }
        let dg_world = frame.vec_to_world(dg.extend(0.0));
        let dz = -dg_world.dot(v) / dot;
        let tangent = dg_world + u_star * dz;
        let residual = if tangent.norm() > 0.0 { tangent.dot(v).abs() / tangent.norm() } else { 0.0 };
        Ok((dz, residual))
    };

    let (g0, _) = pieces[0].eval(0.0);
    let r0 = slope(&pieces[0], 0.0, 0.0, z0)?.1;
    let mut lift = Lift {
        t: vec![0.0],
        z: vec![z0],
        plane: vec![g0],
        points: vec![frame.to_world(g0.extend(z0))],
        residuals: vec![r0],
        max_residual: r0,
        complete: true,
    };
    let mut z = z0;
    for (j, piece) in pieces.iter().enumerate() {
        let steps = (piece.length() / cfg.arc_step).ceil().max(1.0) as usize;
        let h = 1.0 / steps as f64;
        let global = |s: f64| (j as f64 + s) / m;
        for i in 0..steps {
            let s = h * i as f64;
            let mut f = |s: f64, y: &[f64; 1]| -> Result<[f64; 1]> { Ok([slope(piece, global(s), s, y[0])?.0]) };
            z = rk4_step(&mut f, s, &[z], h)?[0];
            let s1 = if i + 1 == steps { 1.0 } else { h * (i + 1) as f64 };
            let (g, _) = piece.eval(s1);
            lift.t.push(global(s1));
            lift.z.push(z);
            lift.plane.push(g);
            lift.points.push(frame.to_world(g.extend(z)));
            let res = slope(piece, global(s1), s1, z)?.1;
            lift.residuals.push(res);
            lift.max_residual = lift.max_residual.max(res);
            if !(z.abs() <= cfg.z_bound) {
                lift.complete = false;
                return Ok(lift);
            }
        }
    }
    Ok(lift)
}
