use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exprlang::Expr;
use crate::numeric::{Mat2, Vec2};

use super::{FibrationSpec, Frame, Jet2, Orientation};

/// Radial profile `f` of a capped map, increasing with `f(0) = 0`.
#[derive(Clone, Debug)]
pub enum Profile {
    Arctan,
    /// Expression in the single variable `s`.
    Expr(Expr),
}

impl Profile {
    pub fn parse(source: &str) -> Result<Profile> {
        let f = Profile::Expr(Expr::parse(source, &["s"])?);
        f.validate()?;
        Ok(f)
    }

    /// `(f(s), f'(s))`.
    pub fn eval(&self, s: f64) -> Result<(f64, f64)> {
        match self {
            Profile::Arctan => Ok((s.atan(), 1.0 / (1.0 + s * s))),
            Profile::Expr(e) => {
                let d = e.eval_dual(&[s])?;
                Ok((d.value(), d.partials()[0]))
            }
        }
    }

    /// Checks `f(0) = 0` and monotonicity on log-spaced samples of `[0, 1e3]`.
    fn validate(&self) -> Result<()> {
        let (f0, _) = self.eval(0.0)?;
        if f0.abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("profile must vanish at 0, got f(0) = {f0}")));
        }
        let mut prev = f0;
        for i in 0..=200 {
            let s = 1e-3 * 1e6f64.powf(i as f64 / 200.0);
            let (f, df) = self.eval(s)?;
            if !(f > prev) || df < 0.0 {
                return Err(Error::InvalidParameter(format!("profile is not increasing near s = {s}")));
            }
            prev = f;
        }
        Ok(())
    }

    fn describe(&self) -> String {
        match self {
            Profile::Arctan => "atan(s)".to_string(),
            Profile::Expr(e) => e.to_string(),
        }
    }
}

/// The map `B` of a planar representation, in frame coordinates.
#[derive(Clone, Debug)]
pub enum BMap {
    /// `B(p) = sigma (-p2, p1)`.
    Hopf(Orientation),
    /// `B(p) = (-p2^k, p1^k)` for odd `k > 1`.
    Degenerate(u32),
    /// `B(p) = f(|p|)/|p| (-p2, p1)`, `B(0) = 0`.
    Capped(Profile),
    /// `(-p2, p1^3)` for `p1 >= 0`, `(-p2, 0)` otherwise.
    Glued,
    /// Two expressions in `p1, p2`.
    Expr(Box<[Expr; 2]>),
    /// The fibration `inner` read on the plane of `frame`; evaluated on demand.
    Rebased { inner: Arc<FibrationSpec>, frame: Frame },
    /// `(1 - t) B + t sigma (-p2, p1)`.
    Homotopy { inner: Arc<BMap>, t: f64, sigma: Orientation },
}

/// Below this `<u, e3>` a rebased plane is treated as containing the fiber direction.
const MIN_VERTICAL: f64 = 1e-6;

impl BMap {
    pub fn degenerate(k: u32) -> Result<BMap> {
        if k < 3 || k % 2 == 0 {
            return Err(Error::InvalidParameter(format!("degenerate exponent must be odd and > 1, got {k}")));
        }
        Ok(BMap::Degenerate(k))
    }

    pub fn expressions(b1: &str, b2: &str) -> Result<BMap> {
        let vars = ["p1", "p2"];
        Ok(BMap::Expr(Box::new([Expr::parse(b1, &vars)?, Expr::parse(b2, &vars)?])))
    }

    pub fn homotopy(inner: BMap, t: f64, sigma: Orientation) -> Result<BMap> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidParameter(format!("homotopy parameter {t} outside [0, 1]")));
        }
        Ok(BMap::Homotopy { inner: Arc::new(inner), t, sigma })
    }

    /// `B(p)` and `dB_p`.
    pub fn jet(&self, p: Vec2) -> Result<Jet2> {
        let (value, jacobian) = match self {
            BMap::Hopf(s) => {
                let s = s.sign();
                (p.perp() * s, Mat2::J.scale(s))
            }
            BMap::Degenerate(k) => {
                let k = *k as i32;
                let value = Vec2::new(-p.y.powi(k), p.x.powi(k));
                let kf = k as f64;
                (value, Mat2::new(0.0, -kf * p.y.powi(k - 1), kf * p.x.powi(k - 1), 0.0))
            }
            BMap::Capped(f) => capped_jet(f, p)?,
            BMap::Glued => {
                if p.x >= 0.0 {
                    (Vec2::new(-p.y, p.x.powi(3)), Mat2::new(0.0, -1.0, 3.0 * p.x * p.x, 0.0))
                } else {
                    (Vec2::new(-p.y, 0.0), Mat2::new(0.0, -1.0, 0.0, 0.0))
                }
            }
            BMap::Expr(e) => {
                let pt = [p.x, p.y];
                let b1 = e[0].eval_dual(&pt)?;
                let b2 = e[1].eval_dual(&pt)?;
                let (d1, d2) = (b1.partials(), b2.partials());
                (Vec2::new(b1.value(), b2.value()), Mat2::new(d1[0], d1[1], d2[0], d2[1]))
            }
            BMap::Rebased { inner, frame } => return rebased_jet(inner, frame, p),
            BMap::Homotopy { inner, t, sigma } => {
                let jet = inner.jet(p)?;
                let s = sigma.sign();
                let value = jet.value * (1.0 - t) + p.perp() * (t * s);
                (value, jet.jacobian.scale(1.0 - t) + Mat2::J.scale(t * s))
            }
        };
        if !value.is_finite() || !jacobian.is_finite() {
            return Err(Error::InvalidParameter(format!("B is not finite at ({}, {})", p.x, p.y)));
        }
        Ok(Jet2 { value, jacobian })
    }

    pub fn describe(&self) -> String {
        match self {
            BMap::Hopf(s) => format!("hopf(sigma={s})"),
            BMap::Degenerate(k) => format!("degenerate(k={k})"),
            BMap::Capped(f) => format!("capped(f={})", f.describe()),
            BMap::Glued => "glued".to_string(),
            BMap::Expr(e) => format!("({}, {})", e[0], e[1]),
            BMap::Rebased { inner, .. } => format!("rebased[{}]", inner.describe()),
            BMap::Homotopy { inner, t, sigma } => {
                format!("homotopy(t={t}, sigma={sigma})[{}]", inner.describe())
            }
        }
    }
}

/// `B = g(S) J p` with `g = f(S)/S`; `dB = g J + (f' - g)/S^2 (J p) p^T`.
fn capped_jet(f: &Profile, p: Vec2) -> Result<(Vec2, Mat2)> {
    let s = p.norm();
    if s == 0.0 {
        let (_, df0) = f.eval(0.0)?;
        return Ok((Vec2::ZERO, Mat2::J.scale(df0)));
    }
    let (fs, dfs) = f.eval(s)?;
    let g = fs / s;
    let jp = p.perp();
    let c = (dfs - g) / (s * s);
    let outer = Mat2::new(jp.x * p.x, jp.x * p.y, jp.y * p.x, jp.y * p.y);
    Ok((jp * g, Mat2::J.scale(g) + outer.scale(c)))
}

/// Reads the inner fibration on the plane of `frame`: `B'(p) = (u1, u2)/u3` with
/// `u` the inner direction at `frame(p, 0)` in frame coordinates.
fn rebased_jet(inner: &FibrationSpec, frame: &Frame, p: Vec2) -> Result<Jet2> {
    let x = frame.to_world(p.extend(0.0));
    let u = frame.vec_to_local(inner.direction(x)?.get());
    if u.z < MIN_VERTICAL {
        return Err(Error::NearHorizontalFiber(u.z));
    }
    let du = frame.rotation().transpose() * inner.direction_jacobian(x)?;
    let col = |j: usize| {
        let e = if j == 0 { frame.e1.get() } else { frame.e2.get() };
        let d = du * e;
        Vec2::new((d.x * u.z - u.x * d.z) / (u.z * u.z), (d.y * u.z - u.y * d.z) / (u.z * u.z))
    };
    Ok(Jet2 { value: Vec2::new(u.x / u.z, u.y / u.z), jacobian: Mat2::from_columns(col(0), col(1)) })
}
