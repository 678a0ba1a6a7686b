//! Built-in fibrations.

use crate::error::Result;
use crate::exprlang::Expr;

use super::{BMap, FibrationSpec, Frame, Orientation, Profile, VField};

pub fn hopf(sigma: Orientation) -> FibrationSpec {
    let label = match sigma {
        Orientation::Positive => "hopf",
        Orientation::Negative => "hopf(-1)",
    };
    FibrationSpec::planar(label, Frame::STANDARD, BMap::Hopf(sigma))
}

pub fn degenerate(k: u32) -> Result<FibrationSpec> {
    Ok(FibrationSpec::planar(format!("degenerate({k})"), Frame::STANDARD, BMap::degenerate(k)?))
}

pub fn capped_arctan() -> FibrationSpec {
    FibrationSpec::planar("capped(arctan)", Frame::STANDARD, BMap::Capped(Profile::Arctan))
}

/// Capped map with profile `f(s)`.
pub fn capped(profile: &str) -> Result<FibrationSpec> {
    Ok(FibrationSpec::planar(format!("capped({profile})"), Frame::STANDARD, BMap::Capped(Profile::parse(profile)?)))
}

pub fn glued() -> FibrationSpec {
    FibrationSpec::planar("glued", Frame::STANDARD, BMap::Glued)
}

pub fn from_expressions(b1: &str, b2: &str) -> Result<FibrationSpec> {
    Ok(FibrationSpec::planar(format!("B=({b1}, {b2})"), Frame::STANDARD, BMap::expressions(b1, b2)?))
}

/// `V ~ (-y, 0, 1)`, dual to `dz - y dx`.
pub fn planar_linear() -> FibrationSpec {
    FibrationSpec::field("planar_linear", VField::parse("-y", "0", "1").expect("catalog expression"))
}

/// `V = (sin f(y), 0, cos f(y))`.
pub fn planar_twist(f: &str) -> Result<FibrationSpec> {
    Expr::parse(f, &["y"])?;
    let field = VField::parse(&format!("sin({f})"), "0", &format!("cos({f})"))?;
    Ok(FibrationSpec::field(format!("planar_twist(f={f})"), field))
}

/// `V = x/|x|`: rays from the origin. Not a fibration of R^3.
pub fn radial() -> FibrationSpec {
    FibrationSpec::field("radial", VField::parse("x", "y", "z").expect("catalog expression"))
}

/// Every built-in B-map fibration.
pub fn bmap_catalog() -> Vec<FibrationSpec> {
    vec![
        hopf(Orientation::Positive),
        hopf(Orientation::Negative),
        degenerate(3).expect("valid exponent"),
        capped_arctan(),
        glued(),
    ]
}

/// Looks up a built-in by name. `param` is the exponent for `degenerate`,
/// the profile for `capped`, `f(y)` for `planar_twist` and the sign for `hopf`.
pub fn builtin(name: &str, param: Option<&str>) -> Result<FibrationSpec> {
    use crate::error::Error;
    let bad = |msg: String| Error::InvalidParameter(msg);
    match name {
        "hopf" => match param.unwrap_or("1") {
            "1" | "+1" => Ok(hopf(Orientation::Positive)),
            "-1" => Ok(hopf(Orientation::Negative)),
            other => Err(bad(format!("hopf orientation must be 1 or -1, got {other}"))),
        },
        "degenerate" => {
            let k = param.unwrap_or("3");
            degenerate(k.parse().map_err(|_| bad(format!("degenerate exponent `{k}` is not an integer")))?)
        }
        "capped" => match param {
            None | Some("arctan") | Some("atan") => Ok(capped_arctan()),
            Some(f) => capped(f),
        },
        "glued" => Ok(glued()),
        "planar_linear" => Ok(planar_linear()),
        "planar_twist" => planar_twist(param.unwrap_or("y")),
        "radial" => Ok(radial()),
        other => Err(bad(format!("unknown built-in fibration `{other}`"))),
    }
}
