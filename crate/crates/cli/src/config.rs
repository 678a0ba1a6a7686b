//! JSON run configuration. Every object rejects unknown keys.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use skewfib_core::contact::{LiftConfig, OneForm, PlanePath, CONTACT_THRESHOLD};
use skewfib_core::fibration::{catalog, FibrationSpec, Frame, VField};
use skewfib_core::numeric::{Grid2, Grid3, SolverConfig, Vec3};

use crate::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fibration: Option<FibrationConfig>,
    /// A 1-form checked directly by `certify` (contact only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub form: Option<FormConfig>,
    /// Named constants substituted into every expression string.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub constants: BTreeMap<String, f64>,
    /// Base-plane grid; defaults to 21x21 over [-5, 5]^2.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Grid2>,
    /// Space grid for contact checks; defaults to 11^3 over [-5, 5]^3.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid3: Option<Grid3>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub certify: CertifyOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub foliation: Option<FoliationOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lift: Option<LiftOptions>,
    #[serde(default)]
    pub homotopy: HomotopyOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demo: Option<DemoOptions>,
    /// Output directory; `--out` takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

/// Exactly one of `builtin`, `b` or `field`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FibrationConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    /// Exponent for `degenerate`, profile for `capped`, `f(y)` for `planar_twist`, sign for `hopf`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param: Option<String>,
    /// `B(p)` components in the variables `p1, p2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<[String; 2]>,
    /// Direction field components in `x, y, z`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<[String; 3]>,
    /// Plane frame for B-map fibrations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<FrameConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameConfig {
    pub origin: Vec3,
    pub e1: Vec3,
    pub e2: Vec3,
}

/// Exactly one of `builtin` or `coefficients`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    /// `a dx + b dy + c dz` as `[a, b, c]` in `x, y, z`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<[String; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub contact_threshold: f64,
    pub claim_rel_tol: f64,
    pub line_field_tol: f64,
    pub cap_tol: f64,
    pub lift_residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            contact_threshold: CONTACT_THRESHOLD,
            claim_rel_tol: 1e-6,
            line_field_tol: 1e-9,
            cap_tol: 1e-9,
            lift_residual: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Skew,
    Nondegenerate,
    Covering,
    Definiteness,
    Claim,
    LineField,
    Contact,
}

impl Check {
    pub const PLANAR: [Check; 6] =
        [Check::Skew, Check::Nondegenerate, Check::Covering, Check::Definiteness, Check::Claim, Check::Contact];
    pub const FIELD: [Check; 2] = [Check::LineField, Check::Contact];

    pub fn name(self) -> &'static str {
        match self {
            Check::Skew => "skew",
            Check::Nondegenerate => "nondegenerate",
            Check::Covering => "covering",
            Check::Definiteness => "definiteness",
            Check::Claim => "claim",
            Check::LineField => "line_field",
            Check::Contact => "contact",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Pairs {
    All,
    /// Pairs drawn from the run seed.
    Random {
        budget: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifyOptions {
    /// Checks to run, in a fixed order; defaults depend on the input kind.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checks: Option<Vec<Check>>,
    pub pairs: Pairs,
    pub covering_radii: Vec<f64>,
    pub covering_angles: usize,
    /// Directions per grid point for the claim and definiteness checks.
    pub directions: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            checks: None,
            pairs: Pairs::All,
            covering_radii: vec![1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0],
            covering_angles: 64,
            directions: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FoliationOptions {
    pub radii: Vec<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_leaf_step")]
    pub step: f64,
    #[serde(default = "default_polar_margin")]
    pub polar_margin: f64,
    #[serde(default = "default_angle_tol")]
    pub angle_tol: f64,
    #[serde(default = "default_eps_stop")]
    pub eps_stop: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    /// Every `csv_stride`-th leaf point is exported, plus the last.
    #[serde(default = "default_stride")]
    pub csv_stride: usize,
}

fn default_samples() -> usize {
    32
}
fn default_leaf_step() -> f64 {
    1e-3
}
fn default_polar_margin() -> f64 {
    0.05
}
fn default_angle_tol() -> f64 {
    1e-3
}
fn default_eps_stop() -> f64 {
    1e-6
}
fn default_max_steps() -> usize {
    200_000
}
fn default_stride() -> usize {
    10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiftOptions {
    pub path: PlanePath,
    #[serde(default)]
    pub z0: f64,
    #[serde(default)]
    pub settings: LiftConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HomotopyOptions {
    pub t_count: usize,
}

impl Default for HomotopyOptions {
    fn default() -> Self {
        Self { t_count: 11 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemoOptions {
    pub name: String,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn grid(&self) -> Result<Grid2, CliError> {
        let g = self.grid.clone().unwrap_or_default();
        check_grid("grid", g.min, g.max, g.n)?;
        Ok(g)
    }

    pub fn grid3(&self) -> Result<Grid3, CliError> {
        let g = self.grid3.clone().unwrap_or_default();
        check_grid("grid3", g.min, g.max, g.n)?;
        Ok(g)
    }

    fn expr(&self, source: &str) -> String {
        substitute(source, &self.constants)
    }

    /// The configured fibration, with solver overrides applied.
    pub fn fibration(&self) -> Result<FibrationSpec, CliError> {
        let fc = self.fibration.as_ref().ok_or_else(|| CliError::Config("a `fibration` is required".into()))?;
        let given = [fc.builtin.is_some(), fc.b.is_some(), fc.field.is_some()].iter().filter(|&&g| g).count();
        if given != 1 {
            return Err(CliError::Config("fibration needs exactly one of `builtin`, `b`, `field`".into()));
        }
        if fc.param.is_some() && fc.builtin.is_none() {
            return Err(CliError::Config("fibration `param` only applies to a `builtin`".into()));
        }
        let mut spec = if let Some(name) = &fc.builtin {
            let param = fc.param.as_deref().map(|p| self.expr(p));
            catalog::builtin(name, param.as_deref()).map_err(|e| CliError::Config(e.to_string()))?
        } else if let Some([b1, b2]) = &fc.b {
            catalog::from_expressions(&self.expr(b1), &self.expr(b2)).map_err(|e| CliError::Config(e.to_string()))?
        } else {
            let [a, b, c] = fc.field.as_ref().expect("counted above");
            let field = VField::parse(&self.expr(a), &self.expr(b), &self.expr(c))
                .map_err(|e| CliError::Config(e.to_string()))?;
            FibrationSpec::field("V", field)
        };
        if fc.frame.is_some() || fc.label.is_some() {
            let label = fc.label.clone().unwrap_or_else(|| spec.label().to_string());
            spec = match (spec.planar_parts(), &fc.frame) {
                (Ok((frame, bmap)), f) => {
                    let frame = match f {
                        Some(f) => Frame::new(f.origin, f.e1, f.e2, f.e1.cross(f.e2))
                            .map_err(|e| CliError::Config(format!("frame: {e}")))?,
                        None => *frame,
                    };
                    FibrationSpec::planar(label, frame, bmap.clone())
                }
                (Err(_), Some(_)) => return Err(CliError::Config("`frame` only applies to B-map fibrations".into())),
                (Err(_), None) => FibrationSpec::field(label, spec.vfield().expect("field spec").clone()),
            };
        }
        if let Some(solver) = &self.solver {
            solver.validate().map_err(|e| CliError::Config(format!("solver: {e}")))?;
            spec = spec.with_solver(solver.clone());
        }
        Ok(spec)
    }

    pub fn form(&self) -> Result<OneForm, CliError> {
        let fc = self.form.as_ref().ok_or_else(|| CliError::Config("a `form` is required".into()))?;
        match (&fc.builtin, &fc.coefficients) {
            (Some(name), None) => OneForm::builtin(name).map_err(|e| CliError::Config(e.to_string())),
            (None, Some([a, b, c])) => {
                let label = fc.label.clone().unwrap_or_else(|| format!("({a}) dx + ({b}) dy + ({c}) dz"));
                OneForm::parse(label, &self.expr(a), &self.expr(b), &self.expr(c))
                    .map_err(|e| CliError::Config(e.to_string()))
            }
            _ => Err(CliError::Config("form needs exactly one of `builtin`, `coefficients`".into())),
        }
    }
}

fn check_grid(name: &str, min: f64, max: f64, n: usize) -> Result<(), CliError> {
    if !(min.is_finite() && max.is_finite() && min < max && n >= 2) {
        return Err(CliError::Config(format!("{name} needs finite min < max and n >= 2")));
    }
    Ok(())
}

/// Replaces whole identifiers found in `constants` by their values.
fn substitute(source: &str, constants: &BTreeMap<String, f64>) -> String {
    if constants.is_empty() {
        return source.to_string();
    }
    let mut out = String::with_capacity(source.len());
    let mut chars = source.char_indices().peekable();
    while let Some((i, ch)) = chars.next() {
        if ch.is_ascii_alphabetic() || ch == '_' {
            let mut end = i + ch.len_utf8();
            while let Some(&(j, c)) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    end = j + c.len_utf8();
                    chars.next();
                } else {
                    break;
                }
            }
            let ident = &source[i..end];
            match constants.get(ident) {
                Some(v) => out.push_str(&format!("({v:?})")),
                None => out.push_str(ident),
            }
        } else {
            out.push(ch);
        }
    }
    out
}
