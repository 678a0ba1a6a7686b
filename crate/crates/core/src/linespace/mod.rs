//! The space of oriented lines as `TS^2`, its neutral form and the chart of a fibration.
//!
//! A line is `(u, v)` with direction `u` and foot of perpendicular `v`. A
//! tangent vector splits into `(zeta1, zeta2)`, both orthogonal to `u`, and
//! the neutral form is `Q(zeta) = det(zeta1, u, zeta2)`.
//!
//! Chart quantities are in frame coordinates, where the vertical is `e3`.

use nalgebra::{Matrix4, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::certificate::{Certificate, Property, Witness};
use crate::error::{Error, Result};
use crate::fibration::{certify_nondegenerate, FibrationSpec, Orientation, OrientedLine};
use crate::numeric::{det3, Grid2, Mat2, UnitVec3, Vec2, Vec3};

/// Tangency defect tolerated by [`TangentTS2::new`].
pub const TANGENT_TOL: f64 = 1e-8;

/// Charts need `<u, V0>` at least this large.
pub const MIN_TRANSVERSE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TangentTS2 {
    pub base: OrientedLine,
    pub zeta1: Vec3,
    pub zeta2: Vec3,
}

impl TangentTS2 {
    pub fn new(base: OrientedLine, zeta1: Vec3, zeta2: Vec3) -> Result<TangentTS2> {
        let u = base.u.get();
        let defect = zeta1.dot(u).abs().max(zeta2.dot(u).abs());
        if !(defect <= TANGENT_TOL) {
            return Err(Error::NonTangent(defect));
        }
        Ok(TangentTS2 { base, zeta1, zeta2 })
    }
}

/// `det(zeta1, u, zeta2)`.
pub fn q_form(t: &TangentTS2) -> f64 {
    det3(t.zeta1, t.base.u.get(), t.zeta2)
}

/// Gram matrix of the polarized form on the basis `(a, 0), (b, 0), (0, a), (0, b)`
/// with `a, b` an orthonormal basis of `u^perp`.
pub fn q_gram(u: UnitVec3) -> [[f64; 4]; 4] {
    let a = u.any_orthogonal().get();
    let b = u.get().cross(a);
    let basis = [(a, Vec3::ZERO), (b, Vec3::ZERO), (Vec3::ZERO, a), (Vec3::ZERO, b)];
    let q = |(x1, x2): (Vec3, Vec3)| det3(x1, u.get(), x2);
    let mut g = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let (s, t) = (basis[i], basis[j]);
            g[i][j] = 0.5 * (q((s.0 + t.0, s.1 + t.1)) - q(s) - q(t));
        }
    }
    g
}

/// Counts of positive, negative and zero eigenvalues of the Gram matrix at `u`.
pub fn q_signature(u: UnitVec3, zero_tol: f64) -> (usize, usize, usize) {
    let g = q_gram(u);
    let m = Matrix4::from_fn(|i, j| g[i][j]);
    let eig = SymmetricEigen::new(m).eigenvalues;
    let pos = eig.iter().filter(|&&e| e > zero_tol).count();
    let neg = eig.iter().filter(|&&e| e < -zero_tol).count();
    (pos, neg, 4 - pos - neg)
}

/// The chart `p -> (u(p), v(p))` and its differential at one base point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Chart {
    pub p: Vec2,
    pub db: Mat2,
    pub u: UnitVec3,
    pub v: Vec3,
    /// `|(B, 1)|`.
    pub n: f64,
}

impl Chart {
    /// `<u, V0>`, the vertical component of the direction.
    pub fn vertical_component(&self) -> f64 {
        self.u.get().z
    }

    /// `du h = (I - u u^T)(dB h, 0) / n`.
    pub fn du(&self, h: Vec2) -> Vec3 {
        let u = self.u.get();
        let w = (self.db * h).extend(0.0);
        (w - u * u.dot(w)) / self.n
    }

    /// `dv h = h - <h, u> u - <p, du h> u - <p, u> du h`.
    pub fn dv(&self, h: Vec2) -> Vec3 {
        let u = self.u.get();
        let (h3, p3) = (h.extend(0.0), self.p.extend(0.0));
        let du = self.du(h);
        h3 - u * h3.dot(u) - u * p3.dot(du) - du * p3.dot(u)
    }

    pub fn line(&self) -> OrientedLine {
        OrientedLine { u: self.u, v: self.v }
    }

    /// `(du h, dv h)` with the vertical part projected onto `u^perp`.
    pub fn tangent(&self, h: Vec2) -> TangentTS2 {
        let u = self.u.get();
        let dv = self.dv(h);
        TangentTS2 { base: self.line(), zeta1: self.du(h), zeta2: dv - u * dv.dot(u) }
    }

    /// `det(du h, u, h)`: only the `h` term of `dv h` contributes.
    pub fn pullback(&self, h: Vec2) -> f64 {
        det3(self.du(h), self.u.get(), h.extend(0.0))
    }

    /// `det(du h, u, dv h)` with all four terms of `dv h`.
    pub fn pullback_full(&self, h: Vec2) -> f64 {
        det3(self.du(h), self.u.get(), self.dv(h))
    }

    /// Matrix `P` with `f*Q(h) = h^T P h`.
    pub fn pullback_matrix(&self) -> Mat2 {
        let e = [Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)];
        let m = |i: usize, j: usize| det3(self.du(e[i]), self.u.get(), e[j].extend(0.0));
        let off = 0.5 * (m(0, 1) + m(1, 0));
        Mat2::new(m(0, 0), off, off, m(1, 1))
    }
}

/// `u(p) = (B(p), 1)/n` and `v(p) = p - <p, u> u`, in frame coordinates.
pub fn chart(spec: &FibrationSpec, p: Vec2) -> Result<Chart> {
    let jet = spec.eval_b(p)?;
    let w = jet.value.extend(1.0);
    let n = w.norm();
    let u = UnitVec3::new(w)?;
    if !(u.get().z >= MIN_TRANSVERSE) {
        return Err(Error::NearHorizontalFiber(u.get().z));
    }
    let line = OrientedLine::through(p.extend(0.0), u);
    Ok(Chart { p, db: jet.jacobian, u, v: line.v, n })
}

/// `f*Q(h)` by the simplified determinant.
pub fn pullback_q(spec: &FibrationSpec, p: Vec2, h: Vec2) -> Result<f64> {
    Ok(chart(spec, p)?.pullback(h))
}

/// `Q(h) = det(h, dB h)`.
pub fn q_of_b(db: Mat2, h: Vec2) -> f64 {
    h.cross(db * h)
}

fn directions(n: usize) -> Vec<Vec2> {
    (0..n).map(|k| Vec2::from_polar(1.0, std::f64::consts::PI * k as f64 / n as f64)).collect()
}

/// Relative error with an absolute floor `abs_floor` near zero.
fn mismatch(a: f64, b: f64, abs_floor: f64) -> (f64, bool) {
    let scale = a.abs().max(b.abs());
    if scale < abs_floor {
        ((a - b).abs(), true)
    } else {
        ((a - b).abs() / scale, false)
    }
}

/// Which scaling of the pullback is compared with `Q(h) = det(h, dB h)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClaimForm {
    /// `Q = <u, V0>^2 f*Q`.
    AsStated,
    /// `Q = f*Q / <u, V0>^2`, the relation obtained by expanding both
    /// determinants (`du h` carries a factor `1/n` with `n = 1/<u, V0>`).
    Derived,
}

impl ClaimForm {
    fn rhs(self, vertical: f64, pullback: f64) -> f64 {
        match self {
            ClaimForm::AsStated => vertical * vertical * pullback,
            ClaimForm::Derived => pullback / (vertical * vertical),
        }
    }
}

/// Compares `Q(h) = det(h, dB h)` with the scaled pullback over the grid and
/// `n_dirs` directions; also compares the simplified and four-term pullbacks.
pub fn verify_claim(
    spec: &FibrationSpec,
    grid: &Grid2,
    n_dirs: usize,
    rel_tol: f64,
    form: ClaimForm,
) -> Result<Certificate> {
    const ABS_FLOOR: f64 = 1e-9;
    let hs = directions(n_dirs);
    let rows: Vec<(Vec2, f64, f64)> = grid
        .points()
        .par_iter()
        .map(|&p| {
            let c = chart(spec, p)?;
            let mut worst_claim = 0.0f64;
            let mut worst_drop = 0.0f64;
            for &h in &hs {
                let lhs = q_of_b(c.db, h);
                let simple = c.pullback(h);
                let (e, abs) = mismatch(lhs, form.rhs(c.vertical_component(), simple), ABS_FLOOR);
                worst_claim = worst_claim.max(if abs { e / ABS_FLOOR * rel_tol } else { e });
                let (d, abs) = mismatch(simple, c.pullback_full(h), ABS_FLOOR);
                worst_drop = worst_drop.max(if abs { d / ABS_FLOOR * rel_tol } else { d });
            }
            Ok((p, worst_claim, worst_drop))
        })
        .collect::<Result<_>>()?;

    let label = match form {
        ClaimForm::AsStated => "Q = <u,V0>^2 f*Q",
        ClaimForm::Derived => "Q = f*Q / <u,V0>^2",
    };
    let mut cert =
        Certificate::new(Property::ClaimIdentity, format!("{} x {n_dirs} directions, {label}", grid.describe()))
            .tolerance("relative", rel_tol)
            .tolerance("absolute_near_zero", ABS_FLOOR);
    let mut bad: Vec<&(Vec2, f64, f64)> = rows.iter().filter(|r| !(r.1 <= rel_tol && r.2 <= rel_tol)).collect();
    bad.sort_by(|a, b| b.1.max(b.2).total_cmp(&a.1.max(a.2)).then(a.0.norm().total_cmp(&b.0.norm())));
    cert.add_violations(bad.iter().map(|(p, e, d)| Witness::new("identity violated", vec![vec![p.x, p.y]], e.max(*d))));
    cert.settle();
    let max_claim = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let max_drop = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    cert.margin = rel_tol - max_claim.max(max_drop);
    cert.metric("max_claim_error", max_claim);
    cert.metric("max_dropped_terms_error", max_drop);
    Ok(cert)
}

/// Sign-definiteness of the pullback form over the grid.
///
/// The verdict uses the exact pullback matrix at each point. Sampled values
/// over `n_dirs` directions are reported, and the verdict is compared with
/// [`certify_nondegenerate`], which must agree.
pub fn definiteness_on_m(spec: &FibrationSpec, grid: &Grid2, n_dirs: usize) -> Result<Certificate> {
    let hs = directions(n_dirs);
    let rows: Vec<(Vec2, Mat2, f64, f64)> = grid
        .points()
        .par_iter()
        .map(|&p| {
            let c = chart(spec, p)?;
            let pm = c.pullback_matrix();
            let vals = hs.iter().map(|&h| c.pullback(h));
            let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            Ok((p, pm.scale(1.0 / c.n.powi(2)), lo, hi))
        })
        .collect::<Result<_>>()?;

    // The rescaled matrix equals S of the nondegeneracy test, so share its threshold.
    let zero = crate::fibration::NONDEGENERATE_ZERO;
    let definite = |m: &Mat2| m.det() > zero;
    let positive = rows.iter().filter(|r| definite(&r.1) && r.1.trace() > 0.0).count();
    let negative = rows.iter().filter(|r| definite(&r.1) && r.1.trace() < 0.0).count();
    let sigma = if negative > positive { Orientation::Negative } else { Orientation::Positive };
    let eig_min = |m: &Mat2| {
        let m = m.scale(sigma.sign());
        0.5 * (m.a11 + m.a22) - (0.25 * (m.a11 - m.a22).powi(2) + m.a12 * m.a12).sqrt()
    };

    let mut cert = Certificate::new(Property::Definite, format!("{} x {n_dirs} directions", grid.describe()))
        .tolerance("det_threshold", zero);
    let mut bad: Vec<&(Vec2, Mat2, f64, f64)> =
        rows.iter().filter(|r| !(definite(&r.1) && Orientation::of(r.1.trace()) == Some(sigma))).collect();
    bad.sort_by(|a, b| eig_min(&a.1).total_cmp(&eig_min(&b.1)).then(a.0.norm().total_cmp(&b.0.norm())));
    cert.add_violations(bad.iter().map(|r| Witness::new("not definite", vec![vec![r.0.x, r.0.y]], eig_min(&r.1))));
    cert.settle();
    cert.margin = rows.iter().map(|r| eig_min(&r.1)).fold(f64::INFINITY, f64::min);
    cert.metric("min_sampled", rows.iter().map(|r| r.2).fold(f64::INFINITY, f64::min));
    cert.metric("max_sampled", rows.iter().map(|r| r.3).fold(f64::NEG_INFINITY, f64::max));
    if cert.passed() {
        cert.orientation = Some(sigma);
    }

    let nd = certify_nondegenerate(spec, grid)?;
    if nd.verdict != cert.verdict {
        return Err(Error::InconsistentChecks(format!(
            "definiteness {:?} but nondegeneracy {:?}",
            cert.verdict, nd.verdict
        )));
    }
    if cert.passed() {
        spec.record_orientation(sigma)?;
    }
    Ok(cert)
}
