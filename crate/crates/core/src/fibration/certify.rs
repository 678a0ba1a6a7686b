use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::certificate::{Certificate, Property, Verdict, Witness, MAX_WITNESSES};
use crate::error::{Error, Result};
use crate::numeric::{fd_jacobian3, min_enclosing_cap, Cap, Grid2, Grid3, Mat2, UnitVec3, Vec2, Vec3};

use super::{FibrationSpec, Orientation};

/// `|D| <= SKEW_ZERO |p - q|^2` counts as parallel fibers.
pub const SKEW_ZERO: f64 = 1e-12;

/// `det S <= NONDEGENERATE_ZERO` counts as a real eigenvalue of `dB`.
pub const NONDEGENERATE_ZERO: f64 = 1e-12;

/// Which grid pairs the skew check visits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PairSampling {
    All,
    /// `budget` pairs drawn with a ChaCha8 stream seeded by `seed`.
    Random {
        budget: usize,
        seed: u64,
    },
}

/// `det(p - q, B(p) - B(q))`.
pub fn skew_determinant(spec: &FibrationSpec, p: Vec2, q: Vec2) -> Result<f64> {
    let bp = spec.eval_b(p)?.value;
    let bq = spec.eval_b(q)?.value;
    Ok((p - q).cross(bp - bq))
}

struct PairOutcome {
    i: usize,
    j: usize,
    det: f64,
    normalized: f64,
}

fn pair_list(n: usize, sampling: PairSampling) -> Vec<(usize, usize)> {
    let total = n * n.saturating_sub(1) / 2;
    match sampling {
        PairSampling::Random { budget, seed } if budget < total => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..budget)
                .map(|_| {
                    let i = rng.gen_range(0..n);
                    let mut j = rng.gen_range(0..n - 1);
                    if j >= i {
                        j += 1;
                    }
                    (i.min(j), i.max(j))
                })
                .collect()
        }
        _ => (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect(),
    }
}

/// Samples `D(p, q) = det(p - q, B(p) - B(q))` over grid pairs.
///
/// Passes iff no pair is parallel and all share one sign, which becomes the
/// orientation. The margin is `min |D| / |p - q|^2`.
pub fn certify_skew(spec: &FibrationSpec, grid: &Grid2, sampling: PairSampling) -> Result<Certificate> {
    let pts = grid.points();
    let b: Vec<Vec2> = pts.par_iter().map(|&p| spec.eval_b(p).map(|j| j.value)).collect::<Result<_>>()?;
    let pairs = pair_list(pts.len(), sampling);
    let outcomes: Vec<PairOutcome> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let w = pts[i] - pts[j];
            let det = w.cross(b[i] - b[j]);
            PairOutcome { i, j, det, normalized: det / w.norm_sq() }
        })
        .collect();

    let positive = outcomes.iter().filter(|o| o.normalized > SKEW_ZERO).count();
    let negative = outcomes.iter().filter(|o| o.normalized < -SKEW_ZERO).count();
    let zero = outcomes.len() - positive - negative;
    let majority = match positive.cmp(&negative) {
        Ordering::Greater => Some(Orientation::Positive),
        Ordering::Less => Some(Orientation::Negative),
        Ordering::Equal if positive > 0 => Some(Orientation::Positive),
        Ordering::Equal => None,
    };

    let size = |o: &PairOutcome| pts[o.i].norm().max(pts[o.j].norm());
    let mut parallel: Vec<&PairOutcome> = outcomes.iter().filter(|o| o.normalized.abs() <= SKEW_ZERO).collect();
    parallel.sort_by(|a, b| size(a).total_cmp(&size(b)).then((a.i, a.j).cmp(&(b.i, b.j))));
    let mut opposite: Vec<&PairOutcome> = outcomes
        .iter()
        .filter(|o| o.normalized.abs() > SKEW_ZERO && Orientation::of(o.normalized) != majority)
        .collect();
    opposite.sort_by(|a, b| b.normalized.abs().total_cmp(&a.normalized.abs()).then((a.i, a.j).cmp(&(b.i, b.j))));

    let witness = |o: &PairOutcome, label: &str| {
        let (p, q) = (pts[o.i], pts[o.j]);
        Witness::new(label, vec![vec![p.x, p.y], vec![q.x, q.y]], o.det)
    };
    let mut cert = Certificate::new(Property::Skew, format!("{} ({} pairs)", grid.describe(), outcomes.len()))
        .tolerance("parallel_threshold", SKEW_ZERO);
    cert.add_violations(parallel.iter().map(|o| witness(o, "parallel fibers")));
    cert.add_violations(opposite.iter().map(|o| witness(o, "opposite orientation")));
    cert.settle();
    cert.margin = outcomes.iter().map(|o| o.normalized.abs()).fold(f64::INFINITY, f64::min);
    cert.metric("pairs", outcomes.len() as f64);
    cert.metric("positive_pairs", positive as f64);
    cert.metric("negative_pairs", negative as f64);
    cert.metric("parallel_pairs", zero as f64);
    if cert.passed() {
        let sigma = majority.expect("a passing certificate has a sign");
        spec.record_orientation(sigma)?;
        cert.orientation = Some(sigma);
    }
    Ok(cert)
}

/// The two nondegeneracy tests at one point, from `dB = [[a11, a12], [a21, a22]]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NondegeneracyForms {
    /// `(tr dB)^2 - 4 det dB`; negative iff `dB` has no real eigenvalue.
    pub delta: f64,
    /// Matrix of `Q(h) = det(h, dB h)`: `[[a21, (a22 - a11)/2], [(a22 - a11)/2, -a12]]`.
    pub s: Mat2,
    pub det_s: f64,
}

impl NondegeneracyForms {
    /// `sign(tr S) = sign(a21 - a12)`.
    pub fn orientation(&self) -> Option<Orientation> {
        Orientation::of(self.s.trace())
    }

    /// Smallest eigenvalue of `sigma S`; positive iff `sigma Q` is positive definite.
    pub fn margin(&self, sigma: Orientation) -> f64 {
        let s = self.s.scale(sigma.sign());
        let mean = 0.5 * (s.a11 + s.a22);
        let radius = (0.25 * (s.a11 - s.a22).powi(2) + s.a12 * s.a12).sqrt();
        mean - radius
    }

    fn delta_test(&self) -> bool {
        self.delta < -4.0 * NONDEGENERATE_ZERO
    }

    fn s_test(&self) -> bool {
        self.det_s > NONDEGENERATE_ZERO
    }
}

pub fn nondegeneracy_forms(db: Mat2) -> NondegeneracyForms {
    let delta = db.trace() * db.trace() - 4.0 * db.det();
    let off = 0.5 * (db.a22 - db.a11);
    let s = Mat2::new(db.a21, off, off, -db.a12);
    NondegeneracyForms { delta, s, det_s: s.det() }
}

/// Checks that `dB` has no real eigenvalue at every grid point, twice: by the
/// discriminant and by definiteness of `Q(h) = h^T S h`.
///
/// The margin is the minimum over the grid of the smallest eigenvalue of `sigma S`.
pub fn certify_nondegenerate(spec: &FibrationSpec, grid: &Grid2) -> Result<Certificate> {
    let pts = grid.points();
    let forms: Vec<NondegeneracyForms> =
        pts.par_iter().map(|&p| spec.eval_b(p).map(|j| nondegeneracy_forms(j.jacobian))).collect::<Result<_>>()?;

    let mut degenerate = Vec::new();
    for (p, f) in pts.iter().zip(&forms) {
        let (a, b) = (f.delta_test(), f.s_test());
        if a != b && (f.delta + 4.0 * f.det_s).abs() > 1e-9 * (1.0 + f.delta.abs()) {
            return Err(Error::InconsistentChecks(format!(
                "at ({}, {}) discriminant {} but det S {}",
                p.x, p.y, f.delta, f.det_s
            )));
        }
        if !(a && b) {
            degenerate.push((*p, *f));
        }
    }
    degenerate.sort_by(|(p, f), (q, g)| g.delta.total_cmp(&f.delta).then(p.norm().total_cmp(&q.norm())));

    let positive = forms.iter().filter(|f| f.s_test() && f.orientation() == Some(Orientation::Positive)).count();
    let negative = forms.iter().filter(|f| f.s_test() && f.orientation() == Some(Orientation::Negative)).count();
    let sigma = if negative > positive { Orientation::Negative } else { Orientation::Positive };
    let mut flipped: Vec<(Vec2, NondegeneracyForms)> = pts
        .iter()
        .zip(&forms)
        .filter(|(_, f)| f.s_test() && f.orientation() != Some(sigma))
        .map(|(p, f)| (*p, *f))
        .collect();
    flipped.sort_by(|(p, _), (q, _)| p.norm().total_cmp(&q.norm()));

    let mut cert = Certificate::new(Property::Nondegenerate, grid.describe())
        .tolerance("det_s_threshold", NONDEGENERATE_ZERO)
        .tolerance("discriminant_threshold", -4.0 * NONDEGENERATE_ZERO);
    cert.add_violations(degenerate.iter().map(|(p, f)| Witness::new("real eigenvalue", vec![vec![p.x, p.y]], f.delta)));
    cert.add_violations(
        flipped.iter().map(|(p, f)| Witness::new("orientation flip", vec![vec![p.x, p.y]], f.s.trace())),
    );
    cert.settle();
    cert.margin = forms.iter().map(|f| f.margin(sigma)).fold(f64::INFINITY, f64::min);
    cert.metric("max_discriminant", forms.iter().map(|f| f.delta).fold(f64::NEG_INFINITY, f64::max));
    cert.metric("min_det_s", forms.iter().map(|f| f.det_s).fold(f64::INFINITY, f64::min));
    if cert.passed() {
        spec.record_orientation(sigma)?;
        cert.orientation = Some(sigma);
    }
    Ok(cert)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoveringOptions {
    /// Samples per circle.
    pub angles: usize,
    /// The last minimum must exceed this; `None` means a tenth of the last radius.
    pub threshold: Option<f64>,
}

impl Default for CoveringOptions {
    fn default() -> Self {
        Self { angles: 64, threshold: None }
    }
}

/// Minimum of `d(p)` over each circle `|p| = R`; passes iff the minima do not
/// decrease and the last one exceeds the threshold.
pub fn certify_covering(spec: &FibrationSpec, radii: &[f64], opts: &CoveringOptions) -> Result<Certificate> {
    if radii.is_empty() || radii.windows(2).any(|w| !(w[1] > w[0])) || radii[0] <= 0.0 {
        return Err(Error::InvalidParameter("radii must be positive and strictly increasing".into()));
    }
    let last_radius = *radii.last().unwrap();
    let threshold = opts.threshold.unwrap_or(0.1 * last_radius);
    let minima: Vec<(f64, Vec2)> = radii
        .par_iter()
        .map(|&r| {
            let mut best = (f64::INFINITY, Vec2::ZERO);
            for k in 0..opts.angles {
                let p = Vec2::from_polar(r, std::f64::consts::TAU * k as f64 / opts.angles as f64);
                let d = spec.fiber_distance(p)?;
                if d < best.0 {
                    best = (d, p);
                }
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;

    let mut cert =
        Certificate::new(Property::Covering, format!("circles |p| = {radii:?}, {} angles each", opts.angles))
            .tolerance("final_threshold", threshold);
    let mut drops = Vec::new();
    for (w, r) in minima.windows(2).zip(radii.windows(2)) {
        if w[1].0 < w[0].0 - 1e-12 * r[1] {
            drops.push(Witness::new("distance decreased", vec![vec![w[1].1.x, w[1].1.y]], w[1].0 - w[0].0));
        }
    }
    cert.add_violations(drops);
    let (last, at) = *minima.last().unwrap();
    if !(last > threshold) {
        cert.add_violations([Witness::new("bounded distance", vec![vec![at.x, at.y]], last)]);
    }
    cert.settle();
    cert.margin = last - threshold;
    for (r, (d, _)) in radii.iter().zip(&minima) {
        cert.metric(&format!("min_d@{r}"), *d);
    }
    Ok(cert)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirectionImage {
    pub samples: Vec<UnitVec3>,
    pub cap: Cap,
}

/// Fiber directions over the base grid and their minimal enclosing cap.
pub fn direction_image(spec: &FibrationSpec, grid: &Grid2, tol: f64) -> Result<DirectionImage> {
    let samples: Vec<UnitVec3> = grid.points().par_iter().map(|&p| spec.direction_at_base(p)).collect::<Result<_>>()?;
    let cap = min_enclosing_cap(&samples, tol)?;
    Ok(DirectionImage { samples, cap })
}

/// Angle between the fiber direction at `R u + w` and `u`, for each offset `w`
/// and radius `R`. Passes iff for every offset the angle at the largest radius
/// is below `threshold` and no larger than at the smallest.
pub fn probe_continuity_at_infinity(
    spec: &FibrationSpec,
    u: UnitVec3,
    offsets: &[Vec3],
    radii: &[f64],
    threshold: f64,
) -> Result<Certificate> {
    if radii.is_empty() || offsets.is_empty() {
        return Err(Error::InvalidParameter("need at least one radius and one offset".into()));
    }
    let table: Vec<Vec<f64>> = offsets
        .par_iter()
        .map(|&w| radii.iter().map(|&r| Ok(spec.direction(u.get() * r + w)?.angle_to(u))).collect::<Result<_>>())
        .collect::<Result<_>>()?;

    let mut cert = Certificate::new(
        Property::ContinuityAtInfinity,
        format!("x = R u + w, R in {radii:?}, {} offsets", offsets.len()),
    )
    .tolerance("final_angle", threshold);
    let mut worst = 0.0f64;
    let mut bad = Vec::new();
    for (w, angles) in offsets.iter().zip(&table) {
        let (first, last) = (angles[0], *angles.last().unwrap());
        worst = worst.max(last);
        if !(last <= threshold && last <= first) {
            let x = u.get() * *radii.last().unwrap() + *w;
            bad.push(Witness::new("direction does not converge", vec![x.to_array().to_vec()], last));
        }
        for (r, a) in radii.iter().zip(angles) {
            cert.metric(&format!("angle[w=({},{},{})]@{r}", w.x, w.y, w.z), *a);
        }
    }
    cert.add_violations(bad);
    cert.settle();
    cert.margin = threshold - worst;
    Ok(cert)
}

/// Checks `|dV V| <= tol` by central differences: the integral curves are straight.
pub fn verify_line_field(spec: &FibrationSpec, grid: &Grid3, tol: f64) -> Result<Certificate> {
    spec.vfield()?;
    let h = spec.solver().fd_step;
    let residuals: Vec<(Vec3, Result<f64>)> = grid
        .points()
        .par_iter()
        .map(|&x| {
            let r = (|| {
                let v = spec.direction(x)?.get();
                let dv = fd_jacobian3(|y| spec.direction(y).map(UnitVec3::get), x, h)?;
                Ok((dv * v).norm())
            })();
            (x, r)
        })
        .collect();

    let mut cert =
        Certificate::new(Property::LineField, grid.describe()).tolerance("residual", tol).tolerance("fd_step", h);
    let mut max = 0.0f64;
    let mut failed_eval = Vec::new();
    let mut bent = Vec::new();
    for (x, r) in &residuals {
        match r {
            Ok(r) => {
                max = max.max(*r);
                if !(*r <= tol) {
                    bent.push((*x, *r));
                }
            }
            Err(e) => {
                failed_eval.push(Witness::new(format!("not evaluable: {e}"), vec![x.to_array().to_vec()], f64::NAN))
            }
        }
    }
    bent.sort_by(|a, b| b.1.total_cmp(&a.1));
    cert.add_violations(
        bent.iter().map(|(x, r)| Witness::new("curved integral line", vec![x.to_array().to_vec()], *r)),
    );
    cert.settle();
    if !failed_eval.is_empty() && cert.passed() {
        cert.verdict = Verdict::Inconclusive;
    }
    for w in failed_eval {
        if cert.witnesses.len() < MAX_WITNESSES {
            cert.witnesses.push(w);
        }
    }
    cert.margin = tol - max;
    cert.metric("max_residual", max);
    Ok(cert)
}
