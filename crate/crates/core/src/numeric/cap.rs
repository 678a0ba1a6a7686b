use serde::Serialize;

use super::{det3, NumericError, UnitVec3, Vec3};

/// Geodesic cap on the unit sphere; `radius` is an angle in radians.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Cap {
    pub center: UnitVec3,
    pub radius: f64,
    pub iterations: usize,
    /// True when the center was replaced by the exact circumcenter of a support set.
    pub refined: bool,
}

/// Hard stop for the iteration; the stopping rule normally ends it far sooner.
const MAX_ITERATIONS: usize = 20_000_000;

/// Approximate minimal enclosing geodesic cap (spherical Badoiu-Clarkson).
///
/// Starts at the normalized mean, or a perceptron fix of it when the mean
/// misses some samples. Step `k` moves the center along the
/// geodesic toward the currently farthest sample by the fraction `1/(k+1)`
/// of their distance, and stops once a move is shorter than `tol`. The result
/// depends only on the samples and their order.
///
/// The iterate is then refined: pairs and triples of samples nearly farthest
/// from it are tried as the support of the cap, and the smallest exact cap
/// that contains every sample replaces the iterate if it is no larger. The
/// refinement is also tried at power-of-two iterations; the loop ends early
/// once it yields a cap whose center lies in the cone of its support, which
/// makes that cap optimal.
pub fn min_enclosing_cap(samples: &[UnitVec3], tol: f64) -> Result<Cap, NumericError> {
    if samples.is_empty() {
        return Err(NumericError::Empty);
    }
    let pts: Vec<Vec3> = samples.iter().map(|s| s.get()).collect();
    let mut center = hemisphere_start(&pts).ok_or(NumericError::NotInHemisphere)?;

    let mut iterations = 0;
    for k in 1..=MAX_ITERATIONS {
        iterations = k;
        let (far, min_dot) = farthest(&pts, center);
        let theta = angle(center, far, min_dot);
        if theta == 0.0 {
            break;
        }
        if k >= FIRST_CHECKPOINT && k.is_power_of_two() && strictly_inside_hemisphere(&pts, center) {
            if let Some((c, r, true)) = refine(&pts, center, theta) {
                return Ok(Cap { center: UnitVec3::new(c)?, radius: r, iterations, refined: true });
            }
        }
        let frac = 1.0 / (k as f64 + 1.0);
        let moved = theta * frac;
        center = slerp(center, far, theta, frac);
        if moved < tol {
            break;
        }
    }

    if !strictly_inside_hemisphere(&pts, center) {
        return Err(NumericError::NotInHemisphere);
    }
    let (far, min_dot) = farthest(&pts, center);
    let radius = angle(center, far, min_dot);
    if let Some((c, r, _)) = refine(&pts, center, radius) {
        return Ok(Cap { center: UnitVec3::new(c)?, radius: r, iterations, refined: true });
    }
    Ok(Cap { center: UnitVec3::new(center)?, radius, iterations, refined: false })
}

/// Larger support sets are thinned to one point per azimuth sector.
const MAX_SUPPORT_CANDIDATES: usize = 40;

/// Early refinement starts at this iteration.
const FIRST_CHECKPOINT: usize = 64;

/// Smallest exact cap through a candidate support that holds every sample and
/// is no larger than `radius`, with whether its optimality is certified.
fn refine(pts: &[Vec3], center: Vec3, radius: f64) -> Option<(Vec3, f64, bool)> {
    let mut slack = 1e-9;
    let mut fallback = None;
    while slack <= 1e-2 {
        let cand: Vec<Vec3> =
            pts.iter().copied().filter(|&p| angle(center, p, p.dot(center)) >= radius - slack).collect();
        let cand = spread_subset(cand, center, MAX_SUPPORT_CANDIDATES);
        let mut best: Option<(Vec3, f64, bool)> = None;
        let mut consider = |c: Vec3, optimal: bool| {
            let (far, d) = farthest(pts, c);
            let r = angle(c, far, d);
            // A certified cap is already minimal, so it beats any uncertified one.
            if r <= radius && best.map_or(true, |(_, br, bo)| (optimal && !bo) || (optimal == bo && r < br)) {
                best = Some((c, r, optimal));
            }
        };
        for (i, &a) in cand.iter().enumerate() {
            for (j, &b) in cand.iter().enumerate().skip(i + 1) {
                if let Ok(m) = (a + b).normalized() {
                    consider(m.get(), true);
                }
                for &c in &cand[j + 1..] {
                    if let Ok(n) = (b - a).cross(c - a).normalized() {
                        let n = n.get();
                        let n = if n.dot(a) >= 0.0 { n } else { -n };
                        consider(n, in_cone(n, a, b, c));
                    }
                }
            }
        }
        if let Some((_, _, true)) = best {
            return best;
        }
        fallback = fallback.or(best);
        slack *= 10.0;
    }
    fallback
}

/// Keeps the candidate farthest from `center` in each of `k` azimuth sectors.
fn spread_subset(pts: Vec<Vec3>, center: Vec3, k: usize) -> Vec<Vec3> {
    if pts.len() <= k {
        return pts;
    }
    let helper = if center.x.abs() < 0.9 { Vec3::new(1.0, 0.0, 0.0) } else { Vec3::new(0.0, 1.0, 0.0) };
    let e1 = match center.cross(helper).normalized() {
        Ok(u) => u.get(),
        Err(_) => return pts[..k].to_vec(),
    };
    let e2 = center.cross(e1);
    let mut best: Vec<Option<(f64, Vec3)>> = vec![None; k];
    for p in pts {
        let az = p.dot(e2).atan2(p.dot(e1)) + std::f64::consts::PI;
        let bin = ((az / std::f64::consts::TAU * k as f64) as usize).min(k - 1);
        let d = p.dot(center);
        if best[bin].map_or(true, |(bd, _)| d < bd) {
            best[bin] = Some((d, p));
        }
    }
    best.into_iter().flatten().map(|(_, p)| p).collect()
}

/// Whether `n` is a nonnegative combination of `a`, `b`, `c`.
fn in_cone(n: Vec3, a: Vec3, b: Vec3, c: Vec3) -> bool {
    let d = det3(a, b, c);
    if d == 0.0 {
        return false;
    }
    [det3(n, b, c), det3(a, n, c), det3(a, b, n)].iter().all(|&x| x / d >= -1e-12)
}

const PERCEPTRON_ROUNDS: usize = 100_000;

fn hemisphere_start(pts: &[Vec3]) -> Option<Vec3> {
    let mut c = pts.iter().fold(Vec3::ZERO, |acc, &p| acc + p);
    for _ in 0..PERCEPTRON_ROUNDS {
        match pts.iter().find(|p| !(p.dot(c) > 0.0)) {
            None => return c.normalized().ok().map(|u| u.get()),
            Some(&p) => c = c + p,
        }
    }
    None
}

fn strictly_inside_hemisphere(pts: &[Vec3], c: Vec3) -> bool {
    pts.iter().all(|p| p.dot(c) > 0.0)
}

fn farthest(pts: &[Vec3], c: Vec3) -> (Vec3, f64) {
    let mut best = pts[0];
    let mut best_dot = f64::INFINITY;
    for &p in pts {
        let d = p.dot(c);
        if d < best_dot {
            best_dot = d;
            best = p;
        }
    }
    (best, best_dot)
}

fn angle(c: Vec3, p: Vec3, dot: f64) -> f64 {
    c.cross(p).norm().atan2(dot)
}

fn slerp(a: Vec3, b: Vec3, theta: f64, frac: f64) -> Vec3 {
    let s = theta.sin();
    if s < 1e-300 {
        return a;
    }
    let v = a * (((1.0 - frac) * theta).sin() / s) + b * ((frac * theta).sin() / s);
    v / v.norm()
}
