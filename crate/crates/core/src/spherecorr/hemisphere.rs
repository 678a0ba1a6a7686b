use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::Serialize;

use crate::certificate::{Certificate, Property, Witness};
use crate::error::{Error, Result};
use crate::fibration::{BMap, FibrationSpec};
use crate::numeric::{newton2, Mat2, SolverConfig, Vec2};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HemisphereOptions {
    /// Targets `w` per circle `|w| = R`.
    pub targets: usize,
    /// Newton starts are `rho (cos a, sin a)` for these `rho` (plus the origin).
    pub start_radii: Vec<f64>,
    pub start_angles: usize,
    /// Bisection steps between the last covered and first uncovered radius.
    pub refine_iters: usize,
}

impl Default for HemisphereOptions {
    fn default() -> Self {
        Self {
            targets: 16,
            start_radii: vec![0.5, 2.0, 8.0, 32.0, 128.0, 512.0, 2048.0, 8192.0, 32768.0],
            start_angles: 8,
            refine_iters: 24,
        }
    }
}

fn solve(bmap: &BMap, w: Vec2, starts: &[Vec2], solver: &SolverConfig) -> Option<Vec2> {
    let mut cfg = solver.clone();
    cfg.residual_tol *= w.norm().max(1.0);
    starts.iter().find_map(|&p0| {
        newton2(
            |p: Vec2| -> Result<(Vec2, Mat2)> {
                let j = bmap.jet(p)?;
                Ok((j.value - w, j.jacobian))
            },
            p0,
            &cfg,
        )
        .ok()
        .map(|s| s.root)
    })
}

/// First target on `|w| = r` with no solution of `B(p) = w`, if any.
fn first_miss(bmap: &BMap, r: f64, starts: &[Vec2], opts: &HemisphereOptions, solver: &SolverConfig) -> Option<Vec2> {
    let targets: Vec<Vec2> =
        (0..opts.targets).map(|k| Vec2::from_polar(r, TAU * k as f64 / opts.targets as f64)).collect();
    let solved: Vec<bool> = targets.par_iter().map(|&w| solve(bmap, w, starts, solver).is_some()).collect();
    targets.into_iter().zip(solved).find(|(_, ok)| !ok).map(|(w, _)| w)
}

/// Whether `B` reaches every sampled target on growing circles.
///
/// Passes (the great-circle case) when every tested radius is covered. On a
/// failure the boundary between the last covered and first uncovered radius is
/// refined by bisection and reported as `stall_bound`.
pub fn hemisphere_criterion(spec: &FibrationSpec, radii: &[f64], opts: &HemisphereOptions) -> Result<Certificate> {
    let (_, bmap) = spec.planar_parts()?;
    if radii.is_empty() || radii[0] <= 0.0 || radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("radii must be positive and strictly increasing".into()));
    }
    let mut starts = vec![Vec2::ZERO];
    for &rho in &opts.start_radii {
        for k in 0..opts.start_angles {
            starts.push(Vec2::from_polar(rho, TAU * k as f64 / opts.start_angles as f64));
        }
    }
    let solver = spec.solver();
    let mut cert =
        Certificate::new(Property::Surjectivity, format!("circles |w| = {radii:?}, {} targets each", opts.targets));
    let mut covered = 0.0;
    let mut miss = None;
    for &r in radii {
        match first_miss(bmap, r, &starts, opts, solver) {
            None => covered = r,
            Some(w) => {
                miss = Some((r, w));
                break;
            }
        }
    }
    cert.metric("covered_radius", covered);
    if let Some((r_fail, w)) = miss {
        let (mut lo, mut hi) = (covered, r_fail);
        for _ in 0..opts.refine_iters {
            let mid = 0.5 * (lo + hi);
            if first_miss(bmap, mid, &starts, opts, solver).is_none() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        cert.metric("stall_bound", lo);
        cert.metric("first_uncovered_radius", r_fail);
        cert.add_violations([Witness::new("no solution of B(p) = w", vec![vec![w.x, w.y]], r_fail)]);
        cert.margin = lo - r_fail;
    } else {
        cert.margin = covered;
    }
    cert.settle();
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fibration::{catalog, Orientation};
    use std::f64::consts::FRAC_PI_2;

    const RADII: [f64; 6] = [0.5, 1.0, 1.5, 2.0, 4.0, 8.0];

    #[test]
    fn onto_maps_cover_every_radius() {
        for spec in [catalog::hopf(Orientation::Positive), catalog::degenerate(3).unwrap()] {
            let cert = hemisphere_criterion(&spec, &RADII, &HemisphereOptions::default()).unwrap();
            assert!(cert.passed(), "{}: {:?}", spec.label(), cert);
            assert_eq!(cert.metrics["covered_radius"], 8.0);
        }
    }

    #[test]
    fn capped_stalls_below_half_pi() {
        let cert = hemisphere_criterion(&catalog::capped_arctan(), &RADII, &HemisphereOptions::default()).unwrap();
        assert!(!cert.passed());
        assert_eq!(cert.metrics["covered_radius"], 1.5);
        let bound = cert.metrics["stall_bound"];
        assert!(bound < FRAC_PI_2 && FRAC_PI_2 - bound < 1e-3, "{bound}");
    }
}
