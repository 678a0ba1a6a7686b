use proptest::prelude::*;
use skewfib_core::contact::{contact_checks, legendrian_lift, LiftConfig, PlanePath};
use skewfib_core::fibration::{catalog, BMap, FibrationSpec, Frame, Orientation};
use skewfib_core::numeric::{
    fd_jacobian, min_enclosing_cap, newton2, rotation_about, Grid2, Mat2, UnitVec3, Vec2, Vec3,
};
use skewfib_core::spherecorr::{align_projected_hopf, certify_homotopy};
use skewfib_core::Result;

fn nondegenerate_catalog() -> Vec<FibrationSpec> {
    vec![catalog::hopf(Orientation::Positive), catalog::hopf(Orientation::Negative), catalog::capped_arctan()]
}

fn unit(theta: f64, phi: f64) -> Vec3 {
    Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn base_solution_is_a_newton_fixed_point(
        which in 0usize..5,
        p1 in -5.0f64..5.0,
        p2 in -5.0f64..5.0,
        z in -5.0f64..5.0,
    ) {
        let spec = &catalog::bmap_catalog()[which];
        let (_, bmap) = spec.planar_parts().unwrap();
        let p = Vec2::new(p1, p2);
        let target = p + bmap.jet(p).unwrap().value * z;
        let sol = spec.solve_base(target.extend(z)).unwrap();
        let tol = spec.solver().residual_tol * target.norm().max(1.0);
        prop_assert!(sol.residual <= tol, "{} residual {}", spec.label(), sol.residual);
        let mut cfg = spec.solver().clone();
        cfg.residual_tol = tol;
        let again = newton2(
            |q: Vec2| -> Result<(Vec2, Mat2)> {
                let jet = bmap.jet(q)?;
                Ok((q + jet.value * z - target, Mat2::IDENTITY + jet.jacobian.scale(z)))
            },
            sol.p,
            &cfg,
        )
        .unwrap();
        prop_assert!((again.root - sol.p).norm() <= 1e-10 * sol.p.norm().max(1.0));
    }

    #[test]
    fn expression_maps_match_finite_differences(
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
        c in -2.0f64..2.0,
        d in -1.0f64..1.0,
    ) {
        let b1 = format!("{a} * sin(p1 * p2) + {b} * p2^3");
        let b2 = format!("{c} * atan(p1) - p2 * exp({d} * p1 / 4)");
        let bmap = BMap::expressions(&b1, &b2).unwrap();
        for p in Grid2::new(-3.0, 3.0, 21).points() {
            let ad = bmap.jet(p).unwrap().jacobian;
            let fd = fd_jacobian(
                |x: &[f64]| {
                    let v = bmap.jet(Vec2::new(x[0], x[1])).unwrap().value;
                    vec![v.x, v.y]
                },
                &[p.x, p.y],
                1e-5,
            );
            for (i, row) in fd.iter().enumerate() {
                for (j, &entry) in row.iter().enumerate() {
                    let exact = ad.col(j).to_array()[i];
                    prop_assert!((entry - exact).abs() <= 1e-5 * exact.abs().max(1.0), "{p:?} {i}{j}: {entry} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn cap_is_invariant_under_rotation_and_permutation(
        raw in prop::collection::vec((0.0f64..1.2, 0.0f64..std::f64::consts::TAU), 3..30),
        axis in (0.0f64..std::f64::consts::PI, 0.0f64..std::f64::consts::TAU),
        angle in -3.0f64..3.0,
        shuffle_seed in any::<u64>(),
    ) {
        let pts: Vec<UnitVec3> = raw.iter().map(|&(t, f)| UnitVec3::new(unit(t, f)).unwrap()).collect();
        let cap = min_enclosing_cap(&pts, 1e-9).unwrap();

        let r = rotation_about(unit(axis.0, axis.1), angle);
        let mut moved: Vec<UnitVec3> = pts.iter().map(|p| UnitVec3::new(r * p.get()).unwrap()).collect();
        // Fisher-Yates with a fixed LCG keeps the permutation reproducible from the seed.
        let mut s = shuffle_seed;
        for i in (1..moved.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            moved.swap(i, (s >> 33) as usize % (i + 1));
        }
        let other = min_enclosing_cap(&moved, 1e-9).unwrap();
        let back = r.transpose() * other.center.get();
        prop_assert!((other.radius - cap.radius).abs() < 1e-7, "{} vs {}", other.radius, cap.radius);
        prop_assert!((back - cap.center.get()).norm() < 1e-6, "{back:?} vs {:?}", cap.center);
    }

    #[test]
    fn contact_sign_is_the_orientation_and_the_trace_agrees(
        which in 0usize..3,
        x in -5.0f64..5.0,
        y in -5.0f64..5.0,
        z in -5.0f64..5.0,
    ) {
        let spec = &nondegenerate_catalog()[which];
        let sigma = match spec.label() {
            "hopf(-1)" => -1.0,
            _ => 1.0,
        };
        let c = contact_checks(spec, Vec3::new(x, y, z)).unwrap();
        prop_assert!(c.fd * sigma > 0.0, "{}: c = {}", spec.label(), c.fd);
        prop_assert!((c.fd - c.trace).abs() <= 1e-5 * c.fd.abs().max(1.0));
        prop_assert!((c.fd - c.exact).abs() <= 1e-4 * c.fd.abs().max(1.0));
    }

    #[test]
    fn lift_residual_stays_small(
        which in 0usize..3,
        a in (-3.0f64..3.0, -3.0f64..3.0),
        b in (-3.0f64..3.0, -3.0f64..3.0),
        z0 in -2.0f64..2.0,
    ) {
        let spec = &nondegenerate_catalog()[which];
        let path = PlanePath::Segment { from: Vec2::new(a.0, a.1), to: Vec2::new(b.0, b.1) };
        let lift = legendrian_lift(spec, &path, z0, &LiftConfig::default()).unwrap();
        prop_assert!(lift.complete);
        prop_assert!(lift.max_residual <= 1e-6, "{}", lift.max_residual);
        prop_assert!(lift.residuals.iter().all(|&r| r <= 1e-6));
    }

    #[test]
    fn projected_hopf_is_a_rotated_builtin(seed in any::<u64>()) {
        let spec = catalog::hopf(Orientation::Positive);
        let a = align_projected_hopf(&spec, 50, seed).unwrap();
        prop_assert!(a.max_direction_error <= 1e-6, "{}", a.max_direction_error);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn homotopy_margins_are_above_the_chord(ts in prop::collection::vec(0.0f64..=1.0, 1..6)) {
        let spec = FibrationSpec::planar("capped(atan)", Frame::STANDARD, BMap::Capped(skewfib_core::fibration::Profile::Arctan));
        let grid = Grid2::new(-4.0, 4.0, 9);
        let path = certify_homotopy(&spec, &ts, &grid).unwrap();
        prop_assert!(path.certificate.passed());
        for s in &path.steps {
            prop_assert!(s.max_convexity_gap <= 1e-9, "t = {}: {}", s.t, s.max_convexity_gap);
        }
    }
}
