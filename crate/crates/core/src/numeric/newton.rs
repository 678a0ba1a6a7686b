use super::{Mat2, NumericError, SolverConfig, Vec2};

/// Below this |det J| a Newton step is refused.
const SINGULAR_DET: f64 = 1e-14;

/// Extra undamped steps taken after the tolerance is met, while they help.
const POLISH_STEPS: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonSolution {
    pub root: Vec2,
    pub residual: f64,
    pub iterations: usize,
}

/// Damped Newton iteration for `F(p) = 0` on R^2.
///
/// `f` returns the value and Jacobian at a point. A step whose residual does
/// not decrease is halved up to `cfg.max_halvings` times.
pub fn newton2<F, E>(mut f: F, p0: Vec2, cfg: &SolverConfig) -> Result<NewtonSolution, E>
where
    F: FnMut(Vec2) -> Result<(Vec2, Mat2), E>,
    E: From<NumericError>,
{
    let mut p = p0;
    let (mut r, mut jac) = f(p)?;
    let mut res = r.norm();
    for iter in 0..cfg.max_iters {
        if res <= cfg.residual_tol {
            return polish(&mut f, p, r, jac, res, iter);
        }
        let step = newton_step(p, r, jac)?;
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=cfg.max_halvings {
            let q = p + step * lambda;
            if let Ok((rq, jq)) = f(q) {
                let rn = rq.norm();
                if rn.is_finite() && (rn < res || rn <= cfg.residual_tol) {
                    accepted = Some((q, rq, jq, rn));
                    break;
                }
            }
            lambda *= 0.5;
        }
        let Some((q, rq, jq, rn)) = accepted else {
            return Err(NumericError::NoConvergence { iterations: iter + 1, residual: res }.into());
        };
        p = q;
        r = rq;
        jac = jq;
        res = rn;
    }
    if res <= cfg.residual_tol {
        return Ok(NewtonSolution { root: p, residual: res, iterations: cfg.max_iters });
    }
    Err(NumericError::NoConvergence { iterations: cfg.max_iters, residual: res }.into())
}

fn newton_step(p: Vec2, r: Vec2, jac: Mat2) -> Result<Vec2, NumericError> {
    if !(jac.det().abs() >= SINGULAR_DET) {
        return Err(NumericError::SingularJacobian { point: p });
    }
    jac.solve(-r).ok_or(NumericError::SingularJacobian { point: p })
}

fn polish<F, E>(
    f: &mut F,
    mut p: Vec2,
    mut r: Vec2,
    mut jac: Mat2,
    mut res: f64,
    iterations: usize,
) -> Result<NewtonSolution, E>
where
    F: FnMut(Vec2) -> Result<(Vec2, Mat2), E>,
{
    for _ in 0..POLISH_STEPS {
        if res == 0.0 {
            break;
        }
        let Ok(step) = newton_step(p, r, jac) else {
            break;
        };
        let q = p + step;
        match f(q) {
            Ok((rq, jq)) if rq.norm() < res => {
                p = q;
                r = rq;
                jac = jq;
                res = rq.norm();
            }
            _ => break,
        }
    }
    Ok(NewtonSolution { root: p, residual: res, iterations })
}

/// Damped Newton with a central-difference Jacobian of step `cfg.fd_step`.
pub fn newton2_fd<F, E>(mut f: F, p0: Vec2, cfg: &SolverConfig) -> Result<NewtonSolution, E>
where
    F: FnMut(Vec2) -> Result<Vec2, E>,
    E: From<NumericError>,
{
    let h = cfg.fd_step;
    newton2(
        |p: Vec2| {
            let v = f(p)?;
            let dx = (f(p + Vec2::new(h, 0.0))? - f(p - Vec2::new(h, 0.0))?) / (2.0 * h);
            let dy = (f(p + Vec2::new(0.0, h))? - f(p - Vec2::new(0.0, h))?) / (2.0 * h);
            Ok((v, Mat2::from_columns(dx, dy)))
        },
        p0,
        cfg,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    type R<T> = Result<T, NumericError>;

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    #[test]
    fn identity_shift_root() {
        let sol =
            newton2(|p: Vec2| -> R<_> { Ok((p - Vec2::new(3.0, 4.0), Mat2::IDENTITY)) }, Vec2::ZERO, &cfg()).unwrap();
        assert!((sol.root - Vec2::new(3.0, 4.0)).norm() <= 1e-12);
    }

    #[test]
    fn inverts_cubic_forward_map() {
        // p + 2 (-p2^3, p1^3) = (-1, 3) has the root (1, 1).
        let target = Vec2::new(-1.0, 3.0);
        let f = |p: Vec2| -> R<_> {
            let v = p + Vec2::new(-p.y.powi(3), p.x.powi(3)) * 2.0 - target;
            let j = Mat2::new(1.0, -6.0 * p.y * p.y, 6.0 * p.x * p.x, 1.0);
            Ok((v, j))
        };
        let sol = newton2(f, target, &cfg()).unwrap();
        assert!((sol.root - Vec2::new(1.0, 1.0)).norm() <= 1e-10, "{:?}", sol);
        assert!(sol.residual <= 1e-12);
        // Idempotence: restarting at the root stays there.
        let again = newton2(f, sol.root, &cfg()).unwrap();
        assert!((again.root - sol.root).norm() <= 1e-14);
    }

    #[test]
    fn sqrt_two_root() {
        let f = |p: Vec2| -> R<_> { Ok((Vec2::new(p.x * p.x - 2.0, p.y), Mat2::new(2.0 * p.x, 0.0, 0.0, 1.0))) };
        let sol = newton2(f, Vec2::new(1.0, 0.0), &cfg()).unwrap();
        assert!((sol.root.x - 1.414_213_56).abs() < 1e-8);
        assert!((sol.root.x - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(sol.root.y, 0.0);
    }

    #[test]
    fn finite_difference_variant_agrees() {
        let f = |p: Vec2| -> R<_> { Ok(Vec2::new(p.x * p.x - 2.0, p.y)) };
        let sol = newton2_fd(f, Vec2::new(1.0, 0.0), &cfg()).unwrap();
        assert!((sol.root.x - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn singular_jacobian_reported() {
        let f = |p: Vec2| -> R<_> { Ok((Vec2::new(p.x * p.x + 1.0, p.y), Mat2::new(2.0 * p.x, 0.0, 0.0, 1.0))) };
        let err = newton2(f, Vec2::ZERO, &cfg()).unwrap_err();
        assert!(matches!(err, NumericError::SingularJacobian { .. }));
    }

    #[test]
    fn no_convergence_reported() {
        // x^2 + 1 has no real root; iterates wander until the budget runs out.
        let f = |p: Vec2| -> R<_> { Ok((Vec2::new(p.x * p.x + 1.0, p.y), Mat2::new(2.0 * p.x, 0.0, 0.0, 1.0))) };
        let err = newton2(f, Vec2::new(0.5, 0.0), &cfg()).unwrap_err();
        assert!(matches!(err, NumericError::NoConvergence { .. }), "{err:?}");
    }
}
