//! Deterministic numerical kernels: small linear algebra, damped Newton,
//! fixed-step RK4, central differences and the spherical enclosing cap.

mod cap;
mod fd;
mod grid;
mod linalg;
mod newton;
mod ode;

pub use cap::{min_enclosing_cap, Cap};
pub use fd::{fd_jacobian, fd_jacobian3, try_fd_jacobian};
pub use grid::{Grid2, Grid3};
pub use linalg::{det3, minimal_rotation, rotation_about, Mat2, Mat3, UnitVec3, Vec2, Vec3};
pub use newton::{newton2, newton2_fd, NewtonSolution};
pub use ode::{rk4_path, rk4_step, Trajectory, DERIVATIVE_BLOWUP};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericError {
    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("singular Jacobian at ({}, {})", point.x, point.y)]
    SingularJacobian { point: Vec2 },
    #[error("vector field blew up at t = {t}")]
    FieldBlowup { t: f64 },
    #[error("samples are not contained in an open hemisphere")]
    NotInHemisphere,
    #[error("cannot normalize a zero or non-finite vector")]
    ZeroVector,
    #[error("vector has norm {0}, expected 1")]
    NotUnit(f64),
    #[error("empty input")]
    Empty,
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}

/// Tolerances and step sizes shared by the solvers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub residual_tol: f64,
    pub max_iters: usize,
    /// Step-halving budget per damped Newton step.
    pub max_halvings: usize,
    pub fd_step: f64,
    pub ode_step: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { residual_tol: 1e-12, max_iters: 50, max_halvings: 30, fd_step: 1e-5, ode_step: 1e-3 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), NumericError> {
        let positive = [("residual_tol", self.residual_tol), ("fd_step", self.fd_step), ("ode_step", self.ode_step)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(NumericError::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_iters == 0 {
            return Err(NumericError::InvalidConfig("max_iters must be positive".into()));
        }
        Ok(())
    }

    pub fn with_ode_step(&self, h: f64) -> Self {
        Self { ode_step: h, ..self.clone() }
    }
}
