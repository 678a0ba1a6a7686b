use super::{NumericError, SolverConfig};

/// Derivative magnitude treated as a blow-up of the field.
pub const DERIVATIVE_BLOWUP: f64 = 1e9;

/// Uniformly sampled solution of an initial value problem.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<const N: usize> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; N]>,
}

impl<const N: usize> Trajectory<N> {
    pub fn last(&self) -> &[f64; N] {
        self.y.last().expect("trajectory holds at least the initial state")
    }
}

fn checked<const N: usize>(d: [f64; N], t: f64) -> Result<[f64; N], NumericError> {
    let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm <= DERIVATIVE_BLOWUP) {
        return Err(NumericError::FieldBlowup { t });
    }
    Ok(d)
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, k: &[f64; N]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * k[i])
}

/// One classical RK4 step of size `h` from `(t, y)`.
pub fn rk4_step<const N: usize, F, E>(field: &mut F, t: f64, y: &[f64; N], h: f64) -> Result<[f64; N], E>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N], E>,
    E: From<NumericError>,
{
    let k1 = checked(field(t, y)?, t)?;
    let k2 = checked(field(t + 0.5 * h, &axpy(y, 0.5 * h, &k1))?, t + 0.5 * h)?;
    let k3 = checked(field(t + 0.5 * h, &axpy(y, 0.5 * h, &k2))?, t + 0.5 * h)?;
    let k4 = checked(field(t + h, &axpy(y, h, &k3))?, t + h)?;
    Ok(std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])))
}

/// Fixed-step RK4 from `t = 0` to `t_end`.
///
/// The step is `cfg.ode_step`, shrunk so an integer number of steps lands on
/// `t_end` exactly. `project`, when given, is applied after every step.
pub fn rk4_path<const N: usize, F, E>(
    mut field: F,
    y0: [f64; N],
    t_end: f64,
    cfg: &SolverConfig,
    mut project: Option<&mut dyn FnMut(&mut [f64; N])>,
) -> Result<Trajectory<N>, E>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N], E>,
    E: From<NumericError>,
{
    let steps = ((t_end.abs() / cfg.ode_step) - 1e-9).ceil().max(1.0) as usize;
    let h = t_end / steps as f64;
    let mut traj = Trajectory { t: Vec::with_capacity(steps + 1), y: Vec::with_capacity(steps + 1) };
    traj.t.push(0.0);
    traj.y.push(y0);
    let mut y = y0;
    for i in 0..steps {
        let t = h * i as f64;
        y = rk4_step(&mut field, t, &y, h)?;
        if let Some(p) = project.as_mut() {
            p(&mut y);
        }
        traj.t.push(if i + 1 == steps { t_end } else { h * (i + 1) as f64 });
        traj.y.push(y);
    }
    Ok(traj)
}
