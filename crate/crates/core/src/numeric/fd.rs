use std::convert::Infallible;

use super::{Mat3, Vec3};

/// Central-difference Jacobian of `f: R^n -> R^m` at `x`, returned as `m` rows.
pub fn fd_jacobian<F>(mut f: F, x: &[f64], h: f64) -> Vec<Vec<f64>>
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    match try_fd_jacobian(|p| Ok::<_, Infallible>(f(p)), x, h) {
        Ok(j) => j,
        Err(never) => match never {},
    }
}

/// Fallible variant of [`fd_jacobian`].
pub fn try_fd_jacobian<F, E>(mut f: F, x: &[f64], h: f64) -> Result<Vec<Vec<f64>>, E>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>, E>,
{
    let n = x.len();
    let mut cols = Vec::with_capacity(n);
    let mut probe = x.to_vec();
    for j in 0..n {
        probe[j] = x[j] + h;
        let fp = f(&probe)?;
        probe[j] = x[j] - h;
        let fm = f(&probe)?;
        probe[j] = x[j];
        cols.push(fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect::<Vec<_>>());
    }
    let m = cols.first().map_or(0, Vec::len);
    Ok((0..m).map(|i| cols.iter().map(|c| c[i]).collect()).collect())
}

/// Central-difference Jacobian of a vector field on R^3; rows are components.
pub fn fd_jacobian3<F, E>(mut f: F, x: Vec3, h: f64) -> Result<Mat3, E>
where
    F: FnMut(Vec3) -> Result<Vec3, E>,
{
    let dx = (f(x + Vec3::X * h)? - f(x - Vec3::X * h)?) / (2.0 * h);
    let dy = (f(x + Vec3::Y * h)? - f(x - Vec3::Y * h)?) / (2.0 * h);
    let dz = (f(x + Vec3::Z * h)? - f(x - Vec3::Z * h)?) / (2.0 * h);
    Ok(Mat3::from_columns(dx, dy, dz))
}
