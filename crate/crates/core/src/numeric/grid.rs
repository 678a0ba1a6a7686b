use serde::{Deserialize, Serialize};

use super::{Vec2, Vec3};

/// Uniform square grid `n x n` over `[min, max]^2`, row-major in the first coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid2 {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Default for Grid2 {
    fn default() -> Self {
        Self { min: -5.0, max: 5.0, n: 21 }
    }
}

fn axis(min: f64, max: f64, n: usize) -> impl Iterator<Item = f64> + Clone {
    let step = if n > 1 { (max - min) / (n - 1) as f64 } else { 0.0 };
    (0..n).map(move |i| if n > 1 && i == n - 1 { max } else { min + step * i as f64 })
}

impl Grid2 {
    pub fn new(min: f64, max: f64, n: usize) -> Self {
        Self { min, max, n }
    }

    pub fn points(&self) -> Vec<Vec2> {
        let ax = axis(self.min, self.max, self.n);
        ax.clone().flat_map(|a| ax.clone().map(move |b| Vec2::new(a, b))).collect()
    }

    pub fn describe(&self) -> String {
        format!("{n}x{n} over [{}, {}]^2", self.min, self.max, n = self.n)
    }
}

/// Uniform cubic grid `n x n x n` over `[min, max]^3`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid3 {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Default for Grid3 {
    fn default() -> Self {
        Self { min: -5.0, max: 5.0, n: 11 }
    }
}

impl Grid3 {
    pub fn new(min: f64, max: f64, n: usize) -> Self {
        Self { min, max, n }
    }

    pub fn points(&self) -> Vec<Vec3> {
        let ax: Vec<f64> = axis(self.min, self.max, self.n).collect();
        let mut out = Vec::with_capacity(ax.len().pow(3));
        for &x in &ax {
            for &y in &ax {
                for &z in &ax {
                    out.push(Vec3::new(x, y, z));
                }
            }
        }
        out
    }

    pub fn describe(&self) -> String {
        format!("{n}x{n}x{n} over [{}, {}]^3", self.min, self.max, n = self.n)
    }
}
