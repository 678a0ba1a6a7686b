use std::ops::{Add, Div, Mul, Neg, Sub};

/// Value with a gradient over a fixed number of variables.
#[derive(Clone, Debug, PartialEq)]
pub struct Dual {
    value: f64,
    partials: Vec<f64>,
}

impl Dual {
    pub fn constant(value: f64, n: usize) -> Dual {
        Dual { value, partials: vec![0.0; n] }
    }

    pub fn variable(value: f64, index: usize, n: usize) -> Dual {
        let mut partials = vec![0.0; n];
        partials[index] = 1.0;
        Dual { value, partials }
    }

    pub(super) fn from_parts(value: f64, partials: Vec<f64>) -> Dual {
        Dual { value, partials }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn partials(&self) -> &[f64] {
        &self.partials
    }

    /// Applies a scalar function with value `f` and derivative `df` at `self.value`.
    pub fn chain(&self, f: f64, df: f64) -> Dual {
        Dual { value: f, partials: self.partials.iter().map(|d| df * d).collect() }
    }

    fn combine(&self, other: &Dual, value: f64, da: f64, db: f64) -> Dual {
        let partials = self.partials.iter().zip(&other.partials).map(|(a, b)| da * a + db * b).collect();
        Dual { value, partials }
    }
}

impl Add for &Dual {
    type Output = Dual;
    fn add(self, o: &Dual) -> Dual {
        self.combine(o, self.value + o.value, 1.0, 1.0)
    }
}

impl Sub for &Dual {
    type Output = Dual;
    fn sub(self, o: &Dual) -> Dual {
        self.combine(o, self.value - o.value, 1.0, -1.0)
    }
}

impl Mul for &Dual {
    type Output = Dual;
    fn mul(self, o: &Dual) -> Dual {
        self.combine(o, self.value * o.value, o.value, self.value)
    }
}

/// Caller checks for a zero denominator.
impl Div for &Dual {
    type Output = Dual;
    fn div(self, o: &Dual) -> Dual {
        let q = self.value / o.value;
        self.combine(o, q, 1.0 / o.value, -q / o.value)
    }
}

impl Neg for &Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        self.chain(-self.value, -1.0)
    }
}
