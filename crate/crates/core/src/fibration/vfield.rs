use crate::error::Result;
use crate::exprlang::Expr;
use crate::numeric::{Mat3, UnitVec3, Vec3};

/// Direction field from three expressions in `x, y, z`, normalized on evaluation.
#[derive(Clone, Debug)]
pub struct VField {
    components: Box<[Expr; 3]>,
}

impl VField {
    pub const VARIABLES: [&'static str; 3] = ["x", "y", "z"];

    pub fn parse(a: &str, b: &str, c: &str) -> Result<VField> {
        let p = |s: &str| Expr::parse(s, &Self::VARIABLES);
        Ok(VField { components: Box::new([p(a)?, p(b)?, p(c)?]) })
    }

    pub fn components(&self) -> &[Expr; 3] {
        &self.components
    }

    /// The field before normalization.
    pub fn raw(&self, x: Vec3) -> Result<Vec3> {
        let pt = x.to_array();
        let c = &self.components;
        Ok(Vec3::new(c[0].eval(&pt)?, c[1].eval(&pt)?, c[2].eval(&pt)?))
    }

    pub fn eval(&self, x: Vec3) -> Result<UnitVec3> {
        Ok(UnitVec3::new(self.raw(x)?)?)
    }

    /// Exact Jacobian of the normalized field, `(I - V V^T) dW / |W|`.
    pub fn jacobian(&self, x: Vec3) -> Result<Mat3> {
        let pt = x.to_array();
        let mut w = [0.0; 3];
        let mut rows = [Vec3::ZERO; 3];
        for (i, e) in self.components.iter().enumerate() {
            let d = e.eval_dual(&pt)?;
            w[i] = d.value();
            rows[i] = Vec3::new(d.partials()[0], d.partials()[1], d.partials()[2]);
        }
        let w = Vec3::from_array(w);
        let v = UnitVec3::new(w)?.get();
        let dw = Mat3::from_rows(rows[0], rows[1], rows[2]);
        Ok((Mat3::IDENTITY - Mat3::outer(v, v)) * dw.scale(1.0 / w.norm()))
    }

    pub fn describe(&self) -> String {
        let c = &self.components;
        format!("({}, {}, {})", c[0], c[1], c[2])
    }
}
