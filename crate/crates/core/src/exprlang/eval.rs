use super::{BinOp, Dual, ExprError, Func, Node};

fn domain(msg: &str, x: f64) -> ExprError {
    ExprError::Domain(format!("{msg} (argument {x})"))
}

fn powi(x: f64, n: i32) -> f64 {
    let mut acc = 1.0;
    for _ in 0..n.unsigned_abs() {
        acc *= x;
    }
    if n < 0 {
        1.0 / acc
    } else {
        acc
    }
}

fn apply(func: Func, x: f64) -> Result<f64, ExprError> {
    Ok(match func {
        Func::Sin => x.sin(),
        Func::Cos => x.cos(),
        Func::Tan => x.tan(),
        Func::Atan => x.atan(),
        Func::Sqrt if x < 0.0 => return Err(domain("sqrt of a negative number", x)),
        Func::Sqrt => x.sqrt(),
        Func::Abs => x.abs(),
        Func::Exp => x.exp(),
        Func::Log if x <= 0.0 => return Err(domain("log of a non-positive number", x)),
        Func::Log => x.ln(),
    })
}

fn real_pow(b: f64, e: f64) -> Result<f64, ExprError> {
    if b <= 0.0 {
        return Err(domain("non-integer power of a non-positive base", b));
    }
    Ok(b.powf(e))
}

pub(super) fn value(node: &Node, p: &[f64]) -> Result<f64, ExprError> {
    Ok(match node {
        Node::Num(v) => *v,
        Node::Var(i) => p[*i],
        Node::Neg(a) => -value(a, p)?,
        Node::Bin(op, a, b) => {
            let (a, b) = (value(a, p)?, value(b, p)?);
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div if b == 0.0 => return Err(domain("division by zero", a)),
                BinOp::Div => a / b,
            }
        }
        Node::Pow { base, exp, int_exp } => {
            let b = value(base, p)?;
            match int_exp {
                Some(n) if *n < 0 && b == 0.0 => return Err(domain("negative power of zero", b)),
                Some(n) => powi(b, *n),
                None => real_pow(b, value(exp, p)?)?,
            }
        }
        Node::Call(f, a) => apply(*f, value(a, p)?)?,
        Node::Piecewise(c, a, b) => {
            if value(c, p)? >= 0.0 {
                value(a, p)?
            } else {
                value(b, p)?
            }
        }
    })
}

pub(super) fn dual(node: &Node, vars: &[Dual]) -> Result<Dual, ExprError> {
    let n = vars.len();
    Ok(match node {
        Node::Num(v) => Dual::constant(*v, n),
        Node::Var(i) => vars[*i].clone(),
        Node::Neg(a) => -&dual(a, vars)?,
        Node::Bin(op, a, b) => {
            let (a, b) = (dual(a, vars)?, dual(b, vars)?);
            match op {
                BinOp::Add => &a + &b,
                BinOp::Sub => &a - &b,
                BinOp::Mul => &a * &b,
                BinOp::Div if b.value() == 0.0 => return Err(domain("division by zero", a.value())),
                BinOp::Div => &a / &b,
            }
        }
        Node::Pow { base, exp, int_exp } => {
            let b = dual(base, vars)?;
            let x = b.value();
            match int_exp {
                Some(k) if *k < 0 && x == 0.0 => return Err(domain("negative power of zero", x)),
                Some(0) => Dual::constant(1.0, n),
                Some(k) => b.chain(powi(x, *k), *k as f64 * powi(x, k - 1)),
                None => {
                    let e = dual(exp, vars)?;
                    let v = real_pow(x, e.value())?;
                    // d(b^e) = b^e (e' ln b + e b'/b)
                    let partials: Vec<f64> = b
                        .partials()
                        .iter()
                        .zip(e.partials())
                        .map(|(db, de)| v * (de * x.ln() + e.value() * db / x))
                        .collect();
                    Dual::from_parts(v, partials)
                }
            }
        }
        Node::Call(f, a) => {
            let a = dual(a, vars)?;
            let x = a.value();
            let (v, d) = match f {
                Func::Sin => (x.sin(), x.cos()),
                Func::Cos => (x.cos(), -x.sin()),
                Func::Tan => {
                    let t = x.tan();
                    (t, 1.0 + t * t)
                }
                Func::Atan => (x.atan(), 1.0 / (1.0 + x * x)),
                Func::Sqrt if x <= 0.0 => return Err(domain("sqrt is not differentiable here", x)),
                Func::Sqrt => {
                    let s = x.sqrt();
                    (s, 0.5 / s)
                }
                // The kink at 0 takes the right-hand derivative.
                Func::Abs => (x.abs(), if x >= 0.0 { 1.0 } else { -1.0 }),
                Func::Exp => {
                    let e = x.exp();
                    (e, e)
                }
                Func::Log if x <= 0.0 => return Err(domain("log of a non-positive number", x)),
                Func::Log => (x.ln(), 1.0 / x),
            };
            a.chain(v, d)
        }
        Node::Piecewise(c, a, b) => {
            if dual(c, vars)?.value() >= 0.0 {
                dual(a, vars)?
            } else {
                dual(b, vars)?
            }
        }
    })
}
