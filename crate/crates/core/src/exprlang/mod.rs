//! Scalar expressions over declared variables, with forward-mode derivatives.
//!
//! Grammar (whitespace insensitive, `^` binds tightest and is right
//! associative, then unary minus, then `* /`, then `+ -`):
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := unary (("*" | "/") unary)*
//! unary  := "-" unary | power
//! power  := atom ("^" unary)?
//! atom   := number | ident | ident "(" expr ("," expr)* ")" | "(" expr ")"
//! ```
//!
//! Functions: `sin cos tan atan sqrt abs exp log` and
//! `piecewise(c, a, b)`, which is `a` when `c >= 0` and `b` otherwise.
//! The identifier `pi` is a constant unless declared as a variable.

mod dual;
mod eval;
mod parse;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use dual::Dual;

/// Maximum tree depth accepted by the parser.
pub const MAX_DEPTH: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("function `{name}` takes {expected} argument(s), got {got}")]
    Arity { name: String, expected: usize, got: usize },
    #[error("expression nesting exceeds depth {MAX_DEPTH}")]
    TooDeep,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("expected {expected} variable values, got {got}")]
    PointSize { expected: usize, got: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Atan,
    Sqrt,
    Abs,
    Exp,
    Log,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "atan" => Func::Atan,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "exp" => Func::Exp,
            "log" => Func::Log,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Atan => "atan",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Exp => "exp",
            Func::Log => "log",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    /// `int_exp` is set when the exponent is a variable-free integer; those
    /// powers are evaluated by repeated multiplication.
    Pow {
        base: Box<Node>,
        exp: Box<Node>,
        int_exp: Option<i32>,
    },
    Call(Func, Box<Node>),
    Piecewise(Box<Node>, Box<Node>, Box<Node>),
}

impl Node {
    fn depth(&self) -> usize {
        1 + match self {
            Node::Num(_) | Node::Var(_) => 0,
            Node::Neg(a) | Node::Call(_, a) => a.depth(),
            Node::Bin(_, a, b) => a.depth().max(b.depth()),
            Node::Pow { base, exp, .. } => base.depth().max(exp.depth()),
            Node::Piecewise(c, a, b) => c.depth().max(a.depth()).max(b.depth()),
        }
    }

    fn has_vars(&self) -> bool {
        match self {
            Node::Num(_) => false,
            Node::Var(_) => true,
            Node::Neg(a) | Node::Call(_, a) => a.has_vars(),
            Node::Bin(_, a, b) => a.has_vars() || b.has_vars(),
            Node::Pow { base, exp, .. } => base.has_vars() || exp.has_vars(),
            Node::Piecewise(c, a, b) => c.has_vars() || a.has_vars() || b.has_vars(),
        }
    }
}

/// A parsed, immutable expression together with its declared variables.
#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    root: Node,
    variables: Arc<[String]>,
}

impl Expr {
    /// Parses `source` over the declared `variables`.
    pub fn parse<S: AsRef<str>>(source: &str, variables: &[S]) -> Result<Expr, ExprError> {
        let vars: Arc<[String]> = variables.iter().map(|v| v.as_ref().to_string()).collect();
        let root = parse::Parser::new(source, &vars).parse()?;
        if root.depth() > MAX_DEPTH {
            return Err(ExprError::TooDeep);
        }
        Ok(Expr { root, variables: vars })
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    /// Value at `point` (one entry per declared variable).
    pub fn eval(&self, point: &[f64]) -> Result<f64, ExprError> {
        self.check_point(point)?;
        eval::value(&self.root, point)
    }

    /// Value and all first partials at `point`.
    pub fn eval_dual(&self, point: &[f64]) -> Result<Dual, ExprError> {
        self.check_point(point)?;
        let n = point.len();
        let seeds: Vec<Dual> = point.iter().enumerate().map(|(i, &v)| Dual::variable(v, i, n)).collect();
        eval::dual(&self.root, &seeds)
    }

    fn check_point(&self, point: &[f64]) -> Result<(), ExprError> {
        if point.len() != self.variables.len() {
            return Err(ExprError::PointSize { expected: self.variables.len(), got: point.len() });
        }
        Ok(())
    }
}

/// Prints fully parenthesized source that parses back to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(&self.root, &self.variables, f)
    }
}

fn write_node(node: &Node, vars: &[String], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match node {
        Node::Num(v) => write!(f, "{v:?}"),
        Node::Var(i) => f.write_str(&vars[*i]),
        Node::Neg(a) => {
            f.write_str("(-")?;
            write_node(a, vars, f)?;
            f.write_str(")")
        }
        Node::Bin(op, a, b) => {
            f.write_str("(")?;
            write_node(a, vars, f)?;
            write!(f, " {} ", op.symbol())?;
            write_node(b, vars, f)?;
            f.write_str(")")
        }
        Node::Pow { base, exp, .. } => {
            f.write_str("(")?;
            write_node(base, vars, f)?;
            f.write_str("^")?;
            write_node(exp, vars, f)?;
            f.write_str(")")
        }
        Node::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write_node(a, vars, f)?;
            f.write_str(")")
        }
        Node::Piecewise(c, a, b) => {
            f.write_str("piecewise(")?;
            write_node(c, vars, f)?;
            f.write_str(", ")?;
            write_node(a, vars, f)?;
            f.write_str(", ")?;
            write_node(b, vars, f)?;
            f.write_str(")")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::fd_jacobian;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_4;

    const P: [&str; 2] = ["p1", "p2"];

    #[test]
    fn unary_minus_binds_looser_than_power() {
        let e = Expr::parse("-p2^3", &P).unwrap();
        assert_eq!(e.eval(&[1.0, 2.0]).unwrap(), -8.0);
        let e = Expr::parse("2^-1", &P).unwrap();
        assert_eq!(e.eval(&[0.0, 0.0]).unwrap(), 0.5);
        let e = Expr::parse("2^3^2", &P).unwrap();
        assert_eq!(e.eval(&[0.0, 0.0]).unwrap(), 512.0);
        let e = Expr::parse("8 - 3 - 2", &P).unwrap();
        assert_eq!(e.eval(&[0.0, 0.0]).unwrap(), 3.0);
        let e = Expr::parse("8 / 4 / 2", &P).unwrap();
        assert_eq!(e.eval(&[0.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn arctan_of_radius() {
        let e = Expr::parse("atan(sqrt(p1^2+p2^2))", &P).unwrap();
        let v = e.eval(&[1.0, 0.0]).unwrap();
        assert!((v - FRAC_PI_4).abs() < 1e-15);
        assert!((v - 0.785_398_16).abs() < 1e-8);
        let d = e.eval_dual(&[1.0, 0.0]).unwrap();
        assert!((d.partials()[0] - 0.5).abs() < 1e-15);
        assert!(d.partials()[1].abs() < 1e-15);
    }

    #[test]
    fn syntax_error_position() {
        assert_eq!(
            Expr::parse("p1+", &P).unwrap_err(),
            ExprError::Syntax { position: 3, message: "unexpected end of input".into() }
        );
        assert!(matches!(Expr::parse("p1 p2", &P), Err(ExprError::Syntax { position: 3, .. })));
        assert!(matches!(Expr::parse("(p1", &P), Err(ExprError::Syntax { position: 3, .. })));
        assert!(matches!(Expr::parse("", &P), Err(ExprError::Syntax { position: 0, .. })));
        assert!(matches!(Expr::parse("p1 # 2", &P), Err(ExprError::Syntax { position: 3, .. })));
    }

    #[test]
    fn unknown_names() {
        assert_eq!(Expr::parse("q + 1", &P).unwrap_err(), ExprError::UnknownVariable("q".into()));
        assert_eq!(Expr::parse("sinh(p1)", &P).unwrap_err(), ExprError::UnknownFunction("sinh".into()));
        assert!(matches!(Expr::parse("sin(p1, p2)", &P), Err(ExprError::Arity { .. })));
        assert!(matches!(Expr::parse("piecewise(p1, p2)", &P), Err(ExprError::Arity { .. })));
    }

    #[test]
    fn depth_limit() {
        let deep = format!("{}p1{}", "(-".repeat(70), ")".repeat(70));
        assert_eq!(Expr::parse(&deep, &P).unwrap_err(), ExprError::TooDeep);
        let ok = format!("{}p1{}", "(-".repeat(20), ")".repeat(20));
        assert!(Expr::parse(&ok, &P).is_ok());
    }

    #[test]
    fn product_rule() {
        let d = Expr::parse("p1*p2", &P).unwrap().eval_dual(&[3.0, 5.0]).unwrap();
        assert_eq!(d.value(), 15.0);
        assert_eq!(d.partials(), &[5.0, 3.0]);
    }

    #[test]
    fn abs_kink_takes_right_branch() {
        let d = Expr::parse("abs(p1)", &P).unwrap().eval_dual(&[0.0, 1.0]).unwrap();
        assert_eq!(d.value(), 0.0);
        assert_eq!(d.partials(), &[1.0, 0.0]);
        let d = Expr::parse("abs(p1)", &P).unwrap().eval_dual(&[-2.0, 1.0]).unwrap();
        assert_eq!(d.partials(), &[-1.0, 0.0]);
    }

    #[test]
    fn piecewise_closed_on_nonnegative_side() {
        let e = Expr::parse("piecewise(p1, p1^3, 0)", &P).unwrap();
        assert_eq!(e.eval(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(e.eval(&[2.0, 0.0]).unwrap(), 8.0);
        assert_eq!(e.eval(&[-2.0, 0.0]).unwrap(), 0.0);
        let d = e.eval_dual(&[1.0, 0.0]).unwrap();
        assert_eq!(d.partials(), &[3.0, 0.0]);
        // Inactive branch is not evaluated, so its domain does not matter.
        let e = Expr::parse("piecewise(p1, sqrt(p1), log(p1))", &P).unwrap();
        assert_eq!(e.eval(&[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn domain_errors() {
        let at = |s: &str, p: [f64; 2]| Expr::parse(s, &P).unwrap().eval_dual(&p);
        assert!(matches!(at("sqrt(p1)", [-1.0, 0.0]), Err(ExprError::Domain(_))));
        assert!(matches!(at("sqrt(p1)", [0.0, 0.0]), Err(ExprError::Domain(_))));
        assert!(matches!(at("log(p1)", [0.0, 0.0]), Err(ExprError::Domain(_))));
        assert!(matches!(at("1/p1", [0.0, 0.0]), Err(ExprError::Domain(_))));
        assert!(matches!(at("p1^0.5", [-1.0, 0.0]), Err(ExprError::Domain(_))));
        assert!(matches!(at("p1^-2", [0.0, 0.0]), Err(ExprError::Domain(_))));
        // Integer powers accept any base.
        assert_eq!(at("p1^3", [-2.0, 0.0]).unwrap().value(), -8.0);
        assert_eq!(at("p1^0", [0.0, 0.0]).unwrap().value(), 1.0);
    }

    #[test]
    fn pi_constant_and_shadowing() {
        let e = Expr::parse("2*pi", &P).unwrap();
        assert_eq!(e.eval(&[0.0, 0.0]).unwrap(), std::f64::consts::TAU);
        let e = Expr::parse("pi + 1", &["pi"]).unwrap();
        assert_eq!(e.eval(&[2.0]).unwrap(), 3.0);
    }

    #[test]
    fn number_formats() {
        let e = Expr::parse(" 1.5e1 + .5 + 2E-1 ", &P).unwrap();
        assert_eq!(e.eval(&[0.0, 0.0]).unwrap(), 15.0 + 0.5 + 0.2);
    }

    #[test]
    fn real_power_derivatives() {
        // d/dp1 p1^p2 = p2 p1^(p2-1), d/dp2 = p1^p2 ln p1.
        let d = Expr::parse("p1^p2", &P).unwrap().eval_dual(&[2.0, 1.5]).unwrap();
        assert!((d.value() - 2f64.powf(1.5)).abs() < 1e-14);
        assert!((d.partials()[0] - 1.5 * 2f64.powf(0.5)).abs() < 1e-14);
        assert!((d.partials()[1] - 2f64.powf(1.5) * 2f64.ln()).abs() < 1e-14);
    }

    const CATALOG: &[&str] = &[
        "-p2^3",
        "p1^5",
        "atan(sqrt(p1^2+p2^2))",
        "-p2*atan(sqrt(p1^2+p2^2))/sqrt(p1^2+p2^2)",
        "sin(p2) + cos(p1*p2)",
        "tan(0.3*p1) - exp(p2/4)",
        "log(1 + p1^2) * p2^2",
        "piecewise(p1, p1^3, 0)",
        "abs(p1 - 0.25) * p2",
        "(p1 - p2)^-1",
        "(1 + p1^2)^0.5",
    ];

    /// Every catalog expression's AD partials agree with central differences.
    #[test]
    fn dual_matches_finite_differences_on_grid() {
        for src in CATALOG {
            let e = Expr::parse(src, &P).unwrap();
            for i in 0..21 {
                for j in 0..21 {
                    // Offset keeps samples off the kinks, poles and the origin.
                    let p = [-3.0 + 0.3 * i as f64 + 0.0123, -3.0 + 0.3 * j as f64 + 0.0071];
                    let Ok(d) = e.eval_dual(&p) else { continue };
                    let fd = fd_jacobian(|q| vec![e.eval(q).unwrap()], &p, 1e-6);
                    for k in 0..2 {
                        let err = (d.partials()[k] - fd[0][k]).abs();
                        assert!(err <= 1e-5 * (1.0 + fd[0][k].abs()), "{src} at {p:?}: {err}");
                    }
                }
            }
        }
    }

    fn arb_expr() -> impl Strategy<Value = String> {
        let leaf =
            prop_oneof![Just("p1".to_string()), Just("p2".to_string()), (0.0f64..10.0).prop_map(|v| format!("{v:?}")),];
        leaf.prop_recursive(5, 40, 3, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone(), prop::sample::select(vec!['+', '-', '*', '/']))
                    .prop_map(|(a, b, op)| format!("({a}) {op} ({b})")),
                inner.clone().prop_map(|a| format!("-({a})")),
                (inner.clone(), 0i32..4).prop_map(|(a, n)| format!("({a})^{n}")),
                (inner.clone(), prop::sample::select(vec!["sin", "cos", "atan", "abs", "exp"]))
                    .prop_map(|(a, f)| format!("{f}(({a}) / 10)")),
                (inner.clone(), inner.clone(), inner).prop_map(|(c, a, b)| format!("piecewise({c}, {a}, {b})")),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_then_parse_round_trips(src in arb_expr(), pts in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 100)) {
            let e = Expr::parse(&src, &P).unwrap();
            let printed = e.to_string();
            let back = Expr::parse(&printed, &P).unwrap();
            prop_assert_eq!(&back, &e);
            for (a, b) in pts {
                let p = [a, b];
                match (e.eval(&p), back.eval(&p)) {
                    (Ok(x), Ok(y)) => prop_assert_eq!(x.to_bits(), y.to_bits()),
                    (Err(x), Err(y)) => prop_assert_eq!(x, y),
                    other => prop_assert!(false, "mismatch {:?}", other),
                }
            }
        }
    }
}
