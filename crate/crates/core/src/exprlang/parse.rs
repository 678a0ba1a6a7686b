use super::{eval, BinOp, ExprError, Func, Node};

/// Recursion guard; the depth limit proper is checked on the finished tree.
const MAX_RECURSION: usize = 512;

/// Integer exponents up to this magnitude use repeated multiplication.
const MAX_INT_EXP: f64 = 1024.0;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    End,
}

pub(super) struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    vars: &'a [String],
    recursion: usize,
    lex_error: Option<ExprError>,
}

fn syntax(position: usize, message: impl Into<String>) -> ExprError {
    ExprError::Syntax { position, message: message.into() }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let chars: Vec<char> = src.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v: f64 = text.parse().map_err(|_| syntax(start, format!("malformed number `{text}`")))?;
            toks.push((Tok::Num(v), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            toks.push((Tok::Ident(chars[start..i].iter().collect()), start));
        } else if "+-*/^(),".contains(c) {
            toks.push((Tok::Op(c), i));
            i += 1;
        } else {
            return Err(syntax(i, format!("unexpected character `{c}`")));
        }
    }
    toks.push((Tok::End, chars.len()));
    Ok(toks)
}

impl<'a> Parser<'a> {
    pub(super) fn new(src: &str, vars: &'a [String]) -> Parser<'a> {
        let (toks, lex_error) = match lex(src) {
            Ok(t) => (t, None),
            Err(e) => (vec![(Tok::End, 0)], Some(e)),
        };
        Parser { toks, pos: 0, vars, recursion: 0, lex_error }
    }

    pub(super) fn parse(mut self) -> Result<Node, ExprError> {
        if let Some(e) = self.lex_error.take() {
            return Err(e);
        }
        let node = self.expr()?;
        match self.peek() {
            Tok::End => Ok(node),
            t => Err(syntax(self.offset(), format!("unexpected {}", describe(t)))),
        }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if !matches!(t, Tok::End) {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Op(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ExprError> {
        if self.eat(c) {
            return Ok(());
        }
        Err(syntax(self.offset(), format!("expected `{c}`, found {}", describe(self.peek()))))
    }

    fn enter(&mut self) -> Result<(), ExprError> {
        self.recursion += 1;
        if self.recursion > MAX_RECURSION {
            return Err(ExprError::TooDeep);
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        self.enter()?;
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat('+') {
                BinOp::Add
            } else if self.eat('-') {
                BinOp::Sub
            } else {
                break;
            };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
        self.recursion -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat('*') {
                BinOp::Mul
            } else if self.eat('/') {
                BinOp::Div
            } else {
                break;
            };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        self.enter()?;
        let node = if self.eat('-') { Node::Neg(Box::new(self.unary()?)) } else { self.power()? };
        self.recursion -= 1;
        Ok(node)
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.atom()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let exp = self.unary()?;
        let int_exp = integer_exponent(&exp);
        Ok(Node::Pow { base: Box::new(base), exp: Box::new(exp), int_exp })
    }

    fn atom(&mut self) -> Result<Node, ExprError> {
        let at = self.offset();
        match self.bump() {
            Tok::Num(v) => Ok(Node::Num(v)),
            Tok::Op('(') => {
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            Tok::Ident(name) if *self.peek() == Tok::Op('(') => {
                self.pos += 1;
                let mut args = vec![self.expr()?];
                while self.eat(',') {
                    args.push(self.expr()?);
                }
                self.expect(')')?;
                call(name, args)
            }
            Tok::Ident(name) => {
                if let Some(i) = self.vars.iter().position(|v| *v == name) {
                    Ok(Node::Var(i))
                } else if name == "pi" {
                    Ok(Node::Num(std::f64::consts::PI))
                } else {
                    Err(ExprError::UnknownVariable(name))
                }
            }
            Tok::End => Err(syntax(at, "unexpected end of input")),
            t => Err(syntax(at, format!("unexpected {}", describe(&t)))),
        }
    }
}

fn call(name: String, mut args: Vec<Node>) -> Result<Node, ExprError> {
    let arity = |expected: usize, got: usize, name: String| ExprError::Arity { name, expected, got };
    if name == "piecewise" {
        if args.len() != 3 {
            return Err(arity(3, args.len(), name));
        }
        let b = args.pop().unwrap();
        let a = args.pop().unwrap();
        let c = args.pop().unwrap();
        return Ok(Node::Piecewise(Box::new(c), Box::new(a), Box::new(b)));
    }
    let func = Func::from_name(&name).ok_or_else(|| ExprError::UnknownFunction(name.clone()))?;
    if args.len() != 1 {
        return Err(arity(1, args.len(), name));
    }
    Ok(Node::Call(func, Box::new(args.pop().unwrap())))
}

fn integer_exponent(exp: &Node) -> Option<i32> {
    if exp.has_vars() {
        return None;
    }
    let v = eval::value(exp, &[]).ok()?;
    (v.fract() == 0.0 && v.abs() <= MAX_INT_EXP).then_some(v as i32)
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(v) => format!("number {v}"),
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Op(c) => format!("`{c}`"),
        Tok::End => "end of input".to_string(),
    }
}
