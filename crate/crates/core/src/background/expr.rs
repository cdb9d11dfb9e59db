//! Scalar field expressions over coordinates `x0 .. x{N-1}`.
//!
//! Grammar:
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := '-' factor | base ('^' factor)?
//! base   := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! Unary minus binds looser than `^`, so `-x0^2` is `-(x0^2)`.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Sinh,
    Cosh,
    Tanh,
    Atan,
    Abs,
}

impl Func {
    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "tanh" => Func::Tanh,
            "atan" => Func::Atan,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Atan => "atan",
            Func::Abs => "abs",
        }
    }

    fn apply(self, v: f64) -> Result<f64, String> {
        let r = match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Tan => v.tan(),
            Func::Exp => v.exp(),
            Func::Ln => {
                if v <= 0.0 {
                    return Err(format!("ln of non-positive value {v}"));
                }
                v.ln()
            }
            Func::Sqrt => {
                if v < 0.0 {
                    return Err(format!("sqrt of negative value {v}"));
                }
                v.sqrt()
            }
            Func::Sinh => v.sinh(),
            Func::Cosh => v.cosh(),
            Func::Tanh => v.tanh(),
            Func::Atan => v.atan(),
            Func::Abs => v.abs(),
        };
        if r.is_finite() {
            Ok(r)
        } else {
            Err(format!("{}({v}) is not finite", self.name()))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Parse failure with a 0-based byte column into the parsed text.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub col: usize,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let ch = bytes[i] as char;
        if ch.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if ch.is_ascii_digit() || ch == '.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| ParseError {
                col: start,
                msg: format!("malformed number '{text}'"),
            })?;
            out.push((Tok::Num(v), start));
        } else if ch.is_ascii_alphabetic() || ch == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
        } else {
            let tok = match ch {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(ch),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                _ => {
                    return Err(ParseError {
                        col: start,
                        msg: format!("unexpected character '{}'", src[start..].chars().next().unwrap()),
                    })
                }
            };
            out.push((tok, start));
            i += 1;
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.1).unwrap_or(self.end)
    }

    fn err<T>(&self, col: usize, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError { col, msg: msg.into() })
    }

    // The operator column is remembered so a missing right operand points at it.
    fn operand_after(&mut self, op_col: usize, op: char, f: fn(&mut Parser) -> Result<Expr, ParseError>) -> Result<Expr, ParseError> {
        if self.peek().is_none() {
            return self.err(op_col, format!("missing operand after '{op}'"));
        }
        f(self)
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(op @ ('+' | '-'))) = self.peek().cloned() {
            let c = self.col();
            self.pos += 1;
            let rhs = self.operand_after(c, op, Parser::term)?;
            lhs = if op == '+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        while let Some(Tok::Op(op @ ('*' | '/'))) = self.peek().cloned() {
            let c = self.col();
            self.pos += 1;
            let rhs = self.operand_after(c, op, Parser::factor)?;
            lhs = if op == '*' {
                Expr::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if let Some(Tok::Op('-')) = self.peek() {
            let c = self.col();
            self.pos += 1;
            let inner = self.operand_after(c, '-', Parser::factor)?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        let base = self.base()?;
        if let Some(Tok::Op('^')) = self.peek() {
            let c = self.col();
            self.pos += 1;
            let exp = self.operand_after(c, '^', Parser::factor)?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        let col = self.col();
        let Some(tok) = self.peek().cloned() else {
            return self.err(col, "unexpected end of expression");
        };
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.close(col)?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if let Some(Tok::LParen) = self.peek() {
                    let Some(f) = Func::from_name(&name) else {
                        return self.err(col, format!("unknown function '{name}'"));
                    };
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.close(col)?;
                    return Ok(Expr::Call(f, Box::new(arg)));
                }
                match name.strip_prefix('x').and_then(|d| d.parse::<usize>().ok()) {
                    Some(k) if name[1..].chars().all(|c| c.is_ascii_digit()) => Ok(Expr::Var(k)),
                    _ => self.err(col, format!("unknown identifier '{name}'")),
                }
            }
            Tok::Op(op) => self.err(col, format!("unexpected operator '{op}'")),
            Tok::RParen => self.err(col, "unexpected ')'"),
        }
    }

    fn close(&mut self, open_col: usize) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::RParen) => {
                self.pos += 1;
                Ok(())
            }
            Some(_) => self.err(self.col(), "expected ')'"),
            None => self.err(open_col, "unclosed '('"),
        }
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, ParseError> {
        let toks = tokenize(src)?;
        let mut p = Parser { toks, pos: 0, end: src.len() };
        if p.peek().is_none() {
            return p.err(src.len(), "empty expression");
        }
        let e = p.expr()?;
        if p.peek().is_some() {
            return p.err(p.col(), "unexpected trailing input");
        }
        Ok(e)
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, String> {
        let r = match self {
            Expr::Num(v) => *v,
            Expr::Var(k) => *x.get(*k).ok_or_else(|| format!("x{k} out of range"))?,
            Expr::Neg(a) => -a.eval(x)?,
            Expr::Add(a, b) => a.eval(x)? + b.eval(x)?,
            Expr::Sub(a, b) => a.eval(x)? - b.eval(x)?,
            Expr::Mul(a, b) => a.eval(x)? * b.eval(x)?,
            Expr::Div(a, b) => {
                let d = b.eval(x)?;
                if d == 0.0 {
                    return Err("division by zero".into());
                }
                a.eval(x)? / d
            }
            Expr::Pow(a, b) => {
                let (u, v) = (a.eval(x)?, b.eval(x)?);
                let r = u.powf(v);
                if !r.is_finite() {
                    return Err(format!("{u}^{v} is not finite"));
                }
                r
            }
            Expr::Call(f, a) => return f.apply(a.eval(x)?),
        };
        if r.is_finite() {
            Ok(r)
        } else {
            Err("non-finite result".into())
        }
    }

    /// Highest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Num(_) => None,
            Expr::Var(k) => Some(*k),
            Expr::Neg(a) | Expr::Call(_, a) => a.max_var(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.max_var().max(b.max_var())
            }
        }
    }

    pub fn is_const(&self) -> bool {
        self.max_var().is_none()
    }

    fn as_num(&self) -> Option<f64> {
        match self {
            Expr::Num(v) => Some(*v),
            _ => None,
        }
    }

    /// Symbolic partial derivative with respect to `x{var}`.
    pub fn diff(&self, var: usize) -> Expr {
        use Expr::*;
        match self {
            Num(_) => Num(0.0),
            Var(k) => Num(if *k == var { 1.0 } else { 0.0 }),
            Neg(a) => neg(a.diff(var)),
            Add(a, b) => add(a.diff(var), b.diff(var)),
            Sub(a, b) => sub(a.diff(var), b.diff(var)),
            Mul(a, b) => add(mul(a.diff(var), (**b).clone()), mul((**a).clone(), b.diff(var))),
            Div(a, b) => div(
                sub(mul(a.diff(var), (**b).clone()), mul((**a).clone(), b.diff(var))),
                pow((**b).clone(), Num(2.0)),
            ),
            Pow(a, b) => {
                let da = a.diff(var);
                if b.is_const() {
                    let n = (**b).clone();
                    let nm1 = match n.as_num() {
                        Some(v) => Num(v - 1.0),
                        None => sub(n.clone(), Num(1.0)),
                    };
                    mul(mul(n, pow((**a).clone(), nm1)), da)
                } else {
                    // d(u^v) = u^v (v' ln u + v u'/u)
                    let db = b.diff(var);
                    mul(
                        self.clone(),
                        add(
                            mul(db, Call(Func::Ln, a.clone())),
                            div(mul((**b).clone(), da), (**a).clone()),
                        ),
                    )
                }
            }
            Call(f, a) => {
                let da = a.diff(var);
                let u = (**a).clone();
                let outer = match f {
                    Func::Sin => Call(Func::Cos, Box::new(u)),
                    Func::Cos => neg(Call(Func::Sin, Box::new(u))),
                    Func::Tan => div(Num(1.0), pow(Call(Func::Cos, Box::new(u)), Num(2.0))),
                    Func::Exp => self.clone(),
                    Func::Ln => div(Num(1.0), u),
                    Func::Sqrt => div(Num(0.5), self.clone()),
                    Func::Sinh => Call(Func::Cosh, Box::new(u)),
                    Func::Cosh => Call(Func::Sinh, Box::new(u)),
                    Func::Tanh => sub(Num(1.0), pow(self.clone(), Num(2.0))),
                    Func::Atan => div(Num(1.0), add(Num(1.0), pow(u, Num(2.0)))),
                    Func::Abs => div(u.clone(), self.clone()),
                };
                mul(outer, da)
            }
        }
    }

    fn prec(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Pow(..) => 4,
            Expr::Num(v) if *v < 0.0 => 3,
            _ => 5,
        }
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(v) => Expr::Num(-v),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (a.as_num(), b.as_num()) {
        (Some(x), Some(y)) => Expr::Num(x + y),
        (Some(0.0), _) => b,
        (_, Some(0.0)) => a,
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (a.as_num(), b.as_num()) {
        (Some(x), Some(y)) => Expr::Num(x - y),
        (Some(0.0), _) => neg(b),
        (_, Some(0.0)) => a,
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (a.as_num(), b.as_num()) {
        (Some(x), Some(y)) => Expr::Num(x * y),
        (Some(0.0), _) | (_, Some(0.0)) => Expr::Num(0.0),
        (Some(1.0), _) => b,
        (_, Some(1.0)) => a,
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (a.as_num(), b.as_num()) {
        (Some(0.0), _) => Expr::Num(0.0),
        (_, Some(1.0)) => a,
        _ => Expr::Div(Box::new(a), Box::new(b)),
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    match b.as_num() {
        Some(0.0) => Expr::Num(1.0),
        Some(1.0) => a,
        _ => Expr::Pow(Box::new(a), Box::new(b)),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Child wrapped when its precedence is below `min`.
        fn side(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
            if e.prec() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var(k) => write!(f, "x{k}"),
            Expr::Neg(a) => {
                write!(f, "-")?;
                side(f, a, 3)
            }
            Expr::Add(a, b) => {
                side(f, a, 1)?;
                write!(f, " + ")?;
                side(f, b, 2)
            }
            Expr::Sub(a, b) => {
                side(f, a, 1)?;
                write!(f, " - ")?;
                side(f, b, 2)
            }
            Expr::Mul(a, b) => {
                side(f, a, 2)?;
                write!(f, "*")?;
                side(f, b, 3)
            }
            Expr::Div(a, b) => {
                side(f, a, 2)?;
                write!(f, "/")?;
                side(f, b, 3)
            }
            Expr::Pow(a, b) => {
                side(f, a, 5)?;
                write!(f, "^")?;
                side(f, b, 3)
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}
