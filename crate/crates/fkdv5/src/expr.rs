//! Scalar expressions in the single independent variable `t`.
//!
//! The grammar is deliberately small: every coefficient appearing in the
//! classification tables is built from powers, exponentials, rational terms
//! and a handful of elementary functions. Expressions are immutable trees,
//! cheap to clone (`Rc` sharing), and closed under symbolic differentiation.

use std::fmt;
use std::rc::Rc;

use thiserror::Error;

use crate::series::Series;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Exp,
    Ln,
    Sin,
    Cos,
    Tanh,
    Sqrt,
    Abs,
}

impl UnOp {
    fn name(self) -> &'static str {
        match self {
            UnOp::Neg => "-",
            UnOp::Exp => "exp",
            UnOp::Ln => "ln",
            UnOp::Sin => "sin",
            UnOp::Cos => "cos",
            UnOp::Tanh => "tanh",
            UnOp::Sqrt => "sqrt",
            UnOp::Abs => "abs",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var,
    Unary(UnOp, Rc<Expr>),
    Binary(BinOp, Rc<Expr>, Rc<Expr>),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("empty input")]
    Empty,
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdent { offset: usize, name: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{message} in `{subexpr}` at t = {at}")]
pub struct EvalError {
    pub message: String,
    pub subexpr: String,
    pub at: f64,
}

impl EvalError {
    pub fn new(message: impl Into<String>, sub: &Expr, at: f64) -> Self {
        EvalError {
            message: message.into(),
            subexpr: sub.to_string(),
            at,
        }
    }

    /// An evaluation failure that did not originate in an expression tree.
    pub fn numeric(message: impl Into<String>, at: f64) -> Self {
        EvalError {
            message: message.into(),
            subexpr: String::new(),
            at,
        }
    }
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser {
            src,
            bytes: src.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Expr::Binary(BinOp::Add, Rc::new(lhs), Rc::new(rhs));
                }
                Some(b'-') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Expr::Binary(BinOp::Sub, Rc::new(lhs), Rc::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    lhs = Expr::Binary(BinOp::Mul, Rc::new(lhs), Rc::new(rhs));
                }
                Some(b'/') => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    lhs = Expr::Binary(BinOp::Div, Rc::new(lhs), Rc::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    // factor := ("-")? base ("^" factor)?
    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            let inner = self.factor_no_neg()?;
            return Ok(Expr::Unary(UnOp::Neg, Rc::new(inner)));
        }
        self.factor_no_neg()
    }

    fn factor_no_neg(&mut self) -> Result<Expr, ParseError> {
        let base = self.base()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exponent = self.factor()?;
            return Ok(Expr::Binary(BinOp::Pow, Rc::new(base), Rc::new(exponent)));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            Some(c) => Err(self.err(format!("unexpected character `{}`", c as char))),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.bytes.len()
            && (self.bytes[self.pos].is_ascii_digit() || self.bytes[self.pos] == b'.')
        {
            self.pos += 1;
        }
        // optional exponent
        if self.pos < self.bytes.len() && (self.bytes[self.pos] | 0x20) == b'e' {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.bytes.len() && (self.bytes[self.pos] == b'+' || self.bytes[self.pos] == b'-') {
                self.pos += 1;
            }
            if self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            } else {
                self.pos = save; // `e` was an identifier start, not an exponent
            }
        }
        let text = &self.src[start..self.pos];
        text.parse::<f64>()
            .map(Expr::Num)
            .map_err(|_| ParseError::Syntax {
                offset: start,
                message: format!("invalid number `{text}`"),
            })
    }

    fn ident(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_alphabetic() {
            self.pos += 1;
        }
        let name = &self.src[start..self.pos];
        if name == "t" {
            return Ok(Expr::Var);
        }
        let op = match name {
            "exp" => UnOp::Exp,
            "ln" => UnOp::Ln,
            "sin" => UnOp::Sin,
            "cos" => UnOp::Cos,
            "tanh" => UnOp::Tanh,
            "sqrt" => UnOp::Sqrt,
            "abs" => UnOp::Abs,
            _ => {
                return Err(ParseError::UnknownIdent {
                    offset: start,
                    name: name.to_string(),
                })
            }
        };
        if self.peek() != Some(b'(') {
            return Err(self.err(format!("expected `(` after `{name}`")));
        }
        self.pos += 1;
        let arg = self.expr()?;
        if self.peek() != Some(b')') {
            return Err(self.err("expected `)`"));
        }
        self.pos += 1;
        Ok(Expr::Unary(op, Rc::new(arg)))
    }
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr, ParseError> {
        if text.trim().is_empty() {
            return Err(ParseError::Empty);
        }
        let mut p = Parser::new(text);
        let e = p.expr()?;
        if p.peek().is_some() {
            return Err(p.err("trailing input"));
        }
        Ok(e)
    }

    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn var() -> Expr {
        Expr::Var
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Num(v) if *v == 0.0)
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Expr::Num(v) if *v == 1.0)
    }

    pub fn as_num(&self) -> Option<f64> {
        match self {
            Expr::Num(v) => Some(*v),
            _ => None,
        }
    }

    // -- light-simplification constructors (constant folding, 0/1 identities) --

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (&a, &b) {
            (Expr::Num(x), Expr::Num(y)) => Expr::Num(x + y),
            _ if a.is_zero() => b,
            _ if b.is_zero() => a,
            _ => Expr::Binary(BinOp::Add, Rc::new(a), Rc::new(b)),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (&a, &b) {
            (Expr::Num(x), Expr::Num(y)) => Expr::Num(x - y),
            _ if b.is_zero() => a,
            _ if a.is_zero() => Expr::neg(b),
            _ => Expr::Binary(BinOp::Sub, Rc::new(a), Rc::new(b)),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (&a, &b) {
            (Expr::Num(x), Expr::Num(y)) => Expr::Num(x * y),
            _ if a.is_zero() || b.is_zero() => Expr::Num(0.0),
            _ if a.is_one() => b,
            _ if b.is_one() => a,
            _ => Expr::Binary(BinOp::Mul, Rc::new(a), Rc::new(b)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (&a, &b) {
            (Expr::Num(x), Expr::Num(y)) if *y != 0.0 => Expr::Num(x / y),
            _ if a.is_zero() => Expr::Num(0.0),
            _ if b.is_one() => a,
            _ => Expr::Binary(BinOp::Div, Rc::new(a), Rc::new(b)),
        }
    }

    pub fn pow(a: Expr, b: Expr) -> Expr {
        match (&a, &b) {
            (Expr::Num(x), Expr::Num(y)) => Expr::Num(x.powf(*y)),
            _ if b.is_one() => a,
            _ if b.is_zero() => Expr::Num(1.0),
            _ => Expr::Binary(BinOp::Pow, Rc::new(a), Rc::new(b)),
        }
    }

    pub fn neg(a: Expr) -> Expr {
        match &a {
            Expr::Num(x) => Expr::Num(-x),
            Expr::Unary(UnOp::Neg, inner) => (**inner).clone(),
            _ => Expr::Unary(UnOp::Neg, Rc::new(a)),
        }
    }

    pub fn unary(op: UnOp, a: Expr) -> Expr {
        if op == UnOp::Neg {
            return Expr::neg(a);
        }
        Expr::Unary(op, Rc::new(a))
    }

    // -- evaluation --

    pub fn eval(&self, t: f64) -> Result<f64, EvalError> {
        match self {
            Expr::Num(v) => Ok(*v),
            Expr::Var => Ok(t),
            Expr::Unary(op, a) => {
                let x = a.eval(t)?;
                match op {
                    UnOp::Neg => Ok(-x),
                    UnOp::Exp => Ok(x.exp()),
                    UnOp::Ln => {
                        if x <= 0.0 {
                            Err(EvalError::new("logarithm of a nonpositive value", self, t))
                        } else {
                            Ok(x.ln())
                        }
                    }
                    UnOp::Sin => Ok(x.sin()),
                    UnOp::Cos => Ok(x.cos()),
                    UnOp::Tanh => Ok(x.tanh()),
                    UnOp::Sqrt => {
                        if x < 0.0 {
                            Err(EvalError::new("square root of a negative value", self, t))
                        } else {
                            Ok(x.sqrt())
                        }
                    }
                    UnOp::Abs => Ok(x.abs()),
                }
            }
            Expr::Binary(op, a, b) => {
                let x = a.eval(t)?;
                let y = b.eval(t)?;
                match op {
                    BinOp::Add => Ok(x + y),
                    BinOp::Sub => Ok(x - y),
                    BinOp::Mul => Ok(x * y),
                    BinOp::Div => {
                        if y == 0.0 {
                            Err(EvalError::new("division by zero", self, t))
                        } else {
                            Ok(x / y)
                        }
                    }
                    BinOp::Pow => eval_pow(x, y).map_err(|m| EvalError::new(m, self, t)),
                }
            }
        }
    }

    /// Evaluation with exact derivative propagation via truncated Taylor series.
    pub fn eval_series<const N: usize>(&self, t: f64) -> Result<Series<N>, EvalError> {
        match self {
            Expr::Num(v) => Ok(Series::constant(*v)),
            Expr::Var => Ok(Series::variable(t)),
            Expr::Unary(op, a) => {
                let x = a.eval_series::<N>(t)?;
                match op {
                    UnOp::Neg => Ok(x.neg()),
                    UnOp::Exp => Ok(x.exp()),
                    UnOp::Ln => {
                        if x.value() <= 0.0 {
                            Err(EvalError::new("logarithm of a nonpositive value", self, t))
                        } else {
                            Ok(x.ln())
                        }
                    }
                    UnOp::Sin => Ok(x.sin_cos().0),
                    UnOp::Cos => Ok(x.sin_cos().1),
                    UnOp::Tanh => Ok(x.tanh()),
                    UnOp::Sqrt => {
                        if x.value() <= 0.0 {
                            Err(EvalError::new(
                                "square root derivative at a nonpositive value",
                                self,
                                t,
                            ))
                        } else {
                            Ok(x.sqrt())
                        }
                    }
                    UnOp::Abs => {
                        if x.value() == 0.0 {
                            Err(EvalError::new("abs is not differentiable at zero", self, t))
                        } else {
                            Ok(x.scale(x.value().signum()))
                        }
                    }
                }
            }
            Expr::Binary(op, a, b) => match op {
                BinOp::Add => Ok(a.eval_series::<N>(t)?.add(&b.eval_series(t)?)),
                BinOp::Sub => Ok(a.eval_series::<N>(t)?.sub(&b.eval_series(t)?)),
                BinOp::Mul => Ok(a.eval_series::<N>(t)?.mul(&b.eval_series(t)?)),
                BinOp::Div => {
                    let y = b.eval_series::<N>(t)?;
                    if y.value() == 0.0 {
                        Err(EvalError::new("division by zero", self, t))
                    } else {
                        Ok(a.eval_series::<N>(t)?.div(&y))
                    }
                }
                BinOp::Pow => {
                    let base = a.eval_series::<N>(t)?;
                    if let Some(p) = b.as_num() {
                        if p == p.trunc() && p.abs() < 1e9 {
                            if base.value() == 0.0 && p < 0.0 {
                                return Err(EvalError::new("zero raised to a negative power", self, t));
                            }
                            return Ok(base.powi(p as i64));
                        }
                        if base.value() <= 0.0 {
                            return Err(EvalError::new(
                                "non-integer power of a nonpositive base",
                                self,
                                t,
                            ));
                        }
                        return Ok(base.powf(p));
                    }
                    let exponent = b.eval_series::<N>(t)?;
                    if base.value() <= 0.0 {
                        return Err(EvalError::new(
                            "variable exponent requires a positive base",
                            self,
                            t,
                        ));
                    }
                    Ok(base.ln().mul(&exponent).exp())
                }
            },
        }
    }

    // -- differentiation --

    pub fn differentiate(&self) -> Expr {
        match self {
            Expr::Num(_) => Expr::Num(0.0),
            Expr::Var => Expr::Num(1.0),
            Expr::Unary(op, a) => {
                let da = a.differentiate();
                let a = (**a).clone();
                match op {
                    UnOp::Neg => Expr::neg(da),
                    UnOp::Exp => Expr::mul(da, Expr::unary(UnOp::Exp, a)),
                    UnOp::Ln => Expr::div(da, a),
                    UnOp::Sin => Expr::mul(da, Expr::unary(UnOp::Cos, a)),
                    UnOp::Cos => Expr::neg(Expr::mul(da, Expr::unary(UnOp::Sin, a))),
                    UnOp::Tanh => Expr::mul(
                        da,
                        Expr::sub(
                            Expr::Num(1.0),
                            Expr::pow(Expr::unary(UnOp::Tanh, a), Expr::Num(2.0)),
                        ),
                    ),
                    UnOp::Sqrt => Expr::div(
                        da,
                        Expr::mul(Expr::Num(2.0), Expr::unary(UnOp::Sqrt, a)),
                    ),
                    // d|f| = (f/|f|) f'; evaluation at f = 0 is a domain error
                    UnOp::Abs => Expr::mul(
                        Expr::div(a.clone(), Expr::unary(UnOp::Abs, a)),
                        da,
                    ),
                }
            }
            Expr::Binary(op, a, b) => {
                let da = a.differentiate();
                let db = b.differentiate();
                let a = (**a).clone();
                let b = (**b).clone();
                match op {
                    BinOp::Add => Expr::add(da, db),
                    BinOp::Sub => Expr::sub(da, db),
                    BinOp::Mul => Expr::add(
                        Expr::mul(da, b.clone()),
                        Expr::mul(a.clone(), db),
                    ),
                    BinOp::Div => Expr::div(
                        Expr::sub(Expr::mul(da, b.clone()), Expr::mul(a.clone(), db)),
                        Expr::pow(b, Expr::Num(2.0)),
                    ),
                    BinOp::Pow => {
                        if let Some(p) = b.as_num() {
                            // d(f^p) = p f^{p-1} f'
                            return Expr::mul(
                                Expr::Num(p),
                                Expr::mul(Expr::pow(a, Expr::Num(p - 1.0)), da),
                            );
                        }
                        // f^g (g' ln f + g f'/f)
                        let fg = Expr::pow(a.clone(), b.clone());
                        let term = Expr::add(
                            Expr::mul(db, Expr::unary(UnOp::Ln, a.clone())),
                            Expr::mul(b, Expr::div(da, a)),
                        );
                        Expr::mul(fg, term)
                    }
                }
            }
        }
    }
}

fn eval_pow(x: f64, y: f64) -> Result<f64, String> {
    if x > 0.0 {
        return Ok(x.powf(y));
    }
    if y == y.trunc() && y.abs() < 1e15 {
        if x == 0.0 && y < 0.0 {
            return Err("zero raised to a negative power".into());
        }
        return Ok(x.powi(y as i32));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    Err("non-integer power of a negative base".into())
}

// ---------------------------------------------------------------------------
// Printing (round-trips through the parser)
// ---------------------------------------------------------------------------

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Num(v) if *v < 0.0 => 3,
        Expr::Num(_) | Expr::Var => 5,
        Expr::Unary(UnOp::Neg, _) => 3,
        Expr::Unary(..) => 5, // function calls carry their own parentheses
        Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
        Expr::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
        Expr::Binary(BinOp::Pow, ..) => 4,
    }
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    match e {
        Expr::Num(v) => {
            if *v == f64::INFINITY {
                write!(f, "1e999")
            } else if v.fract() == 0.0 && v.abs() < 1e15 {
                write!(f, "{}", *v as i64)
            } else {
                write!(f, "{v}")
            }
        }
        Expr::Var => write!(f, "t"),
        Expr::Unary(UnOp::Neg, a) => {
            write!(f, "-")?;
            // operand of unary minus must be base-level (or a power chain)
            write_child(f, a, 4, false)
        }
        Expr::Unary(op, a) => {
            write!(f, "{}(", op.name())?;
            write_expr(f, a)?;
            write!(f, ")")
        }
        Expr::Binary(op, a, b) => {
            let (sym, p) = match op {
                BinOp::Add => ("+", 1),
                BinOp::Sub => ("-", 1),
                BinOp::Mul => ("*", 2),
                BinOp::Div => ("/", 2),
                BinOp::Pow => ("^", 4),
            };
            match op {
                BinOp::Pow => {
                    // left side of ^ must be an atom
                    write_child(f, a, 5, false)?;
                    write!(f, "{sym}")?;
                    // right side is a factor: unary minus and powers allowed
                    write_child(f, b, 3, false)
                }
                _ => {
                    write_child(f, a, p, false)?;
                    write!(f, "{sym}")?;
                    // left-associative: a right child at equal precedence needs parens
                    write_child(f, b, p, true)
                }
            }
        }
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, min_prec: u8, strict: bool) -> fmt::Result {
    let p = prec(e);
    let need = if strict { p <= min_prec } else { p < min_prec };
    if need {
        write!(f, "(")?;
        write_expr(f, e)?;
        write!(f, ")")
    } else {
        write_expr(f, e)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self)
    }
}
