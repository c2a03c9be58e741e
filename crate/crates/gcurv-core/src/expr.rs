//! Expression DSL: parsing scenario field expressions and evaluating them
//! over order-3 jets.
//!
//! Grammar (whitespace-insensitive, no implicit multiplication):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | atom ('^' factor)?
//! atom   := NUMBER | IDENT | IDENT '(' expr ')' | '(' expr ')'
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-x^2`
//! parses as `-(x^2)` and `2^-3` is accepted. Identifiers are either chart
//! coordinates or one of the built-in functions.

use crate::jet::Jet3;
use thiserror::Error;

/// Built-in unary functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "tanh" => Func::Tanh,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

/// Immutable expression AST. Variables carry both the chart index used for
/// evaluation and the source name used in error messages.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    Var { index: usize, name: String },
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl std::fmt::Display for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Expr::Number(x) => write!(f, "{x}"),
            Expr::Var { name, .. } => write!(f, "{name}"),
            Expr::Neg(e) => write!(f, "-({e})"),
            Expr::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
        }
    }
}

/// Syntax / name-resolution failure, with the byte offset into the source
/// text and the token set that would have been accepted.
#[derive(Debug, Clone, Error, PartialEq)]
#[error("parse error at byte {offset}: {message}{}", expected_suffix(.expected))]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
    pub expected: Vec<&'static str>,
}

fn expected_suffix(expected: &[&'static str]) -> String {
    if expected.is_empty() {
        String::new()
    } else {
        format!(" (expected {})", expected.join(", "))
    }
}

/// Domain failure during jet evaluation, carrying the offending
/// subexpression as rendered text.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum EvalError {
    #[error("division by zero in `{0}`")]
    DivisionByZero(String),
    #[error("{func} of non-positive value {value} in `{expr}`")]
    NonPositive {
        func: &'static str,
        value: f64,
        expr: String,
    },
    #[error("power with non-positive base {base} and non-integer exponent in `{expr}`")]
    PowDomain { base: f64, expr: String },
    #[error("expression references variable {index} but the point has dimension {dim}")]
    DimensionMismatch { index: usize, dim: usize },
}

// ---------------------------------------------------------------------------
// Tokenizer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src, bytes: src.as_bytes(), pos: 0 }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    /// Next token with its starting byte offset, or None at end of input.
    fn next(&mut self) -> Result<Option<(usize, Tok)>, ParseError> {
        self.skip_ws();
        if self.pos >= self.bytes.len() {
            return Ok(None);
        }
        let start = self.pos;
        let c = self.bytes[start];
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => return self.lex_number(start).map(Some),
            _ if c.is_ascii_alphabetic() || c == b'_' => {
                while self.pos < self.bytes.len()
                    && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                return Ok(Some((start, Tok::Ident(self.src[start..self.pos].to_string()))));
            }
            _ => {
                return Err(ParseError {
                    offset: start,
                    message: format!("unexpected character `{}`", &self.src[start..start + 1]),
                    expected: vec![],
                })
            }
        };
        self.pos += 1;
        Ok(Some((start, tok)))
    }

    fn lex_number(&mut self, start: usize) -> Result<(usize, Tok), ParseError> {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos < self.bytes.len() && self.bytes[self.pos] == b'.' {
            self.pos += 1;
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        if self.pos < self.bytes.len() && (self.bytes[self.pos] | 0x20) == b'e' {
            let mark = self.pos;
            self.pos += 1;
            if self.pos < self.bytes.len() && (self.bytes[self.pos] == b'+' || self.bytes[self.pos] == b'-') {
                self.pos += 1;
            }
            if self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            } else {
                // Not an exponent after all (e.g. `2e` followed by `x`).
                self.pos = mark;
            }
        }
        let text = &self.src[start..self.pos];
        text.parse::<f64>()
            .map(|v| (start, Tok::Number(v)))
            .map_err(|_| ParseError {
                offset: start,
                message: format!("malformed number `{text}`"),
                expected: vec!["number"],
            })
    }
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    cursor: usize,
    end: usize,
    chart: &'a [String],
}

/// Parse `text` against the coordinate names of a chart. Every identifier
/// must resolve to a coordinate or a built-in function applied to an
/// argument list.
pub fn parse(text: &str, chart: &[String]) -> Result<Expr, ParseError> {
    let mut lexer = Lexer::new(text);
    let mut toks = Vec::new();
    while let Some(t) = lexer.next()? {
        toks.push(t);
    }
    if toks.is_empty() {
        return Err(ParseError {
            offset: 0,
            message: "empty expression".into(),
            expected: vec!["number", "identifier", "(", "-"],
        });
    }
    let mut p = Parser { toks, cursor: 0, end: text.len(), chart };
    let e = p.expr()?;
    if let Some((off, tok)) = p.peek_with_offset() {
        return Err(ParseError {
            offset: off,
            message: format!("unexpected trailing token {tok:?}"),
            expected: vec!["end of input"],
        });
    }
    Ok(e)
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.cursor).map(|(_, t)| t)
    }

    fn peek_with_offset(&self) -> Option<(usize, &Tok)> {
        self.toks.get(self.cursor).map(|(o, t)| (*o, t))
    }

    fn bump(&mut self) -> Option<(usize, Tok)> {
        let t = self.toks.get(self.cursor).cloned();
        self.cursor += 1;
        t
    }

    fn here(&self) -> usize {
        self.toks.get(self.cursor).map_or(self.end, |(o, _)| *o)
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => BinOp::Add,
                Some(Tok::Minus) => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Star) => BinOp::Mul,
                Some(Tok::Slash) => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if matches!(self.peek(), Some(Tok::Minus)) {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.atom()?;
        if matches!(self.peek(), Some(Tok::Caret)) {
            self.bump();
            let exp = self.factor()?; // right-associative
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let here = self.here();
        match self.bump() {
            Some((_, Tok::Number(v))) => Ok(Expr::Number(v)),
            Some((off, Tok::Ident(name))) => {
                if matches!(self.peek(), Some(Tok::LParen)) {
                    let func = Func::from_name(&name).ok_or_else(|| ParseError {
                        offset: off,
                        message: format!("unknown function `{name}`"),
                        expected: vec!["sin", "cos", "tan", "sinh", "cosh", "tanh", "exp", "log", "sqrt", "abs"],
                    })?;
                    self.bump(); // (
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    Ok(Expr::Call(func, Box::new(arg)))
                } else {
                    let index = self
                        .chart
                        .iter()
                        .position(|c| *c == name)
                        .ok_or_else(|| ParseError {
                            offset: off,
                            message: format!("unknown identifier `{name}`"),
                            expected: vec!["chart coordinate"],
                        })?;
                    Ok(Expr::Var { index, name })
                }
            }
            Some((_, Tok::LParen)) => {
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            other => Err(ParseError {
                offset: here,
                message: match other {
                    Some((_, t)) => format!("unexpected token {t:?}"),
                    None => "unexpected end of input".into(),
                },
                expected: vec!["number", "identifier", "(", "-"],
            }),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        let here = self.here();
        match self.bump() {
            Some((_, Tok::RParen)) => Ok(()),
            _ => Err(ParseError {
                offset: here,
                message: "unclosed parenthesis".into(),
                expected: vec![")"],
            }),
        }
    }
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Evaluate an expression over caller-supplied variable jets (all of one
/// common dimension). Used directly by field evaluation; [`eval_jet`] wraps
/// it for the point-based entry.
pub fn eval_with_vars(e: &Expr, vars: &[Jet3]) -> Result<Jet3, EvalError> {
    let dim = vars.first().map_or(0, |v| v.dim());
    match e {
        Expr::Number(v) => Ok(Jet3::constant(dim, *v)),
        Expr::Var { index, .. } => vars
            .get(*index)
            .cloned()
            .ok_or(EvalError::DimensionMismatch { index: *index, dim: vars.len() }),
        Expr::Neg(inner) => Ok(-eval_with_vars(inner, vars)?),
        Expr::Bin(op, a, b) => {
            let ja = eval_with_vars(a, vars)?;
            let jb = eval_with_vars(b, vars)?;
            match op {
                BinOp::Add => Ok(ja + jb),
                BinOp::Sub => Ok(ja - jb),
                BinOp::Mul => Ok(ja * jb),
                BinOp::Div => {
                    if jb.value() == 0.0 {
                        Err(EvalError::DivisionByZero(e.to_string()))
                    } else {
                        Ok(ja / jb)
                    }
                }
                BinOp::Pow => pow_jets(&ja, &jb, e),
            }
        }
        Expr::Call(func, arg) => {
            let j = eval_with_vars(arg, vars)?;
            let positive = |name: &'static str| -> Result<(), EvalError> {
                if j.value() <= 0.0 {
                    Err(EvalError::NonPositive { func: name, value: j.value(), expr: e.to_string() })
                } else {
                    Ok(())
                }
            };
            Ok(match func {
                Func::Sin => j.sin(),
                Func::Cos => j.cos(),
                Func::Tan => j.tan(),
                Func::Sinh => j.sinh(),
                Func::Cosh => j.cosh(),
                Func::Tanh => j.tanh(),
                Func::Exp => j.exp(),
                Func::Log => {
                    positive("log")?;
                    j.log()
                }
                Func::Sqrt => {
                    positive("sqrt")?;
                    j.sqrt()
                }
                Func::Abs => j.abs(),
            })
        }
    }
}

/// `base ^ exp` over jets: constant integer exponents use repeated
/// multiplication (any base), everything else requires a positive base.
fn pow_jets(base: &Jet3, exp: &Jet3, whole: &Expr) -> Result<Jet3, EvalError> {
    if exp.is_constant() {
        let p = exp.value();
        if p.fract() == 0.0 && p.abs() <= 2147483647.0 {
            if p < 0.0 && base.value() == 0.0 {
                return Err(EvalError::DivisionByZero(whole.to_string()));
            }
            return Ok(base.powi(p as i64));
        }
        if base.value() <= 0.0 {
            return Err(EvalError::PowDomain { base: base.value(), expr: whole.to_string() });
        }
        return Ok(base.powf(p));
    }
    if base.value() <= 0.0 {
        return Err(EvalError::PowDomain { base: base.value(), expr: whole.to_string() });
    }
    Ok((exp * base.log()).exp())
}

/// Evaluate at a chart point: variable `i` becomes the coordinate jet at
/// `point[i]`.
pub fn eval_jet(e: &Expr, point: &[f64]) -> Result<Jet3, EvalError> {
    let n = point.len();
    let vars: Vec<Jet3> = (0..n).map(|i| Jet3::variable(n, i, point[i])).collect();
    eval_with_vars(e, &vars)
}
