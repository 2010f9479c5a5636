//! Expression language for metric entries.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' integer | '^' '(' ['-'] integer ')')?
//! primary := number | 'i' | 'pi' | var | func '(' expr ')'
//!          | 'complex' '(' expr ',' expr ')' | '(' expr ')'
//! var     := 'x1' | 'y1' | 'x2' | 'y2'
//! func    := 'exp' | 'sin' | 'cos' | 'log' | 'conj'
//! ```
//!
//! Values are complex; `z1 = x1 + i*y1`, `z2 = x2 + i*y2`.

use std::fmt;

use num_complex::Complex64;

use crate::error::{EvalError, ParseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X1,
    Y1,
    X2,
    Y2,
}

impl Var {
    /// Index into a base point `(x1, y1, x2, y2)`.
    pub fn axis(self) -> usize {
        self as usize
    }

    fn name(self) -> &'static str {
        ["x1", "y1", "x2", "y2"][self as usize]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Sin,
    Cos,
    Log,
    Conj,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Log => "log",
            Func::Conj => "conj",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(Complex64),
    Var(Var),
    Neg(Box<Expr>),
    Func(Func, Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    /// `re + i * im`
    ComplexOf(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr, ParseError> {
        let tokens = tokenize(text)?;
        let mut p = Parser { tokens, pos: 0 };
        let e = p.expr()?;
        match p.peek() {
            None => Ok(e),
            Some(t) => Err(ParseError {
                message: format!("unexpected {}", t.kind),
                column: t.column,
            }),
        }
    }

    pub fn constant(re: f64) -> Expr {
        Expr::Const(Complex64::new(re, 0.0))
    }

    pub fn conj(self) -> Expr {
        Expr::Func(Func::Conj, Box::new(self))
    }

    /// True when the tree contains no variables.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Const(_) => true,
            Expr::Var(_) => false,
            Expr::Neg(a) | Expr::Func(_, a) | Expr::Pow(a, _) => a.is_constant(),
            Expr::Bin(_, a, b) | Expr::ComplexOf(a, b) => a.is_constant() && b.is_constant(),
        }
    }

    pub fn eval(&self, p: &[f64; 4]) -> Result<Complex64, EvalError> {
        let v = match self {
            Expr::Const(c) => *c,
            Expr::Var(v) => Complex64::new(p[v.axis()], 0.0),
            Expr::Neg(a) => -a.eval(p)?,
            Expr::Func(f, a) => {
                let x = a.eval(p)?;
                match f {
                    Func::Exp => x.exp(),
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Conj => x.conj(),
                    Func::Log => {
                        if x.im == 0.0 && x.re <= 0.0 {
                            return Err(EvalError::LogDomain(x.re));
                        }
                        x.ln()
                    }
                }
            }
            Expr::Bin(op, a, b) => {
                let x = a.eval(p)?;
                let y = b.eval(p)?;
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == Complex64::new(0.0, 0.0) {
                            return Err(EvalError::DivisionByZero);
                        }
                        x / y
                    }
                }
            }
            Expr::Pow(a, n) => {
                let x = a.eval(p)?;
                if *n < 0 && x == Complex64::new(0.0, 0.0) {
                    return Err(EvalError::DivisionByZero);
                }
                x.powi(*n)
            }
            Expr::ComplexOf(re, im) => re.eval(p)? + Complex64::i() * im.eval(p)?,
        };
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if c.im == 0.0 => write!(f, "{}", c.re),
            Expr::Const(c) if c.re == 0.0 => write!(f, "({}*i)", c.im),
            Expr::Const(c) => write!(f, "complex({}, {})", c.re, c.im),
            Expr::Var(v) => write!(f, "{}", v.name()),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Func(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Bin(op, a, b) => {
                let sym = match op {
                    BinOp::Add => '+',
                    BinOp::Sub => '-',
                    BinOp::Mul => '*',
                    BinOp::Div => '/',
                };
                write!(f, "({a} {sym} {b})")
            }
            Expr::Pow(a, n) => write!(f, "{a}^({n})"),
            Expr::ComplexOf(a, b) => write!(f, "complex({a}, {b})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Number(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Number(x) => write!(f, "number {x}"),
            TokenKind::Ident(s) => write!(f, "'{s}'"),
            TokenKind::Op(c) => write!(f, "'{c}'"),
            TokenKind::LParen => write!(f, "'('"),
            TokenKind::RParen => write!(f, "')'"),
            TokenKind::Comma => write!(f, "','"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    column: usize,
}

fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // exponent part, e.g. 1e-3
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
            let s: String = chars[start..i].iter().collect();
            let value = s.parse::<f64>().map_err(|_| ParseError {
                message: format!("malformed number '{s}'"),
                column,
            })?;
            out.push(Token {
                kind: TokenKind::Number(value),
                column,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token {
                kind: TokenKind::Ident(chars[start..i].iter().collect()),
                column,
            });
            continue;
        }
        let kind = match c {
            '+' | '-' | '*' | '/' | '^' => TokenKind::Op(c),
            '(' => TokenKind::LParen,
            ')' => TokenKind::RParen,
            ',' => TokenKind::Comma,
            _ => {
                return Err(ParseError {
                    message: format!("unexpected character '{c}'"),
                    column,
                })
            }
        };
        out.push(Token { kind, column });
        i += 1;
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn end_column(&self) -> usize {
        self.tokens.last().map_or(1, |t| t.column + 1)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn eat_op(&mut self, op: char) -> bool {
        if matches!(self.peek(), Some(Token { kind: TokenKind::Op(c), .. }) if *c == op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: TokenKind) -> Result<(), ParseError> {
        match self.next() {
            Some(t) if t.kind == kind => Ok(()),
            Some(t) => Err(ParseError {
                message: format!("expected {kind}, found {}", t.kind),
                column: t.column,
            }),
            None => Err(ParseError {
                message: format!("expected {kind}, found end of input"),
                column: self.end_column(),
            }),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat_op('+') {
                BinOp::Add
            } else if self.eat_op('-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat_op('*') {
                BinOp::Mul
            } else if self.eat_op('/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat_op('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if !self.eat_op('^') {
            return Ok(base);
        }
        let parenthesized = matches!(
            self.peek(),
            Some(Token {
                kind: TokenKind::LParen,
                ..
            })
        );
        if parenthesized {
            self.pos += 1;
        }
        let negative = parenthesized && self.eat_op('-');
        let exponent = match self.next() {
            Some(Token {
                kind: TokenKind::Number(x),
                column,
            }) => {
                if x.fract() != 0.0 || x.abs() > i32::MAX as f64 {
                    return Err(ParseError {
                        message: format!("exponent {x} is not an integer"),
                        column,
                    });
                }
                x as i32
            }
            Some(t) => {
                return Err(ParseError {
                    message: format!("exponent must be an integer literal, found {}", t.kind),
                    column: t.column,
                })
            }
            None => {
                return Err(ParseError {
                    message: "missing exponent".into(),
                    column: self.end_column(),
                })
            }
        };
        if parenthesized {
            self.expect(TokenKind::RParen)?;
        }
        Ok(Expr::Pow(
            Box::new(base),
            if negative { -exponent } else { exponent },
        ))
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let Some(tok) = self.next() else {
            return Err(ParseError {
                message: "unexpected end of input".into(),
                column: self.end_column(),
            });
        };
        match tok.kind {
            TokenKind::Number(x) => Ok(Expr::constant(x)),
            TokenKind::LParen => {
                let e = self.expr()?;
                self.expect(TokenKind::RParen)?;
                Ok(e)
            }
            TokenKind::Ident(name) => match name.as_str() {
                "i" => Ok(Expr::Const(Complex64::i())),
                "pi" => Ok(Expr::constant(std::f64::consts::PI)),
                "x1" => Ok(Expr::Var(Var::X1)),
                "y1" => Ok(Expr::Var(Var::Y1)),
                "x2" => Ok(Expr::Var(Var::X2)),
                "y2" => Ok(Expr::Var(Var::Y2)),
                "exp" | "sin" | "cos" | "log" | "conj" => {
                    let func = match name.as_str() {
                        "exp" => Func::Exp,
                        "sin" => Func::Sin,
                        "cos" => Func::Cos,
                        "log" => Func::Log,
                        _ => Func::Conj,
                    };
                    self.expect(TokenKind::LParen)?;
                    let arg = self.expr()?;
                    self.expect(TokenKind::RParen)?;
                    Ok(Expr::Func(func, Box::new(arg)))
                }
                "complex" => {
                    self.expect(TokenKind::LParen)?;
                    let re = self.expr()?;
                    self.expect(TokenKind::Comma)?;
                    let im = self.expr()?;
                    self.expect(TokenKind::RParen)?;
                    Ok(Expr::ComplexOf(Box::new(re), Box::new(im)))
                }
                _ => Err(ParseError {
                    message: format!("unknown identifier '{name}'"),
                    column: tok.column,
                }),
            },
            other => Err(ParseError {
                message: format!("unexpected {other}"),
                column: tok.column,
            }),
        }
    }
}
