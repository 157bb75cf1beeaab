//! The `.rec` recurrence DSL.
//!
//! ```text
//! vars: u, v
//! u[i] = 8*u[i-1] + 10*v[i-1] + u[i-1]^2 + 3*u[i-1]*v[i-1] + v[i-1]^2
//! v[i] = -3*u[i-1] - 3*v[i-1] + u[i-1]^2 - u[i-1]*v[i-1] + v[i-1]^2
//! ```
//!
//! One header line declares the variables, then one equation per line.
//! Multiplication must be explicit, exponents are non-negative integer
//! literals, and `/` is only allowed between two integer literals (a
//! rational constant such as `1/3`). Decimal literals are exact: `0.5` is
//! `1/2`. `#` starts a comment. Depth is the largest lag referenced.

mod lexer;

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use self::lexer::{tokenize, Tok, Token};
use crate::error::{Error, Result};
use crate::recurrence::PolySystem;
use crate::scalar::{Monomial, Poly, Scalar};

/// Location of a construct in the source text.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SourceSpan {
    /// Byte offsets, `start <= end`.
    pub start: usize,
    pub end: usize,
    /// 1-based.
    pub line: usize,
    pub column: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    UndeclaredVariable,
    InvalidLag,
    NonIntegerExponent,
    DuplicateEquation,
    MissingEquation,
    NonPolynomial,
    ImplicitMultiplication,
}

impl ParseErrorKind {
    pub fn name(self) -> &'static str {
        match self {
            ParseErrorKind::Syntax => "syntax error",
            ParseErrorKind::UndeclaredVariable => "undeclared variable",
            ParseErrorKind::InvalidLag => "invalid lag",
            ParseErrorKind::NonIntegerExponent => "non-integer exponent",
            ParseErrorKind::DuplicateEquation => "duplicate equation",
            ParseErrorKind::MissingEquation => "missing equation",
            ParseErrorKind::NonPolynomial => "non-polynomial construct",
            ParseErrorKind::ImplicitMultiplication => "implicit multiplication",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub span: SourceSpan,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(kind: ParseErrorKind, span: SourceSpan, message: impl Into<String>) -> Self {
        Self {
            kind,
            span,
            message: message.into(),
        }
    }

    /// Multi-line diagnostic with the offending source line and a caret
    /// underline.
    pub fn render(&self, source: &str) -> String {
        let line_text = source.lines().nth(self.span.line - 1).unwrap_or("");
        let width = source[self.span.start..self.span.end.min(source.len())]
            .chars()
            .take_while(|&c| c != '\n')
            .count()
            .max(1);
        format!(
            "{self}\n  | {}\n  | {}{}",
            line_text,
            " ".repeat(self.span.column - 1),
            "^".repeat(width)
        )
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} at line {}, column {}: {}",
            self.kind.name(),
            self.span.line,
            self.span.column,
            self.message
        )
    }
}

/// Expression tree of one right-hand side.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(BigRational, SourceSpan),
    /// `var` indexes the declared variables; `lag >= 1`.
    Var {
        var: usize,
        lag: u32,
        span: SourceSpan,
    },
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
}

impl Expr {
    fn max_lag(&self) -> u32 {
        match self {
            Expr::Num(..) => 0,
            Expr::Var { lag, .. } => *lag,
            Expr::Neg(e) | Expr::Pow(e, _) => e.max_lag(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => a.max_lag().max(b.max_lag()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Equation {
    pub var: usize,
    pub span: SourceSpan,
    pub rhs: Expr,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecurrenceAst {
    /// Declared names in order, with their header spans.
    pub vars: Vec<(String, SourceSpan)>,
    /// One equation per declared variable, in declaration order.
    pub equations: Vec<Equation>,
}

impl RecurrenceAst {
    /// Largest lag referenced anywhere (at least 1).
    pub fn depth(&self) -> usize {
        self.equations.iter().map(|e| e.rhs.max_lag()).max().unwrap_or(0).max(1) as usize
    }
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    names: Vec<(String, SourceSpan)>,
}

type PResult<T> = std::result::Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn span(&self) -> SourceSpan {
        self.toks[self.pos].span
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn syntax(&self, msg: impl Into<String>) -> ParseError {
        ParseError::new(ParseErrorKind::Syntax, self.span(), msg)
    }

    fn expect(&mut self, want: Tok, what: &str) -> PResult<Token> {
        if *self.peek() == want {
            Ok(self.bump())
        } else {
            Err(self.syntax(format!("expected {what}, found {}", self.peek().describe())))
        }
    }

    fn skip_newlines(&mut self) {
        while *self.peek() == Tok::Newline {
            self.bump();
        }
    }

    fn end_of_line(&mut self) -> PResult<()> {
        match self.peek() {
            Tok::Newline => {
                self.bump();
                Ok(())
            }
            Tok::Eof => Ok(()),
            Tok::Ident(_) | Tok::Int(_) | Tok::Decimal(_) | Tok::LParen => Err(ParseError::new(
                ParseErrorKind::ImplicitMultiplication,
                self.span(),
                "implicit multiplication is not allowed; write `*` explicitly",
            )),
            Tok::Slash => Err(ParseError::new(
                ParseErrorKind::NonPolynomial,
                self.span(),
                "division is only allowed between two integer literals",
            )),
            other => Err(self.syntax(format!("unexpected {}", other.describe()))),
        }
    }

    fn header(&mut self) -> PResult<()> {
        self.skip_newlines();
        match self.peek() {
            Tok::Ident(s) if s == "vars" => {
                self.bump();
            }
            other => return Err(self.syntax(format!("expected `vars:` header, found {}", other.describe()))),
        }
        self.expect(Tok::Colon, "`:` after `vars`")?;
        loop {
            let span = self.span();
            match self.bump().tok {
                Tok::Ident(name) => {
                    if self.names.iter().any(|(n, _)| *n == name) {
                        return Err(ParseError::new(
                            ParseErrorKind::Syntax,
                            span,
                            format!("variable `{name}` declared twice"),
                        ));
                    }
                    self.names.push((name, span));
                }
                other => {
                    return Err(ParseError::new(
                        ParseErrorKind::Syntax,
                        span,
                        format!("expected variable name, found {}", other.describe()),
                    ))
                }
            }
            if *self.peek() == Tok::Comma {
                self.bump();
            } else {
                break;
            }
        }
        self.end_of_line()
    }

    fn lookup(&self, name: &str, span: SourceSpan) -> PResult<usize> {
        self.names.iter().position(|(n, _)| n == name).ok_or_else(|| {
            ParseError::new(
                ParseErrorKind::UndeclaredVariable,
                span,
                format!("`{name}` is not declared in the `vars:` header"),
            )
        })
    }

    fn equation(&mut self) -> PResult<Equation> {
        let start = self.span();
        let name = match self.bump().tok {
            Tok::Ident(name) => name,
            other => {
                return Err(ParseError::new(
                    ParseErrorKind::Syntax,
                    start,
                    format!("expected equation `name[i] = ...`, found {}", other.describe()),
                ))
            }
        };
        let var = self.lookup(&name, start)?;
        self.expect(Tok::LBracket, "`[i]` after equation variable")?;
        match self.bump().tok {
            Tok::Ident(i) if i == "i" => {}
            _ => return Err(self.syntax("left-hand side must be indexed by `[i]`")),
        }
        self.expect(Tok::RBracket, "`]`")?;
        self.expect(Tok::Equals, "`=`")?;
        let rhs = self.expr()?;
        let span = SourceSpan {
            start: start.start,
            end: self.toks[self.pos.saturating_sub(1)].span.end,
            line: start.line,
            column: start.column,
        };
        self.end_of_line()?;
        Ok(Equation { var, span, rhs })
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Tok::Slash => {
                    return Err(ParseError::new(
                        ParseErrorKind::NonPolynomial,
                        self.span(),
                        "division is only allowed between two integer literals",
                    ))
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> PResult<Expr> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        if *self.peek() == Tok::Plus {
            self.bump();
            return self.factor();
        }
        let base = self.base()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let span = self.span();
        match self.bump().tok {
            Tok::Int(digits) => {
                let e: u32 = digits
                    .parse()
                    .map_err(|_| ParseError::new(ParseErrorKind::NonIntegerExponent, span, "exponent too large"))?;
                if *self.peek() == Tok::Slash {
                    return Err(ParseError::new(
                        ParseErrorKind::NonIntegerExponent,
                        span,
                        "exponent must be a non-negative integer literal",
                    ));
                }
                Ok(Expr::Pow(Box::new(base), e))
            }
            Tok::Decimal(_) | Tok::Minus => Err(ParseError::new(
                ParseErrorKind::NonIntegerExponent,
                span,
                "exponent must be a non-negative integer literal",
            )),
            other => Err(ParseError::new(
                ParseErrorKind::NonIntegerExponent,
                span,
                format!("expected integer exponent, found {}", other.describe()),
            )),
        }
    }

    fn base(&mut self) -> PResult<Expr> {
        let span = self.span();
        match self.bump().tok {
            Tok::Int(digits) => {
                let numer: BigInt = digits.parse().expect("lexer yields digits");
                if *self.peek() == Tok::Slash {
                    let slash = self.bump();
                    let dspan = self.span();
                    return match self.bump().tok {
                        Tok::Int(d) => {
                            let denom: BigInt = d.parse().expect("lexer yields digits");
                            if denom.is_zero() {
                                return Err(ParseError::new(ParseErrorKind::Syntax, dspan, "zero denominator"));
                            }
                            Ok(Expr::Num(BigRational::new(numer, denom), join(span, dspan)))
                        }
                        _ => Err(ParseError::new(
                            ParseErrorKind::NonPolynomial,
                            slash.span,
                            "division is only allowed between two integer literals",
                        )),
                    };
                }
                Ok(Expr::Num(BigRational::from_integer(numer), span))
            }
            Tok::Decimal(v) => Ok(Expr::Num(v, span)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                let var = self.lookup(&name, span)?;
                self.expect(Tok::LBracket, "`[i-<lag>]` after variable")?;
                match self.bump().tok {
                    Tok::Ident(i) if i == "i" => {}
                    _ => return Err(self.syntax("variable references must be indexed as `[i-<lag>]`")),
                }
                let lag = match self.peek().clone() {
                    Tok::Minus => {
                        self.bump();
                        let lspan = self.span();
                        match self.bump().tok {
                            Tok::Int(d) => d
                                .parse::<u32>()
                                .map_err(|_| ParseError::new(ParseErrorKind::InvalidLag, lspan, "lag too large"))?,
                            _ => return Err(ParseError::new(ParseErrorKind::Syntax, lspan, "expected integer lag")),
                        }
                    }
                    Tok::Plus => {
                        let end = self.pos;
                        let _ = self.bump();
                        let _ = self.bump();
                        let full = join(span, self.toks[end].span);
                        return Err(ParseError::new(
                            ParseErrorKind::InvalidLag,
                            full,
                            "lags must be positive; future values `[i+j]` are not allowed",
                        ));
                    }
                    _ => 0,
                };
                let close = self.expect(Tok::RBracket, "`]`")?;
                let full = join(span, close.span);
                if lag == 0 {
                    return Err(ParseError::new(
                        ParseErrorKind::InvalidLag,
                        full,
                        "right-hand sides may only reference past values (lag >= 1)",
                    ));
                }
                Ok(Expr::Var { var, lag, span: full })
            }
            Tok::Slash => Err(ParseError::new(
                ParseErrorKind::NonPolynomial,
                span,
                "division is only allowed between two integer literals",
            )),
            other => Err(ParseError::new(
                ParseErrorKind::Syntax,
                span,
                format!("expected a number, variable or `(`, found {}", other.describe()),
            )),
        }
    }
}

fn join(a: SourceSpan, b: SourceSpan) -> SourceSpan {
    SourceSpan {
        start: a.start,
        end: b.end.max(a.end),
        line: a.line,
        column: a.column,
    }
}

/// Parses DSL text into an AST.
pub fn parse(text: &str) -> std::result::Result<RecurrenceAst, ParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        names: Vec::new(),
    };
    p.header()?;
    let mut slots: Vec<Option<Equation>> = vec![None; p.names.len()];
    loop {
        p.skip_newlines();
        if *p.peek() == Tok::Eof {
            break;
        }
        let eq = p.equation()?;
        if slots[eq.var].is_some() {
            return Err(ParseError::new(
                ParseErrorKind::DuplicateEquation,
                eq.span,
                format!("second equation for `{}`", p.names[eq.var].0),
            ));
        }
        let idx = eq.var;
        slots[idx] = Some(eq);
    }
    let mut equations = Vec::with_capacity(slots.len());
    for (i, slot) in slots.into_iter().enumerate() {
        match slot {
            Some(eq) => equations.push(eq),
            None => {
                let (name, span) = &p.names[i];
                return Err(ParseError::new(
                    ParseErrorKind::MissingEquation,
                    *span,
                    format!("no equation given for declared variable `{name}`"),
                ));
            }
        }
    }
    Ok(RecurrenceAst {
        vars: p.names,
        equations,
    })
}

/// Expands each right-hand side into a canonical polynomial over the lagged
/// variables `(u1[i-1], .., uk[i-1], u1[i-2], .., uk[i-n])`.
pub fn lower<S: Scalar>(ast: &RecurrenceAst) -> Result<PolySystem<S>> {
    let k = ast.vars.len();
    let depth = ast.depth();
    let nvars = k * depth;
    let polys = ast
        .equations
        .iter()
        .map(|eq| lower_expr::<S>(&eq.rhs, k, nvars))
        .collect::<Result<Vec<_>>>()?;
    PolySystem::new(ast.vars.iter().map(|(n, _)| n.clone()).collect(), depth, polys)
}

fn lower_expr<S: Scalar>(e: &Expr, k: usize, nvars: usize) -> Result<Poly<S>> {
    Ok(match e {
        Expr::Num(v, _) => {
            let s = S::from_rational(v);
            if !s.is_finite() {
                return Err(Error::NonFinite(format!("literal {v} does not fit in a double")));
            }
            Poly::constant(nvars, s)
        }
        Expr::Var { var, lag, .. } => Poly::var(nvars, (*lag as usize - 1) * k + var),
        Expr::Neg(a) => lower_expr::<S>(a, k, nvars)?.neg(),
        Expr::Add(a, b) => lower_expr::<S>(a, k, nvars)?.add(&lower_expr(b, k, nvars)?)?,
        Expr::Sub(a, b) => lower_expr::<S>(a, k, nvars)?.sub(&lower_expr(b, k, nvars)?)?,
        Expr::Mul(a, b) => lower_expr::<S>(a, k, nvars)?.mul(&lower_expr(b, k, nvars)?)?,
        Expr::Pow(a, n) => lower_expr::<S>(a, k, nvars)?.pow_truncated(*n, u32::MAX)?,
    })
    .and_then(|p: Poly<S>| {
        if p.terms().values().all(Scalar::is_finite) {
            Ok(p)
        } else {
            Err(Error::NonFinite("coefficient overflowed during expansion".into()))
        }
    })
}

/// Parses and lowers in one step.
pub fn parse_system<S: Scalar>(text: &str) -> Result<PolySystem<S>> {
    lower(&parse(text)?)
}

/// Canonical DSL text for a system. Terms are listed by descending degree.
pub fn pretty_print<S: Scalar>(system: &PolySystem<S>) -> String {
    let mut out = format!("vars: {}\n", system.names().join(", "));
    for (name, poly) in system.names().iter().zip(system.polys()) {
        out.push_str(&format!("{name}[i] = {}\n", render_poly(system, poly)));
    }
    out
}

/// One right-hand side rendered in DSL syntax.
pub fn render_poly<S: Scalar>(system: &PolySystem<S>, poly: &Poly<S>) -> String {
    if poly.is_zero() {
        return "0".into();
    }
    let mut out = String::new();
    for (idx, (m, c)) in poly.terms().iter().rev().enumerate() {
        let (negative, mag) = split_sign(c);
        if idx == 0 {
            if negative {
                out.push('-');
            }
        } else {
            out.push_str(if negative { " - " } else { " + " });
        }
        let mono = render_monomial(system, m);
        let unit = mag == S::one();
        match (mono.is_empty(), unit) {
            (true, _) => out.push_str(&mag.render()),
            (false, true) => out.push_str(&mono),
            (false, false) => {
                out.push_str(&mag.render());
                out.push('*');
                out.push_str(&mono);
            }
        }
    }
    out
}

/// `(is_negative, |c|)` for real scalars; complex values count as positive.
pub(crate) fn split_sign<S: Scalar>(c: &S) -> (bool, S) {
    let negative = match c.as_rational() {
        Some(r) => r < &<BigRational as Zero>::zero(),
        None => {
            let z = c.to_complex();
            z.im == 0.0 && z.re < 0.0
        }
    };
    if negative {
        (true, -c.clone())
    } else {
        (false, c.clone())
    }
}

fn render_monomial<S: Scalar>(system: &PolySystem<S>, m: &Monomial) -> String {
    let k = system.k();
    m.exponents()
        .iter()
        .enumerate()
        .filter(|(_, &e)| e > 0)
        .map(|(v, &e)| {
            let base = format!("{}[i-{}]", system.names()[v % k], v / k + 1);
            if e == 1 {
                base
            } else {
                format!("{base}^{e}")
            }
        })
        .collect::<Vec<_>>()
        .join("*")
}
