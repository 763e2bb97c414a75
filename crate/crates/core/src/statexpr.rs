//! A small language for writing pure states.
//!
//! ```text
//! input   := expr ['@' 'd' '=' integer]
//! expr    := ['+' | '-'] term (('+' | '-') term)*
//! term    := scalar '*' tensor ('/' scalar)* | tensor ('/' scalar)*
//! tensor  := primary ('x' primary)*
//! primary := ket | call | '(' expr ')'
//! ket     := '|' digit+ '>' | '|' integer (',' integer)* '>'
//! call    := ('ghz' | 'w' | 'dicke' | 'schmidt_state') '(' scalar (',' scalar)* ')'
//! scalar  := sfactor (('*' | '/') sfactor)*
//! sfactor := '-' sfactor | number | number 'i' | 'i' | 'sqrt' '(' scalar ')'
//! ```
//!
//! A `*` after a scalar continues the scalar only when the next token can
//! start one; otherwise it introduces the scaled tensor. Ket digits are
//! read in the local dimension declared by the trailing `@ d=N`, or the
//! default passed to [`eval`]. `#` starts a comment running to the end of
//! the line.

use std::collections::BTreeSet;
use std::fmt;

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::error::{Error, Result};
use crate::numkit::CMatrix;
use crate::states::{basis_index, make_named, MultipartiteState, NamedState};

/// Byte range in the source text. Spans are diagnostic metadata and never
/// take part in AST equality, so re-parsed pretty-printed trees compare
/// equal to the originals.
#[derive(Clone, Copy, Debug, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Span {
    fn to(self, other: Span) -> Span {
        Span {
            start: self.start,
            end: other.end,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    Lexical,
    Syntax,
    /// Wrong argument count or summands with different subsystem counts.
    Arity,
    /// Ket digit outside the declared local dimension, or an invalid
    /// constructor argument.
    Dimension,
}

#[derive(Clone, Debug, PartialEq, Error)]
#[error("line {line}, column {column}: {message}{}", expected_suffix(.expected))]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub message: String,
    pub line: usize,
    pub column: usize,
    pub span: Span,
    pub expected: Vec<String>,
}

fn expected_suffix(expected: &[String]) -> String {
    if expected.is_empty() {
        String::new()
    } else {
        format!(" (expected one of: {})", expected.join(", "))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Implicit,
    Plus,
    Minus,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    Real(f64, Span),
    /// `number i`
    Imag(f64, Span),
    /// bare `i`
    Unit(Span),
    Sqrt(Box<Scalar>, Span),
    Neg(Box<Scalar>, Span),
    Mul(Box<Scalar>, Box<Scalar>),
    Div(Box<Scalar>, Box<Scalar>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Constructor {
    Ghz,
    W,
    Dicke,
    SchmidtState,
}

impl Constructor {
    const ALL: [Constructor; 4] = [Self::Ghz, Self::W, Self::Dicke, Self::SchmidtState];

    pub fn name(self) -> &'static str {
        match self {
            Self::Ghz => "ghz",
            Self::W => "w",
            Self::Dicke => "dicke",
            Self::SchmidtState => "schmidt_state",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Ket {
        digits: Vec<usize>,
        comma: bool,
        span: Span,
    },
    Call {
        ctor: Constructor,
        args: Vec<Scalar>,
        span: Span,
    },
    Paren(Box<Expr>, Span),
    Tensor(Vec<Expr>),
    Scaled(Scalar, Box<Expr>),
    Divided(Box<Expr>, Scalar),
    Sum(Vec<(Sign, Expr)>),
}

/// A parsed state expression with its optional `@ d=N` declaration.
#[derive(Clone, Debug, PartialEq)]
pub struct StateExpr {
    pub body: Expr,
    pub local_dim: Option<usize>,
}

/// Grammar productions, for corpus coverage checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Production {
    DimDecl,
    Sum,
    LeadingSign,
    ScaledTerm,
    DividedTerm,
    Tensor,
    Paren,
    KetDigits,
    KetComma,
    Call(Constructor),
    Real,
    Imag,
    Unit,
    Sqrt,
    Neg,
    ScalarMul,
    ScalarDiv,
}

impl Production {
    pub fn all() -> BTreeSet<Production> {
        use Production::*;
        let mut set: BTreeSet<Production> = [
            DimDecl,
            Sum,
            LeadingSign,
            ScaledTerm,
            DividedTerm,
            Tensor,
            Paren,
            KetDigits,
            KetComma,
            Real,
            Imag,
            Unit,
            Sqrt,
            Neg,
            ScalarMul,
            ScalarDiv,
        ]
        .into_iter()
        .collect();
        set.extend(Constructor::ALL.map(Call));
        set
    }
}

// ---------------------------------------------------------------- lexer

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ket(Vec<usize>, bool),
    Number(f64),
    ImagNumber(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    Comma,
    At,
    Eq,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ket(..) => "ket".into(),
            Tok::Number(x) => format!("number {x}"),
            Tok::ImagNumber(x) => format!("imaginary number {x}i"),
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Slash => "'/'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::At => "'@'".into(),
            Tok::Eq => "'='".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn error_at(
    src: &str,
    kind: ParseErrorKind,
    span: Span,
    message: String,
    expected: &[&str],
) -> ParseError {
    let (line, column) = line_col(src, span.start);
    ParseError {
        kind,
        message,
        line,
        column,
        span,
        expected: expected.iter().map(|s| s.to_string()).collect(),
    }
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            src,
            bytes: src.as_bytes(),
            pos: 0,
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn lex_error(&self, start: usize, message: String, expected: &[&str]) -> ParseError {
        let end = (self.pos + 1).min(self.src.len()).max(start);
        error_at(
            self.src,
            ParseErrorKind::Lexical,
            Span { start, end },
            message,
            expected,
        )
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_ascii_whitespace() {
                self.pos += 1;
            } else if c == b'#' {
                while self.peek().is_some_and(|c| c != b'\n') {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn digits(&mut self) -> usize {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        self.pos - start
    }

    fn tokens(mut self) -> std::result::Result<Vec<(Tok, Span)>, ParseError> {
        let mut out = Vec::new();
        loop {
            self.skip_trivia();
            let start = self.pos;
            let Some(c) = self.peek() else {
                out.push((Tok::Eof, Span { start, end: start }));
                return Ok(out);
            };
            let tok = match c {
                b'|' => self.ket()?,
                b'0'..=b'9' | b'.' => self.number()?,
                b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                    while self
                        .peek()
                        .is_some_and(|c| c.is_ascii_alphanumeric() || c == b'_')
                    {
                        self.pos += 1;
                    }
                    Tok::Ident(self.src[start..self.pos].to_string())
                }
                _ => {
                    self.pos += 1;
                    match c {
                        b'+' => Tok::Plus,
                        b'-' => Tok::Minus,
                        b'*' => Tok::Star,
                        b'/' => Tok::Slash,
                        b'(' => Tok::LParen,
                        b')' => Tok::RParen,
                        b',' => Tok::Comma,
                        b'@' => Tok::At,
                        b'=' => Tok::Eq,
                        _ => {
                            self.pos = start;
                            let ch = self.src[start..].chars().next().unwrap_or('?');
                            return Err(self.lex_error(
                                start,
                                format!("unexpected character '{ch}'"),
                                &[],
                            ));
                        }
                    }
                }
            };
            out.push((
                tok,
                Span {
                    start,
                    end: self.pos,
                },
            ));
        }
    }

    fn ket(&mut self) -> std::result::Result<Tok, ParseError> {
        let start = self.pos;
        self.pos += 1;
        let body_start = self.pos;
        while self
            .peek()
            .is_some_and(|c| c.is_ascii_digit() || c == b',' || c == b' ')
        {
            self.pos += 1;
        }
        if self.peek() != Some(b'>') {
            return Err(self.lex_error(
                self.pos,
                "unterminated ket literal".into(),
                &["digit", "','", "'>'"],
            ));
        }
        let body: String = self.src[body_start..self.pos]
            .chars()
            .filter(|c| *c != ' ')
            .collect();
        self.pos += 1;
        if body.is_empty() {
            return Err(self.lex_error(start, "empty ket literal".into(), &["digit"]));
        }
        if body.contains(',') {
            let parts: std::result::Result<Vec<usize>, _> =
                body.split(',').map(str::parse).collect();
            match parts {
                Ok(d) => Ok(Tok::Ket(d, true)),
                Err(_) => Err(self.lex_error(
                    start,
                    format!("malformed ket literal '|{body}>'"),
                    &["integer"],
                )),
            }
        } else {
            Ok(Tok::Ket(
                body.bytes().map(|b| (b - b'0') as usize).collect(),
                false,
            ))
        }
    }

    fn number(&mut self) -> std::result::Result<Tok, ParseError> {
        let start = self.pos;
        let int = self.digits();
        let mut frac = 0;
        if self.peek() == Some(b'.') {
            self.pos += 1;
            frac = self.digits();
        }
        if int + frac == 0 {
            return Err(self.lex_error(start, "malformed number".into(), &["digit"]));
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if self.digits() == 0 {
                self.pos = save;
            }
        }
        let value: f64 = self.src[start..self.pos]
            .parse()
            .map_err(|_| self.lex_error(start, "malformed number".into(), &["digit"]))?;
        let imag = self.peek() == Some(b'i')
            && !self
                .bytes
                .get(self.pos + 1)
                .is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_');
        if imag {
            self.pos += 1;
            Ok(Tok::ImagNumber(value))
        } else {
            Ok(Tok::Number(value))
        }
    }
}

// ---------------------------------------------------------------- parser

const SCALAR_START: &[&str] = &["number", "'i'", "'sqrt'", "'-'"];
const PRIMARY_START: &[&str] = &["ket", "'ghz'", "'w'", "'dicke'", "'schmidt_state'", "'('"];

struct Parser<'a> {
    src: &'a str,
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

type PResult<T> = std::result::Result<T, ParseError>;

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].1
    }

    fn bump(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        error_at(
            self.src,
            ParseErrorKind::Syntax,
            self.span(),
            format!("unexpected {}", self.peek().describe()),
            expected,
        )
    }

    fn expect(&mut self, tok: Tok, name: &str) -> PResult<Span> {
        if *self.peek() == tok {
            Ok(self.bump().1)
        } else {
            Err(self.unexpected(&[name]))
        }
    }

    fn is_scalar_start(tok: &Tok) -> bool {
        match tok {
            Tok::Number(_) | Tok::ImagNumber(_) | Tok::Minus => true,
            Tok::Ident(s) => s == "i" || s == "sqrt",
            _ => false,
        }
    }

    fn input(&mut self) -> PResult<StateExpr> {
        let body = self.expr()?;
        let mut local_dim = None;
        if *self.peek() == Tok::At {
            self.bump();
            match self.peek() {
                Tok::Ident(s) if s == "d" => {
                    self.bump();
                }
                _ => return Err(self.unexpected(&["'d'"])),
            }
            self.expect(Tok::Eq, "'='")?;
            let span = self.span();
            match self.peek().clone() {
                Tok::Number(x) if x.fract() == 0.0 && (2.0..=1e6).contains(&x) => {
                    self.bump();
                    local_dim = Some(x as usize);
                }
                Tok::Number(x) => {
                    return Err(error_at(
                        self.src,
                        ParseErrorKind::Dimension,
                        span,
                        format!("local dimension must be an integer >= 2, got {x}"),
                        &[],
                    ))
                }
                _ => return Err(self.unexpected(&["integer"])),
            }
        }
        if *self.peek() != Tok::Eof {
            let mut expected = vec!["'+'", "'-'", "end of input"];
            if local_dim.is_none() {
                expected.push("'@'");
            }
            return Err(self.unexpected(&expected));
        }
        Ok(StateExpr { body, local_dim })
    }

    fn expr(&mut self) -> PResult<Expr> {
        let lead = match self.peek() {
            Tok::Plus => {
                self.bump();
                Sign::Plus
            }
            Tok::Minus => {
                self.bump();
                Sign::Minus
            }
            _ => Sign::Implicit,
        };
        let mut terms = vec![(lead, self.term()?)];
        loop {
            let sign = match self.peek() {
                Tok::Plus => Sign::Plus,
                Tok::Minus => Sign::Minus,
                _ => break,
            };
            self.bump();
            terms.push((sign, self.term()?));
        }
        if terms.len() == 1 && lead == Sign::Implicit {
            Ok(terms.pop().expect("one term").1)
        } else {
            Ok(Expr::Sum(terms))
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut e = if Self::is_scalar_start(self.peek()) {
            let s = self.scalar()?;
            self.expect(Tok::Star, "'*'")?;
            Expr::Scaled(s, Box::new(self.tensor()?))
        } else {
            self.tensor()?
        };
        while *self.peek() == Tok::Slash {
            self.bump();
            e = Expr::Divided(Box::new(e), self.scalar()?);
        }
        Ok(e)
    }

    fn tensor(&mut self) -> PResult<Expr> {
        let mut factors = vec![self.primary()?];
        while matches!(self.peek(), Tok::Ident(s) if s == "x") {
            self.bump();
            factors.push(self.primary()?);
        }
        Ok(if factors.len() == 1 {
            factors.pop().expect("one factor")
        } else {
            Expr::Tensor(factors)
        })
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Ket(digits, comma) => {
                let span = self.bump().1;
                Ok(Expr::Ket {
                    digits,
                    comma,
                    span,
                })
            }
            Tok::LParen => {
                let open = self.bump().1;
                let inner = self.expr()?;
                let close = self.expect(Tok::RParen, "')'")?;
                Ok(Expr::Paren(Box::new(inner), open.to(close)))
            }
            Tok::Ident(name) => match Constructor::from_name(&name) {
                Some(ctor) => {
                    let start = self.bump().1;
                    self.expect(Tok::LParen, "'('")?;
                    let mut args = vec![self.scalar()?];
                    while *self.peek() == Tok::Comma {
                        self.bump();
                        args.push(self.scalar()?);
                    }
                    let close = self.expect(Tok::RParen, "')'")?;
                    Ok(Expr::Call {
                        ctor,
                        args,
                        span: start.to(close),
                    })
                }
                None => Err(self.unexpected(PRIMARY_START)),
            },
            _ => Err(self.unexpected(PRIMARY_START)),
        }
    }

    fn scalar(&mut self) -> PResult<Scalar> {
        let mut s = self.sfactor()?;
        loop {
            match self.peek() {
                Tok::Star if Self::is_scalar_start(self.peek_at(1)) => {
                    self.bump();
                    s = Scalar::Mul(Box::new(s), Box::new(self.sfactor()?));
                }
                Tok::Slash => {
                    self.bump();
                    s = Scalar::Div(Box::new(s), Box::new(self.sfactor()?));
                }
                _ => return Ok(s),
            }
        }
    }

    fn sfactor(&mut self) -> PResult<Scalar> {
        match self.peek().clone() {
            Tok::Minus => {
                let start = self.bump().1;
                let inner = self.sfactor()?;
                let span = start.to(self.prev_span());
                Ok(Scalar::Neg(Box::new(inner), span))
            }
            Tok::Number(x) => Ok(Scalar::Real(x, self.bump().1)),
            Tok::ImagNumber(x) => Ok(Scalar::Imag(x, self.bump().1)),
            Tok::Ident(s) if s == "i" => Ok(Scalar::Unit(self.bump().1)),
            Tok::Ident(s) if s == "sqrt" => {
                let start = self.bump().1;
                self.expect(Tok::LParen, "'('")?;
                let inner = self.scalar()?;
                let close = self.expect(Tok::RParen, "')'")?;
                Ok(Scalar::Sqrt(Box::new(inner), start.to(close)))
            }
            _ => Err(self.unexpected(SCALAR_START)),
        }
    }
}

// ------------------------------------------------------------ semantics

impl Scalar {
    pub fn value(&self) -> C64 {
        match self {
            Scalar::Real(x, _) => C64::new(*x, 0.0),
            Scalar::Imag(x, _) => C64::new(0.0, *x),
            Scalar::Unit(_) => C64::new(0.0, 1.0),
            Scalar::Sqrt(s, _) => s.value().sqrt(),
            Scalar::Neg(s, _) => -s.value(),
            Scalar::Mul(a, b) => a.value() * b.value(),
            Scalar::Div(a, b) => a.value() / b.value(),
        }
    }

    fn span(&self) -> Span {
        match self {
            Scalar::Real(_, s)
            | Scalar::Imag(_, s)
            | Scalar::Unit(s)
            | Scalar::Sqrt(_, s)
            | Scalar::Neg(_, s) => *s,
            Scalar::Mul(a, b) | Scalar::Div(a, b) => a.span().to(b.span()),
        }
    }

    fn productions(&self, out: &mut BTreeSet<Production>) {
        match self {
            Scalar::Real(..) => {
                out.insert(Production::Real);
            }
            Scalar::Imag(..) => {
                out.insert(Production::Imag);
            }
            Scalar::Unit(_) => {
                out.insert(Production::Unit);
            }
            Scalar::Sqrt(s, _) => {
                out.insert(Production::Sqrt);
                s.productions(out);
            }
            Scalar::Neg(s, _) => {
                out.insert(Production::Neg);
                s.productions(out);
            }
            Scalar::Mul(a, b) => {
                out.insert(Production::ScalarMul);
                a.productions(out);
                b.productions(out);
            }
            Scalar::Div(a, b) => {
                out.insert(Production::ScalarDiv);
                a.productions(out);
                b.productions(out);
            }
        }
    }
}

/// Nonnegative integer value of a constructor argument.
fn integer_arg(s: &Scalar) -> Option<usize> {
    let v = s.value();
    let ok = v.im == 0.0 && v.re >= 0.0 && v.re.fract() == 0.0 && v.re < 64.0;
    ok.then_some(v.re as usize)
}

impl Expr {
    fn span(&self) -> Span {
        match self {
            Expr::Ket { span, .. } | Expr::Call { span, .. } | Expr::Paren(_, span) => *span,
            Expr::Tensor(f) => f[0].span().to(f[f.len() - 1].span()),
            Expr::Scaled(s, e) => s.span().to(e.span()),
            Expr::Divided(e, s) => e.span().to(s.span()),
            Expr::Sum(t) => t[0].1.span().to(t[t.len() - 1].1.span()),
        }
    }

    fn productions(&self, out: &mut BTreeSet<Production>) {
        match self {
            Expr::Ket { comma, .. } => {
                out.insert(if *comma {
                    Production::KetComma
                } else {
                    Production::KetDigits
                });
            }
            Expr::Call { ctor, args, .. } => {
                out.insert(Production::Call(*ctor));
                args.iter().for_each(|a| a.productions(out));
            }
            Expr::Paren(e, _) => {
                out.insert(Production::Paren);
                e.productions(out);
            }
            Expr::Tensor(f) => {
                out.insert(Production::Tensor);
                f.iter().for_each(|e| e.productions(out));
            }
            Expr::Scaled(s, e) => {
                out.insert(Production::ScaledTerm);
                s.productions(out);
                e.productions(out);
            }
            Expr::Divided(e, s) => {
                out.insert(Production::DividedTerm);
                e.productions(out);
                s.productions(out);
            }
            Expr::Sum(t) => {
                out.insert(Production::Sum);
                if t[0].0 != Sign::Implicit {
                    out.insert(Production::LeadingSign);
                }
                t.iter().for_each(|(_, e)| e.productions(out));
            }
        }
    }

    /// Number of subsystems, checking constructor arguments and summand
    /// consistency.
    fn arity(&self, src: &str) -> PResult<usize> {
        match self {
            Expr::Ket { digits, .. } => Ok(digits.len()),
            Expr::Call { ctor, args, span } => {
                let expected: &[usize] = match ctor {
                    Constructor::Ghz | Constructor::Dicke => &[2],
                    Constructor::W => &[1],
                    Constructor::SchmidtState => &[],
                };
                let count_ok = if expected.is_empty() {
                    args.len() >= 2
                } else {
                    expected.contains(&args.len())
                };
                if !count_ok {
                    let want = if expected.is_empty() {
                        "at least 2".to_string()
                    } else {
                        expected[0].to_string()
                    };
                    return Err(error_at(
                        src,
                        ParseErrorKind::Arity,
                        *span,
                        format!(
                            "{}() takes {want} arguments, got {}",
                            ctor.name(),
                            args.len()
                        ),
                        &[],
                    ));
                }
                if *ctor == Constructor::SchmidtState {
                    return Ok(2);
                }
                let first = integer_arg(&args[0]).filter(|&l| l >= 1).ok_or_else(|| {
                    error_at(
                        src,
                        ParseErrorKind::Dimension,
                        args[0].span(),
                        format!("{}() needs a positive integer subsystem count", ctor.name()),
                        &[],
                    )
                })?;
                Ok(first)
            }
            Expr::Paren(e, _) | Expr::Scaled(_, e) | Expr::Divided(e, _) => e.arity(src),
            Expr::Tensor(f) => f.iter().map(|e| e.arity(src)).sum(),
            Expr::Sum(t) => {
                let first = t[0].1.arity(src)?;
                for (_, e) in &t[1..] {
                    let a = e.arity(src)?;
                    if a != first {
                        return Err(error_at(
                            src,
                            ParseErrorKind::Arity,
                            e.span(),
                            format!("summand has {a} subsystems, expected {first}"),
                            &[],
                        ));
                    }
                }
                Ok(first)
            }
        }
    }

    fn check_digits(&self, src: &str, d: usize) -> PResult<()> {
        match self {
            Expr::Ket { digits, span, .. } => match digits.iter().find(|&&q| q >= d) {
                Some(q) => Err(error_at(
                    src,
                    ParseErrorKind::Dimension,
                    *span,
                    format!("digit {q} is not below the local dimension {d}"),
                    &[],
                )),
                None => Ok(()),
            },
            Expr::Call { .. } => Ok(()),
            Expr::Paren(e, _) | Expr::Scaled(_, e) | Expr::Divided(e, _) => e.check_digits(src, d),
            Expr::Tensor(f) => f.iter().try_for_each(|e| e.check_digits(src, d)),
            Expr::Sum(t) => t.iter().try_for_each(|(_, e)| e.check_digits(src, d)),
        }
    }
}

impl StateExpr {
    pub fn productions(&self) -> BTreeSet<Production> {
        let mut out = BTreeSet::new();
        if self.local_dim.is_some() {
            out.insert(Production::DimDecl);
        }
        self.body.productions(&mut out);
        out
    }
}

pub fn parse(text: &str) -> std::result::Result<StateExpr, ParseError> {
    let toks = Lexer::new(text).tokens()?;
    let mut p = Parser {
        src: text,
        toks,
        pos: 0,
    };
    if *p.peek() == Tok::Eof {
        return Err(p.unexpected(PRIMARY_START));
    }
    let expr = p.input()?;
    expr.body.arity(text)?;
    if let Some(d) = expr.local_dim {
        expr.body.check_digits(text, d)?;
    }
    Ok(expr)
}

/// Parses a corpus: one expression per non-blank, non-comment line.
/// Returns `(line number, result)` pairs with 1-based line numbers.
pub fn parse_corpus(text: &str) -> Vec<(usize, std::result::Result<StateExpr, ParseError>)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        })
        .map(|(i, l)| {
            let r = parse(l).map_err(|mut e| {
                e.line = i + 1;
                e
            });
            (i + 1, r)
        })
        .collect()
}

/// Evaluates to a normalized, phase-fixed state. Kets use the declared
/// local dimension, else `default_d`.
pub fn eval(expr: &StateExpr, default_d: usize) -> Result<MultipartiteState> {
    let d = expr.local_dim.unwrap_or(default_d);
    if d < 2 {
        return Err(Error::InvalidParameter(format!("local dimension {d} < 2")));
    }
    let (dims, amps) = eval_expr(&expr.body, d)?;
    if crate::numkit::norm(&amps) <= 1e-12 {
        return Err(Error::InvalidState(
            "expression evaluates to the zero vector".into(),
        ));
    }
    MultipartiteState::new(dims, amps)
}

/// Parses and evaluates with the default local dimension 2.
pub fn parse_state(text: &str) -> Result<MultipartiteState> {
    eval(&parse(text)?, 2)
}

type Vector = (Vec<usize>, Vec<C64>);

fn eval_expr(e: &Expr, d: usize) -> Result<Vector> {
    match e {
        Expr::Ket { digits, .. } => {
            let dims = vec![d; digits.len()];
            if let Some(q) = digits.iter().find(|&&q| q >= d) {
                return Err(Error::InvalidParameter(format!(
                    "ket digit {q} is not below the local dimension {d}"
                )));
            }
            let total: usize = dims.iter().product();
            let mut amps = vec![C64::new(0.0, 0.0); total];
            amps[basis_index(&dims, digits)] = C64::new(1.0, 0.0);
            Ok((dims, amps))
        }
        Expr::Call { ctor, args, .. } => {
            let int = |k: usize| {
                integer_arg(&args[k]).ok_or_else(|| {
                    Error::InvalidParameter(format!(
                        "{}() argument {} must be a nonnegative integer",
                        ctor.name(),
                        k + 1
                    ))
                })
            };
            let named = match ctor {
                Constructor::Ghz => NamedState::Ghz {
                    l: int(0)?,
                    d: int(1)?,
                },
                Constructor::W => NamedState::W { l: int(0)? },
                Constructor::Dicke => NamedState::Dicke {
                    l: int(0)?,
                    k: int(1)?,
                },
                Constructor::SchmidtState => {
                    let weights = args
                        .iter()
                        .map(|a| {
                            let v = a.value();
                            if v.im != 0.0 {
                                Err(Error::InvalidParameter(
                                    "Schmidt weights must be real".into(),
                                ))
                            } else {
                                Ok(v.re)
                            }
                        })
                        .collect::<Result<Vec<f64>>>()?;
                    NamedState::Schmidt(weights)
                }
            };
            let s = make_named(&named)?;
            Ok((s.dims().to_vec(), s.amplitudes().to_vec()))
        }
        Expr::Paren(e, _) => eval_expr(e, d),
        Expr::Tensor(factors) => {
            let mut dims = Vec::new();
            let mut acc = CMatrix::from_rows(&[vec![C64::new(1.0, 0.0)]])?;
            for f in factors {
                let (fd, fa) = eval_expr(f, d)?;
                dims.extend(fd);
                acc = acc.kron(&CMatrix::new(fa.len(), 1, fa)?);
            }
            Ok((dims, acc.as_slice().to_vec()))
        }
        Expr::Scaled(s, e) => {
            let (dims, amps) = eval_expr(e, d)?;
            let c = s.value();
            Ok((dims, amps.into_iter().map(|z| z * c).collect()))
        }
        Expr::Divided(e, s) => {
            let c = s.value();
            if c.norm() == 0.0 || !c.is_finite() {
                return Err(Error::InvalidParameter("division by zero".into()));
            }
            let (dims, amps) = eval_expr(e, d)?;
            Ok((dims, amps.into_iter().map(|z| z / c).collect()))
        }
        Expr::Sum(terms) => {
            let mut acc: Option<Vector> = None;
            for (sign, e) in terms {
                let (dims, amps) = eval_expr(e, d)?;
                let f = if *sign == Sign::Minus { -1.0 } else { 1.0 };
                match &mut acc {
                    None => acc = Some((dims, amps.into_iter().map(|z| z * f).collect())),
                    Some((ad, aa)) => {
                        if *ad != dims {
                            return Err(Error::Shape(format!(
                                "summands with factor dimensions {ad:?} and {dims:?}"
                            )));
                        }
                        aa.iter_mut().zip(amps).for_each(|(a, z)| *a += z * f);
                    }
                }
            }
            Ok(acc.expect("sums have at least one term"))
        }
    }
}

// --------------------------------------------------------- pretty-print

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Real(x, _) => write!(f, "{x}"),
            Scalar::Imag(x, _) => write!(f, "{x}i"),
            Scalar::Unit(_) => write!(f, "i"),
            Scalar::Sqrt(s, _) => write!(f, "sqrt({s})"),
            Scalar::Neg(s, _) => write!(f, "-{s}"),
            Scalar::Mul(a, b) => write!(f, "{a}*{b}"),
            Scalar::Div(a, b) => write!(f, "{a}/{b}"),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Ket { digits, comma, .. } => {
                let comma = *comma || digits.iter().any(|&q| q > 9);
                let body: Vec<String> = digits.iter().map(usize::to_string).collect();
                write!(f, "|{}>", body.join(if comma { "," } else { "" }))
            }
            Expr::Call { ctor, args, .. } => {
                let args: Vec<String> = args.iter().map(Scalar::to_string).collect();
                write!(f, "{}({})", ctor.name(), args.join(","))
            }
            Expr::Paren(e, _) => write!(f, "({e})"),
            Expr::Tensor(factors) => {
                let parts: Vec<String> = factors.iter().map(Expr::to_string).collect();
                write!(f, "{}", parts.join(" x "))
            }
            Expr::Scaled(s, e) => write!(f, "{s}*{e}"),
            Expr::Divided(e, s) => write!(f, "{e}/{s}"),
            Expr::Sum(terms) => {
                for (i, (sign, e)) in terms.iter().enumerate() {
                    let op = match (i, sign) {
                        (0, Sign::Implicit) => "",
                        (0, Sign::Plus) => "+",
                        (0, Sign::Minus) => "-",
                        (_, Sign::Minus) => " - ",
                        _ => " + ",
                    };
                    write!(f, "{op}{e}")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for StateExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.body)?;
        if let Some(d) = self.local_dim {
            write!(f, " @ d={d}")?;
        }
        Ok(())
    }
}
