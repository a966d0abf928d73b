//! Recursive-descent parser for the textual expression grammar.
//!
//! Grammar (EBNF):
//!
//! ```text
//! expr     = term { ("+" | "-") term } ;
//! term     = unary { ("*" | "/") unary } ;
//! unary    = ("-" | "+") unary | power ;
//! power    = primary [ "^" unary ] ;            (* right associative *)
//! primary  = NUMBER | IDENT | call | "(" expr ")" ;
//! call     = IDENT "(" expr { "," expr } ")"
//!          | "integral" "(" IDENT "," expr "," expr "," expr ")" ;
//! NUMBER   = digit { digit } [ "." { digit } ] [ ("e"|"E") [ "+"|"-" ] digit { digit } ] ;
//! IDENT    = letter { letter | digit | "_" } ;
//! ```
//!
//! `integral(s, lo, hi, body)` is the definite integral of `body` in the
//! dummy variable `s` from `lo` (a constant expression) to `hi` (an
//! expression in the outer variables). Inside `body` only `s`, named
//! constants and nested integrals over fresh dummies are visible.
//!
//! Exponents after `^` must fold to constants at parse time. `pi` is
//! predefined; further named constants come from the caller.

use super::{ExpressionProgram, Node, NodeId, ProgramBuilder};
use crate::error::{Error, Result};
use std::collections::HashMap;
use std::sync::Arc;

/// Variable names and named constants visible to the parser.
#[derive(Debug, Clone, Default)]
pub struct ParseContext {
    pub variables: Vec<String>,
    pub constants: HashMap<String, f64>,
}

impl ParseContext {
    pub fn new(variables: &[&str]) -> Self {
        ParseContext {
            variables: variables.iter().map(|s| s.to_string()).collect(),
            constants: HashMap::new(),
        }
    }

    pub fn with_constant(mut self, name: &str, v: f64) -> Self {
        self.constants.insert(name.to_string(), v);
        self
    }
}

/// Parse `text` into a program over the context's variables.
pub fn parse_program(text: &str, ctx: &ParseContext) -> Result<ExpressionProgram> {
    let tokens = lex(text)?;
    let mut builder = ProgramBuilder::new(ctx.variables.len());
    let mut parser = Parser {
        tokens: &tokens,
        pos: 0,
        ctx,
    };
    let root = parser.expr(&mut builder)?;
    if parser.pos != tokens.len() {
        return Err(Error::Parse(format!(
            "unexpected trailing input near '{:?}'",
            tokens[parser.pos]
        )));
    }
    Ok(builder.finish(root))
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

fn lex(text: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let bytes: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                out.push(Tok::Plus);
                i += 1;
            }
            '-' => {
                out.push(Tok::Minus);
                i += 1;
            }
            '*' => {
                out.push(Tok::Star);
                i += 1;
            }
            '/' => {
                out.push(Tok::Slash);
                i += 1;
            }
            '^' => {
                out.push(Tok::Caret);
                i += 1;
            }
            '(' => {
                out.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1;
            }
            ',' => {
                out.push(Tok::Comma);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == '.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == 'e' || bytes[i] == 'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == '+' || bytes[j] == '-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let s: String = bytes[start..i].iter().collect();
                let v = s
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad number '{s}'")))?;
                out.push(Tok::Num(v));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_') {
                    i += 1;
                }
                out.push(Tok::Ident(bytes[start..i].iter().collect()));
            }
            other => return Err(Error::Parse(format!("unexpected character '{other}'"))),
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: &'a [Tok],
    pos: usize,
    ctx: &'a ParseContext,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, t: Tok) -> Result<()> {
        match self.bump() {
            Some(got) if got == t => Ok(()),
            got => Err(Error::Parse(format!("expected {t:?}, found {got:?}"))),
        }
    }

    fn expr(&mut self, b: &mut ProgramBuilder) -> Result<NodeId> {
        let mut lhs = self.term(b)?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    let rhs = self.term(b)?;
                    lhs = b.add(lhs, rhs);
                }
                Some(Tok::Minus) => {
                    self.bump();
                    let rhs = self.term(b)?;
                    lhs = b.sub(lhs, rhs);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self, b: &mut ProgramBuilder) -> Result<NodeId> {
        let mut lhs = self.unary(b)?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    let rhs = self.unary(b)?;
                    lhs = b.mul(lhs, rhs);
                }
                Some(Tok::Slash) => {
                    self.bump();
                    let rhs = self.unary(b)?;
                    lhs = b.div(lhs, rhs);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self, b: &mut ProgramBuilder) -> Result<NodeId> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.bump();
                let inner = self.unary(b)?;
                Ok(b.neg(inner))
            }
            Some(Tok::Plus) => {
                self.bump();
                self.unary(b)
            }
            _ => self.power(b),
        }
    }

    fn power(&mut self, b: &mut ProgramBuilder) -> Result<NodeId> {
        let base = self.primary(b)?;
        if self.peek() == Some(&Tok::Caret) {
            self.bump();
            // Exponent must be a constant; parse it into a scratch builder
            // and fold.
            let start = self.pos;
            let mut scratch = ProgramBuilder::new(b.arity());
            let exp_root = self.unary(&mut scratch)?;
            let folded = scratch.finish(exp_root);
            let r = fold_constant(&folded).ok_or_else(|| {
                Error::Parse(format!("exponent must fold to a constant (token {start})"))
            })?;
            return Ok(b.pow(base, r));
        }
        Ok(base)
    }

    fn primary(&mut self, b: &mut ProgramBuilder) -> Result<NodeId> {
        match self.bump() {
            Some(Tok::Num(v)) => Ok(b.cst(v)),
            Some(Tok::LParen) => {
                let inner = self.expr(b)?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Some(Tok::Ident(name)) => {
                if self.peek() == Some(&Tok::LParen) {
                    self.bump();
                    return self.call(&name, b);
                }
                if let Some(i) = self.ctx.variables.iter().position(|v| v == &name) {
                    return Ok(b.var(i));
                }
                if name == "pi" {
                    return Ok(b.cst(std::f64::consts::PI));
                }
                if let Some(&v) = self.ctx.constants.get(&name) {
                    return Ok(b.cst(v));
                }
                Err(Error::Parse(format!("unknown identifier '{name}'")))
            }
            other => Err(Error::Parse(format!("unexpected token {other:?}"))),
        }
    }

    fn call(&mut self, name: &str, b: &mut ProgramBuilder) -> Result<NodeId> {
        if name == "integral" {
            // integral(dummy, lower, upper, body)
            let dummy = match self.bump() {
                Some(Tok::Ident(d)) => d,
                other => {
                    return Err(Error::Parse(format!(
                        "integral: expected dummy variable name, found {other:?}"
                    )))
                }
            };
            self.expect(Tok::Comma)?;
            let mut lo_builder = ProgramBuilder::new(b.arity());
            let lo_root = self.expr(&mut lo_builder)?;
            let lower = fold_constant(&lo_builder.finish(lo_root))
                .ok_or_else(|| Error::Parse("integral lower limit must be a constant".into()))?;
            self.expect(Tok::Comma)?;
            let upper = self.expr(b)?;
            self.expect(Tok::Comma)?;
            // The integrand sees only the dummy variable plus constants.
            let inner_ctx = ParseContext {
                variables: vec![dummy.clone()],
                constants: self.ctx.constants.clone(),
            };
            let mut inner_builder = ProgramBuilder::new(1);
            let mut inner_parser = Parser {
                tokens: self.tokens,
                pos: self.pos,
                ctx: &inner_ctx,
            };
            let inner_root = inner_parser.expr(&mut inner_builder)?;
            self.pos = inner_parser.pos;
            self.expect(Tok::RParen)?;
            let integrand = Arc::new(inner_builder.finish(inner_root));
            return Ok(b.integral(integrand, lower, upper));
        }
        if name == "atan2" {
            let y = self.expr(b)?;
            self.expect(Tok::Comma)?;
            let x = self.expr(b)?;
            self.expect(Tok::RParen)?;
            return Ok(b.atan2(y, x));
        }
        let arg = self.expr(b)?;
        self.expect(Tok::RParen)?;
        b.unary(name, arg)
    }
}

/// Evaluate a program to a constant if it involves no variables or
/// integrals; used for exponents and integral lower limits.
pub fn fold_constant(p: &ExpressionProgram) -> Option<f64> {
    let mut vals: Vec<Option<f64>> = Vec::with_capacity(p.nodes().len());
    for node in p.nodes() {
        let v = match node {
            Node::Var(_) | Node::Integral { .. } => None,
            Node::Const(v) => Some(*v),
            Node::Add(a, b) => two(&vals, *a, *b, |x, y| x + y),
            Node::Sub(a, b) => two(&vals, *a, *b, |x, y| x - y),
            Node::Mul(a, b) => two(&vals, *a, *b, |x, y| x * y),
            Node::Div(a, b) => two(&vals, *a, *b, |x, y| x / y),
            Node::Neg(a) => one(&vals, *a, |x| -x),
            Node::Pow(a, r) => one(&vals, *a, |x| x.powf(*r)),
            Node::Exp(a) => one(&vals, *a, |x| x.exp()),
            Node::Ln(a) => one(&vals, *a, f64::ln),
            Node::Sqrt(a) => one(&vals, *a, f64::sqrt),
            Node::Sin(a) => one(&vals, *a, f64::sin),
            Node::Cos(a) => one(&vals, *a, f64::cos),
            Node::Sinh(a) => one(&vals, *a, f64::sinh),
            Node::Cosh(a) => one(&vals, *a, f64::cosh),
            Node::Tanh(a) => one(&vals, *a, f64::tanh),
            Node::Atan(a) => one(&vals, *a, f64::atan),
            Node::Atan2(a, b) => two(&vals, *a, *b, f64::atan2),
        };
        vals.push(v);
    }
    let v = vals[p.root() as usize]?;
    v.is_finite().then_some(v)
}

fn one(vals: &[Option<f64>], a: NodeId, f: impl Fn(f64) -> f64) -> Option<f64> {
    vals[a as usize].map(f)
}

fn two(vals: &[Option<f64>], a: NodeId, b: NodeId, f: impl Fn(f64, f64) -> f64) -> Option<f64> {
    match (vals[a as usize], vals[b as usize]) {
        (Some(x), Some(y)) => Some(f(x, y)),
        _ => None,
    }
}
