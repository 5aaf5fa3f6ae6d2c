//! Recursive-descent parser for the expression and formula DSL.
//!
//! ```text
//! formula := disj ('->' formula)?
//! disj    := conj (('\/' | 'or') conj)*
//! conj    := unary (('/\' | 'and') unary)*
//! unary   := ('not' | '!') unary | quant | '(' formula ')' | 'true' | 'false' | cmp
//! quant   := ('forall' | 'exists') binder (',' binder)* '.' formula
//! binder  := ident 'in' '[' term ',' term ']'
//! cmp     := term relop term (relop term)*
//! ```

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use super::{name, Formula, Func, Name, Rational, Term};
use crate::ode::OdeSystem;

/// ODE systems that `flow(...)` terms may reference.
pub type Registry = BTreeMap<Name, Arc<OdeSystem>>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

impl core::error::Error for ParseError {}

#[derive(Clone, Debug, PartialEq)]
pub enum Token {
    Ident(String),
    Number(Rational),
    Punct(&'static str),
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Ident(s) => write!(f, "`{}`", s),
            Token::Number(n) => write!(f, "number {}", n),
            Token::Punct(p) => write!(f, "`{}`", p),
        }
    }
}

const PUNCTS: &[&str] = &[
    "->", ":=", ">=", "<=", "/\\", "\\/", "+", "-", "*", "/", "^", "(", ")", "[", "]", "{", "}",
    ",", ".", ";", "=", ">", "<", "!",
];

fn lex(src: &str) -> Result<Vec<(Token, usize, usize)>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (start_line, start_col) = (line, col);
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            let value = parse_decimal(&text).ok_or(ParseError {
                line: start_line,
                column: start_col,
                message: format!("number `{}` out of range", text),
            })?;
            out.push((Token::Number(value), start_line, start_col));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            while i < chars.len() && chars[i] == '\'' {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            out.push((Token::Ident(text), start_line, start_col));
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match PUNCTS.iter().find(|p| rest.starts_with(**p)) {
            Some(p) => {
                i += p.len();
                col += p.len();
                out.push((Token::Punct(p), start_line, start_col));
            }
            None => {
                return Err(ParseError {
                    line,
                    column: col,
                    message: format!("unexpected character `{}`", c),
                })
            }
        }
    }
    Ok(out)
}

fn parse_decimal(text: &str) -> Option<Rational> {
    let (int_part, frac_part) = match text.split_once('.') {
        Some((a, b)) => (a, b),
        None => (text, ""),
    };
    let digits = [int_part, frac_part].concat();
    let numer: i128 = digits.parse().ok()?;
    let denom = 10i128.checked_pow(frac_part.len() as u32)?;
    Some(Rational::new(numer, denom))
}

/// Token-stream parser. Public so that document formats built on the same
/// grammar can drive it block by block.
pub struct Parser<'r> {
    tokens: Vec<(Token, usize, usize)>,
    pos: usize,
    end: (usize, usize),
    registry: &'r Registry,
}

impl<'r> Parser<'r> {
    pub fn new(src: &str, registry: &'r Registry) -> Result<Self, ParseError> {
        let tokens = lex(src)?;
        let lines = src.split('\n').count();
        let last_len = src
            .rsplit('\n')
            .next()
            .map(|l| l.chars().count())
            .unwrap_or(0);
        Ok(Parser {
            tokens,
            pos: 0,
            end: (lines, last_len + 1),
            registry,
        })
    }

    pub fn set_registry(&mut self, registry: &'r Registry) {
        self.registry = registry;
    }

    /// Index of the next token.
    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn seek(&mut self, pos: usize) {
        self.pos = pos.min(self.tokens.len());
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    pub fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|t| &t.0)
    }

    fn peek_at(&self, k: usize) -> Option<&Token> {
        self.tokens.get(self.pos + k).map(|t| &t.0)
    }

    pub fn error(&self, message: impl Into<String>) -> ParseError {
        let (line, column) = self
            .tokens
            .get(self.pos)
            .map(|t| (t.1, t.2))
            .unwrap_or(self.end);
        ParseError {
            line,
            column,
            message: message.into(),
        }
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        match self.peek() {
            Some(t) => self.error(format!("expected {}, found {}", wanted, t)),
            None => self.error(format!("expected {}, found end of input", wanted)),
        }
    }

    pub fn eat_punct(&mut self, p: &str) -> bool {
        if matches!(self.peek(), Some(Token::Punct(q)) if *q == p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn expect_punct(&mut self, p: &str) -> Result<(), ParseError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{}`", p)))
        }
    }

    pub fn peek_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Token::Ident(s)) if s == kw)
    }

    pub fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.peek_keyword(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn expect_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{}`", kw)))
        }
    }

    pub fn expect_ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(Token::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    pub fn expect_number(&mut self) -> Result<Rational, ParseError> {
        let neg = self.eat_punct("-");
        match self.peek() {
            Some(Token::Number(n)) => {
                let n = *n;
                self.pos += 1;
                Ok(if neg { -n } else { n })
            }
            _ => Err(self.unexpected("number")),
        }
    }

    pub fn expect_integer(&mut self) -> Result<i64, ParseError> {
        let n = self.expect_number()?;
        if !n.is_integer() || *n.numer() > i64::MAX as i128 || *n.numer() < i64::MIN as i128 {
            return Err(self.error("expected an integer"));
        }
        Ok(*n.numer() as i64)
    }

    pub fn parse_formula(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.parse_disj()?;
        if self.eat_punct("->") {
            let rhs = self.parse_formula()?;
            Ok(Formula::implies(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn parse_disj(&mut self) -> Result<Formula, ParseError> {
        let mut parts = alloc::vec![self.parse_conj()?];
        while self.eat_punct("\\/") || self.eat_keyword("or") {
            parts.push(self.parse_conj()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Formula::or(parts)
        })
    }

    fn parse_conj(&mut self) -> Result<Formula, ParseError> {
        let mut parts = alloc::vec![self.parse_unary()?];
        while self.eat_punct("/\\") || self.eat_keyword("and") {
            parts.push(self.parse_unary()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Formula::and(parts)
        })
    }

    fn parse_unary(&mut self) -> Result<Formula, ParseError> {
        if self.eat_keyword("not") || self.eat_punct("!") {
            return Ok(self.parse_unary()?.negate());
        }
        if self.eat_keyword("true") {
            return Ok(Formula::tt());
        }
        if self.eat_keyword("false") {
            return Ok(Formula::ff());
        }
        if self.peek_keyword("forall") || self.peek_keyword("exists") {
            return self.parse_quantifier();
        }
        if matches!(self.peek(), Some(Token::Punct("("))) {
            let save = self.pos;
            self.pos += 1;
            if let Ok(f) = self.parse_formula() {
                if self.eat_punct(")") && !self.next_continues_term() {
                    return Ok(f);
                }
            }
            self.pos = save;
        }
        self.parse_comparison()
    }

    fn next_continues_term(&self) -> bool {
        matches!(
            self.peek(),
            Some(Token::Punct(
                "+" | "-" | "*" | "/" | "^" | ">" | ">=" | "<" | "<=" | "="
            ))
        )
    }

    fn parse_quantifier(&mut self) -> Result<Formula, ParseError> {
        let universal = self.eat_keyword("forall");
        if !universal {
            self.expect_keyword("exists")?;
        }
        let mut binders = Vec::new();
        loop {
            let var = self.expect_ident()?;
            if !self.eat_keyword("in") {
                return Err(self.error(format!(
                    "unbounded quantifier over `{}`: expected `in [lo, hi]`",
                    var
                )));
            }
            self.expect_punct("[")?;
            let lo = self.parse_term()?;
            self.expect_punct(",")?;
            let hi = self.parse_term()?;
            self.expect_punct("]")?;
            binders.push((var, lo, hi));
            if !self.eat_punct(",") {
                break;
            }
        }
        self.expect_punct(".")?;
        let mut body = self.parse_formula()?;
        for (var, lo, hi) in binders.into_iter().rev() {
            body = if universal {
                Formula::forall(&var, lo, hi, body)
            } else {
                Formula::exists(&var, lo, hi, body)
            };
        }
        Ok(body)
    }

    fn parse_comparison(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.parse_term()?;
        let mut parts = Vec::new();
        loop {
            let rel = match self.peek() {
                Some(Token::Punct(p @ (">" | ">=" | "<" | "<=" | "="))) => *p,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.parse_term()?;
            parts.push(match rel {
                ">" => Formula::greater(lhs, rhs.clone()),
                ">=" => Formula::greater_eq(lhs, rhs.clone()),
                "<" => Formula::less(lhs, rhs.clone()),
                "<=" => Formula::less_eq(lhs, rhs.clone()),
                _ => Formula::equal(lhs, rhs.clone()),
            });
            lhs = rhs;
        }
        match parts.len() {
            0 => Err(self.unexpected("relation (`>`, `>=`, `<`, `<=`, `=`)")),
            1 => Ok(parts.pop().unwrap()),
            _ => Ok(Formula::and(parts)),
        }
    }

    pub fn parse_term(&mut self) -> Result<Term, ParseError> {
        let mut acc = self.parse_product()?;
        loop {
            if self.eat_punct("+") {
                acc = Term::add(acc, self.parse_product()?);
            } else if self.eat_punct("-") {
                acc = Term::sub(acc, self.parse_product()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn parse_product(&mut self) -> Result<Term, ParseError> {
        let mut acc = self.parse_signed()?;
        loop {
            if self.eat_punct("*") {
                acc = Term::mul(acc, self.parse_signed()?);
            } else if self.eat_punct("/") {
                acc = Term::div(acc, self.parse_signed()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn parse_signed(&mut self) -> Result<Term, ParseError> {
        if self.eat_punct("-") {
            return Ok(Term::neg(self.parse_signed()?));
        }
        self.parse_power()
    }

    fn parse_power(&mut self) -> Result<Term, ParseError> {
        let base = self.parse_atom()?;
        if !self.eat_punct("^") {
            return Ok(base);
        }
        let exp = if self.eat_punct("(") {
            let e = self.expect_integer()?;
            self.expect_punct(")")?;
            e
        } else {
            self.expect_integer()?
        };
        let exp = i32::try_from(exp).map_err(|_| self.error("exponent out of range"))?;
        Ok(Term::pow(base, exp))
    }

    fn parse_atom(&mut self) -> Result<Term, ParseError> {
        match self.peek().cloned() {
            Some(Token::Number(n)) => {
                self.pos += 1;
                Ok(Term::Const(n))
            }
            Some(Token::Punct("(")) => {
                self.pos += 1;
                let t = self.parse_term()?;
                self.expect_punct(")")?;
                Ok(t)
            }
            Some(Token::Ident(id)) => {
                if matches!(self.peek_at(1), Some(Token::Punct("("))) {
                    self.parse_call(&id)
                } else {
                    self.pos += 1;
                    Ok(Term::Var(name(&id)))
                }
            }
            _ => Err(self.unexpected("term")),
        }
    }

    fn parse_call(&mut self, id: &str) -> Result<Term, ParseError> {
        if id == "flow" {
            return self.parse_flow();
        }
        let func = match Func::from_name(id) {
            Some(f) => f,
            None => return Err(self.error(format!("unknown function symbol `{}`", id))),
        };
        self.pos += 2;
        let mut args = Vec::new();
        if !self.eat_punct(")") {
            loop {
                args.push(self.parse_term()?);
                if self.eat_punct(")") {
                    break;
                }
                self.expect_punct(",")?;
            }
        }
        let ok = match func.arity() {
            Some(n) => args.len() == n,
            None => !args.is_empty(),
        };
        if !ok {
            return Err(self.error(format!("`{}` applied to {} argument(s)", id, args.len())));
        }
        Ok(Term::Apply(func, args))
    }

    /// `flow(system, component, time, init_0, ..., init_{n-1})`
    fn parse_flow(&mut self) -> Result<Term, ParseError> {
        self.pos += 2;
        let sys_name = self.expect_ident()?;
        let system = match self.registry.get(sys_name.as_str()) {
            Some(s) => s.clone(),
            None => return Err(self.error(format!("unregistered ODE system `{}`", sys_name))),
        };
        self.expect_punct(",")?;
        let component = self.expect_integer()?;
        if component < 0 || component as usize >= system.dim() {
            return Err(self.error(format!(
                "component {} out of range for `{}`",
                component, sys_name
            )));
        }
        self.expect_punct(",")?;
        let time = self.parse_term()?;
        let mut init = Vec::new();
        while self.eat_punct(",") {
            init.push(self.parse_term()?);
        }
        self.expect_punct(")")?;
        if init.len() != system.dim() {
            return Err(self.error(format!(
                "`{}` expects {} initial value(s), got {}",
                sys_name,
                system.dim(),
                init.len()
            )));
        }
        Ok(Term::flow(system, init, time, component as usize))
    }
}

/// Parses a complete formula.
pub fn parse_formula(text: &str, registry: &Registry) -> Result<Formula, ParseError> {
    let mut p = Parser::new(text, registry)?;
    let f = p.parse_formula()?;
    if !p.at_end() {
        return Err(p.unexpected("end of input"));
    }
    Ok(f)
}

pub fn parse_term(text: &str, registry: &Registry) -> Result<Term, ParseError> {
    let mut p = Parser::new(text, registry)?;
    let t = p.parse_term()?;
    if !p.at_end() {
        return Err(p.unexpected("end of input"));
    }
    Ok(t)
}

impl ParseError {
    pub fn new(line: usize, column: usize, message: impl ToString) -> Self {
        ParseError {
            line,
            column,
            message: message.to_string(),
        }
    }
}
