//! Concrete syntax: lexer, parsers and printers for inequalities, first-order
//! formulas and model files.

use std::collections::BTreeMap;
use std::fmt;

use serde::Deserialize;
use thiserror::Error;

use crate::foterm::{Binder, Fo, FoAtom, KrachtFormula, Quant, Rel, Restrictor, Role, Shape};
use crate::modterm::{Ineq, PhKind, Term};
use crate::oracle::{FiniteSpdAlgebra, ModelError};
use crate::signature::{Conn, Modal, Signature};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}:{}: expected {}, found {found}", span.line, span.column, expected.join(" or "))]
pub struct SyntaxError {
    pub span: SourceSpan,
    pub expected: Vec<String>,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Modal(Modal, usize),
    Rel(RelTok, usize),
    Num(u32),
    Sym(&'static str),
    Eof,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RelTok {
    Prec,
    Succ,
    NC,
    NCi,
    ND,
    NDi,
    C,
    D,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Modal(m, i) => write!(f, "`{}{}`", m.ascii(), i),
            Tok::Rel(r, i) => write!(f, "`{r:?}{i}`"),
            Tok::Num(n) => write!(f, "`{n}`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

const SYMBOLS: [&str; 18] =
    ["/\\", "\\/", "->", "-<", "<=", ">=", "=>", "~", "(", ")", ".", ",", ":", "&", "?", "[", "]", "="];

fn split_index(word: &str) -> (&str, Option<usize>) {
    let cut = word.trim_end_matches(|c: char| c.is_ascii_digit());
    if cut.len() == word.len() || cut.is_empty() {
        (word, None)
    } else {
        (cut, word[cut.len()..].parse().ok())
    }
}

fn keyword(word: &str) -> Option<Tok> {
    let (stem, idx) = split_index(word);
    let i = idx.unwrap_or(0);
    let modal = match stem {
        "dia" => Some(Modal::Dia),
        "box" => Some(Modal::Box),
        "rhd" => Some(Modal::Rhd),
        "brhd" => Some(Modal::Brhd),
        "lhd" => Some(Modal::Lhd),
        "blhd" => Some(Modal::Blhd),
        _ => None,
    };
    if let Some(m) = modal {
        return Some(Tok::Modal(m, i));
    }
    let rel = match stem {
        "prec" => RelTok::Prec,
        "succ" => RelTok::Succ,
        "nC" => RelTok::NC,
        "nCi" => RelTok::NCi,
        "nD" => RelTok::ND,
        "nDi" => RelTok::NDi,
        "C" => RelTok::C,
        "D" => RelTok::D,
        _ => return None,
    };
    Some(Tok::Rel(rel, i))
}

fn lex(text: &str) -> Result<Vec<(Tok, SourceSpan)>, SyntaxError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let (mut pos, mut line, mut col) = (0usize, 1usize, 1usize);
    let span = |s: usize, e: usize, l: usize, c: usize| SourceSpan { start: s, end: e, line: l, column: c };
    while pos < bytes.len() {
        let ch = bytes[pos] as char;
        if ch == '\n' {
            pos += 1;
            line += 1;
            col = 1;
            continue;
        }
        if ch.is_whitespace() {
            pos += 1;
            col += 1;
            continue;
        }
        if ch == '#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        if ch.is_ascii_alphabetic() || ch == '_' {
            while pos < bytes.len() && (bytes[pos].is_ascii_alphanumeric() || bytes[pos] == b'_' || bytes[pos] == b'\'')
            {
                pos += 1;
            }
            let word = &text[start..pos];
            let tok = keyword(word).unwrap_or_else(|| Tok::Ident(word.to_string()));
            out.push((tok, span(start, pos, line, col)));
            col += pos - start;
            continue;
        }
        if ch.is_ascii_digit() {
            while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                pos += 1;
            }
            let n = text[start..pos].parse().map_err(|_| SyntaxError {
                span: span(start, pos, line, col),
                expected: vec!["number".into()],
                found: text[start..pos].to_string(),
            })?;
            out.push((Tok::Num(n), span(start, pos, line, col)));
            col += pos - start;
            continue;
        }
        match SYMBOLS.iter().find(|s| text[pos..].starts_with(**s)) {
            Some(s) => {
                pos += s.len();
                out.push((Tok::Sym(s), span(start, pos, line, col)));
                col += s.len();
            }
            None => {
                let found: String = text[pos..].chars().take(1).collect();
                return Err(SyntaxError {
                    span: span(start, start + found.len(), line, col),
                    expected: vec!["token".into()],
                    found,
                });
            }
        }
    }
    out.push((Tok::Eof, span(pos, pos, line, col)));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, SourceSpan)>,
    pos: usize,
}

type PResult<T> = Result<T, SyntaxError>;

impl Parser {
    fn new(text: &str) -> PResult<Parser> {
        Ok(Parser { toks: lex(text)?, pos: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, expected: &[&str]) -> PResult<T> {
        Err(SyntaxError {
            span: self.toks[self.pos].1,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().to_string(),
        })
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> PResult<()> {
        if self.eat(s) {
            Ok(())
        } else {
            self.err(&[&format!("`{s}`")])
        }
    }

    fn expect_eof(&self) -> PResult<()> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            self.err(&["end of input"])
        }
    }

    fn term(&mut self) -> PResult<Term> {
        let lhs = self.disj()?;
        for (sym, name) in [("->", "->"), ("-<", "-<")] {
            if self.eat(sym) {
                let rhs = self.term()?;
                return Ok(Term::clopen(name, vec![lhs, rhs]));
            }
        }
        Ok(lhs)
    }

    fn disj(&mut self) -> PResult<Term> {
        let lhs = self.conj()?;
        if self.eat("\\/") {
            let rhs = self.disj()?;
            return Ok(Term::join(lhs, rhs));
        }
        Ok(lhs)
    }

    fn conj(&mut self) -> PResult<Term> {
        let lhs = self.unary()?;
        if self.eat("/\\") {
            let rhs = self.conj()?;
            return Ok(Term::meet(lhs, rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Term> {
        match self.peek().clone() {
            Tok::Modal(m, i) => {
                self.bump();
                Ok(Term::App(Conn::Modal(m, i), vec![self.unary()?]))
            }
            Tok::Sym("~") => {
                self.bump();
                Ok(Term::clopen("~", vec![self.unary()?]))
            }
            Tok::Sym("(") => {
                self.bump();
                let t = self.term()?;
                self.expect(")")?;
                Ok(t)
            }
            Tok::Sym("?") => {
                self.bump();
                let kind = match self.bump() {
                    Tok::Ident(s) if s.len() > 1 => s,
                    _ => {
                        self.pos -= 1;
                        return self.err(&["placeholder name such as x1"]);
                    }
                };
                let (stem, idx) = split_index(&kind);
                let k = match stem {
                    "x" => PhKind::X,
                    "y" => PhKind::Y,
                    "t" => PhKind::T,
                    _ => {
                        self.pos -= 1;
                        return self.err(&["placeholder name such as x1"]);
                    }
                };
                Ok(Term::Ph(k, idx.unwrap_or(0) as u32))
            }
            Tok::Ident(name) => {
                self.bump();
                match name.as_str() {
                    "top" => return Ok(Term::Top),
                    "bot" => return Ok(Term::Bot),
                    _ => {}
                }
                if self.is_sym("(") {
                    self.bump();
                    let mut args = vec![self.term()?];
                    while self.eat(",") {
                        args.push(self.term()?);
                    }
                    self.expect(")")?;
                    return Ok(Term::App(Conn::clopen(&name), args));
                }
                Ok(Term::Var(name))
            }
            _ => self.err(&["term"]),
        }
    }

    fn ineq(&mut self) -> PResult<Ineq> {
        let lhs = self.term()?;
        if self.eat("<=") {
            Ok(Ineq::new(lhs, self.term()?))
        } else if self.eat(">=") {
            let rhs = self.term()?;
            Ok(Ineq::new(rhs, lhs))
        } else {
            self.err(&["`<=`"])
        }
    }

    // first-order layer

    fn binders(&mut self) -> PResult<Vec<Binder>> {
        let mut out = Vec::new();
        loop {
            let name = match self.peek().clone() {
                Tok::Ident(n) if n != "top" && n != "bot" => n,
                _ => break,
            };
            self.bump();
            let role = if self.eat(":") {
                match self.bump() {
                    Tok::Ident(r) => match Role::parse(&r) {
                        Some(role) => Some(role),
                        None => {
                            self.pos -= 1;
                            return self.err(&["role v, a, b, c or d"]);
                        }
                    },
                    _ => {
                        self.pos -= 1;
                        return self.err(&["role v, a, b, c or d"]);
                    }
                }
            } else {
                None
            };
            out.push(Binder { name, role });
            self.eat(",");
        }
        if out.is_empty() {
            return self.err(&["variable"]);
        }
        Ok(out)
    }

    fn shape(&mut self) -> PResult<Shape> {
        let bracket_conn = |p: &mut Parser| -> PResult<Option<Conn>> {
            if !p.eat("[") {
                return Ok(None);
            }
            let c = match p.bump() {
                Tok::Sym("->") => Conn::clopen("->"),
                Tok::Sym("-<") => Conn::clopen("-<"),
                Tok::Sym("~") => Conn::clopen("~"),
                Tok::Sym("/\\") => Conn::Meet,
                Tok::Sym("\\/") => Conn::Join,
                Tok::Ident(n) => Conn::clopen(&n),
                _ => {
                    p.pos -= 1;
                    return p.err(&["connective"]);
                }
            };
            p.expect("]")?;
            Ok(Some(c))
        };
        match self.peek().clone() {
            Tok::Sym("<=") => {
                self.bump();
                Ok(match bracket_conn(self)? {
                    Some(c) => Shape::LeqF(c),
                    None => Shape::Leq,
                })
            }
            Tok::Sym(">=") => {
                self.bump();
                Ok(match bracket_conn(self)? {
                    Some(c) => Shape::GeqG(c),
                    None => Shape::Geq,
                })
            }
            Tok::Rel(r, i) => {
                self.bump();
                Ok(match r {
                    RelTok::Prec => Shape::Prec(i),
                    RelTok::Succ => Shape::Succ(i),
                    RelTok::NC => Shape::NC(i),
                    RelTok::NCi => Shape::NCInv(i),
                    RelTok::ND => Shape::ND(i),
                    RelTok::NDi => Shape::NDInv(i),
                    _ => {
                        self.pos -= 1;
                        return self.err(&["restrictor relation"]);
                    }
                })
            }
            _ => self.err(&["restrictor relation"]),
        }
    }

    fn quant_head(&mut self) -> Option<bool> {
        match self.peek() {
            Tok::Ident(s) if s == "A" => Some(true),
            Tok::Ident(s) if s == "E" => Some(false),
            _ => None,
        }
    }

    /// `(A xs R y)` opens a restricted quantifier; `(A xs. φ)` is a parenthesized formula.
    fn restricted_ahead(&mut self) -> bool {
        if !(self.is_sym("(") && matches!(self.peek_at(1), Tok::Ident(s) if s == "A" || s == "E")) {
            return false;
        }
        let save = self.pos;
        self.pos += 2;
        let ok = self.binders().is_ok() && !self.is_sym(".");
        self.pos = save;
        ok
    }

    fn fo(&mut self) -> PResult<Fo> {
        if let Some(universal) = self.quant_head() {
            self.bump();
            let binders = self.binders()?;
            self.expect(".")?;
            let body = self.fo()?;
            let q = Quant { binders, restrictor: None };
            return Ok(if universal { Fo::Forall(q, Box::new(body)) } else { Fo::Exists(q, Box::new(body)) });
        }
        if self.restricted_ahead() {
            self.bump();
            let universal = self.quant_head() == Some(true);
            self.bump();
            let binders = self.binders()?;
            let shape = self.shape()?;
            let var = match self.bump() {
                Tok::Ident(v) => v,
                _ => {
                    self.pos -= 1;
                    return self.err(&["restricting variable"]);
                }
            };
            self.expect(")")?;
            self.eat(".");
            let body = self.fo()?;
            let q = Quant { binders, restrictor: Some(Restrictor { shape, var }) };
            return Ok(if universal { Fo::Forall(q, Box::new(body)) } else { Fo::Exists(q, Box::new(body)) });
        }
        let lhs = self.fo_conj()?;
        if self.eat("=>") {
            let rhs = self.fo()?;
            return Ok(Fo::Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn fo_conj(&mut self) -> PResult<Fo> {
        let mut parts = vec![self.fo_unit()?];
        while self.eat("&") {
            parts.push(self.fo_unit()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Fo::And(parts) })
    }

    fn fo_unit(&mut self) -> PResult<Fo> {
        if self.quant_head().is_some() || self.restricted_ahead() {
            return self.fo();
        }
        let save = self.pos;
        match self.atom() {
            Ok(a) => Ok(Fo::Atom(a)),
            Err(atom_err) => {
                self.pos = save;
                if self.eat("(") {
                    if self.is_sym(")") {
                        self.bump();
                        return Ok(Fo::And(Vec::new()));
                    }
                    let f = self.fo()?;
                    self.expect(")")?;
                    Ok(f)
                } else {
                    Err(atom_err)
                }
            }
        }
    }

    fn atom(&mut self) -> PResult<FoAtom> {
        let lhs = self.term()?;
        let (rel, flip) = match self.peek().clone() {
            Tok::Sym("<=") => (Rel::Leq, false),
            Tok::Sym(">=") => (Rel::Leq, true),
            Tok::Rel(r, i) => match r {
                RelTok::Prec => (Rel::Prec(i), false),
                RelTok::Succ => (Rel::Prec(i), true),
                RelTok::NC => (Rel::NC(i), false),
                RelTok::NCi => (Rel::NC(i), true),
                RelTok::ND => (Rel::ND(i), false),
                RelTok::NDi => (Rel::ND(i), true),
                RelTok::C => (Rel::C(i), false),
                RelTok::D => (Rel::D(i), false),
            },
            _ => return self.err(&["relation"]),
        };
        self.bump();
        let rhs = self.term()?;
        Ok(if flip { FoAtom::new(rhs, rel, lhs) } else { FoAtom::new(lhs, rel, rhs) })
    }
}

pub fn parse_term(text: &str) -> Result<Term, SyntaxError> {
    let mut p = Parser::new(text)?;
    let t = p.term()?;
    p.expect_eof()?;
    Ok(t)
}

pub fn parse_mod(text: &str) -> Result<Ineq, SyntaxError> {
    let mut p = Parser::new(text)?;
    let i = p.ineq()?;
    p.expect_eof()?;
    Ok(i)
}

/// Parses several inequalities separated by `&`, `,` or newlines.
pub fn parse_mod_list(text: &str) -> Result<Vec<Ineq>, SyntaxError> {
    let mut p = Parser::new(text)?;
    let mut out = Vec::new();
    while *p.peek() != Tok::Eof {
        out.push(p.ineq()?);
        while p.eat("&") || p.eat(",") {}
    }
    Ok(out)
}

pub fn parse_fo(text: &str) -> Result<Fo, SyntaxError> {
    let mut p = Parser::new(text)?;
    let f = p.fo()?;
    p.expect_eof()?;
    Ok(f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Ascii,
    Unicode,
    Latex,
}

fn prec(t: &Term) -> u8 {
    match t {
        Term::App(Conn::Meet, _) => 3,
        Term::App(Conn::Join, _) => 2,
        Term::App(Conn::Clopen(n), args) if args.len() == 2 && (&**n == "->" || &**n == "-<") => 1,
        _ => 4,
    }
}

fn sym(style: Style, ascii: &'static str, uni: &'static str, latex: &'static str) -> &'static str {
    match style {
        Style::Ascii => ascii,
        Style::Unicode => uni,
        Style::Latex => latex,
    }
}

fn write_term(t: &Term, style: Style, out: &mut String) {
    match t {
        Term::Var(v) => out.push_str(v),
        Term::Top => out.push_str(sym(style, "top", "⊤", "\\top")),
        Term::Bot => out.push_str(sym(style, "bot", "⊥", "\\bot")),
        Term::Ph(k, i) => {
            let c = match k {
                PhKind::X => 'x',
                PhKind::Y => 'y',
                PhKind::T => 't',
            };
            match style {
                Style::Ascii => out.push_str(&format!("?{c}{i}")),
                Style::Unicode => out.push_str(&format!("{c}{i}")),
                Style::Latex => out.push_str(&format!("{c}_{{{i}}}")),
            }
        }
        Term::App(c, args) => {
            let p = prec(t);
            let child = |a: &Term, min: u8, out: &mut String| {
                if prec(a) < min {
                    out.push('(');
                    write_term(a, style, out);
                    out.push(')');
                } else {
                    write_term(a, style, out);
                }
            };
            let binop = |op: &str, left_min: u8, right_min: u8, out: &mut String| {
                child(&args[0], left_min, out);
                out.push(' ');
                out.push_str(op);
                out.push(' ');
                child(&args[1], right_min, out);
            };
            match c {
                Conn::Meet => binop(sym(style, "/\\", "∧", "\\wedge"), 4, 3, out),
                Conn::Join => binop(sym(style, "\\/", "∨", "\\vee"), 3, 2, out),
                Conn::Clopen(n) if p == 1 => {
                    let op = if &**n == "->" {
                        sym(style, "->", "→", "\\rightarrow")
                    } else {
                        sym(style, "-<", "-<", "\\mathbin{-\\!\\!<}")
                    };
                    binop(op, 2, 1, out)
                }
                Conn::Modal(m, i) => {
                    let head = match style {
                        Style::Ascii => {
                            if *i == 0 {
                                m.ascii().to_string()
                            } else {
                                format!("{}{}", m.ascii(), i)
                            }
                        }
                        Style::Unicode => {
                            if *i == 0 {
                                m.unicode().to_string()
                            } else {
                                format!("{}{}", m.unicode(), i)
                            }
                        }
                        Style::Latex => {
                            if *i == 0 {
                                m.latex().to_string()
                            } else {
                                format!("{}_{{{}}}", m.latex(), i)
                            }
                        }
                    };
                    unary(&head, &args[0], style, out);
                }
                Conn::Clopen(n) if &**n == "~" && args.len() == 1 => {
                    unary(sym(style, "~", "¬", "\\neg"), &args[0], style, out);
                }
                Conn::Clopen(n) => {
                    out.push_str(n);
                    out.push('(');
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            out.push_str(", ");
                        }
                        write_term(a, style, out);
                    }
                    out.push(')');
                }
            }
        }
    }
}

fn unary(head: &str, arg: &Term, style: Style, out: &mut String) {
    out.push_str(head);
    let mut inner = String::new();
    if prec(arg) < 4 {
        inner.push('(');
        write_term(arg, style, &mut inner);
        inner.push(')');
    } else {
        write_term(arg, style, &mut inner);
    }
    let needs_space = match style {
        Style::Ascii => head.ends_with(|c: char| c.is_ascii_alphanumeric()),
        Style::Unicode => false,
        Style::Latex => !(inner.starts_with('\\') || inner.starts_with('{') || inner.starts_with('(')),
    };
    if needs_space {
        out.push(' ');
    }
    out.push_str(&inner);
}

pub fn print_term(t: &Term, style: Style) -> String {
    let mut s = String::new();
    write_term(t, style, &mut s);
    s
}

pub fn print_mod(i: &Ineq, style: Style) -> String {
    format!("{} {} {}", print_term(&i.lhs, style), sym(style, "<=", "≤", "\\leq"), print_term(&i.rhs, style))
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_term(self, Style::Unicode))
    }
}

impl fmt::Display for Ineq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_mod(self, Style::Unicode))
    }
}

fn rel_text(rel: &Rel, style: Style) -> String {
    let (a, u, l, i) = match rel {
        Rel::Leq => return sym(style, "<=", "≤", "\\leq").to_string(),
        Rel::Prec(i) => ("prec", "≺", "\\prec", *i),
        Rel::NC(i) => ("nC", "C̸", "\\cancel{\\mathcal{C}}", *i),
        Rel::ND(i) => ("nD", "D̸", "\\cancel{\\mathcal{D}}", *i),
        Rel::C(i) => ("C", "C", "\\mathcal{C}", *i),
        Rel::D(i) => ("D", "D", "\\mathcal{D}", *i),
    };
    match (style, i) {
        (_, 0) => sym(style, a, u, l).to_string(),
        (Style::Ascii, i) => format!("{a}{i}"),
        (Style::Unicode, i) => format!("{u}{i}"),
        (Style::Latex, i) => format!("{l}_{{{i}}}"),
    }
}

pub fn print_atom(a: &FoAtom, style: Style) -> String {
    let side = |t: &Term| {
        let s = print_term(t, style);
        if t.is_leaf() || prec(t) == 4 {
            s
        } else {
            format!("({s})")
        }
    };
    format!("{} {} {}", side(&a.lhs), rel_text(&a.rel, style), side(&a.rhs))
}

fn shape_text(shape: &Shape, style: Style) -> String {
    let idx = |base: (&'static str, &'static str, &'static str), i: usize| match (style, i) {
        (_, 0) => sym(style, base.0, base.1, base.2).to_string(),
        (Style::Ascii, i) => format!("{}{i}", base.0),
        (Style::Unicode, i) => format!("{}{i}", base.1),
        (Style::Latex, i) => format!("{}_{{{i}}}", base.2),
    };
    match shape {
        Shape::Prec(i) => idx(("prec", "≺", "\\prec"), *i),
        Shape::Succ(i) => idx(("succ", "≻", "\\succ"), *i),
        Shape::NC(i) => idx(("nC", "C̸", "\\cancel{\\mathcal{C}}"), *i),
        Shape::NCInv(i) => idx(("nCi", "C̸⁻¹", "\\cancel{\\mathcal{C}}^{-1}"), *i),
        Shape::ND(i) => idx(("nD", "D̸", "\\cancel{\\mathcal{D}}"), *i),
        Shape::NDInv(i) => idx(("nDi", "D̸⁻¹", "\\cancel{\\mathcal{D}}^{-1}"), *i),
        Shape::Leq => sym(style, "<=", "≤", "\\leq").to_string(),
        Shape::Geq => sym(style, ">=", "≥", "\\geq").to_string(),
        Shape::LeqF(c) => format!("{}[{}]", sym(style, "<=", "≤", "\\leq"), conn_text(c, style)),
        Shape::GeqG(c) => format!("{}[{}]", sym(style, ">=", "≥", "\\geq"), conn_text(c, style)),
    }
}

fn conn_text(c: &Conn, style: Style) -> String {
    match c {
        Conn::Meet => sym(style, "/\\", "∧", "\\wedge").to_string(),
        Conn::Join => sym(style, "\\/", "∨", "\\vee").to_string(),
        Conn::Clopen(n) => match (&**n, style) {
            ("->", Style::Unicode) => "→".into(),
            ("->", Style::Latex) => "\\rightarrow".into(),
            ("~", Style::Unicode) => "¬".into(),
            ("~", Style::Latex) => "\\neg".into(),
            (n, _) => n.to_string(),
        },
        Conn::Modal(m, _) => m.ascii().to_string(),
    }
}

fn binder_text(b: &Binder, style: Style, roles: bool) -> String {
    match (&b.role, roles, style) {
        (Some(r), true, Style::Ascii) => format!("{}:{}", b.name, r.letter()),
        _ => b.name.clone(),
    }
}

fn quant_text(q: &Quant, universal: bool, style: Style, roles: bool) -> String {
    let names: Vec<String> = q.binders.iter().map(|b| binder_text(b, style, roles)).collect();
    match (&q.restrictor, style) {
        (None, Style::Ascii) => format!("{} {}.", if universal { "A" } else { "E" }, names.join(" ")),
        (None, Style::Unicode) => names.iter().map(|n| format!("{}{n}", if universal { "∀" } else { "∃" })).collect(),
        (None, Style::Latex) => {
            names.iter().map(|n| format!("{}{n}", if universal { "\\forall " } else { "\\exists " })).collect()
        }
        (Some(r), Style::Ascii) => {
            format!(
                "({} {} {} {})",
                if universal { "A" } else { "E" },
                names.join(" "),
                shape_text(&r.shape, style),
                r.var
            )
        }
        (Some(r), Style::Unicode) => {
            format!(
                "({}{} {} {})",
                if universal { "∀" } else { "∃" },
                names.join(","),
                shape_text(&r.shape, style),
                r.var
            )
        }
        (Some(r), Style::Latex) => format!(
            "({}{} {} {})",
            if universal { "\\forall " } else { "\\exists " },
            names.join(","),
            shape_text(&r.shape, style),
            r.var
        ),
    }
}

fn write_fo(f: &Fo, style: Style, roles: bool, out: &mut String) {
    let and = sym(style, "&", "&", "\\ \\&\\ ");
    let imp = sym(style, "=>", "⇒", "\\Rightarrow");
    match f {
        Fo::Atom(a) => out.push_str(&print_atom(a, style)),
        Fo::And(parts) if parts.is_empty() => out.push_str("()"),
        Fo::And(parts) => {
            for (i, p) in parts.iter().enumerate() {
                if i > 0 {
                    out.push_str(&format!(" {} ", and.trim()));
                }
                match p {
                    Fo::Atom(_) => write_fo(p, style, roles, out),
                    _ => {
                        out.push('(');
                        write_fo(p, style, roles, out);
                        out.push(')');
                    }
                }
            }
        }
        Fo::Implies(a, b) => {
            match **a {
                Fo::Implies(..) | Fo::Forall(..) | Fo::Exists(..) => {
                    out.push('(');
                    write_fo(a, style, roles, out);
                    out.push(')');
                }
                _ => write_fo(a, style, roles, out),
            }
            out.push_str(&format!(" {imp} "));
            write_fo(b, style, roles, out);
        }
        Fo::Forall(q, body) | Fo::Exists(q, body) => {
            let universal = matches!(f, Fo::Forall(..));
            out.push_str(&quant_text(q, universal, style, roles));
            let mut inner = String::new();
            write_fo(body, style, roles, &mut inner);
            match **body {
                Fo::Forall(..) | Fo::Exists(..) => {
                    out.push(' ');
                    out.push_str(&inner);
                }
                _ => {
                    if style == Style::Ascii {
                        out.push(' ');
                    }
                    out.push('(');
                    out.push_str(&inner);
                    out.push(')');
                }
            }
        }
    }
}

pub fn print_fo(f: &Fo, style: Style) -> String {
    let mut s = String::new();
    write_fo(f, style, true, &mut s);
    s
}

/// Prints without role annotations.
pub fn print_fo_plain(f: &Fo, style: Style) -> String {
    let mut s = String::new();
    write_fo(f, style, false, &mut s);
    s
}

pub fn print_kracht(k: &KrachtFormula, style: Style) -> String {
    print_fo(&k.to_fo(), style)
}

impl fmt::Display for FoAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_atom(self, Style::Unicode))
    }
}

impl fmt::Display for Fo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_fo_plain(self, Style::Unicode))
    }
}

/// Model file layout.
#[derive(Debug, Deserialize)]
pub struct ModelFile {
    pub elements: Vec<String>,
    pub hasse: Vec<[String; 2]>,
    #[serde(default)]
    pub ops: BTreeMap<String, BTreeMap<String, String>>,
    #[serde(default)]
    pub rels: BTreeMap<String, Vec<[String; 2]>>,
}

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("model file: {0}")]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub fn parse_model(text: &str, sig: &Signature) -> Result<FiniteSpdAlgebra, ModelFileError> {
    let file: ModelFile = toml::from_str(text)?;
    Ok(FiniteSpdAlgebra::from_file(&file, sig)?)
}

pub fn print_model(h: &FiniteSpdAlgebra) -> String {
    let q = |s: &str| format!("\"{s}\"");
    let mut out = String::new();
    out.push_str(&format!("elements = [{}]\n", h.names.iter().map(|n| q(n)).collect::<Vec<_>>().join(", ")));
    let covers: Vec<String> =
        h.covers().into_iter().map(|(a, b)| format!("[{}, {}]", q(&h.names[a]), q(&h.names[b]))).collect();
    out.push_str(&format!("hasse = [{}]\n", covers.join(", ")));
    if let Some(neg) = h.ops.get("~") {
        out.push_str("\n[ops.\"~\"]\n");
        for (a, &b) in neg.unary().iter().enumerate() {
            out.push_str(&format!("{} = {}\n", q(&h.names[a]), q(&h.names[b])));
        }
    }
    out.push_str("\n[rels]\n");
    for (key, m) in h.named_rels() {
        let pairs: Vec<String> = (0..h.size())
            .flat_map(|a| (0..h.size()).map(move |b| (a, b)))
            .filter(|&(a, b)| m[a][b])
            .map(|(a, b)| format!("[{}, {}]", q(&h.names[a]), q(&h.names[b])))
            .collect();
        out.push_str(&format!("{key} = [{}]\n", pairs.join(", ")));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signature::Variety;
    use proptest::prelude::*;

    #[test]
    fn modal_examples() {
        let i = parse_mod("box v <= brhd v").unwrap();
        assert_eq!(i, Ineq::new(Term::modal(Modal::Box, Term::var("v")), Term::modal(Modal::Brhd, Term::var("v"))));
        let i = parse_mod("dia (dia v1 /\\ dia v2) <= dia (v1 /\\ v2)").unwrap();
        assert_eq!(print_mod(&i, Style::Unicode), "◇(◇v1 ∧ ◇v2) ≤ ◇(v1 ∧ v2)");
        assert_eq!(parse_mod("top <= top").unwrap(), Ineq::new(Term::Top, Term::Top));
    }

    #[test]
    fn precedence() {
        let i = parse_mod("dia a /\\ b \\/ c -> d -< e <= f # comment").unwrap();
        let expected = Term::clopen(
            "->",
            vec![
                Term::join(Term::meet(Term::modal(Modal::Dia, Term::var("a")), Term::var("b")), Term::var("c")),
                Term::clopen("-<", vec![Term::var("d"), Term::var("e")]),
            ],
        );
        assert_eq!(i.lhs, expected);
    }

    #[test]
    fn ascii_and_latex_printing() {
        let i = parse_mod("box box v <= box v").unwrap();
        assert_eq!(print_mod(&i, Style::Ascii), "box box v <= box v");
        let i = parse_mod("blhd dia v <= brhd box v").unwrap();
        assert_eq!(
            print_mod(&i, Style::Latex),
            "{\\blacktriangleleft}\\Diamond v \\leq {\\blacktriangleright}\\blacksquare v"
        );
        let i = parse_mod("box1 (x /\\ y) /\\ z <= ~(x -> y)").unwrap();
        assert_eq!(print_mod(&i, Style::Ascii), "box1 (x /\\ y) /\\ z <= ~(x -> y)");
    }

    #[test]
    fn fo_examples() {
        let f = parse_fo("A v a c. (a <= c & c prec v => a nC v)").unwrap();
        assert_eq!(print_fo(&f, Style::Unicode), "∀v∀a∀c(a ≤ c & c ≺ v ⇒ a C̸ v)");
        let f = parse_fo("A a y x' x. (a prec x' & x' <= x & (a /\\ x) prec y => a prec y)").unwrap();
        assert!(matches!(f, Fo::Forall(..)));
        let f = parse_fo("A x. E y. (x nD y & y nC x)").unwrap();
        assert_eq!(print_fo(&f, Style::Ascii), "A x. E y. (x nD y & y nC x)");
        let f = parse_fo("A v a:a. (A c:c >= a) (c prec v => a nC v)").unwrap();
        assert_eq!(print_fo(&f, Style::Ascii), "A v a:a. (A c:c >= a) (c prec v => a nC v)");
        let f = parse_fo("A v a. (A c1 c2 >=[->] a) (v prec c1 & c2 prec v => a prec v)").unwrap();
        assert_eq!(parse_fo(&print_fo(&f, Style::Ascii)).unwrap(), f);
    }

    #[test]
    fn syntax_errors_carry_spans() {
        let e = parse_mod("box v <=").unwrap_err();
        assert_eq!(e.span.column, 9);
        assert!(parse_mod("box v <= $").is_err());
        assert!(parse_fo("A x. (x prec)").is_err());
    }

    #[test]
    fn model_file_roundtrip() {
        let sig = Signature::new((1, 1, 1), Variety::DistributiveLattice);
        let text = r#"
elements = ["0", "1"]
hasse = [["0", "1"]]
[rels]
prec0 = [["0", "0"], ["0", "1"], ["1", "1"]]
"#;
        let h = parse_model(text, &sig).unwrap();
        assert_eq!(h.size(), 2);
        let again = parse_model(&print_model(&h), &sig).unwrap();
        assert_eq!(again.rels, h.rels);
    }

    fn arb_term() -> impl Strategy<Value = Term> {
        let leaf = prop_oneof![
            prop::sample::select(vec!["p", "q", "v1", "x'"]).prop_map(Term::var),
            Just(Term::Top),
            Just(Term::Bot),
        ];
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                (prop::sample::select(Modal::ALL.to_vec()), 0usize..2, inner.clone())
                    .prop_map(|(m, i, t)| Term::App(Conn::Modal(m, i), vec![t])),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::meet(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::join(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::clopen("->", vec![a, b])),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::clopen("-<", vec![a, b])),
                inner.clone().prop_map(|a| Term::clopen("~", vec![a])),
                (inner.clone(), inner).prop_map(|(a, b)| Term::clopen("f", vec![a, b])),
            ]
        })
    }

    proptest! {
        #[test]
        fn parse_print_identity(l in arb_term(), r in arb_term()) {
            let i = Ineq::new(l, r);
            let text = print_mod(&i, Style::Ascii);
            prop_assert_eq!(parse_mod(&text).unwrap(), i.clone());
            // canonical text is a fixpoint
            prop_assert_eq!(print_mod(&parse_mod(&text).unwrap(), Style::Ascii), text);
        }
    }
}
