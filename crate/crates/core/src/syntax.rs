//! Surface syntax in Krivine notation.
//!
//! ```text
//! term   := ident | "\" binder term | "(" term ")" term
//! ident  := [a-z][a-z0-9]*
//! binder := [a-z][0-9]*
//! ```
//!
//! `(t)u` applies `t` to `u`, so `(f)(x)x` is `f` applied to `(x)x`.
//! Whitespace between tokens is ignored.
//!
//! A binder is one letter optionally followed by digits, which is what lets
//! `\xx` read as λx.x and `\v1v1` as λv1.v1. Free variables may be longer
//! identifiers (`\x(foo)x`). Names such as `\foo` are therefore not
//! binders: write `\f` or `\f1`.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

use crate::deep;

/// A λ-term as written by the user.
pub enum Term {
    Variable(String),
    Abstraction(String, Box<Term>),
    Application(Box<Term>, Box<Term>),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Term {
        Term::Variable(name.into())
    }

    pub fn abs(binder: impl Into<String>, body: Term) -> Term {
        Term::Abstraction(binder.into(), Box::new(body))
    }

    pub fn app(function: Term, argument: Term) -> Term {
        Term::Application(Box::new(function), Box::new(argument))
    }

    /// `binders` from outermost to innermost.
    pub fn abs_many<S: Into<String>>(binders: impl IntoIterator<Item = S>, body: Term) -> Term {
        let binders: Vec<String> = binders.into_iter().map(Into::into).collect();
        binders.into_iter().rev().fold(body, |t, b| Term::abs(b, t))
    }

    /// `(...((head)a1)a2...)an`
    pub fn app_spine(head: Term, args: impl IntoIterator<Item = Term>) -> Term {
        args.into_iter().fold(head, Term::app)
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        let mut n = 0;
        let mut todo = vec![self];
        while let Some(t) = todo.pop() {
            n += 1;
            match t {
                Term::Variable(_) => {}
                Term::Abstraction(_, b) => todo.push(b),
                Term::Application(f, a) => {
                    todo.push(f);
                    todo.push(a);
                }
            }
        }
        n
    }

    /// True when no subterm has the shape `(\x t)u`.
    pub fn is_normal(&self) -> bool {
        let mut todo = vec![self];
        while let Some(t) = todo.pop() {
            match t {
                Term::Variable(_) => {}
                Term::Abstraction(_, b) => todo.push(b),
                Term::Application(f, a) => {
                    if matches!(**f, Term::Abstraction(..)) {
                        return false;
                    }
                    todo.push(f);
                    todo.push(a);
                }
            }
        }
        true
    }

    /// Every binder is a valid binder name and every variable a valid identifier.
    pub fn is_well_formed(&self) -> bool {
        let mut todo = vec![self];
        while let Some(t) = todo.pop() {
            match t {
                Term::Variable(x) => {
                    if !is_identifier(x) {
                        return false;
                    }
                }
                Term::Abstraction(x, b) => {
                    if !is_binder(x) {
                        return false;
                    }
                    todo.push(b);
                }
                Term::Application(f, a) => {
                    todo.push(f);
                    todo.push(a);
                }
            }
        }
        true
    }

    #[allow(clippy::vec_box)] // moving the boxes avoids reallocating every node
    fn take_children(&mut self, out: &mut Vec<Box<Term>>) {
        match self {
            Term::Variable(_) => {}
            Term::Abstraction(_, b) => out.push(std::mem::replace(b, Box::new(Term::Variable(String::new())))),
            Term::Application(f, a) => {
                out.push(std::mem::replace(f, Box::new(Term::Variable(String::new()))));
                out.push(std::mem::replace(a, Box::new(Term::Variable(String::new()))));
            }
        }
    }
}

// Iterative so that dropping a very deep spine cannot overflow the stack.
impl Drop for Term {
    fn drop(&mut self) {
        if matches!(self, Term::Variable(_)) {
            return;
        }
        let mut todo = Vec::new();
        self.take_children(&mut todo);
        while let Some(mut t) = todo.pop() {
            t.take_children(&mut todo);
        }
    }
}

impl Clone for Term {
    fn clone(&self) -> Term {
        deep::guard(|| match self {
            Term::Variable(x) => Term::Variable(x.clone()),
            Term::Abstraction(x, b) => Term::Abstraction(x.clone(), Box::new((**b).clone())),
            Term::Application(f, a) => Term::Application(Box::new((**f).clone()), Box::new((**a).clone())),
        })
    }
}

impl PartialEq for Term {
    fn eq(&self, other: &Term) -> bool {
        let mut todo = vec![(self, other)];
        while let Some(pair) = todo.pop() {
            match pair {
                (Term::Variable(x), Term::Variable(y)) if x == y => {}
                (Term::Abstraction(x, b), Term::Abstraction(y, c)) if x == y => todo.push((b, c)),
                (Term::Application(f, a), Term::Application(g, b)) => {
                    todo.push((f, g));
                    todo.push((a, b));
                }
                _ => return false,
            }
        }
        true
    }
}

impl Eq for Term {}

/// Constructor form, e.g. `Abstraction x (Variable x)`.
impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(t: &Term, nested: bool, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            deep::guard(|| {
                if nested {
                    f.write_str("(")?;
                }
                match t {
                    Term::Variable(x) => write!(f, "Variable {x}")?,
                    Term::Abstraction(x, b) => {
                        write!(f, "Abstraction {x} ")?;
                        go(b, true, f)?;
                    }
                    Term::Application(g, a) => {
                        f.write_str("Application ")?;
                        go(g, true, f)?;
                        f.write_str(" ")?;
                        go(a, true, f)?;
                    }
                }
                if nested {
                    f.write_str(")")?;
                }
                Ok(())
            })
        }
        go(self, false, f)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty(self))
    }
}

impl std::str::FromStr for Term {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Term, ParseError> {
        parse_term(s)
    }
}

pub fn is_identifier(s: &str) -> bool {
    let b = s.as_bytes();
    !b.is_empty() && b[0].is_ascii_lowercase() && b[1..].iter().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit())
}

pub fn is_binder(s: &str) -> bool {
    let b = s.as_bytes();
    !b.is_empty() && b[0].is_ascii_lowercase() && b[1..].iter().all(u8::is_ascii_digit)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("expected {expected} at byte {offset}")]
pub struct ParseError {
    pub offset: usize,
    pub expected: String,
}

/// A term parsed from a prefix of the input, plus the unconsumed suffix.
#[derive(Debug)]
pub struct ParseResult<'a> {
    pub value: Term,
    pub rest: &'a str,
}

static PARSE_CALLS: AtomicU64 = AtomicU64::new(0);

/// Number of parser entries since process start. The benchmark harness
/// reads it around its timed region.
pub fn parse_invocations() -> u64 {
    PARSE_CALLS.load(Ordering::Relaxed)
}

/// Parse exactly one term; anything but whitespace after it is an error.
pub fn parse_term(input: &str) -> Result<Term, ParseError> {
    let ParseResult { value, rest } = parse_prefix(input)?;
    let trimmed = rest.trim_start();
    if trimmed.is_empty() {
        Ok(value)
    } else {
        Err(ParseError {
            offset: input.len() - trimmed.len(),
            expected: "end of input".into(),
        })
    }
}

/// Parse the longest term at the start of `input`.
pub fn parse_prefix(input: &str) -> Result<ParseResult<'_>, ParseError> {
    PARSE_CALLS.fetch_add(1, Ordering::Relaxed);
    let mut p = Input::new(input);
    match p.term() {
        Some(value) => Ok(ParseResult {
            value,
            rest: &input[p.pos..],
        }),
        None => Err(p.error()),
    }
}

/// One step along a term's right spine.
enum Prefix {
    Leaf(String),
    Binder(String),
    Function(Term),
}

struct Input<'a> {
    src: &'a [u8],
    pos: usize,
    err_pos: usize,
    err_expected: &'static str,
}

impl<'a> Input<'a> {
    fn new(s: &'a str) -> Self {
        Input {
            src: s.as_bytes(),
            pos: 0,
            err_pos: 0,
            err_expected: "a term",
        }
    }

    fn error(&self) -> ParseError {
        ParseError {
            offset: self.err_pos,
            expected: self.err_expected.into(),
        }
    }

    fn expect<T>(&mut self, what: &'static str) -> Option<T> {
        if self.pos >= self.err_pos {
            self.err_pos = self.pos;
            self.err_expected = what;
        }
        None
    }

    fn item(&mut self) -> Option<u8> {
        let c = *self.src.get(self.pos)?;
        self.pos += 1;
        Some(c)
    }

    fn sat(&mut self, pred: impl Fn(u8) -> bool) -> Option<u8> {
        let save = self.pos;
        match self.item() {
            Some(c) if pred(c) => Some(c),
            _ => {
                self.pos = save;
                None
            }
        }
    }

    fn char(&mut self, c: u8) -> bool {
        self.sat(|x| x == c).is_some()
    }

    fn spaces(&mut self) {
        while self.sat(|c| c.is_ascii_whitespace()).is_some() {}
    }

    fn many(&mut self, pred: impl Fn(u8) -> bool) -> usize {
        let start = self.pos;
        while self.sat(&pred).is_some() {}
        self.pos - start
    }

    /// First successful alternative wins, like `+++`.
    fn first<T>(&mut self, alternatives: &[fn(&mut Self) -> Option<T>]) -> Option<T> {
        let save = self.pos;
        for alt in alternatives {
            if let Some(v) = alt(self) {
                return Some(v);
            }
            self.pos = save;
        }
        None
    }

    fn identifier(&mut self) -> Option<String> {
        let start = self.pos;
        self.sat(|c| c.is_ascii_lowercase())?;
        self.many(|c| c.is_ascii_lowercase() || c.is_ascii_digit());
        Some(self.slice(start))
    }

    fn binder(&mut self) -> Option<String> {
        let start = self.pos;
        self.sat(|c| c.is_ascii_lowercase())?;
        self.many(|c| c.is_ascii_digit());
        Some(self.slice(start))
    }

    fn slice(&self, start: usize) -> String {
        // Only ASCII bytes were accepted between start and pos.
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn variable(&mut self) -> Option<Prefix> {
        self.spaces();
        match self.identifier() {
            Some(x) => Some(Prefix::Leaf(x)),
            None => self.expect("a term"),
        }
    }

    fn abstraction(&mut self) -> Option<Prefix> {
        self.spaces();
        if !self.char(b'\\') {
            return self.expect("a term");
        }
        self.spaces();
        match self.binder() {
            Some(x) => Some(Prefix::Binder(x)),
            None => self.expect("a binder"),
        }
    }

    fn application(&mut self) -> Option<Prefix> {
        self.spaces();
        if !self.char(b'(') {
            return self.expect("a term");
        }
        let f = deep::guard(|| self.term())?;
        self.spaces();
        if !self.char(b')') {
            return self.expect("')'");
        }
        Some(Prefix::Function(f))
    }

    /// The argument of `(t)u` and the body of `\x t` are both in tail
    /// position, so a term is a run of binders and functions ending in a
    /// variable; walking it in a loop keeps long spines off the call stack.
    fn term(&mut self) -> Option<Term> {
        let mut spine = Vec::new();
        let leaf = loop {
            match self.first(&[Self::variable, Self::abstraction, Self::application])? {
                Prefix::Leaf(x) => break Term::Variable(x),
                other => spine.push(other),
            }
        };
        Some(spine.into_iter().rev().fold(leaf, |t, p| match p {
            Prefix::Binder(x) => Term::abs(x, t),
            Prefix::Function(f) => Term::app(f, t),
            Prefix::Leaf(_) => unreachable!(),
        }))
    }
}

/// Render in Krivine notation; the output parses back to the same tree for
/// well-formed terms.
pub fn pretty(t: &Term) -> String {
    let mut out = String::new();
    write_term(t, &mut out);
    out
}

fn write_term(mut t: &Term, out: &mut String) {
    loop {
        match t {
            Term::Variable(x) => {
                out.push_str(x);
                return;
            }
            Term::Abstraction(x, b) => {
                out.push('\\');
                out.push_str(x);
                t = b;
            }
            Term::Application(f, a) => {
                out.push('(');
                deep::guard(|| write_term(f, out));
                out.push(')');
                t = a;
            }
        }
    }
}

/// FV(x) = {x}; FV(\x t) = FV(t) \ {x}; FV((t)s) = FV(t) ∪ FV(s).
pub fn free_variables(t: &Term) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut bound: Vec<&str> = Vec::new();
    collect_free(t, &mut bound, &mut out);
    out
}

fn collect_free<'t>(t: &'t Term, bound: &mut Vec<&'t str>, out: &mut BTreeSet<String>) {
    deep::guard(|| match t {
        Term::Variable(x) => {
            if !bound.contains(&x.as_str()) {
                out.insert(x.clone());
            }
        }
        Term::Abstraction(x, b) => {
            bound.push(x);
            collect_free(b, bound, out);
            bound.pop();
        }
        Term::Application(f, a) => {
            collect_free(f, bound, out);
            collect_free(a, bound, out);
        }
    })
}
