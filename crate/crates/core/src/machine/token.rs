use std::io::{self, Write};
use std::sync::Arc;

use crate::syntax::Term;

/// One increment of a normal form.
///
/// A normal form is `\x1...\xn (h)a1...ak` with each `ai` again a normal
/// form. It streams as `Lambda([x1..xn])`, `Head { h, k }`, then each
/// argument between `ArgStart` and `ArgEnd`. `Elided` stands for a subterm
/// that was cut off; it only appears in streams stitched together from
/// partial results.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Token {
    Lambda(Vec<Arc<str>>),
    Head { name: Arc<str>, arity: usize },
    ArgStart,
    ArgEnd,
    Elided,
}

pub trait TokenSink {
    fn push(&mut self, token: Token);

    fn push_all(&mut self, tokens: Vec<Token>) {
        for t in tokens {
            self.push(t);
        }
    }
}

impl TokenSink for Vec<Token> {
    fn push(&mut self, token: Token) {
        Vec::push(self, token);
    }

    fn push_all(&mut self, mut tokens: Vec<Token>) {
        self.append(&mut tokens);
    }
}

/// Counts tokens without keeping them.
#[derive(Debug, Default, Clone, Copy)]
pub struct TokenCounter {
    pub tokens: u64,
}

impl TokenSink for TokenCounter {
    fn push(&mut self, _: Token) {
        self.tokens += 1;
    }
}

#[derive(Debug, Clone, Copy)]
struct Pending {
    remaining: usize,
    inside: bool,
}

/// Tracks where a token stream is inside the normal form it spells, so a
/// stream cut short can be closed off.
#[derive(Debug, Clone)]
pub struct Shape {
    open: Vec<Pending>,
    expecting: bool,
}

impl Default for Shape {
    fn default() -> Self {
        Shape {
            open: Vec::new(),
            expecting: true,
        }
    }
}

impl Shape {
    pub fn new() -> Shape {
        Shape::default()
    }

    pub fn feed(&mut self, token: &Token) {
        match token {
            Token::Lambda(_) => {}
            Token::Head { arity, .. } => {
                self.expecting = false;
                if *arity > 0 {
                    self.open.push(Pending {
                        remaining: *arity,
                        inside: false,
                    });
                }
            }
            Token::ArgStart => {
                if let Some(top) = self.open.last_mut() {
                    top.inside = true;
                }
                self.expecting = true;
            }
            Token::ArgEnd => {
                if let Some(top) = self.open.last_mut() {
                    top.inside = false;
                    top.remaining -= 1;
                    if top.remaining == 0 {
                        self.open.pop();
                    }
                }
            }
            Token::Elided => self.expecting = false,
        }
    }

    /// Arguments still owed to the innermost open head, counting the
    /// current one.
    pub fn remaining_args(&self) -> Option<usize> {
        self.open.last().map(|p| p.remaining)
    }

    pub fn is_complete(&self) -> bool {
        !self.expecting && self.open.is_empty()
    }

    /// Tokens that close the stream, with `Elided` for every missing subterm.
    pub fn completion(&self) -> Vec<Token> {
        let mut out = Vec::new();
        if self.expecting {
            out.push(Token::Elided);
        }
        for p in self.open.iter().rev() {
            let mut remaining = p.remaining;
            if p.inside {
                out.push(Token::ArgEnd);
                remaining -= 1;
            }
            for _ in 0..remaining {
                out.extend([Token::ArgStart, Token::Elided, Token::ArgEnd]);
            }
        }
        out
    }
}

/// Writes Krivine notation as tokens arrive, flushing after each head and
/// each finished argument.
pub struct Renderer<W: Write> {
    out: W,
    shape: Shape,
    error: Option<io::Error>,
}

impl<W: Write> Renderer<W> {
    pub fn new(out: W) -> Renderer<W> {
        Renderer {
            out,
            shape: Shape::new(),
            error: None,
        }
    }

    pub fn write(&mut self, token: &Token) -> io::Result<()> {
        match token {
            Token::Lambda(names) => {
                for n in names {
                    write!(self.out, "\\{n}")?;
                }
            }
            Token::Head { name, arity } => {
                for _ in 0..*arity {
                    self.out.write_all(b"(")?;
                }
                self.out.write_all(name.as_bytes())?;
                if *arity > 0 {
                    self.out.write_all(b")")?;
                }
                self.out.flush()?;
            }
            Token::ArgStart => {}
            Token::ArgEnd => {
                if self.shape.remaining_args().is_some_and(|r| r > 1) {
                    self.out.write_all(b")")?;
                }
                self.out.flush()?;
            }
            Token::Elided => self.out.write_all(b"...")?,
        }
        self.shape.feed(token);
        Ok(())
    }

    /// Close off an unfinished stream with `...` markers.
    pub fn finish_partial(&mut self) -> io::Result<()> {
        for t in self.shape.completion() {
            self.write(&t)?;
        }
        self.out.flush()
    }

    pub fn is_complete(&self) -> bool {
        self.shape.is_complete()
    }

    /// First write error seen through the [`TokenSink`] impl.
    pub fn take_error(&mut self) -> Option<io::Error> {
        self.error.take()
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write> TokenSink for Renderer<W> {
    fn push(&mut self, token: Token) {
        if self.error.is_none() {
            if let Err(e) = self.write(&token) {
                self.error = Some(e);
            }
        }
    }
}

/// Render a token sequence; with `close`, an unfinished stream is completed
/// with `...` markers.
pub fn render_tokens(tokens: &[Token], close: bool) -> String {
    let mut r = Renderer::new(Vec::new());
    for t in tokens {
        r.write(t).expect("writing to a Vec");
    }
    if close {
        r.finish_partial().expect("writing to a Vec");
    }
    String::from_utf8(r.into_inner()).expect("tokens are UTF-8")
}

/// The term a complete stream spells. `None` if the stream is unfinished,
/// malformed, or contains `Elided`.
pub fn tokens_to_term(tokens: &[Token]) -> Option<Term> {
    struct Frame {
        binders: Vec<Arc<str>>,
        head: Option<(Arc<str>, usize)>,
        args: Vec<Term>,
    }
    impl Frame {
        fn new() -> Frame {
            Frame {
                binders: Vec::new(),
                head: None,
                args: Vec::new(),
            }
        }
        fn is_complete(&self) -> bool {
            matches!(self.head, Some((_, k)) if k == self.args.len())
        }
        fn build(self) -> Term {
            let (name, _) = self.head.expect("complete frame has a head");
            let body = Term::app_spine(Term::var(&*name), self.args);
            Term::abs_many(self.binders.iter().map(|b| b.to_string()), body)
        }
    }

    let mut frames = vec![Frame::new()];
    let mut finished: Option<Term> = None;
    for t in tokens {
        match t {
            Token::Lambda(names) => {
                let top = frames.last_mut()?;
                if top.head.is_some() || finished.is_some() {
                    return None;
                }
                top.binders.extend(names.iter().cloned());
            }
            Token::Head { name, arity } => {
                let top = frames.last_mut()?;
                if top.head.is_some() {
                    return None;
                }
                top.head = Some((name.clone(), *arity));
            }
            Token::ArgStart => {
                let top = frames.last()?;
                if !matches!(top.head, Some((_, k)) if top.args.len() < k) {
                    return None;
                }
                frames.push(Frame::new());
            }
            Token::ArgEnd => {
                let arg = frames.pop()?;
                if !arg.is_complete() {
                    return None;
                }
                frames.last_mut()?.args.push(arg.build());
            }
            Token::Elided => return None,
        }
        if frames.len() == 1 && frames[0].is_complete() {
            if finished.is_some() {
                return None;
            }
            finished = Some(frames.pop()?.build());
        }
    }
    if frames.is_empty() {
        finished
    } else {
        None
    }
}
