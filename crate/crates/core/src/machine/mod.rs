//! The Krivine machine.
//!
//! A [`MachineState`] has three registers: the term being executed, the
//! current environment, and a stack of closures. One [`MachineState::step`]
//! applies one rule:
//!
//! * `(t)u`: push the closure `(u, E)` and continue with `t`;
//! * `λn t` with at least `n` closures on the stack: pop them into a new
//!   environment whose parent is `E`, continue with `t`;
//! * `⟨v,k⟩`: walk `v − 1` parent links from `E`, take the `k`-th closure
//!   and load it into `(T, E)`.
//!
//! The machine halts at a head form: a free variable, or a group with too
//! few closures on the stack. [`normalize_stream`] continues from there to
//! the full β-normal form (binding missing arguments to fresh variables,
//! then normalizing each stacked argument) and streams the result as
//! [`Token`]s, so terms without a normal form still produce output.

mod engine;
mod token;

use std::fmt;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use thiserror::Error;

use crate::compile::{compile, CTerm, Namer, Node, NodeId};
use crate::syntax::Term;

pub(crate) use engine::{Engine, SplitOutcome, Splitter};
pub use token::{render_tokens, tokens_to_term, Renderer, Shape, Token, TokenCounter, TokenSink};

/// What a closure executes: a node of the shared term, or a fresh variable
/// introduced by readback under a λ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Code {
    Node(NodeId),
    Fresh(u32),
}

/// A chain of frames. The empty environment is the root.
#[derive(Clone, Default)]
pub struct Env(Option<Arc<Frame>>);

pub struct Frame {
    parent: Env,
    closures: Box<[Closure]>,
}

#[derive(Clone)]
pub struct Closure {
    code: Code,
    env: Env,
}

impl Env {
    pub fn empty() -> Env {
        Env(None)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_none()
    }

    pub fn parent(&self) -> Option<&Env> {
        self.0.as_ref().map(|f| &f.parent)
    }

    pub fn closures(&self) -> &[Closure] {
        self.0.as_ref().map_or(&[], |f| &f.closures)
    }

    pub fn ptr_eq(&self, other: &Env) -> bool {
        match (&self.0, &other.0) {
            (Some(a), Some(b)) => Arc::ptr_eq(a, b),
            (None, None) => true,
            _ => false,
        }
    }

    fn extend(&self, closures: Box<[Closure]>) -> Env {
        Env(Some(Arc::new(Frame {
            parent: self.clone(),
            closures,
        })))
    }

    /// The `index`-th closure (1-based) of the `depth`-th frame (1 = this one).
    pub fn lookup(&self, depth: u32, index: u32) -> Result<&Closure, MachineError> {
        let err = MachineError::Unbound { depth, index };
        let mut frame = self.0.as_ref().ok_or(err.clone())?;
        for _ in 1..depth {
            frame = frame.parent.0.as_ref().ok_or(err.clone())?;
        }
        frame.closures.get(index as usize - 1).ok_or(err)
    }
}

impl fmt::Debug for Env {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut depth = 0;
        let mut e = self;
        while let Some(frame) = &e.0 {
            depth += 1;
            e = &frame.parent;
        }
        write!(f, "Env(depth {depth}, {} closures)", self.closures().len())
    }
}

// Long parent chains and closures holding environments that hold closures
// would otherwise be dropped recursively.
impl Drop for Frame {
    fn drop(&mut self) {
        let mut todo = Vec::new();
        self.detach(&mut todo);
        while let Some(frame) = todo.pop() {
            if let Ok(mut frame) = Arc::try_unwrap(frame) {
                frame.detach(&mut todo);
            }
        }
    }
}

impl Frame {
    fn detach(&mut self, out: &mut Vec<Arc<Frame>>) {
        out.extend(self.parent.0.take());
        for c in self.closures.iter_mut() {
            out.extend(c.env.0.take());
        }
    }
}

impl Closure {
    pub fn new(code: Code, env: Env) -> Closure {
        Closure { code, env }
    }

    pub fn fresh(index: u32) -> Closure {
        Closure {
            code: Code::Fresh(index),
            env: Env::empty(),
        }
    }

    pub fn code(&self) -> Code {
        self.code
    }

    pub fn env(&self) -> &Env {
        &self.env
    }

    /// Size of the term this closure stands for, looking through chains of
    /// bound variables to the closure they resolve to.
    pub fn effective_size(&self, term: &CTerm) -> u32 {
        let mut c = self;
        loop {
            match c.code {
                Code::Fresh(_) => return 1,
                Code::Node(id) => match term.node(id) {
                    Node::Bound { depth, index } => match c.env.lookup(depth, index) {
                        Ok(next) => c = next,
                        Err(_) => return 1,
                    },
                    _ => return term.size_of(id),
                },
            }
        }
    }
}

impl fmt::Debug for Closure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Closure({:?}, {:?})", self.code, self.env)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MachineError {
    #[error("variable [{depth}, {index}] does not resolve in the environment")]
    Unbound { depth: u32, index: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    Continue,
    Halt(Halt),
}

/// Why the machine stopped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Halt {
    /// A free variable (or a readback variable) is in head position.
    FreeHead,
    /// A λ-group of `arity` binders with fewer closures on the stack.
    Lambda { arity: u32, available: usize },
}

pub struct MachineState {
    term: Arc<CTerm>,
    control: Code,
    env: Env,
    stack: Vec<Closure>,
}

impl MachineState {
    /// The entered term, an empty stack and an empty environment.
    pub fn initial(term: Arc<CTerm>) -> MachineState {
        let control = Code::Node(term.root());
        MachineState {
            term,
            control,
            env: Env::empty(),
            stack: Vec::new(),
        }
    }

    pub fn with(term: Arc<CTerm>, control: Code, env: Env, stack: Vec<Closure>) -> MachineState {
        MachineState {
            term,
            control,
            env,
            stack,
        }
    }

    pub fn term(&self) -> &Arc<CTerm> {
        &self.term
    }

    pub fn control(&self) -> Code {
        self.control
    }

    pub fn env(&self) -> &Env {
        &self.env
    }

    /// Top of the stack is the last element.
    pub fn stack(&self) -> &[Closure] {
        &self.stack
    }

    fn load(&mut self, c: Closure) {
        self.control = c.code;
        self.env = c.env;
        self.stack.clear();
    }

    #[inline]
    pub fn step(&mut self) -> Result<Step, MachineError> {
        let Code::Node(id) = self.control else {
            return Ok(Step::Halt(Halt::FreeHead));
        };
        match self.term.node(id) {
            Node::App(t, u) => {
                self.stack.push(Closure::new(Code::Node(u), self.env.clone()));
                self.control = Code::Node(t);
            }
            Node::Abs { arity, body } => {
                let n = arity as usize;
                if self.stack.len() < n {
                    return Ok(Step::Halt(Halt::Lambda {
                        arity,
                        available: self.stack.len(),
                    }));
                }
                let closures: Box<[Closure]> = (0..n).map(|_| self.stack.pop().unwrap()).collect();
                self.env = self.env.extend(closures);
                self.control = Code::Node(body);
            }
            Node::Bound { depth, index } => {
                let c = self.env.lookup(depth, index)?.clone();
                self.control = c.code;
                self.env = c.env;
            }
            Node::Free(_) => return Ok(Step::Halt(Halt::FreeHead)),
        }
        Ok(Step::Continue)
    }

    /// Readback at `Halt::Lambda`: bind the stacked closures and `fresh`
    /// variables numbered from `first_fresh` to the group's binders.
    fn bind_with_fresh(&mut self, arity: u32, first_fresh: u32) {
        let Code::Node(id) = self.control else { unreachable!() };
        let Node::Abs { body, .. } = self.term.node(id) else { unreachable!() };
        let available = self.stack.len();
        let missing = arity as usize - available;
        let closures: Box<[Closure]> = (0..available)
            .map(|_| self.stack.pop().unwrap())
            .chain((0..missing as u32).map(|i| Closure::fresh(first_fresh + i)))
            .collect();
        self.env = self.env.extend(closures);
        self.control = Code::Node(body);
    }

    /// Arguments of the head in spine order (leftmost first).
    fn take_args(&mut self) -> Vec<Closure> {
        let mut args = std::mem::take(&mut self.stack);
        args.reverse();
        args
    }
}

/// Step limit for one evaluation; every transition costs one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StepBudget {
    pub max_steps: Option<u64>,
}

impl StepBudget {
    pub fn unlimited() -> StepBudget {
        StepBudget { max_steps: None }
    }

    pub fn steps(n: u64) -> StepBudget {
        StepBudget { max_steps: Some(n) }
    }
}

/// How a token stream ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Done,
    BudgetExhausted,
    Cancelled,
}

impl Outcome {
    pub fn is_done(self) -> bool {
        self == Outcome::Done
    }
}

/// Shared flag polled by running machines between transitions.
#[derive(Debug, Clone, Default)]
pub struct CancelToken(Arc<AtomicBool>);

impl CancelToken {
    pub fn new() -> CancelToken {
        CancelToken::default()
    }

    pub fn cancel(&self) {
        self.0.store(true, Ordering::Relaxed);
    }

    pub fn is_cancelled(&self) -> bool {
        self.0.load(Ordering::Relaxed)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error(transparent)]
    Machine(#[from] MachineError),
    #[error("worker for task {task} failed: {message}")]
    WorkerPanic { task: u64, message: String },
}

/// Stream the β-normal form of `term` into `sink`.
pub fn normalize_stream(
    term: &Arc<CTerm>,
    budget: StepBudget,
    cancel: &CancelToken,
    sink: &mut dyn TokenSink,
) -> Result<Outcome, EvalError> {
    let mut engine = Engine::new(term, Namer::for_term(term), cancel, budget, None);
    engine.run(Closure::new(Code::Node(term.root()), Env::empty()), 0, sink)
}

/// Collect the whole stream.
pub fn normalize_tokens(term: &Arc<CTerm>, budget: StepBudget) -> Result<(Vec<Token>, Outcome), EvalError> {
    let mut tokens = Vec::new();
    let outcome = normalize_stream(term, budget, &CancelToken::new(), &mut tokens)?;
    Ok((tokens, outcome))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Normalized {
    Done(Term),
    /// The rendered prefix, with `...` where output was cut off.
    Partial(String),
}

impl Normalized {
    pub fn term(&self) -> Option<&Term> {
        match self {
            Normalized::Done(t) => Some(t),
            Normalized::Partial(_) => None,
        }
    }
}

pub(crate) fn finish(tokens: &[Token], outcome: Outcome) -> Normalized {
    match outcome {
        Outcome::Done => match tokens_to_term(tokens) {
            Some(t) => Normalized::Done(t),
            None => Normalized::Partial(render_tokens(tokens, false)),
        },
        _ => Normalized::Partial(render_tokens(tokens, true)),
    }
}

/// Compile, run to normal form (or until the budget runs out) and read the
/// result back as a term.
pub fn normalize(t: &Term, budget: StepBudget) -> Result<Normalized, EvalError> {
    let term = Arc::new(compile(t));
    let (tokens, outcome) = normalize_tokens(&term, budget)?;
    Ok(finish(&tokens, outcome))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compile::alpha_equivalent;
    use crate::syntax::parse_term;

    fn term(s: &str) -> Arc<CTerm> {
        Arc::new(compile(&parse_term(s).unwrap()))
    }

    fn run(s: &str, budget: StepBudget) -> Normalized {
        normalize(&parse_term(s).unwrap(), budget).unwrap()
    }

    #[test]
    fn application_pushes_closure() {
        let t = term("(a)b");
        let Node::App(f, u) = t.node(t.root()) else { panic!() };
        let mut s = MachineState::initial(t.clone());
        assert_eq!(s.step().unwrap(), Step::Continue);
        assert_eq!(s.control(), Code::Node(f));
        assert!(s.env().is_empty());
        assert_eq!(s.stack().len(), 1);
        assert_eq!(s.stack()[0].code(), Code::Node(u));
        assert!(s.stack()[0].env().ptr_eq(&Env::empty()));
    }

    #[test]
    fn abstraction_pops_into_new_frame() {
        // ((\x\y(y)x)a)b: after two pushes, the group pops a then b
        let t = term("((\\x\\y(y)x)a)b");
        let mut s = MachineState::initial(t.clone());
        s.step().unwrap();
        s.step().unwrap();
        assert_eq!(s.stack().len(), 2);
        s.step().unwrap();
        assert!(s.stack().is_empty());
        let names: Vec<_> = s
            .env()
            .closures()
            .iter()
            .map(|c| match c.code() {
                Code::Node(id) => t.view(id),
                Code::Fresh(_) => panic!(),
            })
            .collect();
        assert_eq!(names, [crate::compile::View::Free("a"), crate::compile::View::Free("b")]);
        assert!(s.env().parent().unwrap().is_empty());
    }

    #[test]
    fn variable_fetch_walks_frames() {
        // \x(\y(y)x)x applied to a: inner body fetches [2, 1] = a
        let t = term("(\\x(\\yx)b)a");
        let mut s = MachineState::initial(t);
        while s.step().unwrap() == Step::Continue {}
        let Code::Node(id) = s.control() else { panic!() };
        assert_eq!(s.term().view(id), crate::compile::View::Free("a"));
    }

    #[test]
    fn halts_at_head_forms() {
        let mut s = MachineState::initial(term("(\\xz)(\\x(x)x)\\x(x)x"));
        let halt = loop {
            if let Step::Halt(h) = s.step().unwrap() {
                break h;
            }
        };
        assert_eq!(halt, Halt::FreeHead);
        assert!(s.stack().is_empty());

        let mut s = MachineState::initial(term("\\xx"));
        assert_eq!(s.step().unwrap(), Step::Halt(Halt::Lambda { arity: 1, available: 0 }));
        // halting is idempotent
        assert_eq!(s.step().unwrap(), Step::Halt(Halt::Lambda { arity: 1, available: 0 }));
    }

    #[test]
    fn dangling_index_is_an_error() {
        let t = Arc::new(CTerm::bound(1, 1));
        let mut s = MachineState::initial(t);
        assert_eq!(s.step(), Err(MachineError::Unbound { depth: 1, index: 1 }));
    }

    #[test]
    fn evaluation_cases() {
        let p = |s| parse_term(s).unwrap();
        assert_eq!(run("x", StepBudget::unlimited()), Normalized::Done(p("x")));
        let id = run("\\xx", StepBudget::unlimited());
        assert!(alpha_equivalent(id.term().unwrap(), &p("\\xx")));
        assert_eq!(
            run("(\\xz)(\\x(x)x)\\x(x)x", StepBudget::unlimited()),
            Normalized::Done(p("z"))
        );
        assert_eq!(run("(\\xx)z", StepBudget::unlimited()), Normalized::Done(p("z")));
    }

    #[test]
    fn swap_streams_lambda_then_head() {
        let (tokens, outcome) = normalize_tokens(&term("\\x\\y(y)x"), StepBudget::unlimited()).unwrap();
        assert_eq!(outcome, Outcome::Done);
        assert_eq!(
            tokens,
            [
                Token::Lambda(vec!["v1".into(), "v2".into()]),
                Token::Head { name: "v2".into(), arity: 1 },
                Token::ArgStart,
                Token::Head { name: "v1".into(), arity: 0 },
                Token::ArgEnd,
            ]
        );
    }

    #[test]
    fn fresh_names_avoid_free_variables() {
        let r = run("(\\x\\y(v1)y)a", StepBudget::unlimited());
        assert_eq!(r, Normalized::Done(parse_term("\\v2(v1)v2").unwrap()));
    }

    #[test]
    fn budget_cuts_fixpoint() {
        let r = run("(\\f(\\x(f)(x)x)\\x(f)(x)x)f", StepBudget::steps(60));
        let Normalized::Partial(s) = r else { panic!() };
        assert!(s.starts_with("(f)(f)(f)"), "{s}");
        assert!(s.ends_with("..."), "{s}");
    }

    #[test]
    fn cancel_stops_evaluation() {
        let t = term("(\\f(\\x(f)(x)x)\\x(f)(x)x)f");
        let cancel = CancelToken::new();
        cancel.cancel();
        let mut tokens = Vec::new();
        let outcome = normalize_stream(&t, StepBudget::unlimited(), &cancel, &mut tokens).unwrap();
        assert_eq!(outcome, Outcome::Cancelled);
    }

    #[test]
    fn deep_environment_chains_drop() {
        // each Church successor nests a frame; dropping must not recurse
        let n = 200_000;
        let mut s = String::new();
        for _ in 0..n {
            s.push_str("(\\ii)");
        }
        s.push('z');
        assert_eq!(run(&s, StepBudget::unlimited()), Normalized::Done(Term::var("z")));
    }
}
