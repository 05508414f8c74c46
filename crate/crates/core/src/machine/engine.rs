use std::sync::Arc;

use super::{CancelToken, Closure, Code, EvalError, Halt, MachineState, Outcome, Step, StepBudget, Token, TokenSink};
use crate::compile::{CTerm, Namer, Node};

// Cancellation is polled on step 1 and every 1024 steps after.
const CANCEL_POLL_MASK: u64 = 1023;

/// Step accounting for one engine.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Meter {
    remaining: Option<u64>,
    used: u64,
}

impl Meter {
    fn new(budget: StepBudget) -> Meter {
        Meter {
            remaining: budget.max_steps,
            used: 0,
        }
    }

    #[inline]
    fn tick(&mut self) -> bool {
        if let Some(r) = &mut self.remaining {
            if *r == 0 {
                return false;
            }
            *r -= 1;
        }
        self.used += 1;
        true
    }

    fn charge(&mut self, steps: u64) {
        if let Some(r) = &mut self.remaining {
            *r = r.saturating_sub(steps);
        }
        self.used += steps;
    }

    pub(crate) fn used(&self) -> u64 {
        self.used
    }

    /// Split what is left into `parts` budgets, the remainder going to the first.
    pub(crate) fn shares(&self, parts: usize) -> Vec<StepBudget> {
        match self.remaining {
            None => vec![StepBudget::unlimited(); parts],
            Some(r) => {
                let each = r / parts as u64;
                let extra = r % parts as u64;
                (0..parts)
                    .map(|i| StepBudget::steps(if i == 0 { each + extra } else { each }))
                    .collect()
            }
        }
    }
}

/// Result of handing a head's arguments to a [`Splitter`].
pub(crate) struct SplitOutcome {
    pub used: u64,
    pub outcome: Outcome,
}

/// Hook consulted at a free head with two or more arguments. A splitter
/// that accepts must emit every argument (each between `ArgStart` and
/// `ArgEnd`) to the sink before returning.
pub(crate) trait Splitter: Sync {
    fn split(
        &self,
        parent: &Engine<'_>,
        args: Vec<Closure>,
        depth: u32,
        sink: &mut dyn TokenSink,
    ) -> Result<Result<SplitOutcome, Vec<Closure>>, EvalError>;
}

enum Work {
    Eval { closure: Closure, depth: u32, arg: bool },
    End,
}

enum Head {
    Stopped(Outcome),
    Free { name: Arc<str>, args: Vec<Closure>, depth: u32 },
}

/// Drives the machine to head form, reads back, and walks the arguments.
/// Pending arguments live on an explicit work list so arbitrarily deep
/// normal forms do not grow the call stack.
pub(crate) struct Engine<'a> {
    pub(crate) term: &'a Arc<CTerm>,
    pub(crate) namer: Namer,
    pub(crate) cancel: &'a CancelToken,
    pub(crate) meter: Meter,
    splitter: Option<&'a dyn Splitter>,
    state: MachineState,
}

impl<'a> Engine<'a> {
    pub(crate) fn new(
        term: &'a Arc<CTerm>,
        namer: Namer,
        cancel: &'a CancelToken,
        budget: StepBudget,
        splitter: Option<&'a dyn Splitter>,
    ) -> Engine<'a> {
        Engine {
            term,
            namer,
            cancel,
            meter: Meter::new(budget),
            splitter,
            state: MachineState::initial(term.clone()),
        }
    }

    /// Stream the normal form of `root`. `depth` is the number of readback
    /// binders already in scope, which numbers the next fresh variable.
    pub(crate) fn run(&mut self, root: Closure, depth: u32, sink: &mut dyn TokenSink) -> Result<Outcome, EvalError> {
        let mut work = vec![Work::Eval {
            closure: root,
            depth,
            arg: false,
        }];
        let mut cut = false;
        while let Some(item) = work.pop() {
            let (closure, depth) = match item {
                Work::End => {
                    sink.push(Token::ArgEnd);
                    continue;
                }
                Work::Eval { closure, depth, arg } => {
                    if arg {
                        sink.push(Token::ArgStart);
                        work.push(Work::End);
                    }
                    (closure, depth)
                }
            };
            let (name, args, depth) = match self.head(closure, depth, sink)? {
                Head::Stopped(outcome) => return Ok(outcome),
                Head::Free { name, args, depth } => (name, args, depth),
            };
            sink.push(Token::Head { name, arity: args.len() });
            let args = match self.splitter {
                Some(s) if args.len() >= 2 => match s.split(self, args, depth, sink)? {
                    Ok(SplitOutcome { used, outcome }) => {
                        self.meter.charge(used);
                        match outcome {
                            Outcome::Done => {}
                            Outcome::BudgetExhausted => cut = true,
                            Outcome::Cancelled => return Ok(Outcome::Cancelled),
                        }
                        continue;
                    }
                    Err(args) => args,
                },
                _ => args,
            };
            for closure in args.into_iter().rev() {
                work.push(Work::Eval {
                    closure,
                    depth,
                    arg: true,
                });
            }
        }
        Ok(if cut { Outcome::BudgetExhausted } else { Outcome::Done })
    }

    fn head(&mut self, closure: Closure, mut depth: u32, sink: &mut dyn TokenSink) -> Result<Head, EvalError> {
        self.state.load(closure);
        loop {
            if !self.meter.tick() {
                return Ok(Head::Stopped(Outcome::BudgetExhausted));
            }
            if self.meter.used & CANCEL_POLL_MASK == 1 && self.cancel.is_cancelled() {
                return Ok(Head::Stopped(Outcome::Cancelled));
            }
            match self.state.step()? {
                Step::Continue => {}
                Step::Halt(Halt::Lambda { arity, available }) => {
                    let missing = arity as usize - available;
                    let names = (0..missing).map(|i| self.namer.name(depth as usize + i)).collect();
                    sink.push(Token::Lambda(names));
                    self.state.bind_with_fresh(arity, depth);
                    depth += missing as u32;
                }
                Step::Halt(Halt::FreeHead) => {
                    let name = match self.state.control() {
                        Code::Fresh(i) => self.namer.name(i as usize),
                        Code::Node(id) => match self.term.node(id) {
                            Node::Free(s) => self.term.symbol(s).clone(),
                            _ => unreachable!("free head on a non-variable"),
                        },
                    };
                    let args = self.state.take_args();
                    return Ok(Head::Free { name, args, depth });
                }
            }
        }
    }

    pub(crate) fn splitter(&self) -> Option<&'a dyn Splitter> {
        self.splitter
    }
}
