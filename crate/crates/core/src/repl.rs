//! Read-eval-print loop.
//!
//! Input and output are two activities. Whatever reads lines (a terminal
//! line editor, a script on stdin, a test) turns them into [`ReplEvent`]s
//! and sends them over a channel; [`Repl::run`] owns the output, starts
//! each evaluation on its own thread and renders tokens as they arrive.
//! An `Interrupt` that arrives while a term is running cancels it; other
//! events wait until the evaluation is over.
//!
//! Output for one line is the rendered normal form followed by a newline.
//! A cut-off result is closed with `...` markers and followed by a notice
//! line starting with `--`.

use std::collections::{BTreeMap, VecDeque};
use std::io::{self, BufRead, Write};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use crossbeam_channel::{bounded, select, unbounded, Receiver, Sender};

use crate::compile::compile;
use crate::machine::{normalize_stream, CancelToken, EvalError, Outcome, Renderer, StepBudget, Token, TokenSink};
use crate::parallel::{default_workers, ParConfig, ParEvaluator, TaskId, TaskState, DEFAULT_GRANULARITY};
use crate::syntax::parse_term;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Seq,
    Par,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReplEvent {
    Line(String),
    Interrupt,
    Eof,
    SetMode(Mode),
    SetWorkers(usize),
    SetBudget(StepBudget),
    /// A message for the user, e.g. about a malformed directive.
    Diagnostic(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Directive {
    Event(ReplEvent),
    NotDirective,
}

/// Parse a `:`-directive. Unknown or malformed directives become a
/// [`ReplEvent::Diagnostic`].
pub fn handle_directive(line: &str) -> Directive {
    let line = line.trim();
    let Some(rest) = line.strip_prefix(':') else {
        return Directive::NotDirective;
    };
    let mut words = rest.split_whitespace();
    let command = words.next().unwrap_or("");
    let arg = words.next();
    let extra = words.next().is_some();
    let bad = |msg: String| Directive::Event(ReplEvent::Diagnostic(msg));
    if extra {
        return bad(format!("too many arguments to :{command}"));
    }
    let event = match (command, arg) {
        ("q" | "quit", None) => ReplEvent::Eof,
        ("mode", Some("seq")) => ReplEvent::SetMode(Mode::Seq),
        ("mode", Some("par")) => ReplEvent::SetMode(Mode::Par),
        ("mode", _) => return bad("usage: :mode seq|par".into()),
        ("workers", Some(n)) => match n.parse::<usize>() {
            Ok(n) if n > 0 => ReplEvent::SetWorkers(n),
            _ => return bad("usage: :workers N (N > 0)".into()),
        },
        ("workers", None) => return bad("usage: :workers N (N > 0)".into()),
        ("steps", Some("off")) => ReplEvent::SetBudget(StepBudget::unlimited()),
        ("steps", Some(n)) => match n.parse::<u64>() {
            Ok(n) => ReplEvent::SetBudget(StepBudget::steps(n)),
            Err(_) => return bad("usage: :steps N|off".into()),
        },
        ("steps", None) => return bad("usage: :steps N|off".into()),
        _ => return bad(format!("unknown directive :{command}")),
    };
    Directive::Event(event)
}

/// Turn one input line into an event; blank lines give `None`.
pub fn line_event(line: &str) -> Option<ReplEvent> {
    if line.trim().is_empty() {
        return None;
    }
    Some(match handle_directive(line) {
        Directive::Event(e) => e,
        Directive::NotDirective => ReplEvent::Line(line.trim().to_string()),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Session {
    pub mode: Mode,
    pub workers: usize,
    pub budget: StepBudget,
    pub granularity: u32,
    pub buffered: bool,
    pub history: Vec<String>,
}

impl Default for Session {
    fn default() -> Self {
        Session {
            mode: Mode::Seq,
            workers: default_workers(),
            budget: StepBudget::unlimited(),
            granularity: DEFAULT_GRANULARITY,
            buffered: false,
            history: Vec::new(),
        }
    }
}

impl Session {
    fn par_config(&self) -> ParConfig {
        ParConfig {
            workers: self.workers,
            granularity: self.granularity,
            buffered: self.buffered,
        }
    }
}

/// A view of the REPL's worker pool from outside the loop.
#[derive(Clone, Default)]
pub struct Monitor(Arc<Mutex<Option<Arc<ParEvaluator>>>>);

impl Monitor {
    /// Tasks the current pool is tracking; empty when there is no pool.
    pub fn active_tasks(&self) -> BTreeMap<TaskId, TaskState> {
        let current = self.0.lock().expect("monitor lock").clone();
        current.map(|ev| ev.manager().info().active_tasks).unwrap_or_default()
    }

    fn set(&self, ev: Option<Arc<ParEvaluator>>) {
        *self.0.lock().expect("monitor lock") = ev;
    }
}

enum Msg {
    Token(Token),
    Finished(Result<Outcome, EvalError>),
}

struct ChannelSink(Sender<Msg>);

impl TokenSink for ChannelSink {
    fn push(&mut self, token: Token) {
        // The loop only stops listening once the evaluation has finished.
        let _ = self.0.send(Msg::Token(token));
    }
}

struct Running {
    rx: Receiver<Msg>,
    cancel: CancelToken,
    thread: JoinHandle<()>,
    interrupted: bool,
}

pub struct Repl {
    session: Session,
    evaluator: Option<Arc<ParEvaluator>>,
    monitor: Monitor,
    ready: Option<Sender<()>>,
}

impl Repl {
    pub fn new(session: Session) -> Repl {
        Repl {
            session,
            evaluator: None,
            monitor: Monitor::default(),
            ready: None,
        }
    }

    pub fn session(&self) -> &Session {
        &self.session
    }

    pub fn into_session(self) -> Session {
        self.session
    }

    pub fn monitor(&self) -> Monitor {
        self.monitor.clone()
    }

    /// Send `()` on `tx` whenever the loop is ready for the next line.
    pub fn notify_ready(&mut self, tx: Sender<()>) {
        self.ready = Some(tx);
    }

    fn signal_ready(&self) {
        if let Some(tx) = &self.ready {
            let _ = tx.send(());
        }
    }

    fn evaluator(&mut self) -> Arc<ParEvaluator> {
        let config = self.session.par_config();
        match &self.evaluator {
            Some(ev) if ev.config() == config => ev.clone(),
            _ => {
                // Drop the old pool before starting the new one.
                self.evaluator = None;
                self.monitor.set(None);
                let ev = Arc::new(ParEvaluator::new(config));
                self.evaluator = Some(ev.clone());
                self.monitor.set(Some(ev.clone()));
                ev
            }
        }
    }

    /// Process events until `Eof` or until the sender goes away.
    pub fn run<W: Write>(&mut self, events: Receiver<ReplEvent>, mut out: W) -> io::Result<()> {
        let mut queued = VecDeque::new();
        self.signal_ready();
        loop {
            let event = match queued.pop_front() {
                Some(e) => e,
                None => events.recv().unwrap_or(ReplEvent::Eof),
            };
            match event {
                ReplEvent::Eof => return Ok(()),
                ReplEvent::Interrupt => {}
                ReplEvent::SetMode(m) => self.session.mode = m,
                ReplEvent::SetWorkers(n) => self.session.workers = n.max(1),
                ReplEvent::SetBudget(b) => self.session.budget = b,
                ReplEvent::Diagnostic(msg) => writeln!(out, "error: {msg}")?,
                ReplEvent::Line(text) => {
                    self.session.history.push(text.clone());
                    self.evaluate(&text, &events, &mut queued, &mut out)?;
                }
            }
            out.flush()?;
            if queued.is_empty() {
                self.signal_ready();
            }
        }
    }

    fn evaluate<W: Write>(
        &mut self,
        text: &str,
        events: &Receiver<ReplEvent>,
        queued: &mut VecDeque<ReplEvent>,
        out: &mut W,
    ) -> io::Result<()> {
        let term = match parse_term(text) {
            Ok(t) => t,
            Err(e) => return writeln!(out, "error: {e}"),
        };
        let term = Arc::new(compile(&term));
        let evaluator = match self.session.mode {
            Mode::Seq => None,
            Mode::Par => Some(self.evaluator()),
        };
        let budget = self.session.budget;
        let cancel = CancelToken::new();
        let (tx, rx) = bounded(1 << 16);
        let thread = {
            let cancel = cancel.clone();
            let evaluator = evaluator.clone();
            thread::spawn(move || {
                let mut sink = ChannelSink(tx.clone());
                let result = match &evaluator {
                    Some(ev) => ev.stream(&term, budget, &cancel, &mut sink),
                    None => normalize_stream(&term, budget, &cancel, &mut sink),
                };
                let _ = tx.send(Msg::Finished(result));
            })
        };
        let mut run = Running {
            rx,
            cancel,
            thread,
            interrupted: false,
        };

        let mut renderer = Renderer::new(&mut *out);
        let mut listening = true;
        let result = loop {
            let msg = if listening && !run.interrupted {
                select! {
                    recv(events) -> ev => {
                        match ev {
                            Ok(ReplEvent::Interrupt) => {
                                run.interrupted = true;
                                run.cancel.cancel();
                                if let Some(ev) = &evaluator {
                                    ev.manager().cancel_all();
                                }
                            }
                            Ok(other) => queued.push_back(other),
                            Err(_) => listening = false,
                        }
                        continue;
                    }
                    recv(run.rx) -> msg => msg,
                }
            } else {
                run.rx.recv()
            };
            match msg {
                Ok(Msg::Token(t)) => renderer.write(&t)?,
                Ok(Msg::Finished(r)) => break r,
                Err(_) => break Err(EvalError::WorkerPanic {
                    task: 0,
                    message: "evaluation thread exited".into(),
                }),
            }
        };
        let complete = renderer.is_complete();
        let _ = run.thread.join();
        if let Some(ev) = &evaluator {
            if run.interrupted {
                ev.manager().wait_idle(Duration::from_millis(500));
            }
        }

        let notice = match result {
            Ok(Outcome::Done) if complete => None,
            Ok(Outcome::Done) => Some("-- incomplete output".to_string()),
            Ok(Outcome::BudgetExhausted) => Some("-- step budget exhausted".to_string()),
            Ok(Outcome::Cancelled) => Some("-- interrupted".to_string()),
            Err(e) => Some(format!("error: {e}")),
        };
        if !complete {
            renderer.finish_partial()?;
        }
        writeln!(out)?;
        if let Some(n) = notice {
            writeln!(out, "{n}")?;
        }
        Ok(())
    }
}

/// Run a session on `events`, returning it afterwards.
pub fn run_repl<W: Write>(session: Session, events: Receiver<ReplEvent>, out: W) -> io::Result<Session> {
    let mut repl = Repl::new(session);
    repl.run(events, out)?;
    Ok(repl.into_session())
}

/// Forward the terminal interrupt signal as [`ReplEvent::Interrupt`].
pub fn install_interrupt(tx: Sender<ReplEvent>) -> Result<(), ctrlc::Error> {
    ctrlc::set_handler(move || {
        let _ = tx.send(ReplEvent::Interrupt);
    })
}

/// Non-interactive mode: one term or directive per input line, results on
/// `out`. Interrupts may be injected through `extra`, e.g. from a signal
/// handler.
pub fn run_scripted<R, W>(session: Session, input: R, out: W, extra: Option<(Sender<ReplEvent>, Receiver<ReplEvent>)>) -> io::Result<Session>
where
    R: BufRead + Send + 'static,
    W: Write,
{
    let (tx, rx) = extra.unwrap_or_else(unbounded);
    thread::spawn(move || {
        for line in input.lines() {
            let Ok(line) = line else { break };
            if let Some(e) = line_event(&line) {
                if tx.send(e).is_err() {
                    return;
                }
            }
        }
        let _ = tx.send(ReplEvent::Eof);
    });
    run_repl(session, rx, out)
}

/// Interactive mode on the terminal, with line editing and history.
pub fn run_interactive(session: Session) -> io::Result<Session> {
    use rustyline::error::ReadlineError;

    let (tx, rx) = unbounded();
    let (ready_tx, ready_rx) = unbounded();
    install_interrupt(tx.clone()).map_err(io::Error::other)?;
    let mut editor = rustyline::DefaultEditor::new().map_err(io::Error::other)?;
    let input = thread::spawn(move || {
        while ready_rx.recv().is_ok() {
            let event = loop {
                match editor.readline("λ> ") {
                    Ok(line) => {
                        if let Some(e) = line_event(&line) {
                            let _ = editor.add_history_entry(line.as_str());
                            break e;
                        }
                    }
                    Err(ReadlineError::Interrupted) => continue,
                    Err(_) => break ReplEvent::Eof,
                }
            };
            let eof = event == ReplEvent::Eof;
            if tx.send(event).is_err() || eof {
                return;
            }
        }
    });
    let mut repl = Repl::new(session);
    repl.notify_ready(ready_tx);
    let result = repl.run(rx, io::stdout().lock());
    drop(repl.ready.take());
    let _ = input.join();
    result.map(|()| repl.into_session())
}
