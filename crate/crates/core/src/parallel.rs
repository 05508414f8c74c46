//! Parallel normalization of head spines.
//!
//! When the machine reaches a free variable applied to arguments,
//! `(...((v)u1)u2...)un`, the arguments are independent: each can be
//! normalized by its own machine. The evaluator hands such arguments to a
//! [`Manager`] as [`Task`]s and stitches the results back in spine order.
//! Applications and λ-groups never split, and neither does a head with a
//! single argument.
//!
//! The manager owns the table of live tasks; a fixed set of worker threads
//! takes tasks from its queue. A thread waiting for an argument that no
//! worker has picked up yet claims it and runs it itself, so nested splits
//! cannot deadlock however few workers there are. Closures cross threads by
//! reference to the shared, immutable term and environments.
//!
//! Arguments are released in order: tokens of argument `i` are forwarded as
//! they arrive once argument `i − 1` is finished, and later arguments buffer
//! in their reply channels meanwhile.

use std::collections::BTreeMap;
use std::panic::{self, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use crossbeam_channel::{unbounded, Receiver, Sender};

use crate::compile::{compile, CTerm, Namer};
use crate::machine::{
    finish, CancelToken, Closure, Code, Engine, Env, EvalError, Normalized, Outcome, Shape, SplitOutcome, Splitter,
    StepBudget, Token, TokenSink,
};
use crate::syntax::Term;

pub type TaskId = u64;

/// Arguments smaller than this many nodes are normalized in place.
pub const DEFAULT_GRANULARITY: u32 = 16;

const CHUNK_TOKENS: usize = 256;
const CHUNK_AGE: Duration = Duration::from_millis(10);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParConfig {
    pub workers: usize,
    /// Minimum argument size (in compiled nodes, after resolving variable
    /// indirections) for an argument to be dispatched. 0 dispatches every
    /// argument of a splittable head.
    pub granularity: u32,
    /// Workers send their whole output at the end instead of streaming it.
    pub buffered: bool,
}

impl Default for ParConfig {
    fn default() -> Self {
        ParConfig {
            workers: default_workers(),
            granularity: DEFAULT_GRANULARITY,
            buffered: false,
        }
    }
}

impl ParConfig {
    pub fn with_workers(workers: usize) -> ParConfig {
        ParConfig {
            workers,
            ..ParConfig::default()
        }
    }
}

pub fn default_workers() -> usize {
    thread::available_parallelism().map_or(1, |n| n.get())
}

/// A closure to normalize.
pub struct Task {
    pub id: TaskId,
    pub term: Arc<CTerm>,
    pub closure: Closure,
    pub budget: StepBudget,
    /// Readback binders already in scope around the closure.
    pub depth: u32,
    pub namer: Namer,
    pub cancel: CancelToken,
    pub config: ParConfig,
    pub reply_to: Sender<Reply>,
}

/// Messages on a task's reply channel: any number of `Tokens` chunks, then
/// one `Finished`.
#[derive(Debug)]
pub enum Reply {
    Tokens(Vec<Token>),
    Finished { status: TaskStatus, used: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TaskStatus {
    Done,
    BudgetExhausted,
    Cancelled,
    Failed(String),
}

impl From<Outcome> for TaskStatus {
    fn from(o: Outcome) -> TaskStatus {
        match o {
            Outcome::Done => TaskStatus::Done,
            Outcome::BudgetExhausted => TaskStatus::BudgetExhausted,
            Outcome::Cancelled => TaskStatus::Cancelled,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskResult {
    pub id: TaskId,
    pub tokens: Vec<Token>,
    pub status: TaskStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskState {
    Queued,
    Running,
}

/// Snapshot of the manager's table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManagerInfo {
    pub active_tasks: BTreeMap<TaskId, TaskState>,
    pub worker_count: usize,
}

struct Slot {
    task: Task,
    claimed: AtomicBool,
}

impl Slot {
    fn claim(&self) -> bool {
        !self.claimed.swap(true, Ordering::AcqRel)
    }
}

enum Control {
    Submit(Arc<Slot>),
    Started(TaskId),
    Finished(TaskId),
    CancelAll,
    Info(Sender<ManagerInfo>),
    Shutdown,
}

struct Core {
    control: Sender<Control>,
    next_id: AtomicU64,
    workers: usize,
}

/// Owns the task table and the worker threads.
pub struct Manager {
    core: Arc<Core>,
    threads: Vec<JoinHandle<()>>,
}

impl Manager {
    pub fn new(workers: usize) -> Manager {
        let workers = workers.max(1);
        let (control, inbox) = unbounded();
        let (queue_tx, queue_rx) = unbounded::<Arc<Slot>>();
        let core = Arc::new(Core {
            control,
            next_id: AtomicU64::new(1),
            workers,
        });
        let mut threads = Vec::with_capacity(workers + 1);
        threads.push(
            thread::Builder::new()
                .name("krivine-manager".into())
                .spawn(move || manager_loop(inbox, queue_tx, workers))
                .expect("spawn manager thread"),
        );
        for i in 0..workers {
            let core = core.clone();
            let queue = queue_rx.clone();
            threads.push(
                thread::Builder::new()
                    .name(format!("krivine-worker-{i}"))
                    .spawn(move || worker_loop(&core, queue))
                    .expect("spawn worker thread"),
            );
        }
        Manager { core, threads }
    }

    pub fn workers(&self) -> usize {
        self.core.workers
    }

    pub fn next_task_id(&self) -> TaskId {
        self.core.next_id()
    }

    /// Queue a task. Its output arrives on `task.reply_to`.
    pub fn submit(&self, task: Task) {
        self.core.submit(Arc::new(Slot {
            task,
            claimed: AtomicBool::new(false),
        }));
    }

    /// Normalize `closure` as a standalone task and return its reply channel.
    pub fn spawn(&self, term: &Arc<CTerm>, closure: Closure, budget: StepBudget, cancel: &CancelToken) -> (TaskId, Receiver<Reply>) {
        let (reply_to, rx) = unbounded();
        let id = self.next_task_id();
        self.submit(Task {
            id,
            term: term.clone(),
            closure,
            budget,
            depth: 0,
            namer: Namer::for_term(term),
            cancel: cancel.clone(),
            config: ParConfig::with_workers(self.core.workers),
            reply_to,
        });
        (id, rx)
    }

    /// Cancel every task currently in the table.
    pub fn cancel_all(&self) {
        let _ = self.core.control.send(Control::CancelAll);
    }

    pub fn info(&self) -> ManagerInfo {
        let (tx, rx) = unbounded();
        if self.core.control.send(Control::Info(tx)).is_err() {
            return ManagerInfo {
                active_tasks: BTreeMap::new(),
                worker_count: self.core.workers,
            };
        }
        rx.recv().expect("manager answers info requests")
    }

    /// Poll [`Manager::info`] until no task is active or `timeout` passes.
    pub fn wait_idle(&self, timeout: Duration) -> bool {
        let deadline = Instant::now() + timeout;
        loop {
            if self.info().active_tasks.is_empty() {
                return true;
            }
            if Instant::now() >= deadline {
                return false;
            }
            thread::sleep(Duration::from_millis(1));
        }
    }
}

impl Drop for Manager {
    fn drop(&mut self) {
        let _ = self.core.control.send(Control::Shutdown);
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }
}

impl Core {
    fn next_id(&self) -> TaskId {
        self.next_id.fetch_add(1, Ordering::Relaxed)
    }

    fn submit(&self, slot: Arc<Slot>) {
        let _ = self.control.send(Control::Submit(slot));
    }

    fn started(&self, id: TaskId) {
        let _ = self.control.send(Control::Started(id));
    }

    fn finished(&self, id: TaskId) {
        let _ = self.control.send(Control::Finished(id));
    }
}

fn manager_loop(inbox: Receiver<Control>, queue: Sender<Arc<Slot>>, workers: usize) {
    let mut table: BTreeMap<TaskId, (TaskState, CancelToken)> = BTreeMap::new();
    for msg in inbox {
        match msg {
            Control::Submit(slot) => {
                table.insert(slot.task.id, (TaskState::Queued, slot.task.cancel.clone()));
                let _ = queue.send(slot);
            }
            Control::Started(id) => {
                if let Some(entry) = table.get_mut(&id) {
                    entry.0 = TaskState::Running;
                }
            }
            Control::Finished(id) => {
                table.remove(&id);
            }
            Control::CancelAll => {
                for (_, cancel) in table.values() {
                    cancel.cancel();
                }
            }
            Control::Info(reply) => {
                let _ = reply.send(ManagerInfo {
                    active_tasks: table.iter().map(|(id, (state, _))| (*id, *state)).collect(),
                    worker_count: workers,
                });
            }
            Control::Shutdown => break,
        }
    }
    // Dropping the queue sender lets the workers run out of work and exit.
}

fn worker_loop(core: &Core, queue: Receiver<Arc<Slot>>) {
    for slot in queue {
        if slot.claim() {
            execute(core, &slot.task);
        }
    }
}

/// Run a claimed task to completion, reporting to the manager and to the
/// task's reply channel.
fn execute(core: &Core, task: &Task) {
    core.started(task.id);
    let mut sink = ReplySink::new(&task.reply_to, task.config.buffered);
    let result = panic::catch_unwind(AssertUnwindSafe(|| {
        let splitter = ParSplitter {
            core,
            config: task.config,
        };
        let mut engine = Engine::new(&task.term, task.namer.clone(), &task.cancel, task.budget, Some(&splitter));
        let outcome = engine.run(task.closure.clone(), task.depth, &mut sink);
        (outcome, engine.meter.used())
    }));
    let (status, used) = match result {
        Ok((Ok(outcome), used)) => (outcome.into(), used),
        Ok((Err(e), used)) => (TaskStatus::Failed(e.to_string()), used),
        Err(payload) => (TaskStatus::Failed(panic_message(&payload)), 0),
    };
    sink.flush();
    let _ = task.reply_to.send(Reply::Finished { status, used });
    core.finished(task.id);
}

fn panic_message(payload: &Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        s.to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "worker panicked".into()
    }
}

/// Batches tokens onto a reply channel.
struct ReplySink<'a> {
    reply_to: &'a Sender<Reply>,
    buffer: Vec<Token>,
    buffered: bool,
    last_flush: Instant,
}

impl<'a> ReplySink<'a> {
    fn new(reply_to: &'a Sender<Reply>, buffered: bool) -> Self {
        ReplySink {
            reply_to,
            buffer: Vec::new(),
            buffered,
            last_flush: Instant::now(),
        }
    }

    fn flush(&mut self) {
        if !self.buffer.is_empty() {
            let _ = self.reply_to.send(Reply::Tokens(std::mem::take(&mut self.buffer)));
        }
        self.last_flush = Instant::now();
    }
}

impl TokenSink for ReplySink<'_> {
    fn push(&mut self, token: Token) {
        self.buffer.push(token);
        if self.buffered {
            return;
        }
        let n = self.buffer.len();
        if n >= CHUNK_TOKENS || (n.is_multiple_of(16) && self.last_flush.elapsed() >= CHUNK_AGE) {
            self.flush();
        }
    }
}

/// Forwards tokens while tracking structure, so a cut-off argument can be
/// closed before its `ArgEnd`.
struct Tracked<'s> {
    inner: &'s mut dyn TokenSink,
    shape: Shape,
}

impl TokenSink for Tracked<'_> {
    fn push(&mut self, token: Token) {
        self.shape.feed(&token);
        self.inner.push(token);
    }
}

impl Tracked<'_> {
    /// Close an unfinished argument body, then the argument.
    fn close_argument(&mut self, outcome: Outcome) {
        if outcome != Outcome::Done {
            for t in self.shape.completion() {
                self.push(t);
            }
        }
        self.inner.push(Token::ArgEnd);
    }
}

enum Plan {
    Inline(Closure, StepBudget),
    Dispatched(Arc<Slot>, Receiver<Reply>),
}

struct ParSplitter<'c> {
    core: &'c Core,
    config: ParConfig,
}

impl ParSplitter<'_> {
    /// Run `closure` on this thread with its own budget.
    fn run_inline(
        &self,
        parent: &Engine<'_>,
        closure: Closure,
        budget: StepBudget,
        depth: u32,
        sink: &mut dyn TokenSink,
    ) -> Result<(Outcome, u64), EvalError> {
        let mut engine = Engine::new(parent.term, parent.namer.clone(), parent.cancel, budget, parent.splitter());
        let outcome = engine.run(closure, depth, sink)?;
        Ok((outcome, engine.meter.used()))
    }

    fn drain(&self, id: TaskId, rx: &Receiver<Reply>, sink: &mut dyn TokenSink) -> Result<(Outcome, u64), EvalError> {
        loop {
            match rx.recv() {
                Ok(Reply::Tokens(tokens)) => sink.push_all(tokens),
                Ok(Reply::Finished { status, used }) => {
                    let outcome = match status {
                        TaskStatus::Done => Outcome::Done,
                        TaskStatus::BudgetExhausted => Outcome::BudgetExhausted,
                        TaskStatus::Cancelled => Outcome::Cancelled,
                        TaskStatus::Failed(message) => return Err(EvalError::WorkerPanic { task: id, message }),
                    };
                    return Ok((outcome, used));
                }
                Err(_) => {
                    return Err(EvalError::WorkerPanic {
                        task: id,
                        message: "reply channel closed".into(),
                    })
                }
            }
        }
    }

    /// Take back every task of this split that no worker has started.
    fn withdraw(&self, plans: &[Plan]) {
        for plan in plans {
            if let Plan::Dispatched(slot, _) = plan {
                if slot.claim() {
                    self.core.finished(slot.task.id);
                }
            }
        }
    }
}

impl Splitter for ParSplitter<'_> {
    fn split(
        &self,
        parent: &Engine<'_>,
        args: Vec<Closure>,
        depth: u32,
        sink: &mut dyn TokenSink,
    ) -> Result<Result<SplitOutcome, Vec<Closure>>, EvalError> {
        if self.config.workers <= 1 {
            return Ok(Err(args));
        }
        let big: Vec<bool> = args
            .iter()
            .map(|a| a.effective_size(parent.term) >= self.config.granularity)
            .collect();
        if big.iter().filter(|b| **b).count() < 2 {
            return Ok(Err(args));
        }

        let shares = parent.meter.shares(args.len());
        let mut plans = Vec::with_capacity(args.len());
        for ((closure, budget), big) in args.into_iter().zip(shares).zip(big) {
            if !big {
                plans.push(Plan::Inline(closure, budget));
                continue;
            }
            let (reply_to, rx) = unbounded();
            let slot = Arc::new(Slot {
                task: Task {
                    id: self.core.next_id(),
                    term: parent.term.clone(),
                    closure,
                    budget,
                    depth,
                    namer: parent.namer.clone(),
                    cancel: parent.cancel.clone(),
                    config: self.config,
                    reply_to,
                },
                claimed: AtomicBool::new(false),
            });
            self.core.submit(slot.clone());
            plans.push(Plan::Dispatched(slot, rx));
        }

        let mut used = 0;
        let mut combined = Outcome::Done;
        let mut plans = plans.into_iter();
        while let Some(plan) = plans.next() {
            sink.push(Token::ArgStart);
            let mut arg = Tracked {
                inner: &mut *sink,
                shape: Shape::new(),
            };
            let result = match plan {
                Plan::Inline(closure, budget) => self.run_inline(parent, closure, budget, depth, &mut arg),
                Plan::Dispatched(slot, rx) => {
                    let task = &slot.task;
                    if slot.claim() {
                        self.core.started(task.id);
                        let r = self.run_inline(parent, task.closure.clone(), task.budget, depth, &mut arg);
                        self.core.finished(task.id);
                        r
                    } else {
                        self.drain(task.id, &rx, &mut arg)
                    }
                }
            };
            let (outcome, steps) = match result {
                Ok(r) => r,
                Err(e) => {
                    // the evaluation is lost; stop whatever still runs for it
                    parent.cancel.cancel();
                    self.withdraw(plans.as_slice());
                    return Err(e);
                }
            };
            used += steps;
            arg.close_argument(outcome);
            match outcome {
                Outcome::Done => {}
                Outcome::BudgetExhausted => combined = Outcome::BudgetExhausted,
                Outcome::Cancelled => {
                    for plan in plans.by_ref() {
                        if let Plan::Dispatched(slot, rx) = plan {
                            if slot.claim() {
                                self.core.finished(slot.task.id);
                            } else {
                                // a worker has it and stops at its next poll
                                let _ = self.drain(slot.task.id, &rx, &mut Vec::new());
                            }
                        }
                    }
                    return Ok(Ok(SplitOutcome {
                        used,
                        outcome: Outcome::Cancelled,
                    }));
                }
            }
        }
        Ok(Ok(SplitOutcome { used, outcome: combined }))
    }
}

/// Stitch per-argument results into the stream of `(...(head)r1...)rn`.
/// Unfinished results are closed with `Elided`.
pub fn combine(head: &str, results: &[TaskResult]) -> Vec<Token> {
    let mut out = vec![Token::Head {
        name: head.into(),
        arity: results.len(),
    }];
    for r in results {
        out.push(Token::ArgStart);
        let mut arg = Tracked {
            inner: &mut out,
            shape: Shape::new(),
        };
        for t in &r.tokens {
            arg.push(t.clone());
        }
        arg.close_argument(if r.status == TaskStatus::Done {
            Outcome::Done
        } else {
            Outcome::BudgetExhausted
        });
    }
    out
}

/// Collect a task's replies into one result.
pub fn collect(id: TaskId, rx: &Receiver<Reply>) -> TaskResult {
    let mut tokens = Vec::new();
    for reply in rx {
        match reply {
            Reply::Tokens(mut t) => tokens.append(&mut t),
            Reply::Finished { status, .. } => return TaskResult { id, tokens, status },
        }
    }
    TaskResult {
        id,
        tokens,
        status: TaskStatus::Failed("reply channel closed".into()),
    }
}

/// Evaluates terms with a long-lived manager.
pub struct ParEvaluator {
    manager: Manager,
    config: ParConfig,
}

impl ParEvaluator {
    pub fn new(config: ParConfig) -> ParEvaluator {
        ParEvaluator {
            manager: Manager::new(config.workers),
            config,
        }
    }

    pub fn config(&self) -> ParConfig {
        self.config
    }

    pub fn manager(&self) -> &Manager {
        &self.manager
    }

    /// Stream the normal form of `term`. The head spine runs on the calling
    /// thread; splittable heads fan out to the workers.
    pub fn stream(
        &self,
        term: &Arc<CTerm>,
        budget: StepBudget,
        cancel: &CancelToken,
        sink: &mut dyn TokenSink,
    ) -> Result<Outcome, EvalError> {
        let splitter = ParSplitter {
            core: &self.manager.core,
            config: self.config,
        };
        let mut engine = Engine::new(term, Namer::for_term(term), cancel, budget, Some(&splitter));
        engine.run(Closure::new(Code::Node(term.root()), Env::empty()), 0, sink)
    }

    pub fn normalize(&self, t: &Term, budget: StepBudget) -> Result<Normalized, EvalError> {
        let term = Arc::new(compile(t));
        let mut tokens = Vec::new();
        let outcome = self.stream(&term, budget, &CancelToken::new(), &mut tokens)?;
        Ok(finish(&tokens, outcome))
    }
}

/// One-shot parallel normalization with default granularity.
pub fn par_normalize(t: &Term, workers: usize, budget: StepBudget) -> Result<Normalized, EvalError> {
    ParEvaluator::new(ParConfig::with_workers(workers)).normalize(t, budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::{normalize, render_tokens};
    use crate::syntax::parse_term;

    const TWO_BRANCH: &str = "(\\w((a)w)(b)w)(\\y(z)(y)y)\\y(z)(y)y";

    fn closure_of(term: &Arc<CTerm>) -> Closure {
        Closure::new(Code::Node(term.root()), Env::empty())
    }

    fn evaluator(workers: usize, granularity: u32) -> ParEvaluator {
        ParEvaluator::new(ParConfig {
            workers,
            granularity,
            buffered: false,
        })
    }

    #[test]
    fn idle_manager_has_no_tasks() {
        let m = Manager::new(2);
        let info = m.info();
        assert!(info.active_tasks.is_empty());
        assert_eq!(info.worker_count, 2);
    }

    #[test]
    fn single_task_round_trip() {
        let m = Manager::new(1);
        let term = Arc::new(compile(&parse_term("z").unwrap()));
        let (id, rx) = m.spawn(&term, closure_of(&term), StepBudget::unlimited(), &CancelToken::new());
        let result = collect(id, &rx);
        assert_eq!(result.status, TaskStatus::Done);
        assert_eq!(
            result.tokens,
            [Token::Head {
                name: "z".into(),
                arity: 0
            }]
        );
        assert!(m.wait_idle(Duration::from_millis(500)));
    }

    #[test]
    fn cancel_all_drains_running_task() {
        let m = Manager::new(2);
        let term = Arc::new(compile(&parse_term("(\\f(\\x(f)(x)x)\\x(f)(x)x)f").unwrap()));
        let (id, rx) = m.spawn(&term, closure_of(&term), StepBudget::unlimited(), &CancelToken::new());
        thread::sleep(Duration::from_millis(30));
        assert_eq!(m.info().active_tasks.get(&id), Some(&TaskState::Running));
        let t0 = Instant::now();
        m.cancel_all();
        assert!(m.wait_idle(Duration::from_millis(500)));
        assert!(t0.elapsed() < Duration::from_millis(500));
        let result = collect(id, &rx);
        assert_eq!(result.status, TaskStatus::Cancelled);
        assert!(render_tokens(&result.tokens, true).starts_with("(f)(f)(f)"));
    }

    #[test]
    fn combine_in_spine_order() {
        let leaf = |name: &str| TaskResult {
            id: 0,
            tokens: vec![Token::Head {
                name: name.into(),
                arity: 0,
            }],
            status: TaskStatus::Done,
        };
        assert_eq!(render_tokens(&combine("v", &[leaf("z")]), false), "(v)z");
        assert_eq!(render_tokens(&combine("v", &[leaf("z"), leaf("w")]), false), "((v)z)w");

        let cut = TaskResult {
            id: 0,
            tokens: vec![Token::Head {
                name: "z".into(),
                arity: 1,
            }],
            status: TaskStatus::BudgetExhausted,
        };
        assert_eq!(render_tokens(&combine("a", &[cut, leaf("w")]), false), "((a)(z)...)w");
    }

    #[test]
    fn no_split_cases_match_sequential() {
        let ev = evaluator(4, 0);
        let omega = parse_term("(\\xz)(\\x(x)x)\\x(x)x").unwrap();
        assert_eq!(ev.normalize(&omega, StepBudget::unlimited()).unwrap(), Normalized::Done(Term::var("z")));
        assert!(ev.manager().wait_idle(Duration::from_millis(500)));
    }

    #[test]
    fn split_matches_sequential() {
        for workers in [1, 2, 4] {
            let ev = evaluator(workers, 0);
            for src in [
                "(((v)(\\xx)a)(\\x\\y(y)x)b)c",
                "(\\f((f)(\\xx)p)(\\x\\y(x)y)q)\\g\\h((g)h)(h)g",
                "((\\x\\y((a)(x)y)(b)(y)x)\\f\\z(f)(f)z)\\f\\z(f)(f)(f)z",
            ] {
                let t = parse_term(src).unwrap();
                let seq = normalize(&t, StepBudget::unlimited()).unwrap();
                let par = ev.normalize(&t, StepBudget::unlimited()).unwrap();
                assert_eq!(par, seq, "{src} with {workers} workers");
            }
        }
    }

    #[test]
    fn both_branches_stream_under_a_budget() {
        let ev = evaluator(2, 0);
        let r = ev.normalize(&parse_term(TWO_BRANCH).unwrap(), StepBudget::steps(10_000)).unwrap();
        let Normalized::Partial(text) = r else { panic!("{r:?}") };
        assert!(text.starts_with("((a)(z)(z)(z)"), "{text}");
        assert!(text.contains(")(b)(z)(z)(z)"), "{text}");
        assert!(ev.manager().wait_idle(Duration::from_millis(500)));
    }

    #[test]
    fn buffered_mode_gives_same_result() {
        let ev = ParEvaluator::new(ParConfig {
            workers: 2,
            granularity: 0,
            buffered: true,
        });
        let t = parse_term("((\\x\\y((a)(x)y)(b)(y)x)\\f\\z(f)(f)z)\\f\\z(f)(f)(f)z").unwrap();
        assert_eq!(
            ev.normalize(&t, StepBudget::unlimited()).unwrap(),
            normalize(&t, StepBudget::unlimited()).unwrap()
        );
    }
}
