//! Benchmark term families and a median-of-runs timer.
//!
//! Only normalization is timed. Each term is printed, parsed back and
//! compiled before the clock starts, and the parallel evaluator (with its
//! worker threads) is created beforehand too. Every token of the normal
//! form is consumed, counted and thrown away.

use std::fmt::{self, Write as _};
use std::sync::Arc;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::compile::compile;
use crate::machine::{normalize_stream, CancelToken, EvalError, Outcome, StepBudget, TokenCounter};
use crate::parallel::{ParConfig, ParEvaluator, DEFAULT_GRANULARITY};
use crate::repl::Mode;
use crate::syntax::{parse_invocations, parse_term, pretty, ParseError, Term};

/// `\f\z(f)...(f)z` with `n` applications of `f`.
pub fn church(n: usize) -> Term {
    let mut body = Term::var("z");
    for _ in 0..n {
        body = Term::app(Term::var("f"), body);
    }
    Term::abs("f", Term::abs("z", body))
}

/// `((\x\y((a)(x)y)(b)(y)x)Cm)Cn`, whose normal form is
/// `((a)C(n^m))(b)C(m^n)`.
pub fn gen_exponential(m: usize, n: usize) -> Term {
    assert!(m >= 1 && n >= 1, "m and n must be positive");
    let xy = Term::app(Term::var("x"), Term::var("y"));
    let yx = Term::app(Term::var("y"), Term::var("x"));
    let body = Term::app(
        Term::app(Term::var("a"), xy),
        Term::app(Term::var("b"), yx),
    );
    let pair = Term::abs("x", Term::abs("y", body));
    Term::app(Term::app(pair, church(m)), church(n))
}

/// `(\y(...((x)y)y...)y)(\ii)(\ii)...z`: the head `x` applied to
/// `y_count` copies of `y`, and `y` bound to `z` under `id_count`
/// identities.
pub fn gen_identities(y_count: usize, id_count: usize) -> Term {
    assert!(y_count >= 1 && id_count >= 1, "counts must be positive");
    let spine = Term::app_spine(Term::var("x"), (0..y_count).map(|_| Term::var("y")));
    let mut arg = Term::var("z");
    for _ in 0..id_count {
        arg = Term::app(Term::abs("i", Term::var("i")), arg);
    }
    Term::app(Term::abs("y", spine), arg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Exponential { m: usize, n: usize },
    Identities { y_count: usize, id_count: usize },
}

impl Family {
    pub fn term(&self) -> Term {
        match *self {
            Family::Exponential { m, n } => gen_exponential(m, n),
            Family::Identities { y_count, id_count } => gen_identities(y_count, id_count),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Family::Exponential { .. } => "exp",
            Family::Identities { .. } => "id",
        }
    }

    fn params(&self) -> (usize, usize) {
        match *self {
            Family::Exponential { m, n } => (m, n),
            Family::Identities { y_count, id_count } => (y_count, id_count),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Family::Exponential { m, n } => write!(f, "exp m={m} n={n}"),
            Family::Identities { y_count, id_count } => write!(f, "id ys={y_count} ids={id_count}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchSpec {
    pub family: Family,
    pub mode: Mode,
    pub workers: usize,
    pub runs: usize,
    pub granularity: u32,
    pub buffered: bool,
    pub budget: StepBudget,
}

impl BenchSpec {
    pub fn new(family: Family, mode: Mode, workers: usize) -> BenchSpec {
        BenchSpec {
            family,
            mode,
            workers,
            runs: 10,
            granularity: DEFAULT_GRANULARITY,
            buffered: false,
            budget: StepBudget::unlimited(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub spec: BenchSpec,
    pub median: Duration,
    pub all_times: Vec<Duration>,
    pub output_tokens: u64,
    /// Parser calls made while the clock was running; always 0.
    pub parses_in_timed_region: u64,
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("generated term does not parse back: {0}")]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("run {run} of {family} stopped early: {outcome:?}")]
    Incomplete { run: usize, family: Family, outcome: Outcome },
    #[error("runs must be positive")]
    NoRuns,
}

/// Median of a non-empty list; the mean of the middle two for even lengths.
pub fn median(times: &[Duration]) -> Duration {
    let mut sorted = times.to_vec();
    sorted.sort();
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2
    }
}

pub fn run_bench(spec: &BenchSpec) -> Result<BenchResult, BenchError> {
    if spec.runs == 0 {
        return Err(BenchError::NoRuns);
    }
    let text = pretty(&spec.family.term());
    let term = Arc::new(compile(&parse_term(&text)?));
    drop(text);
    let evaluator = match spec.mode {
        Mode::Seq => None,
        Mode::Par => Some(ParEvaluator::new(ParConfig {
            workers: spec.workers,
            granularity: spec.granularity,
            buffered: spec.buffered,
        })),
    };

    let mut all_times = Vec::with_capacity(spec.runs);
    let mut output_tokens = 0;
    let mut parses_in_timed_region = 0;
    for run in 0..spec.runs {
        let cancel = CancelToken::new();
        let mut counter = TokenCounter::default();
        let parses = parse_invocations();
        let start = Instant::now();
        let outcome = match &evaluator {
            Some(ev) => ev.stream(&term, spec.budget, &cancel, &mut counter)?,
            None => normalize_stream(&term, spec.budget, &cancel, &mut counter)?,
        };
        let elapsed = start.elapsed();
        parses_in_timed_region += parse_invocations() - parses;
        if outcome != Outcome::Done {
            return Err(BenchError::Incomplete {
                run,
                family: spec.family,
                outcome,
            });
        }
        all_times.push(elapsed);
        output_tokens = counter.tokens;
    }
    Ok(BenchResult {
        spec: *spec,
        median: median(&all_times),
        all_times,
        output_tokens,
        parses_in_timed_region,
    })
}

/// The exponential grid: every `(m, n)` pair for each mode.
pub fn exponential_grid(ms: &[usize], ns: &[usize], modes: &[Mode], workers: usize, runs: usize) -> Vec<BenchSpec> {
    let mut specs = Vec::new();
    for &mode in modes {
        for &m in ms {
            for &n in ns {
                let mut s = BenchSpec::new(Family::Exponential { m, n }, mode, workers);
                s.runs = runs;
                specs.push(s);
            }
        }
    }
    specs
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Table,
    Csv,
}

const COLUMNS: [&str; 9] = [
    "family",
    "p1",
    "p2",
    "mode",
    "workers",
    "granularity",
    "runs",
    "median_ms",
    "tokens",
];

fn row(r: &BenchResult) -> [String; 9] {
    let (p1, p2) = r.spec.family.params();
    [
        r.spec.family.name().to_string(),
        p1.to_string(),
        p2.to_string(),
        match r.spec.mode {
            Mode::Seq => "seq",
            Mode::Par => "par",
        }
        .to_string(),
        r.spec.workers.to_string(),
        r.spec.granularity.to_string(),
        r.spec.runs.to_string(),
        format!("{:.3}", r.median.as_secs_f64() * 1000.0),
        r.output_tokens.to_string(),
    ]
}

/// Render results. `p1`/`p2` are `m`/`n` for the exponential family and
/// `ys`/`ids` for the identities family.
pub fn report(results: &[BenchResult], format: Format) -> String {
    let rows: Vec<[String; 9]> = results.iter().map(row).collect();
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(COLUMNS).expect("writing to a Vec");
            for r in &rows {
                w.write_record(r).expect("writing to a Vec");
            }
            String::from_utf8(w.into_inner().expect("flushing a Vec")).expect("CSV is UTF-8")
        }
        Format::Table => {
            let mut widths = COLUMNS.map(str::len);
            for r in &rows {
                for (w, cell) in widths.iter_mut().zip(r) {
                    *w = (*w).max(cell.len());
                }
            }
            let mut out = String::new();
            let mut line = |cells: &[&str]| {
                let parts: Vec<String> = cells
                    .iter()
                    .zip(widths)
                    .enumerate()
                    .map(|(i, (c, w))| if i == 0 || i == 3 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                    .collect();
                let _ = writeln!(out, "{}", parts.join("  ").trim_end());
            };
            line(&COLUMNS);
            for r in &rows {
                line(&r.each_ref().map(String::as_str));
            }
            out
        }
    }
}
