use std::fs;
use std::io::{self, Read, Write};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use crossbeam_channel::unbounded;

use krivine::bench::{run_bench, BenchSpec, Family, Format};
use krivine::compile::compile;
use krivine::machine::{normalize_stream, CancelToken, Outcome, Renderer, StepBudget};
use krivine::parallel::{default_workers, ParConfig, ParEvaluator, DEFAULT_GRANULARITY};
use krivine::repl::{self, Mode, Session};
use krivine::syntax::parse_term;

#[derive(Parser)]
#[command(name = "krivine", version, about = "Call-by-name λ-calculus interpreter in Krivine notation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Interactive loop; reads one term per line from stdin when it is not a terminal.
    Repl(EvalOptions),
    /// Normalize the term in FILE (`-` for stdin) and print it.
    Eval {
        #[command(flatten)]
        options: EvalOptions,
        file: String,
    },
    /// Time the benchmark term families.
    #[command(subcommand)]
    Bench(BenchCommand),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Seq,
    Par,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Seq => Mode::Seq,
            ModeArg::Par => Mode::Par,
        }
    }
}

#[derive(Args)]
struct EvalOptions {
    #[arg(long, value_enum, default_value = "seq")]
    mode: ModeArg,
    #[arg(long, default_value_t = default_workers())]
    workers: usize,
    /// Stop after this many machine transitions.
    #[arg(long)]
    max_steps: Option<u64>,
    /// Smallest argument (in nodes) handed to a worker; 0 splits every head.
    #[arg(long, default_value_t = DEFAULT_GRANULARITY)]
    granularity: u32,
    /// Workers send their output in one piece when done.
    #[arg(long)]
    buffered: bool,
}

impl EvalOptions {
    fn budget(&self) -> StepBudget {
        self.max_steps.map_or(StepBudget::unlimited(), StepBudget::steps)
    }

    fn session(&self) -> Session {
        Session {
            mode: self.mode.into(),
            workers: self.workers.max(1),
            budget: self.budget(),
            granularity: self.granularity,
            buffered: self.buffered,
            history: Vec::new(),
        }
    }
}

#[derive(Args)]
struct BenchOptions {
    #[arg(long, value_enum, value_delimiter = ',', default_value = "seq,par")]
    mode: Vec<ModeArg>,
    #[arg(long, default_value_t = 4)]
    workers: usize,
    #[arg(long, default_value_t = 10)]
    runs: usize,
    #[arg(long, default_value_t = DEFAULT_GRANULARITY)]
    granularity: u32,
    #[arg(long)]
    buffered: bool,
    /// CSV instead of an aligned table.
    #[arg(long)]
    csv: bool,
}

#[derive(Subcommand)]
enum BenchCommand {
    /// `((\x\y((a)(x)y)(b)(y)x)Cm)Cn`
    Exp {
        #[arg(long, value_delimiter = ',', default_value = "6")]
        m: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "6")]
        n: Vec<usize>,
        #[command(flatten)]
        options: BenchOptions,
    },
    /// `(\y((x)y)...y)(\ii)...(\ii)z`
    Id {
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
        ys: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "200000")]
        ids: Vec<usize>,
        #[command(flatten)]
        options: BenchOptions,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Repl(options) => run_repl(&options),
        Command::Eval { options, file } => eval(&options, &file),
        Command::Bench(cmd) => bench(cmd),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("krivine: {e}");
            ExitCode::FAILURE
        }
    }
}

type CliResult = Result<ExitCode, Box<dyn std::error::Error>>;

fn run_repl(options: &EvalOptions) -> CliResult {
    use std::io::IsTerminal;

    let session = options.session();
    if io::stdin().is_terminal() {
        repl::run_interactive(session)?;
    } else {
        let (tx, rx) = unbounded();
        repl::install_interrupt(tx.clone())?;
        repl::run_scripted(session, io::BufReader::new(io::stdin()), io::stdout().lock(), Some((tx, rx)))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn eval(options: &EvalOptions, file: &str) -> CliResult {
    let text = if file == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        s
    } else {
        fs::read_to_string(file)?
    };
    let term = match parse_term(text.trim()) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{file}: {e}");
            return Ok(ExitCode::from(2));
        }
    };
    let term = Arc::new(compile(&term));
    let cancel = CancelToken::new();
    {
        let cancel = cancel.clone();
        ctrlc::set_handler(move || cancel.cancel())?;
    }
    let mut out = Renderer::new(io::stdout().lock());
    let outcome = match options.mode {
        ModeArg::Seq => normalize_stream(&term, options.budget(), &cancel, &mut out)?,
        ModeArg::Par => {
            let ev = ParEvaluator::new(ParConfig {
                workers: options.workers.max(1),
                granularity: options.granularity,
                buffered: options.buffered,
            });
            ev.stream(&term, options.budget(), &cancel, &mut out)?
        }
    };
    if let Some(e) = out.take_error() {
        return Err(e.into());
    }
    if !out.is_complete() {
        out.finish_partial()?;
    }
    let mut stdout = out.into_inner();
    writeln!(stdout)?;
    stdout.flush()?;
    Ok(match outcome {
        Outcome::Done => ExitCode::SUCCESS,
        Outcome::BudgetExhausted => {
            eprintln!("step budget exhausted");
            ExitCode::from(3)
        }
        Outcome::Cancelled => {
            eprintln!("interrupted");
            ExitCode::from(130)
        }
    })
}

fn bench(cmd: BenchCommand) -> CliResult {
    let (families, options): (Vec<Family>, _) = match cmd {
        BenchCommand::Exp { m, n, options } => (
            m.iter()
                .flat_map(|&m| n.iter().map(move |&n| Family::Exponential { m, n }))
                .collect(),
            options,
        ),
        BenchCommand::Id { ys, ids, options } => (
            ids.iter()
                .flat_map(|&id_count| ys.iter().map(move |&y_count| Family::Identities { y_count, id_count }))
                .collect(),
            options,
        ),
    };
    if families.iter().any(|f| match *f {
        Family::Exponential { m, n } => m == 0 || n == 0,
        Family::Identities { y_count, id_count } => y_count == 0 || id_count == 0,
    }) {
        return Err("benchmark parameters must be positive".into());
    }
    let mut results = Vec::new();
    for &mode in &options.mode {
        for &family in &families {
            let spec = BenchSpec {
                runs: options.runs,
                granularity: options.granularity,
                buffered: options.buffered,
                ..BenchSpec::new(family, mode.into(), options.workers.max(1))
            };
            eprintln!("running {family} ({})", if matches!(mode, ModeArg::Seq) { "seq" } else { "par" });
            results.push(run_bench(&spec)?);
        }
    }
    let format = if options.csv { Format::Csv } else { Format::Table };
    print!("{}", krivine::bench::report(&results, format));
    Ok(ExitCode::SUCCESS)
}
