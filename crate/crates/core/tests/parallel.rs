use std::sync::Arc;
use std::time::Duration;

use krivine::machine::{normalize_tokens, CancelToken, Outcome, Token};
use krivine::parallel::{ParConfig, ParEvaluator};
use krivine::{compile, normalize, parse_term, pretty, Normalized, StepBudget};

mod common;

fn evaluator(workers: usize, granularity: u32) -> ParEvaluator {
    ParEvaluator::new(ParConfig {
        workers,
        granularity,
        buffered: false,
    })
}

#[test]
fn agrees_with_sequential_on_random_terms() {
    let evs: Vec<_> = [1, 2, 4, 8].iter().map(|&w| evaluator(w, 0)).collect();
    for t in common::seeded_terms(7, 300) {
        let seq = normalize(&t, StepBudget::steps(100_000)).unwrap();
        let Normalized::Done(seq) = seq else { continue };
        for ev in &evs {
            let par = ev.normalize(&t, StepBudget::steps(100_000)).unwrap();
            assert_eq!(par.term(), Some(&seq), "{} with {} workers", pretty(&t), ev.config().workers);
        }
    }
    for ev in &evs {
        assert!(ev.manager().wait_idle(Duration::from_millis(500)));
    }
}

#[test]
fn token_streams_match_sequential_exactly() {
    let ev = evaluator(3, 0);
    for src in [
        "((\\x\\y((a)(x)y)(b)(y)x)\\f\\z(f)(f)z)\\f\\z(f)(f)(f)z",
        "(\\y(((x)y)y)y)(\\ii)(\\ii)z",
        "(((v)\\p(p)(\\qq)r)s)\\x\\y((y)x)x",
    ] {
        let term = Arc::new(compile(&parse_term(src).unwrap()));
        let (seq, _) = normalize_tokens(&term, StepBudget::unlimited()).unwrap();
        let mut par = Vec::new();
        let outcome = ev.stream(&term, StepBudget::unlimited(), &CancelToken::new(), &mut par).unwrap();
        assert_eq!(outcome, Outcome::Done);
        assert_eq!(par, seq, "{src}");
    }
}

#[test]
fn budget_exhaustion_in_a_branch_is_reported() {
    let ev = evaluator(2, 0);
    let term = Arc::new(compile(&parse_term("((a)(\\x(x)x)\\x(x)x)b").unwrap()));
    let mut tokens = Vec::new();
    let outcome = ev.stream(&term, StepBudget::steps(5_000), &CancelToken::new(), &mut tokens).unwrap();
    assert_eq!(outcome, Outcome::BudgetExhausted);
    assert!(matches!(&tokens[0], Token::Head { name, arity: 2 } if &**name == "a"));
    assert!(ev.manager().wait_idle(Duration::from_millis(500)));
}

#[test]
fn cancel_stops_parallel_branches() {
    let ev = Arc::new(evaluator(2, 0));
    let term = Arc::new(compile(&parse_term("(\\w((a)w)(b)w)(\\y(z)(y)y)\\y(z)(y)y").unwrap()));
    let cancel = CancelToken::new();
    let handle = {
        let (ev, term, cancel) = (ev.clone(), term.clone(), cancel.clone());
        std::thread::spawn(move || {
            let mut count = krivine::machine::TokenCounter::default();
            ev.stream(&term, StepBudget::unlimited(), &cancel, &mut count).unwrap()
        })
    };
    std::thread::sleep(Duration::from_millis(50));
    cancel.cancel();
    ev.manager().cancel_all();
    assert_eq!(handle.join().unwrap(), Outcome::Cancelled);
    assert!(ev.manager().wait_idle(Duration::from_millis(500)));
}
