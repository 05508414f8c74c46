use std::sync::Arc;

use krivine::machine::{normalize_tokens, render_tokens, Token};
use krivine::{compile, normalize, parse_term, Normalized, StepBudget};

mod common;

const FIX: &str = "\\f(\\x(f)(x)x)\\x(f)(x)x";

fn parsed(src: &str) -> String {
    format!("{:?}", parse_term(src).unwrap())
}

fn compiled(src: &str) -> String {
    format!("{:?}", compile(&parse_term(src).unwrap()))
}

#[test]
fn parser_cases() {
    assert_eq!(parsed("x"), "Variable x");
    assert_eq!(parsed("\\xx"), "Abstraction x (Variable x)");
    assert_eq!(parsed("(\\xx)z"), "Application (Abstraction x (Variable x)) (Variable z)");
    assert_eq!(
        parsed(FIX),
        "Abstraction f (Application (Abstraction x (Application (Variable f) (Application (Variable x) (Variable x)))) \
         (Abstraction x (Application (Variable f) (Application (Variable x) (Variable x)))))"
    );
    assert!(parse_term("").is_err());
}

#[test]
fn compile_cases() {
    assert_eq!(compiled("x"), "Constant x");
    assert_eq!(compiled("\\xx"), "CAbstraction 1 (CVariable 1 1)");
    assert_eq!(compiled("(\\xx)z"), "CApplication (CAbstraction 1 (CVariable 1 1)) (Constant z)");
    assert_eq!(
        compiled(FIX),
        "CAbstraction 1 (CApplication (CAbstraction 1 (CApplication (CVariable 2 1) (CApplication (CVariable 1 1) \
         (CVariable 1 1)))) (CAbstraction 1 (CApplication (CVariable 2 1) (CApplication (CVariable 1 1) (CVariable 1 1)))))"
    );
    assert_eq!(compile(&parse_term("\\x\\y(y)x").unwrap()).to_string(), "λ2([1, 2])[1, 1]");
    assert_eq!(
        compile(&parse_term("\\x(\\y(y)x)x").unwrap()).to_string(),
        "λ1(λ1([1, 1])[2, 1])[1, 1]"
    );
}

#[test]
fn evaluation_cases() {
    let nf = |src: &str| normalize(&parse_term(src).unwrap(), StepBudget::unlimited()).unwrap();
    assert_eq!(nf("x"), Normalized::Done(parse_term("x").unwrap()));
    let id = nf("\\xx");
    assert!(common::alpha_eq(id.term().unwrap(), &parse_term("\\xx").unwrap()));
    assert_eq!(nf("(\\xz)(\\x(x)x)\\x(x)x"), Normalized::Done(parse_term("z").unwrap()));
}

#[test]
fn fixpoint_streams_three_heads() {
    let term = Arc::new(compile(&parse_term(&format!("({FIX})f")).unwrap()));
    let (tokens, _) = normalize_tokens(&term, StepBudget::steps(10_000)).unwrap();
    let third = tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| matches!(t, Token::Head { .. }))
        .nth(2)
        .unwrap()
        .0;
    assert_eq!(render_tokens(&tokens[..=third], false), "(f)(f)(f)");

    // Without an argument the binder is read back under a fresh name.
    let term = Arc::new(compile(&parse_term(FIX).unwrap()));
    let (tokens, _) = normalize_tokens(&term, StepBudget::steps(10_000)).unwrap();
    assert!(render_tokens(&tokens, true).starts_with("\\v1(v1)(v1)(v1)"));
}
