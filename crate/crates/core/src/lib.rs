//! A call-by-name interpreter for the untyped λ-calculus written in Krivine
//! notation (`\x` for λx, `(t)u` for application).
//!
//! Terms are parsed ([`syntax`]), compiled so that bound variables become
//! `⟨v,k⟩` index pairs ([`compile`]), and reduced to β-normal form on a
//! Krivine machine that streams the result as it is produced ([`machine`]).
//! When the machine reaches a free head variable applied to several
//! arguments, [`parallel`] can normalize those arguments on a worker pool.
//! [`repl`] and [`bench`] are the interactive front end and the timing
//! harness.

mod deep;

pub mod bench;
pub mod compile;
pub mod machine;
pub mod parallel;
pub mod repl;
pub mod syntax;

pub use compile::{alpha_equivalent, compile, decompile, CTerm};
pub use machine::{normalize, normalize_stream, Normalized, Outcome, StepBudget, Token};
pub use parallel::{par_normalize, ParConfig, ParEvaluator};
pub use syntax::{free_variables, parse_term, pretty, ParseError, Term};
