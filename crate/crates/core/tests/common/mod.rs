//! Shared test support: random terms and a reference normalizer that works
//! by plain capture-avoiding substitution on named terms.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use krivine::Term;
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const BINDERS: [&str; 4] = ["x", "y", "z", "w"];
pub const FREE: [&str; 3] = ["a", "b", "f"];
pub const MAX_SIZE: usize = 60;

fn leaf_names() -> Vec<&'static str> {
    BINDERS.iter().chain(FREE.iter()).copied().collect()
}

/// Proptest strategy for terms of at most `MAX_SIZE` nodes over a small
/// alphabet, so that shadowing and capture situations come up often.
pub fn arb_term() -> impl Strategy<Value = Term> {
    let leaf = prop::sample::select(leaf_names()).prop_map(Term::var);
    leaf.prop_recursive(8, MAX_SIZE as u32, 2, |inner| {
        prop_oneof![
            (prop::sample::select(BINDERS.to_vec()), inner.clone()).prop_map(|(x, t)| Term::abs(x, t)),
            (inner.clone(), inner.clone()).prop_map(|(t, u)| Term::app(t, u)),
            // A redex, to make reduction likely.
            (prop::sample::select(BINDERS.to_vec()), inner.clone(), inner)
                .prop_map(|(x, t, u)| Term::app(Term::abs(x, t), u)),
        ]
    })
    .prop_filter("size bound", |t| t.size() <= MAX_SIZE)
}

/// A seeded random term with at most `budget` nodes.
pub fn random_term(rng: &mut impl Rng, budget: usize) -> Term {
    let names = leaf_names();
    if budget <= 1 {
        return Term::var(names[rng.gen_range(0..names.len())]);
    }
    match rng.gen_range(0..10) {
        0..=1 => Term::var(names[rng.gen_range(0..names.len())]),
        2..=4 => Term::abs(BINDERS[rng.gen_range(0..4)], random_term(rng, budget - 1)),
        5..=7 => {
            let left = rng.gen_range(1..budget);
            Term::app(random_term(rng, left), random_term(rng, budget - left))
        }
        _ if budget >= 3 => {
            let left = rng.gen_range(1..budget - 1);
            Term::app(
                Term::abs(BINDERS[rng.gen_range(0..4)], random_term(rng, left)),
                random_term(rng, budget - 1 - left),
            )
        }
        _ => Term::var(names[rng.gen_range(0..names.len())]),
    }
}

pub fn seeded_terms(seed: u64, count: usize) -> Vec<Term> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let budget = rng.gen_range(1..=MAX_SIZE);
            random_term(&mut rng, budget)
        })
        .collect()
}

/// Two names for a term are α-equivalent iff their nameless forms are equal.
pub fn nameless(t: &Term) -> String {
    fn go(t: &Term, scope: &mut Vec<String>, out: &mut String) {
        match t {
            Term::Variable(x) => match scope.iter().rev().position(|b| b == x) {
                Some(i) => out.push_str(&format!("#{i}")),
                None => out.push_str(x),
            },
            Term::Abstraction(x, body) => {
                out.push('L');
                scope.push(x.clone());
                go(body, scope, out);
                scope.pop();
            }
            Term::Application(f, a) => {
                out.push('(');
                go(f, scope, out);
                out.push(' ');
                go(a, scope, out);
                out.push(')');
            }
        }
    }
    let mut out = String::new();
    go(t, &mut Vec::new(), &mut out);
    out
}

pub fn alpha_eq(a: &Term, b: &Term) -> bool {
    nameless(a) == nameless(b)
}

pub fn free_vars(t: &Term) -> BTreeSet<String> {
    match t {
        Term::Variable(x) => BTreeSet::from([x.clone()]),
        Term::Abstraction(x, body) => {
            let mut s = free_vars(body);
            s.remove(x);
            s
        }
        Term::Application(f, a) => {
            let mut s = free_vars(f);
            s.extend(free_vars(a));
            s
        }
    }
}

pub fn has_redex(t: &Term) -> bool {
    match t {
        Term::Variable(_) => false,
        Term::Abstraction(_, b) => has_redex(b),
        Term::Application(f, a) => matches!(**f, Term::Abstraction(..)) || has_redex(f) || has_redex(a),
    }
}

/// Rename every binder to a fresh name, keeping the term α-equivalent.
pub fn rename_binders(t: &Term, salt: usize) -> Term {
    fn go(t: &Term, env: &mut HashMap<String, Vec<String>>, counter: &mut usize, salt: usize) -> Term {
        match t {
            Term::Variable(x) => Term::var(env.get(x).and_then(|v| v.last()).cloned().unwrap_or_else(|| x.clone())),
            Term::Abstraction(x, body) => {
                *counter += 1;
                let fresh = format!("r{}", *counter * 7 + salt);
                env.entry(x.clone()).or_default().push(fresh.clone());
                let body = go(body, env, counter, salt);
                env.get_mut(x).unwrap().pop();
                Term::abs(fresh, body)
            }
            Term::Application(f, a) => Term::app(go(f, env, counter, salt), go(a, env, counter, salt)),
        }
    }
    go(t, &mut HashMap::new(), &mut 0, salt)
}

pub enum OracleResult {
    Normal(Term),
    /// More than the step limit, or the term grew past the size cap.
    GaveUp,
}

pub struct Oracle {
    pub step_limit: usize,
    pub size_cap: usize,
    fresh: usize,
}

impl Default for Oracle {
    fn default() -> Self {
        Oracle {
            step_limit: 10_000,
            size_cap: 20_000,
            fresh: 0,
        }
    }
}

impl Oracle {
    /// Leftmost-outermost reduction to normal form.
    pub fn normalize(&mut self, t: &Term) -> OracleResult {
        let mut t = t.clone();
        for _ in 0..self.step_limit {
            match self.step(&t) {
                None => return OracleResult::Normal(t),
                Some(next) => {
                    if next.size() > self.size_cap {
                        return OracleResult::GaveUp;
                    }
                    t = next;
                }
            }
        }
        OracleResult::GaveUp
    }

    fn step(&mut self, t: &Term) -> Option<Term> {
        match t {
            Term::Variable(_) => None,
            Term::Abstraction(x, body) => self.step(body).map(|b| Term::abs(x.clone(), b)),
            Term::Application(f, a) => {
                if let Term::Abstraction(x, body) = &**f {
                    return Some(self.subst(body, x, a));
                }
                if let Some(f2) = self.step(f) {
                    return Some(Term::app(f2, (**a).clone()));
                }
                self.step(a).map(|a2| Term::app((**f).clone(), a2))
            }
        }
    }

    /// `t[x := s]`, renaming binders that would capture free variables of `s`.
    fn subst(&mut self, t: &Term, x: &str, s: &Term) -> Term {
        match t {
            Term::Variable(y) if y == x => s.clone(),
            Term::Variable(_) => t.clone(),
            Term::Application(f, a) => Term::app(self.subst(f, x, s), self.subst(a, x, s)),
            Term::Abstraction(y, _) if y == x => t.clone(),
            Term::Abstraction(y, body) => {
                let fv = free_vars(s);
                if fv.contains(y) && free_vars(body).contains(x) {
                    self.fresh += 1;
                    let z = format!("o{}", self.fresh);
                    let renamed = self.subst(body, y, &Term::var(z.clone()));
                    Term::abs(z, self.subst(&renamed, x, s))
                } else {
                    Term::abs(y.clone(), self.subst(body, x, s))
                }
            }
        }
    }
}

pub fn oracle(t: &Term) -> Option<Term> {
    match Oracle::default().normalize(t) {
        OracleResult::Normal(n) => Some(n),
        OracleResult::GaveUp => None,
    }
}

pub fn church(n: usize) -> Term {
    let mut body = Term::var("z");
    for _ in 0..n {
        body = Term::app(Term::var("f"), body);
    }
    Term::abs("f", Term::abs("z", body))
}
