use krivine::bench::{gen_exponential, gen_identities, report, run_bench, BenchSpec, Family, Format};
use krivine::repl::Mode;
use krivine::{normalize, par_normalize, parse_term, pretty, StepBudget, Term};

mod common;

fn check(t: &Term) {
    let expected = common::oracle(t).expect("oracle terminates");
    let seq = normalize(t, StepBudget::unlimited()).unwrap();
    assert!(common::alpha_eq(seq.term().unwrap(), &expected), "{}", pretty(t));
    for workers in [1, 2, 4] {
        let par = par_normalize(t, workers, StepBudget::unlimited()).unwrap();
        assert!(common::alpha_eq(par.term().unwrap(), &expected), "{} with {workers}", pretty(t));
    }
}

#[test]
fn small_instances_match_the_oracle() {
    for m in 1..=3 {
        for n in 1..=3 {
            check(&gen_exponential(m, n));
        }
    }
    for ys in 1..=3 {
        for ids in 1..=5 {
            check(&gen_identities(ys, ids));
        }
    }
}

#[test]
fn generated_text_reparses() {
    let t = gen_exponential(6, 6);
    assert_eq!(parse_term(&pretty(&t)).unwrap(), t);
    let t = gen_identities(8, 1000);
    assert_eq!(parse_term(&pretty(&t)).unwrap(), t);
}

#[test]
fn ten_runs_by_default() {
    let spec = BenchSpec::new(Family::Identities { y_count: 2, id_count: 200 }, Mode::Par, 2);
    let r = run_bench(&spec).unwrap();
    assert_eq!(r.all_times.len(), 10);
    assert_eq!(r.parses_in_timed_region, 0);
    let mut sorted = r.all_times.clone();
    sorted.sort();
    assert_eq!(r.median, (sorted[4] + sorted[5]) / 2);
    let table = report(&[r], Format::Table);
    assert!(table.starts_with("family"));
}
