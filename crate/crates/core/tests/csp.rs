mod support;

use std::ops::ControlFlow;
use std::time::Duration;

use deladas_core::csp::{Capture, Model, Relation, SolveLimits};
use proptest::prelude::*;
use support::brute_force;

fn all(model: &Model) -> Vec<Vec<u32>> {
    model
        .enumerate(&SolveLimits::default().with_capture(Capture::All), |_| ControlFlow::Continue(()))
        .captured
}

#[derive(Debug, Clone)]
struct Spec {
    n: usize,
    constraints: Vec<(Vec<(i64, usize)>, Relation, i64)>,
}

fn relation() -> impl Strategy<Value = Relation> {
    prop_oneof![Just(Relation::Le), Just(Relation::Ge), Just(Relation::Eq)]
}

fn model_spec(max_vars: usize, max_constraints: usize) -> impl Strategy<Value = Spec> {
    (1..=max_vars).prop_flat_map(move |n| {
        let term = (prop_oneof![-3i64..=-1, 1i64..=3], 0..n);
        let constraint = (prop::collection::vec(term, 1..=n.min(6)), relation(), -4i64..=6);
        prop::collection::vec(constraint, 0..=max_constraints).prop_map(move |constraints| Spec { n, constraints })
    })
}

fn build(spec: &Spec) -> Model {
    let mut m = Model::new();
    for i in 0..spec.n {
        m.add_binary(format!("v{i}"));
    }
    for (terms, rel, bound) in &spec.constraints {
        // Terms may cancel after merging; such a constraint is simply skipped.
        let _ = m.add_linear(terms, *rel, *bound);
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn solver_count_matches_exhaustive_oracle(spec in model_spec(16, 12)) {
        let model = build(&spec);
        let (expected, _) = brute_force(&model);
        prop_assert_eq!(model.count_exact(), expected);
    }

    #[test]
    fn solutions_come_out_in_lexicographic_order(spec in model_spec(10, 8)) {
        let model = build(&spec);
        let (_, expected) = brute_force(&model);
        prop_assert_eq!(all(&model), expected);
    }

    #[test]
    fn adding_a_constraint_never_adds_solutions(spec in model_spec(12, 8), extra in (prop::collection::vec((1i64..=2, 0usize..12), 1..4), relation(), 0i64..4)) {
        let model = build(&spec);
        let before = model.count_exact();
        let mut tighter = model.clone();
        let terms: Vec<(i64, usize)> = extra.0.iter().map(|&(a, v)| (a, v % spec.n)).collect();
        let _ = tighter.add_linear(&terms, extra.1, extra.2);
        prop_assert!(tighter.count_exact() <= before);
    }

    #[test]
    fn propagation_never_removes_a_solution(spec in model_spec(10, 8)) {
        let model = build(&spec);
        let (_, solutions) = brute_force(&model);
        match model.propagate(&[]) {
            deladas_core::csp::Propagation::Fixpoint(fixed) => {
                for s in &solutions {
                    for (v, f) in fixed.iter().enumerate() {
                        if let Some(x) = f {
                            prop_assert_eq!(s[v], *x);
                        }
                    }
                }
            }
            deladas_core::csp::Propagation::Conflict(_) => prop_assert!(solutions.is_empty()),
        }
    }
}

#[test]
fn small_integer_domains_match_oracle() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let mut m = Model::new();
        let n = rng.random_range(1..=6);
        for i in 0..n {
            let size = rng.random_range(1..=4);
            let mut dom: Vec<u32> = (0..size).map(|_| rng.random_range(0..6)).collect();
            dom.sort();
            m.add_variable(&dom, format!("v{i}")).unwrap();
        }
        for _ in 0..rng.random_range(0..5) {
            let k = rng.random_range(1..=n);
            let terms: Vec<(i64, usize)> = (0..k)
                .map(|_| {
                    let a = rng.random_range(1..=3) * if rng.random_bool(0.5) { 1 } else { -1 };
                    (a, rng.random_range(0..n))
                })
                .collect();
            let rel = [Relation::Le, Relation::Ge, Relation::Eq][rng.random_range(0..3)];
            let _ = m.add_linear(&terms, rel, rng.random_range(-5..12));
        }
        let (count, solutions) = brute_force(&m);
        assert_eq!(m.count_exact(), count, "{}", m.dump());
        assert_eq!(all(&m), solutions, "{}", m.dump());
    }
}

fn unconstrained(n: usize) -> Model {
    let mut m = Model::new();
    for i in 0..n {
        m.add_binary(format!("b{i}"));
    }
    m
}

#[test]
fn unconstrained_counts_are_powers_of_two() {
    assert_eq!(unconstrained(16).count_exact(), 65_536);
    assert_eq!(unconstrained(8).count_exact(), 256);
    assert_eq!(unconstrained(0).count_exact(), 1);
}

#[test]
fn enumeration_is_deterministic() {
    let mut m = unconstrained(10);
    m.add_linear(&[(1, 0), (1, 3), (1, 7), (-1, 9)], Relation::Le, 1).unwrap();
    m.add_linear(&[(2, 2), (1, 4), (1, 5)], Relation::Ge, 2).unwrap();
    assert_eq!(all(&m), all(&m));
}

#[test]
fn solution_limit_stops_early_and_reports_not_exhausted() {
    let m = unconstrained(12);
    let r = m.enumerate(&SolveLimits::first(10).with_capture(Capture::FirstK(3)), |_| ControlFlow::Continue(()));
    assert_eq!(r.solution_count, 10);
    assert!(!r.exhausted);
    assert_eq!(r.captured.len(), 3);
    assert_eq!(r.captured[0], vec![0; 12]);
    assert!(r.first_solution_latency.is_some());
}

#[test]
fn visitor_break_stops_search() {
    let m = unconstrained(8);
    let mut seen = 0;
    let r = m.enumerate(&SolveLimits::default(), |_| {
        seen += 1;
        if seen == 5 {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    });
    assert_eq!(r.solution_count, 5);
    assert!(!r.exhausted);
}

#[test]
fn time_budget_stops_large_search() {
    let m = unconstrained(40);
    let r = m.enumerate(
        &SolveLimits::default().with_time_budget(Duration::from_millis(50)),
        |_| ControlFlow::Continue(()),
    );
    assert!(!r.exhausted);
    assert!(r.solution_count > 0);
}

#[test]
fn without_limits_search_is_exhausted() {
    let mut m = unconstrained(6);
    m.add_linear(&[(1, 0), (1, 1), (1, 2)], Relation::Eq, 2).unwrap();
    let r = m.enumerate(&SolveLimits::default(), |_| ControlFlow::Continue(()));
    assert!(r.exhausted);
    assert_eq!(r.solution_count, 3 * 8);
}

#[test]
fn infeasible_model_is_exhausted_with_zero() {
    let mut m = unconstrained(3);
    m.add_linear(&[(1, 0), (1, 1), (1, 2)], Relation::Ge, 4).unwrap();
    let r = m.enumerate(&SolveLimits::default(), |_| ControlFlow::Continue(()));
    assert!(r.exhausted);
    assert_eq!(r.solution_count, 0);
    assert!(r.first_solution_latency.is_none());
}
