//! Properties of the policies on seeded random chains.

use chainroll::{
    brute_force_optimal, decode, generate_chain, optimal_tables, optimal_trajectory, GenSpec,
    Policy, RolloutSpec, StateId, TransitionModel,
};

fn chains(count: u64, n: usize, q: usize, seed: u64) -> Vec<TransitionModel> {
    (0..count)
        .map(|c| generate_chain(&GenSpec::new(n, q, seed + c)).unwrap())
        .collect()
}

fn logprob(m: &TransitionModel, x: usize, n: usize, policy: &Policy) -> f64 {
    decode(m, StateId(x), n, policy).unwrap().0.log_prob.value()
}

#[test]
fn one_step_rollout_never_loses_to_greedy() {
    let rollout = Policy::Rollout(RolloutSpec::default());
    for (c, m) in chains(50, 20, 3, 1000).iter().enumerate() {
        for x in 0..m.state_count() {
            let g = logprob(m, x, 25, &Policy::Greedy);
            let r = logprob(m, x, 25, &rollout);
            assert!(r >= g, "chain {c} state {x}: rollout {r} < greedy {g}");
        }
    }
}

#[test]
fn multistep_rollout_never_loses_to_greedy() {
    for ell in 2..=4 {
        let rollout = Policy::Rollout(RolloutSpec::with_lookahead(ell));
        for m in &chains(10, 15, 3, 2000 + ell as u64) {
            for x in 0..m.state_count() {
                assert!(logprob(m, x, 20, &rollout) >= logprob(m, x, 20, &Policy::Greedy));
            }
        }
    }
}

#[test]
fn full_lookahead_is_optimal() {
    for (i, m) in chains(10, 8, 3, 3000).iter().enumerate() {
        let n = 3 + i % 5;
        let table = optimal_tables(m, n).unwrap();
        let rollout = Policy::Rollout(RolloutSpec::with_lookahead(n));
        for x in 0..m.state_count() {
            let r = logprob(m, x, n, &rollout);
            assert!((r - table.value(0, StateId(x)).value()).abs() <= 1e-9);
        }
    }
}

#[test]
fn dp_agrees_with_enumeration() {
    for (i, m) in chains(40, 6, 3, 4000).iter().enumerate() {
        let n = 1 + i % 8;
        let table = optimal_tables(m, n).unwrap();
        for x in 0..m.state_count() {
            let dp = optimal_trajectory(m, StateId(x), n, &table).unwrap();
            let brute = brute_force_optimal(m, StateId(x), n).unwrap();
            assert!((dp.log_prob.value() - brute.log_prob.value()).abs() <= 1e-9);
            assert!((dp.log_prob.value() - table.value(0, StateId(x)).value()).abs() <= 1e-12);
        }
    }
}

#[test]
fn policy_iteration_is_monotone_and_reaches_optimum() {
    for m in &chains(5, 10, 3, 5000) {
        let n = 12;
        let table = optimal_tables(m, n).unwrap();
        for x in 0..m.state_count() {
            let mut prev = logprob(m, x, n, &Policy::Greedy);
            let mut reached = false;
            for level in 0..n {
                let v = logprob(
                    m,
                    x,
                    n,
                    &Policy::Rollout(RolloutSpec::default().level(level)),
                );
                assert!(v >= prev - 1e-12, "level {level} regressed");
                prev = v;
                if (v - table.value(0, StateId(x)).value()).abs() <= 1e-9 {
                    reached = true;
                    break;
                }
            }
            assert!(reached, "state {x} never reached the optimum");
        }
    }
}

#[test]
fn truncated_and_simplified_rollout_still_decode() {
    // No improvement is claimed here; only that decoding is well formed.
    let m = &chains(1, 30, 6, 6000)[0];
    for spec in [
        RolloutSpec::default().truncate(3),
        RolloutSpec::with_lookahead(2).width(2),
        RolloutSpec::with_lookahead(3).truncate(2).width(3).level(1),
    ] {
        for x in 0..m.state_count() {
            let (t, _) = decode(m, StateId(x), 15, &Policy::Rollout(spec)).unwrap();
            assert_eq!(t.states.len(), 15);
            assert!(t.log_prob.value().is_finite());
        }
    }
}

#[test]
fn cost_matches_closed_form() {
    let (q, m_trunc, n) = (4usize, 5usize, 30usize);
    let m = generate_chain(&GenSpec::new(40, q, 7)).unwrap();
    let spec = RolloutSpec::default().truncate(m_trunc).width(q);
    let (_, greedy) = decode(&m, StateId(0), n, &Policy::Greedy).unwrap();
    assert_eq!(greedy.comparisons, (q * n) as u64);
    let (_, cost) = decode(&m, StateId(0), n, &Policy::Rollout(spec)).unwrap();
    // q Q-factors per step, each with a greedy tail of min(m, N-k-1) steps
    // costing q comparisons apiece.
    let expected: usize = (0..n).map(|k| q + q * q * m_trunc.min(n - k - 1)).sum();
    assert_eq!(cost.comparisons, expected as u64);
}
