use chainroll::{decode_chain, encode_chain, generate_chain, GenSpec, StateId, TransitionModel};
use proptest::prelude::*;

fn chain() -> impl Strategy<Value = TransitionModel> {
    (1usize..12, any::<u64>())
        .prop_flat_map(|(n, seed)| (Just(n), 1..=n, Just(seed)))
        .prop_map(|(n, q, seed)| generate_chain(&GenSpec::new(n, q, seed)).unwrap())
}

/// A path that follows listed transitions, driven by `choices`.
fn walk(m: &TransitionModel, start: usize, choices: &[usize]) -> Vec<StateId> {
    let mut cur = start;
    choices
        .iter()
        .map(|c| {
            let row = m.rows()[cur].successors();
            cur = row[c % row.len()].0 .0;
            StateId(cur)
        })
        .collect()
}

proptest! {
    #[test]
    fn log_domain_matches_direct_product(m in chain(), start in 0usize..64, choices in prop::collection::vec(0usize..64, 0..40)) {
        let start = start % m.state_count();
        let path = walk(&m, start, &choices);
        let lp = m.trajectory_logprob(StateId(start), &path).unwrap();
        let mut direct = 1.0f64;
        let mut prev = start;
        for y in &path {
            direct *= m.rows()[prev].prob(*y).unwrap();
            prev = y.0;
        }
        let rel = (lp.prob() - direct).abs() / direct;
        prop_assert!(rel <= 1e-12, "relative error {}", rel);
    }

    #[test]
    fn prefix_additive(m in chain(), start in 0usize..64, a in prop::collection::vec(0usize..64, 1..20), b in prop::collection::vec(0usize..64, 0..20)) {
        let start = start % m.state_count();
        let mut path = walk(&m, start, &a);
        let last = path.last().unwrap().0;
        let suffix = walk(&m, last, &b);
        let head = m.trajectory_logprob(StateId(start), &path).unwrap();
        let tail = m.trajectory_logprob(StateId(last), &suffix).unwrap();
        path.extend(suffix);
        let whole = m.trajectory_logprob(StateId(start), &path).unwrap();
        prop_assert!((whole.value() - (head + tail).value()).abs() <= 1e-12);
    }

    #[test]
    fn rows_sum_to_one(m in chain()) {
        for x in 0..m.state_count() {
            let sum: f64 = m.rows()[x]
                .successors()
                .iter()
                .map(|&(y, _)| m.transition_logprob(StateId(x), y).unwrap().prob())
                .sum();
            prop_assert!((sum - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn file_round_trip_is_bit_exact(m in chain()) {
        let back = decode_chain(&encode_chain(&m)).unwrap();
        for (a, b) in m.rows().iter().zip(back.rows()) {
            for (x, y) in a.successors().iter().zip(b.successors()) {
                prop_assert_eq!(x.0, y.0);
                prop_assert_eq!(x.1.to_bits(), y.1.to_bits());
            }
        }
        prop_assert_eq!(back, m);
    }

    #[test]
    fn generator_output_validates(n in 1usize..60, seed in any::<u64>(), qf in 0.0f64..1.0) {
        let q = 1 + ((n - 1) as f64 * qf) as usize;
        let m = generate_chain(&GenSpec::new(n, q, seed)).unwrap();
        prop_assert!(m.validate().is_ok());
        prop_assert!(m.rows().iter().all(|r| r.len() == q && r.successors().iter().all(|&(_, p)| p > 0.0)));
    }
}
