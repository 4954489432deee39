use jpdlab_core::histories::{
    history_probability, interference_term, lg_decomposition, marginal_probability, History,
    INCONSISTENT_TOL,
};
use jpdlab_core::random;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn probabilities_are_complete(seed in any::<u64>()) {
        let f = random::qubit_history_family(&mut ChaCha8Rng::seed_from_u64(seed));
        let total: f64 = History::all().iter().map(|h| history_probability(&f, h).unwrap()).sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
        for h in History::all() {
            let p = history_probability(&f, &h).unwrap();
            prop_assert!((-1e-10..=1.0 + 1e-10).contains(&p));
        }
    }

    #[test]
    fn marginals_split_into_histories_plus_interference(seed in any::<u64>()) {
        let f = random::qubit_history_family(&mut ChaCha8Rng::seed_from_u64(seed));
        for star in 0..3 {
            for a in [1i8, -1] {
                for b in [1i8, -1] {
                    let pattern = History::with_star(star, a, b);
                    let split = history_probability(&f, &pattern.filled(1)).unwrap()
                        + history_probability(&f, &pattern.filled(-1)).unwrap()
                        + interference_term(&f, &pattern).unwrap();
                    prop_assert!((marginal_probability(&f, &pattern) - split).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn decomposition_identities(seed in any::<u64>()) {
        let f = random::qubit_history_family(&mut ChaCha8Rng::seed_from_u64(seed));
        let r = lg_decomposition(&f).unwrap();
        prop_assert!(r.route_disagreement() < 1e-9);
        prop_assert!(r.last_slot_interference.iter().all(|(_, v)| v.abs() <= 1e-12));
        prop_assert!((r.rewritten - (r.lhs + 1.0)).abs() < 1e-10);
        if r.lhs < -1.0 - 1e-6 {
            prop_assert!(r.any_inconsistent(INCONSISTENT_TOL));
        }
    }
}
