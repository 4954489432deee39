use jpdlab_core::scenario::{
    classical_bound, classical_bound_with, CorrelationVector, CycleScenario, ScenarioFile,
};
use jpdlab_core::Execution;
use proptest::prelude::*;

fn signs(n: usize) -> impl Strategy<Value = Vec<i8>> {
    proptest::collection::vec(prop_oneof![Just(1i8), Just(-1i8)], n)
}

fn any_scenario() -> impl Strategy<Value = CycleScenario> {
    (3usize..14).prop_flat_map(signs).prop_map(|s| CycleScenario::new(s).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn bound_is_invariant_under_rotation(s in any_scenario(), k in 0usize..14) {
        prop_assert_eq!(classical_bound(&s.rotated(k % s.n())).unwrap(), classical_bound(&s).unwrap());
    }

    #[test]
    fn flipping_one_variable_moves_two_signs(s in any_scenario(), i in 0usize..14) {
        let n = s.n();
        let i = i % n;
        let mut flipped = s.signs().to_vec();
        flipped[i] = -flipped[i];
        flipped[(i + n - 1) % n] = -flipped[(i + n - 1) % n];
        let t = CycleScenario::new(flipped).unwrap();
        prop_assert_eq!(classical_bound(&t).unwrap(), classical_bound(&s).unwrap());
    }

    #[test]
    fn bound_depends_only_on_frustration(s in any_scenario()) {
        let n = s.n() as i64;
        let minus = s.signs().iter().filter(|&&x| x < 0).count() as i64;
        let want = if minus % 2 == n % 2 { -n } else { -n + 2 };
        prop_assert_eq!(classical_bound(&s).unwrap(), want);
        prop_assert_eq!(classical_bound_with(&s, Execution::Sequential).unwrap(), want);
    }

    #[test]
    fn scenario_files_round_trip(s in any_scenario(), c in -1.0f64..1.0) {
        let mut f = ScenarioFile::from_scenario(&s);
        f.correlators = Some(vec![c; s.n()]);
        let back = ScenarioFile::parse(&f.to_toml()).unwrap();
        prop_assert_eq!(&back, &f);
        let cv = back.correlation_vector().unwrap().unwrap();
        prop_assert_eq!(cv.values().len(), s.n());
    }
}

#[test]
fn canonical_bounds() {
    for n in 3..=16 {
        let s = CycleScenario::canonical(n).unwrap();
        assert_eq!(classical_bound(&s).unwrap(), 2 - n as i64, "n = {n}");
    }
    assert_eq!(classical_bound(&CycleScenario::all_plus(3).unwrap()).unwrap(), -1);
}

#[test]
fn out_of_range_correlators_are_rejected() {
    let s = CycleScenario::canonical(3).unwrap();
    assert!(CorrelationVector::new(s.clone(), vec![1.5, 0.0, 0.0]).is_err());
    assert!(CorrelationVector::new(s, vec![0.0, 0.0]).is_err());
}
