use std::f64::consts::PI;

use jpdlab_core::qmat::{su2_rotation, State};
use jpdlab_core::quantum::{
    anticommutator_correlation, chained_configuration, chained_quantum_value,
    correlation_sequential, sequential_probabilities, spatial_correlation_vector,
    temporal_correlation_schrodinger, temporal_correlations_at, Builder, Configuration,
};
use jpdlab_core::random;
use jpdlab_core::scenario::{classical_bound, inequality_lhs, BuilderParams, TemporalProtocol};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn luders_chain_equals_symmetrized_product(seed in any::<u64>(), dim in 2usize..5) {
        let mut r = rng(seed);
        let rho = random::state(&mut r, dim);
        let x = random::observable(&mut r, dim);
        let y = random::observable(&mut r, dim);
        let (seq, table) = correlation_sequential(&rho, &x, &y).unwrap();
        let anti = anticommutator_correlation(&rho, &x, &y).unwrap();
        prop_assert!((seq - anti).abs() < 1e-10);
        prop_assert!((table.p(1) + table.p(-1) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn symmetrized_correlator_is_order_symmetric(seed in any::<u64>(), dim in 2usize..5) {
        let mut r = rng(seed);
        let rho = random::state(&mut r, dim);
        let x = random::observable(&mut r, dim);
        let y = random::observable(&mut r, dim);
        let xy = anticommutator_correlation(&rho, &x, &y).unwrap();
        let yx = anticommutator_correlation(&rho, &y, &x).unwrap();
        prop_assert!((xy - yx).abs() < 1e-12);
        prop_assert!(xy.abs() <= 1.0 + 1e-12);
    }

    #[test]
    fn sequential_chain_is_a_distribution(seed in any::<u64>(), steps in 1usize..5) {
        let mut r = rng(seed);
        let rho = random::state(&mut r, 2);
        let obs: Vec<_> = (0..steps).map(|_| random::qubit_observable(&mut r)).collect();
        let refs: Vec<_> = obs.iter().collect();
        let probs = sequential_probabilities(&rho, &refs).unwrap();
        prop_assert_eq!(probs.len(), 1 << steps);
        prop_assert!(probs.iter().all(|(_, p)| *p >= -1e-12));
        prop_assert!((probs.iter().map(|(_, p)| p).sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn heisenberg_matches_schrodinger(seed in any::<u64>(), rate in 0.1f64..10.0) {
        let mut r = rng(seed);
        let mut times: Vec<f64> = (0..4).map(|_| rand::Rng::random_range(&mut r, 0.0..1.0)).collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        prop_assume!(times.len() >= 3 && times.windows(2).all(|w| w[1] - w[0] > 1e-6));
        let rho = random::state(&mut r, 2);
        let measured = random::qubit_observable(&mut r);
        let axis = random::unit_vector3(&mut r);
        let p = TemporalProtocol::new(rho, axis, rate, times.clone(), measured).unwrap();
        let heis = temporal_correlations_at(p.initial_state(), p.measured(), axis, rate, &times).unwrap();
        for (i, h) in heis.iter().enumerate().take(times.len() - 1) {
            let (s, _) = temporal_correlation_schrodinger(&p, i, i + 1).unwrap();
            prop_assert!((h - s).abs() < 1e-10);
        }
    }

    #[test]
    fn rotating_the_state_and_axis_together_preserves_correlators(seed in any::<u64>(), angle in 0.0f64..6.3) {
        // Correlators depend only on rotation differences, so a common
        // rotation of state and measured observable is invisible.
        let mut r = rng(seed);
        let rho = random::state(&mut r, 2);
        let measured = random::qubit_observable(&mut r);
        let axis = random::unit_vector3(&mut r);
        let times = [0.0, 0.2, 0.7];
        let base = temporal_correlations_at(&rho, &measured, axis, 1.3, &times).unwrap();
        let w = su2_rotation(axis, angle).unwrap();
        let rho_w = State::new(w.adjoint().matmul(rho.matrix()).matmul(&w)).unwrap();
        let m_w = measured.conjugated(&w).unwrap();
        let moved = temporal_correlations_at(&rho_w, &m_w, axis, 1.3, &times).unwrap();
        for (a, b) in base.iter().zip(&moved) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn chained_curve_and_violation() {
    for n in 3..=12 {
        let cfg = chained_configuration(n).unwrap();
        let lhs = inequality_lhs(&spatial_correlation_vector(&cfg).unwrap());
        assert!((lhs - chained_quantum_value(n)).abs() < 1e-8, "n = {n}: {lhs}");
        let bound = classical_bound(&cfg.scenario()).unwrap();
        assert_eq!(bound, 2 - n as i64);
        assert!(lhs < bound as f64);
    }
}

#[test]
fn kcbs_settings_reproduce_closed_forms() {
    let temporal = 5.0 * (4.0 * PI / 5.0).cos();
    let contextual = 5.0 - 4.0 * 5f64.sqrt();
    let lhs = |b: Builder| {
        let cfg = Configuration::build(b, &BuilderParams::default()).unwrap();
        inequality_lhs(&cfg.correlations().unwrap())
    };
    assert!((lhs(Builder::KcbsTemporal) - temporal).abs() < 1e-12);
    assert!((lhs(Builder::KcbsSpatial) - temporal).abs() < 1e-12);
    assert!((lhs(Builder::KcbsContextual) - contextual).abs() < 1e-12);
}

#[test]
fn odd_chained_formula_is_exact() {
    for n in (3..=41).step_by(2) {
        let cfg = chained_configuration(n).unwrap();
        let lhs = inequality_lhs(&spatial_correlation_vector(&cfg).unwrap());
        let expected = n as f64 * (PI * (n as f64 - 1.0) / n as f64).cos();
        assert!((lhs - expected).abs() < 1e-10, "n = {n}: {lhs} vs {expected}");
    }
}
