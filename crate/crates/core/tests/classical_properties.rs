use jpdlab_core::classical::{
    correlators_to_marginals, jpd_feasible, jpd_feasible_with, min_cycle_inequality_slack,
    witness_residual, MarginalSet, PivotRule, SimplexOptions, WITNESS_RESIDUAL_TOL,
};
use jpdlab_core::random;
use jpdlab_core::scenario::{CorrelationVector, CycleScenario};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Second, independently written feasibility check. It works on moments
/// rather than cells: find `q ≥ 0` over explicit ±1 vectors with `Σq = 1`,
/// `E[x_i] = s_i` and `E[x_i x_{i+1}] = c_i`, by a plain phase-one simplex
/// with Bland's rule. Returns the phase-one optimum (0 iff feasible).
fn moment_lp_infeasibility(singles: &[f64], corr: &[f64]) -> f64 {
    let n = singles.len();
    let points: Vec<Vec<f64>> = (0..1usize << n)
        .map(|a| (0..n).map(|b| if a >> b & 1 == 0 { 1.0 } else { -1.0 }).collect())
        .collect();
    let mut rows: Vec<(Vec<f64>, f64)> = vec![(vec![1.0; points.len()], 1.0)];
    for i in 0..n {
        rows.push((points.iter().map(|x| x[i]).collect(), singles[i]));
        rows.push((points.iter().map(|x| x[i] * x[(i + 1) % n]).collect(), corr[i]));
    }
    let m = rows.len();
    let v = points.len();
    let width = v + m + 1;
    // Tableau rows with artificial slacks; rhs kept nonnegative.
    let mut t: Vec<Vec<f64>> = rows
        .iter()
        .enumerate()
        .map(|(r, (a, b))| {
            let flip = if *b < 0.0 { -1.0 } else { 1.0 };
            let mut row = vec![0.0; width];
            for (k, &c) in a.iter().enumerate() {
                row[k] = flip * c;
            }
            row[v + r] = 1.0;
            row[width - 1] = flip * b;
            row
        })
        .collect();
    let mut basis: Vec<usize> = (v..v + m).collect();
    // Reduced costs of minimizing the artificial sum.
    let mut cost = vec![0.0; width];
    for row in &t {
        for k in 0..v {
            cost[k] -= row[k];
        }
        cost[width - 1] -= row[width - 1];
    }
    loop {
        let Some(enter) = (0..v + m).find(|&k| cost[k] < -1e-12) else { break };
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..m {
            if t[r][enter] > 1e-12 {
                let ratio = t[r][width - 1] / t[r][enter];
                let better = match leave {
                    None => true,
                    Some((lr, best)) => {
                        ratio < best - 1e-14 || (ratio <= best + 1e-14 && basis[r] < basis[lr])
                    }
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        let Some((r, _)) = leave else { break };
        let p = t[r][enter];
        t[r].iter_mut().for_each(|x| *x /= p);
        let pivot_row = t[r].clone();
        for (rr, row) in t.iter_mut().enumerate() {
            if rr != r && row[enter].abs() > 0.0 {
                let f = row[enter];
                row.iter_mut().zip(&pivot_row).for_each(|(x, y)| *x -= f * y);
            }
        }
        let f = cost[enter];
        cost.iter_mut().zip(&pivot_row).for_each(|(x, y)| *x -= f * y);
        basis[r] = enter;
    }
    -cost[width - 1]
}

fn singles_of(m: &MarginalSet) -> Vec<f64> {
    (0..m.n()).map(|i| 2.0 * m.single_plus(i).0 - 1.0).collect()
}

fn classical_mixture<R: Rng>(rng: &mut R, n: usize, k: usize) -> MarginalSet {
    let mut pairs = vec![[0.0; 4]; n];
    for _ in 0..k {
        let x: Vec<bool> = (0..n).map(|_| rng.random()).collect();
        for i in 0..n {
            let cell = 2 * usize::from(x[i]) + usize::from(x[(i + 1) % n]);
            pairs[i][cell] += 1.0 / k as f64;
        }
    }
    MarginalSet::new(pairs).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn agrees_with_the_moment_formulation(seed in any::<u64>(), n in 3usize..7) {
        let m = random::marginal_set(&mut ChaCha8Rng::seed_from_u64(seed), n);
        let ours = jpd_feasible(&m).unwrap();
        let other = moment_lp_infeasibility(&singles_of(&m), &m.correlators());
        // Skip draws sitting on the boundary within solver tolerance.
        prop_assume!(other > 1e-7 || other < 1e-10);
        prop_assert_eq!(ours.feasible(), other < 1e-10, "other = {}", other);
    }

}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn both_pivot_rules_agree(seed in any::<u64>(), n in 3usize..6) {
        let m = random::marginal_set(&mut ChaCha8Rng::seed_from_u64(seed), n);
        let bland = jpd_feasible(&m).unwrap();
        let opts = SimplexOptions { rule: PivotRule::Dantzig, ..Default::default() };
        let dantzig = jpd_feasible_with(&m, &opts).unwrap();
        prop_assume!(bland.phase_one_objective.abs() > 1e-7 || bland.feasible());
        prop_assert_eq!(bland.feasible(), dantzig.feasible());
    }

    #[test]
    fn classical_mixtures_are_feasible_with_small_residual(seed in any::<u64>(), n in 3usize..8, k in 1usize..6) {
        let m = classical_mixture(&mut ChaCha8Rng::seed_from_u64(seed), n, k);
        let w = jpd_feasible(&m).unwrap();
        prop_assert!(w.feasible());
        let q = w.distribution.as_ref().unwrap();
        prop_assert!(witness_residual(&m, q) <= WITNESS_RESIDUAL_TOL);
    }

    #[test]
    fn mixing_towards_uniform_stays_feasible(seed in any::<u64>(), n in 3usize..7) {
        let m = random::marginal_set(&mut ChaCha8Rng::seed_from_u64(seed), n);
        let uniform = MarginalSet::uniform(n).unwrap();
        let mut seen_feasible = false;
        for k in 0..=10 {
            let mixed = m.mix(&uniform, k as f64 / 10.0).unwrap();
            let feasible = jpd_feasible(&mixed).unwrap().feasible();
            prop_assert!(feasible || !seen_feasible, "lost feasibility at λ = {}", k as f64 / 10.0);
            seen_feasible |= feasible;
        }
        prop_assert!(seen_feasible);
    }

    #[test]
    fn feasible_marginals_satisfy_every_cycle_inequality(seed in any::<u64>(), n in 3usize..7) {
        let m = random::marginal_set(&mut ChaCha8Rng::seed_from_u64(seed), n);
        if jpd_feasible(&m).unwrap().feasible() {
            prop_assert!(min_cycle_inequality_slack(&m.correlators()).unwrap() >= -1e-7);
        }
    }
}

/// Evidence for the converse (inequalities ⇒ JPD); reported, not asserted.
#[test]
fn converse_direction_evidence() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut agree, mut total, mut violating) = (0, 0, 0);
    for _ in 0..300 {
        let n = rng.random_range(3..7);
        let m = random::marginal_set(&mut rng, n);
        let slack = min_cycle_inequality_slack(&m.correlators()).unwrap();
        if slack.abs() < 1e-7 {
            continue;
        }
        total += 1;
        violating += usize::from(slack < 0.0);
        if jpd_feasible(&m).unwrap().feasible() == (slack > 0.0) {
            agree += 1;
        }
    }
    eprintln!(
        "cycle inequalities vs LP: {agree}/{total} random marginal sets agree ({violating} violate some inequality)"
    );
    assert!(total > 0);
}

#[test]
fn correlator_route_matches_direct_cells() {
    let s = CycleScenario::canonical(4).unwrap();
    let c = CorrelationVector::new(s, vec![0.2, -0.4, 0.6, 0.1]).unwrap();
    let singles = [0.1, -0.2, 0.0, 0.3];
    let m = correlators_to_marginals(&c, &singles).unwrap();
    for (got, want) in m.correlators().iter().zip(c.values()) {
        assert!((got - want).abs() < 1e-15);
    }
    for (i, s) in singles_of(&m).iter().enumerate() {
        assert!((s - singles[i]).abs() < 1e-15);
    }
}
