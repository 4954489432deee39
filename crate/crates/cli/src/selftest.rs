//! Seeded invariant suite behind `jpdlab selftest`.

use toml::Value;

use jpdlab_core::classical::{jpd_feasible, min_cycle_inequality_slack, witness_residual};
use jpdlab_core::histories::{
    history_probability, interference_term, lg_decomposition, marginal_probability, History,
    INCONSISTENT_TOL,
};
use jpdlab_core::qmat::herm_eigen;
use jpdlab_core::quantum::{
    anticommutator_correlation, chained_configuration, chained_quantum_value,
    correlation_sequential, spatial_correlation_vector, temporal_correlation_schrodinger,
    temporal_correlations_at, Builder, Configuration,
};
use jpdlab_core::random::{self, stream};
use jpdlab_core::scenario::{
    classical_bound, inequality_lhs, BuilderParams, CycleScenario, TemporalProtocol,
};
use jpdlab_core::{Execution, Result};
use rand::Rng;

use crate::report::{table, Report};
use crate::CliResult;

struct Check {
    name: &'static str,
    draws: usize,
    /// Largest deviation seen (or a count of failures for exact checks).
    worst: f64,
    tolerance: f64,
}

impl Check {
    fn passed(&self) -> bool {
        self.worst <= self.tolerance
    }
}

/// Largest value over `draws` seeded draws, evaluated in parallel.
fn batch<F>(seed: u64, salt: u64, draws: usize, f: F) -> Result<f64>
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> Result<f64> + Sync + Send,
{
    let base = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    Execution::default()
        .map_indexed(draws, |i| f(&mut stream(base, i as u64)))
        .into_iter()
        .try_fold(0.0f64, |acc, r| r.map(|v| acc.max(v)))
}

fn closed_forms() -> Result<f64> {
    let temporal = 5.0 * (4.0 * std::f64::consts::PI / 5.0).cos();
    let contextual = 5.0 - 4.0 * 5f64.sqrt();
    let lhs = |b: Builder| -> Result<f64> {
        Ok(inequality_lhs(&Configuration::build(b, &BuilderParams::default())?.correlations()?))
    };
    let mut worst = (lhs(Builder::KcbsTemporal)? - temporal)
        .abs()
        .max((lhs(Builder::KcbsSpatial)? - temporal).abs())
        .max((lhs(Builder::KcbsContextual)? - contextual).abs());
    for n in 3..=12 {
        let v = inequality_lhs(&spatial_correlation_vector(&chained_configuration(n)?)?);
        worst = worst.max((v - chained_quantum_value(n)).abs());
    }
    Ok(worst)
}

fn bound_mismatches() -> Result<f64> {
    let mut bad = 0;
    for n in 3..=16 {
        bad += usize::from(classical_bound(&CycleScenario::canonical(n)?)? != 2 - n as i64);
    }
    bad += usize::from(classical_bound(&CycleScenario::all_plus(3)?)? != -1);
    Ok(bad as f64)
}

pub fn run(draws: usize, seed: u64) -> CliResult<Report> {
    let mut checks = vec![
        Check { name: "classical-bounds", draws: 15, worst: bound_mismatches()?, tolerance: 0.0 },
        Check { name: "closed-form-values", draws: 13, worst: closed_forms()?, tolerance: 1e-8 },
    ];

    let oracle = batch(seed, 1, draws, |rng| {
        let dim = rng.random_range(2..5);
        let rho = random::state(rng, dim);
        let (x, y) = (random::observable(rng, dim), random::observable(rng, dim));
        let (seq, _) = correlation_sequential(&rho, &x, &y)?;
        Ok((seq - anticommutator_correlation(&rho, &x, &y)?).abs())
    })?;
    checks.push(Check { name: "sequential-vs-anticommutator", draws, worst: oracle, tolerance: 1e-10 });

    let pictures = batch(seed, 2, draws, |rng| {
        let rate = rng.random_range(0.1..10.0);
        let times = vec![0.0, rng.random_range(0.01..0.5), rng.random_range(0.51..1.0)];
        let p = TemporalProtocol::new(
            random::state(rng, 2),
            random::unit_vector3(rng),
            rate,
            times.clone(),
            random::qubit_observable(rng),
        )?;
        let h = temporal_correlations_at(p.initial_state(), p.measured(), p.axis(), rate, &times)?;
        let (s01, _) = temporal_correlation_schrodinger(&p, 0, 1)?;
        let (s12, _) = temporal_correlation_schrodinger(&p, 1, 2)?;
        Ok((h[0] - s01).abs().max((h[1] - s12).abs()))
    })?;
    checks.push(Check { name: "heisenberg-vs-schrodinger", draws, worst: pictures, tolerance: 1e-10 });

    let completeness = batch(seed, 3, draws, |rng| {
        let f = random::qubit_history_family(rng);
        let mut total = 0.0;
        for h in History::all() {
            total += history_probability(&f, &h)?;
        }
        Ok((total - 1.0).abs())
    })?;
    checks.push(Check { name: "history-completeness", draws, worst: completeness, tolerance: 1e-10 });

    let marginal = batch(seed, 4, draws, |rng| {
        let f = random::qubit_history_family(rng);
        let mut worst = 0.0f64;
        for star in 0..3 {
            for (a, b) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
                let pat = History::with_star(star, a, b);
                let split = history_probability(&f, &pat.filled(1))?
                    + history_probability(&f, &pat.filled(-1))?
                    + interference_term(&f, &pat)?;
                worst = worst.max((marginal_probability(&f, &pat) - split).abs());
            }
        }
        Ok(worst)
    })?;
    checks.push(Check { name: "history-marginal-identity", draws, worst: marginal, tolerance: 1e-10 });

    let last = batch(seed, 5, draws, |rng| {
        let r = lg_decomposition(&random::qubit_history_family(rng))?;
        Ok(r.last_slot_interference.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max))
    })?;
    checks.push(Check { name: "last-slot-interference", draws, worst: last, tolerance: 1e-12 });

    let rewritten = batch(seed, 6, draws, |rng| {
        let r = lg_decomposition(&random::qubit_history_family(rng))?;
        Ok((r.rewritten - r.lhs - 1.0).abs().max(r.route_disagreement()))
    })?;
    checks.push(Check { name: "rewritten-inequality", draws, worst: rewritten, tolerance: 1e-9 });

    let necessary = batch(seed, 7, draws, |rng| {
        let r = lg_decomposition(&random::qubit_history_family(rng))?;
        let broken = r.lhs < -1.0 - INCONSISTENT_TOL && !r.any_inconsistent(INCONSISTENT_TOL);
        Ok(f64::from(u8::from(broken)))
    })?;
    checks.push(Check { name: "violation-needs-inconsistency", draws, worst: necessary, tolerance: 0.0 });

    let soundness = batch(seed, 8, draws, |rng| {
        let n = rng.random_range(3..7);
        let m = random::marginal_set(rng, n);
        let w = jpd_feasible(&m)?;
        match &w.distribution {
            Some(q) => {
                let slack = min_cycle_inequality_slack(&m.correlators())?;
                Ok(witness_residual(&m, q).max(-slack))
            }
            None => Ok(0.0),
        }
    })?;
    checks.push(Check { name: "lp-soundness", draws, worst: soundness, tolerance: 1e-7 });

    let eigen = batch(seed, 9, draws, |rng| {
        let dim = rng.random_range(2..9);
        let h = random::hermitian(rng, dim);
        Ok(herm_eigen(&h)?.reconstruct().max_diff(&h))
    })?;
    checks.push(Check { name: "eigen-reconstruction", draws, worst: eigen, tolerance: 1e-10 });

    let mut report = Report::default();
    for c in &checks {
        let ok = c.passed();
        report.push_row("check", table([
            ("name", Value::String(c.name.into())),
            ("draws", Value::Integer(c.draws as i64)),
            ("worst", Value::Float(c.worst)),
            ("tolerance", Value::Float(c.tolerance)),
            ("passed", Value::Boolean(ok)),
        ]));
        report.line(format!(
            "{:<6}{:<32}worst {:.3e}  (tol {:.0e}, {} draws)",
            if ok { "PASS" } else { "FAIL" },
            c.name,
            c.worst,
            c.tolerance,
            c.draws
        ));
        if !ok {
            report.failures.push(format!("{}: {:.3e} > {:e}", c.name, c.worst, c.tolerance));
        }
    }
    let passed = checks.iter().filter(|c| c.passed()).count();
    *report.section("selftest") = table([
        ("checks", Value::Integer(checks.len() as i64)),
        ("passed", Value::Integer(passed as i64)),
    ]);
    Ok(report)
}
