//! Multi-start derivative-free minimization of an inequality's left-hand
//! side over configuration parameters.
//!
//! Seed protocol: one `ChaCha8Rng` seeded with `SearchOptions::seed` draws
//! every start point up front, coordinate by coordinate and uniformly within
//! the box, in start order. Local runs are then independent, so they can
//! run in parallel; the winner is the lowest final value, with ties going to
//! the lower start index.

mod nelder_mead;

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::qmat::{kron, Observable, State};
use crate::quantum::{phi_plus, temporal_kcbs_protocol, xz_observable};
use crate::scenario::{CycleScenario, TemporalProtocol};
use crate::{Error, Execution, Result};

pub use nelder_mead::{nelder_mead, LocalMinimum, NelderMeadOptions};

/// Default number of starts.
pub const DEFAULT_STARTS: usize = 64;
/// Weight of the commutator penalty in [`ContextualCone`].
pub const DEFAULT_PENALTY_WEIGHT: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    /// Measurement times in `[0, 1]`, clamped.
    TemporalTimes,
    /// In-plane measurement angles, periodic in `[0, 2π)`.
    BlochAngles,
    /// Pentagram cone half-angle and state tilt, periodic in `[0, 2π)`.
    ContextualCone,
}

impl SpaceKind {
    pub fn name(self) -> &'static str {
        match self {
            SpaceKind::TemporalTimes => "temporal-times",
            SpaceKind::BlochAngles => "bloch-angles",
            SpaceKind::ContextualCone => "contextual-cone",
        }
    }
}

impl fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SpaceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "temporal-times" => Ok(SpaceKind::TemporalTimes),
            "bloch-angles" => Ok(SpaceKind::BlochAngles),
            "contextual-cone" => Ok(SpaceKind::ContextualCone),
            other => Err(Error::Parse(format!(
                "unknown search space `{other}` (expected temporal-times, bloch-angles or contextual-cone)"
            ))),
        }
    }
}

/// Box of parameters with a kind-specific boundary rule.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    kind: SpaceKind,
    bounds: Vec<(f64, f64)>,
}

impl SearchSpace {
    /// `n` is the cycle length; the contextual cone is always 2-dimensional.
    pub fn new(kind: SpaceKind, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::precondition(format!("search needs n ≥ 3, got {n}")));
        }
        let bounds = match kind {
            SpaceKind::TemporalTimes => vec![(0.0, 1.0); n],
            SpaceKind::BlochAngles => vec![(0.0, TAU); n],
            SpaceKind::ContextualCone => vec![(0.0, TAU); 2],
        };
        Ok(Self { kind, bounds })
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn dimension(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    /// Map an arbitrary point into the box: clamp times, wrap angles.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.bounds)
            .map(|(&v, &(lo, hi))| match self.kind {
                SpaceKind::TemporalTimes => v.clamp(lo, hi),
                _ => lo + (v - lo).rem_euclid(hi - lo),
            })
            .collect()
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.bounds
            .iter()
            .map(|&(lo, hi)| rng.random_range(lo..hi))
            .collect()
    }

    fn widths(&self) -> Vec<f64> {
        self.bounds.iter().map(|&(lo, hi)| hi - lo).collect()
    }
}

/// Correlators of one configuration, plus a nonnegative penalty for
/// constraint violations (zero when the configuration is admissible).
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub correlations: Vec<f64>,
    pub penalty: f64,
}

/// Maps a parameter point (already inside the box) to correlators.
pub trait Evaluator: Sync {
    fn dimension(&self) -> usize;
    fn terms(&self) -> usize;
    fn evaluate(&self, params: &[f64]) -> Evaluation;
}

/// Qubit measured at free times under a fixed rotation; term `i` is
/// `½Tr(ρ{X_{t_i}, X_{t_{i+1}}})`.
#[derive(Debug, Clone)]
pub struct TemporalTimes {
    state: State,
    measured: Observable,
    axis: [f64; 3],
    rate: f64,
    n: usize,
}

impl TemporalTimes {
    pub fn from_protocol(p: &TemporalProtocol, n: usize) -> Self {
        Self {
            state: p.initial_state().clone(),
            measured: p.measured().clone(),
            axis: p.axis(),
            rate: p.angular_rate(),
            n,
        }
    }

    /// The KCBS temporal protocol (rate `8π/5`) with `n` free times.
    pub fn kcbs(n: usize) -> Self {
        Self::from_protocol(&temporal_kcbs_protocol(), n)
    }
}

impl Evaluator for TemporalTimes {
    fn dimension(&self) -> usize {
        self.n
    }

    fn terms(&self) -> usize {
        self.n
    }

    fn evaluate(&self, params: &[f64]) -> Evaluation {
        let correlations = crate::quantum::temporal_correlations_at(
            &self.state,
            &self.measured,
            self.axis,
            self.rate,
            params,
        )
        .unwrap_or_else(|_| vec![f64::NAN; self.n]);
        Evaluation { correlations, penalty: 0.0 }
    }
}

/// `|φ+⟩` with `A_i = B_i = M(α_i)` and terms `⟨A_i B_{i+1}⟩`. Sharing the
/// angles between the parties enforces `⟨A_i B_i⟩ = 1`.
#[derive(Debug, Clone)]
pub struct BlochAngles {
    n: usize,
    state: State,
}

impl BlochAngles {
    pub fn new(n: usize) -> Self {
        Self { n, state: phi_plus() }
    }
}

impl Evaluator for BlochAngles {
    fn dimension(&self) -> usize {
        self.n
    }

    fn terms(&self) -> usize {
        self.n
    }

    fn evaluate(&self, params: &[f64]) -> Evaluation {
        let obs: Vec<Observable> = params.iter().map(|&a| xz_observable(a)).collect();
        let correlations = (0..self.n)
            .map(|i| {
                let op = kron(obs[i].matrix(), obs[(i + 1) % self.n].matrix());
                self.state.expectation(&op).re
            })
            .collect();
        Evaluation { correlations, penalty: 0.0 }
    }
}

/// Five qutrit projective observables `X_j = 2|v_j⟩⟨v_j| − I` on a cone
/// (pentagram azimuths `4πj/5`) and a real pure state `ψ` tilted off the
/// cone axis.
///
/// Away from the orthogonality angle the adjacent pairs do not commute, so
/// the correlators are symmetrized (`½Tr(ρ{X,Y})`) and an exact penalty
/// `μ·Σ‖[X_j, X_{j+1}]‖_F` pins the search to admissible cones. Everything
/// reduces to dot products of real unit vectors: with `a = ψ·v`, `b = ψ·w`
/// and `g = v·w`, `½⟨{X,Y}⟩ = 4abg − 2a² − 2b² + 1` and
/// `‖[X,Y]‖_F = 4√2·|g|·√(1 − g²)`.
#[derive(Debug, Clone)]
pub struct ContextualCone {
    weight: f64,
}

impl ContextualCone {
    pub fn new(weight: f64) -> Self {
        Self { weight }
    }
}

impl Default for ContextualCone {
    fn default() -> Self {
        Self::new(DEFAULT_PENALTY_WEIGHT)
    }
}

fn dot(u: &[f64; 3], v: &[f64; 3]) -> f64 {
    u[0] * v[0] + u[1] * v[1] + u[2] * v[2]
}

impl Evaluator for ContextualCone {
    fn dimension(&self) -> usize {
        2
    }

    fn terms(&self) -> usize {
        5
    }

    fn evaluate(&self, params: &[f64]) -> Evaluation {
        let (s, c) = params[0].sin_cos();
        let (ts, tc) = params[1].sin_cos();
        let psi = [ts, 0.0, tc];
        let v: Vec<[f64; 3]> = (0..5)
            .map(|j| {
                let phi = 4.0 * std::f64::consts::PI * j as f64 / 5.0;
                [s * phi.cos(), s * phi.sin(), c]
            })
            .collect();
        let mut correlations = Vec::with_capacity(5);
        let mut defect = 0.0;
        for j in 0..5 {
            let (x, y) = (&v[j], &v[(j + 1) % 5]);
            let (a, b, g) = (dot(&psi, x), dot(&psi, y), dot(x, y));
            correlations.push(4.0 * a * b * g - 2.0 * a * a - 2.0 * b * b + 1.0);
            defect += 4.0 * std::f64::consts::SQRT_2 * g.abs() * (1.0 - g * g).max(0.0).sqrt();
        }
        Evaluation {
            correlations,
            penalty: self.weight * defect,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOptions {
    pub starts: usize,
    pub seed: u64,
    pub execution: Execution,
    pub local: NelderMeadOptions,
    /// Extra local runs from the incumbent with a shrinking initial simplex.
    pub polish_rounds: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            starts: DEFAULT_STARTS,
            seed: 0,
            execution: Execution::default(),
            local: NelderMeadOptions::default(),
            polish_rounds: 3,
        }
    }
}

impl SearchOptions {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    /// Best point, inside the box.
    pub params: Vec<f64>,
    /// Objective at `params`: signed LHS plus penalty.
    pub value: f64,
    pub lhs: f64,
    pub penalty: f64,
    pub correlations: Vec<f64>,
    /// Lowest objective among the start points themselves.
    pub best_seed_value: f64,
    pub best_start: usize,
    pub evaluations: usize,
}

struct StartOutcome {
    seed_value: f64,
    local: LocalMinimum,
}

fn signed_sum(scenario: &CycleScenario, c: &[f64]) -> f64 {
    scenario
        .signs()
        .iter()
        .zip(c)
        .map(|(&s, &v)| f64::from(s) * v)
        .sum()
}

/// Minimize `Σ s_i c_i + penalty` over `space`.
pub fn minimize_lhs(
    space: &SearchSpace,
    scenario: &CycleScenario,
    evaluator: &dyn Evaluator,
    options: &SearchOptions,
) -> Result<SearchResult> {
    if evaluator.dimension() != space.dimension() {
        return Err(Error::DimensionMismatch {
            expected: space.dimension(),
            actual: evaluator.dimension(),
        });
    }
    if evaluator.terms() != scenario.n() {
        return Err(Error::DimensionMismatch {
            expected: scenario.n(),
            actual: evaluator.terms(),
        });
    }
    if options.starts == 0 {
        return Err(Error::precondition("search needs at least one start"));
    }

    let objective = |x: &[f64]| {
        let e = evaluator.evaluate(&space.project(x));
        signed_sum(scenario, &e.correlations) + e.penalty
    };

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let starts: Vec<Vec<f64>> = (0..options.starts).map(|_| space.sample(&mut rng)).collect();
    let widths = space.widths();

    let outcomes = options.execution.map_indexed(starts.len(), |i| {
        let x0 = &starts[i];
        let seed_value = objective(x0);
        let mut step: Vec<f64> = widths.iter().map(|w| 0.1 * w).collect();
        let mut local = nelder_mead(objective, x0, &step, &options.local);
        for _ in 0..options.polish_rounds {
            step.iter_mut().for_each(|s| *s *= 0.1);
            let again = nelder_mead(objective, &local.x, &step, &options.local);
            let evaluations = local.evaluations + again.evaluations;
            if again.value <= local.value {
                local = again;
            }
            local.evaluations = evaluations;
        }
        StartOutcome { seed_value, local }
    });

    let mut best = 0;
    for (i, o) in outcomes.iter().enumerate() {
        if o.local.value < outcomes[best].local.value {
            best = i;
        }
    }
    let best_seed_value = outcomes.iter().map(|o| o.seed_value).fold(f64::INFINITY, f64::min);
    let evaluations = outcomes.iter().map(|o| o.local.evaluations).sum();
    let params = space.project(&outcomes[best].local.x);
    let e = evaluator.evaluate(&params);
    let lhs = signed_sum(scenario, &e.correlations);
    Ok(SearchResult {
        value: lhs + e.penalty,
        lhs,
        penalty: e.penalty,
        correlations: e.correlations,
        params,
        best_seed_value,
        best_start: best,
        evaluations,
    })
}

/// The standard problem for a space kind: the canonical `n`-cycle (the
/// 5-cycle for the contextual cone) with its default evaluator.
pub fn standard_problem(
    kind: SpaceKind,
    n: usize,
) -> Result<(SearchSpace, CycleScenario, Box<dyn Evaluator>)> {
    let n = if kind == SpaceKind::ContextualCone { 5 } else { n };
    let space = SearchSpace::new(kind, n)?;
    let scenario = CycleScenario::canonical(n)?;
    let evaluator: Box<dyn Evaluator> = match kind {
        SpaceKind::TemporalTimes => Box::new(TemporalTimes::kcbs(n)),
        SpaceKind::BlochAngles => Box::new(BlochAngles::new(n)),
        SpaceKind::ContextualCone => Box::new(ContextualCone::default()),
    };
    Ok((space, scenario, evaluator))
}
