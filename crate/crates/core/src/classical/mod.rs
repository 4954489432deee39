//! Existence of a joint probability distribution (JPD) reproducing the
//! adjacent-pair marginals of an n-cycle, decided by linear programming over
//! the `2^n` deterministic assignments.
//!
//! Assignment index `a` encodes `x_b = +1` when bit `b` of `a` is clear and
//! `x_b = −1` when it is set. Pair cells are ordered `(++, +−, −+, −−)` for
//! `(x_i, x_{i+1})`.

mod simplex;

use std::fmt::Write as _;

pub use simplex::{LinearProgram, LpOutcome, PivotRule, SimplexOptions, PHASE_ONE_TOL};

use crate::scenario::{classical_bound, CorrelationVector, CycleScenario};
use crate::{Error, Result};

/// Largest cycle accepted by [`jpd_feasible`] (`2^16` LP columns).
pub const MAX_LP_N: usize = 16;
/// Pair distributions must sum to one within this.
pub const NORMALIZATION_TOL: f64 = 1e-9;
/// Smallest admissible cell value.
pub const NEGATIVE_CELL_TOL: f64 = -1e-12;
/// Overlapping single marginals must agree within this.
pub const NO_DISTURBANCE_TOL: f64 = 1e-7;
/// A witness must reproduce every marginal within this.
pub const WITNESS_RESIDUAL_TOL: f64 = 1e-7;

const OUTCOMES: [(i8, i8); 4] = [(1, 1), (1, -1), (-1, 1), (-1, -1)];

/// Value `x_b` of an assignment index.
pub fn assignment_value(assignment: usize, b: usize) -> i8 {
    if assignment >> b & 1 == 1 {
        -1
    } else {
        1
    }
}

/// Cell index of the outcome pair `(x, y)`.
pub fn cell_index(x: i8, y: i8) -> usize {
    match (x > 0, y > 0) {
        (true, true) => 0,
        (true, false) => 1,
        (false, true) => 2,
        (false, false) => 3,
    }
}

/// Measured distributions `p(x_i, x_{i+1 mod n})` for every adjacent pair.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalSet {
    pairs: Vec<[f64; 4]>,
}

impl MarginalSet {
    pub fn new(pairs: Vec<[f64; 4]>) -> Result<Self> {
        if pairs.len() < 3 {
            return Err(Error::precondition("a cycle needs at least 3 pair distributions"));
        }
        for (i, p) in pairs.iter().enumerate() {
            let sum: f64 = p.iter().sum();
            if !sum.is_finite() || (sum - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::precondition(format!("pair {i} sums to {sum}")));
            }
            if let Some(bad) = p.iter().find(|&&x| x < NEGATIVE_CELL_TOL) {
                return Err(Error::precondition(format!("pair {i} has negative cell {bad}")));
            }
        }
        Ok(Self { pairs })
    }

    /// Every pair uniform (¼ per cell).
    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![[0.25; 4]; n])
    }

    pub fn n(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[[f64; 4]] {
        &self.pairs
    }

    /// `p(x_i = +1)` as implied by pair `(i, i+1)` and by pair `(i−1, i)`.
    pub fn single_plus(&self, i: usize) -> (f64, f64) {
        let n = self.n();
        let own = self.pairs[i][0] + self.pairs[i][1];
        let prev = &self.pairs[(i + n - 1) % n];
        (own, prev[0] + prev[2])
    }

    /// Largest disagreement between overlapping single marginals.
    pub fn disturbance(&self) -> f64 {
        (0..self.n())
            .map(|i| {
                let (a, b) = self.single_plus(i);
                (a - b).abs()
            })
            .fold(0.0, f64::max)
    }

    /// `⟨X_i X_{i+1}⟩ = Σ x y p(x, y)` for each pair.
    pub fn correlators(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p[0] - p[1] - p[2] + p[3]).collect()
    }

    /// `(1 − λ)·self + λ·other`.
    pub fn mix(&self, other: &MarginalSet, lambda: f64) -> Result<MarginalSet> {
        if other.n() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                actual: other.n(),
            });
        }
        let pairs = self
            .pairs
            .iter()
            .zip(&other.pairs)
            .map(|(a, b)| std::array::from_fn(|k| (1.0 - lambda) * a[k] + lambda * b[k]))
            .collect();
        MarginalSet::new(pairs)
    }
}

/// Pair distributions with the given first and second moments:
/// `p(x, y) = (1 + x⟨X_i⟩ + y⟨X_j⟩ + xy⟨X_iX_j⟩)/4`.
pub fn correlators_to_marginals(c: &CorrelationVector, singles: &[f64]) -> Result<MarginalSet> {
    let n = c.scenario().n();
    if singles.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: singles.len(),
        });
    }
    if let Some(bad) = singles.iter().find(|s| !(s.abs() <= 1.0)) {
        return Err(Error::precondition(format!("single expectation {bad} outside [-1, 1]")));
    }
    let mut pairs = Vec::with_capacity(n);
    for (i, &corr) in c.values().iter().enumerate() {
        let (a, b) = c.scenario().term(i);
        let mut cells = [0.0; 4];
        for (k, &(x, y)) in OUTCOMES.iter().enumerate() {
            let (x, y) = (f64::from(x), f64::from(y));
            let cell = (1.0 + x * singles[a] + y * singles[b] + x * y * corr) / 4.0;
            if cell < NEGATIVE_CELL_TOL {
                return Err(Error::precondition(format!(
                    "moments of pair {i} give negative probability {cell:.3e}"
                )));
            }
            cells[k] = cell.max(0.0);
        }
        pairs.push(cells);
    }
    MarginalSet::new(pairs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feasibility {
    Feasible,
    /// Phase-one optimum in `(0, PHASE_ONE_TOL]`.
    FeasibleWithinTolerance,
    Infeasible,
}

/// Outcome of [`jpd_feasible`].
#[derive(Debug, Clone, PartialEq)]
pub struct JpdWitness {
    pub status: Feasibility,
    pub n: usize,
    /// Weight of each assignment when feasible (dense, length `2^n`).
    pub distribution: Option<Vec<f64>>,
    /// Independent re-check of the witness against every constraint;
    /// `f64::INFINITY` when there is no witness.
    pub max_constraint_residual: f64,
    /// Sum of artificial variables at the end of phase one.
    pub phase_one_objective: f64,
}

impl JpdWitness {
    pub fn feasible(&self) -> bool {
        self.status != Feasibility::Infeasible
    }

    /// Assignments with weight above `1e-15`, in index order.
    pub fn nonzero(&self) -> Vec<(usize, f64)> {
        self.distribution
            .as_ref()
            .map(|q| {
                q.iter()
                    .enumerate()
                    .filter(|&(_, &w)| w > 1e-15)
                    .map(|(a, &w)| (a, w))
                    .collect()
            })
            .unwrap_or_default()
    }

    /// `⟨X_i X_{i+1}⟩` under the witnessed distribution.
    pub fn correlators(&self) -> Option<Vec<f64>> {
        let q = self.distribution.as_ref()?;
        Some(
            (0..self.n)
                .map(|i| {
                    let j = (i + 1) % self.n;
                    q.iter()
                        .enumerate()
                        .map(|(a, &w)| w * f64::from(assignment_value(a, i) * assignment_value(a, j)))
                        .sum()
                })
                .collect(),
        )
    }

    /// TOML export of the nonzero weights.
    pub fn to_toml(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "n = {}", self.n);
        let _ = writeln!(out, "feasible = {}", self.feasible());
        let _ = writeln!(out, "max_constraint_residual = {:e}", self.max_constraint_residual);
        let _ = writeln!(out, "phase_one_objective = {:e}", self.phase_one_objective);
        for (a, w) in self.nonzero() {
            let outcomes: String = (0..self.n)
                .map(|b| if assignment_value(a, b) > 0 { '+' } else { '-' })
                .collect();
            let _ = writeln!(out, "\n[[weight]]\nassignment = {a}\noutcomes = \"{outcomes}\"\nvalue = {w:?}");
        }
        out
    }
}

/// Largest violation of `q ≥ 0`, `Σq = 1` and the pair-marginal equalities.
pub fn witness_residual(m: &MarginalSet, q: &[f64]) -> f64 {
    let n = m.n();
    let mut worst = q.iter().map(|&w| (-w).max(0.0)).fold(0.0, f64::max);
    worst = worst.max((q.iter().sum::<f64>() - 1.0).abs());
    for (i, p) in m.pairs().iter().enumerate() {
        let j = (i + 1) % n;
        let mut cells = [0.0; 4];
        for (a, &w) in q.iter().enumerate() {
            cells[cell_index(assignment_value(a, i), assignment_value(a, j))] += w;
        }
        for k in 0..4 {
            worst = worst.max((cells[k] - p[k]).abs());
        }
    }
    worst
}

/// Build the feasibility LP: `q ≥ 0`, `Σq = 1`, and one equality per pair
/// and outcome combination.
pub fn feasibility_lp(m: &MarginalSet) -> LinearProgram {
    let n = m.n();
    let cols = 1usize << n;
    let mut lp = LinearProgram::new(cols);
    lp.add_indicator_equality(0..cols, 1.0);
    for (i, p) in m.pairs().iter().enumerate() {
        let j = (i + 1) % n;
        for (k, &(x, y)) in OUTCOMES.iter().enumerate() {
            let support = (0..cols)
                .filter(move |&a| assignment_value(a, i) == x && assignment_value(a, j) == y);
            lp.add_indicator_equality(support, p[k]);
        }
    }
    lp
}

/// Decide whether a JPD over all `n` observables reproduces `m`.
pub fn jpd_feasible(m: &MarginalSet) -> Result<JpdWitness> {
    jpd_feasible_with(m, &SimplexOptions::default())
}

pub fn jpd_feasible_with(m: &MarginalSet, opts: &SimplexOptions) -> Result<JpdWitness> {
    let n = m.n();
    if n > MAX_LP_N {
        return Err(Error::Resource(format!(
            "JPD feasibility capped at n = {MAX_LP_N} (2^n LP variables), got {n}"
        )));
    }
    let disturbance = m.disturbance();
    if disturbance > NO_DISTURBANCE_TOL {
        return Err(Error::precondition(format!(
            "overlapping single marginals disagree by {disturbance:.3e}"
        )));
    }
    let lp = feasibility_lp(m);
    match lp.solve(opts) {
        LpOutcome::Optimal { x, phase_one, .. } => {
            let residual = witness_residual(m, &x);
            Ok(JpdWitness {
                status: if phase_one > 0.0 {
                    Feasibility::FeasibleWithinTolerance
                } else {
                    Feasibility::Feasible
                },
                n,
                distribution: Some(x),
                max_constraint_residual: residual,
                phase_one_objective: phase_one,
            })
        }
        LpOutcome::Infeasible { phase_one } => Ok(JpdWitness {
            status: Feasibility::Infeasible,
            n,
            distribution: None,
            max_constraint_residual: f64::INFINITY,
            phase_one_objective: phase_one,
        }),
        other => Err(Error::Resource(format!("simplex did not terminate cleanly: {other:?}"))),
    }
}

/// Check every sign-pattern cycle inequality on `correlators`; returns the
/// smallest slack `Σ signs·c − bound` over all `2^n` patterns.
pub fn min_cycle_inequality_slack(correlators: &[f64]) -> Result<f64> {
    let n = correlators.len();
    let mut worst = f64::INFINITY;
    for pattern in 0u32..1 << n {
        let signs: Vec<i8> = (0..n).map(|i| if pattern >> i & 1 == 1 { -1 } else { 1 }).collect();
        let s = CycleScenario::new(signs.clone())?;
        let bound = classical_bound(&s)? as f64;
        let lhs: f64 = signs.iter().zip(correlators).map(|(&s, &c)| f64::from(s) * c).sum();
        worst = worst.min(lhs - bound);
    }
    Ok(worst)
}
