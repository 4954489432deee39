//! Declarative description of n-cycle scenarios and the inequality tested on
//! them, independent of how the correlations are produced.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::qmat::{su2_rotation, Observable, State};
use crate::{Error, Execution, Result};

/// Largest cycle accepted by [`classical_bound`].
pub const MAX_ENUMERATION_N: usize = 24;

/// Tolerance on correlator values outside `[-1, 1]`.
pub const CORRELATOR_RANGE_TOL: f64 = 1e-9;

/// `n` dichotomic observables on a cycle together with the sign of each
/// adjacent-pair term `⟨X_i X_{i+1 mod n}⟩`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CycleScenario {
    signs: Vec<i8>,
}

impl CycleScenario {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if signs.len() < 3 {
            return Err(Error::precondition(format!(
                "a cycle needs at least 3 observables, got {}",
                signs.len()
            )));
        }
        if let Some(bad) = signs.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::precondition(format!("sign {bad} is not ±1")));
        }
        Ok(Self { signs })
    }

    /// `(+1, …, +1, (−1)^{n−1})`: the chained inequality with bound `−n + 2`.
    pub fn canonical(n: usize) -> Result<Self> {
        let mut signs = vec![1i8; n];
        if let Some(last) = signs.last_mut() {
            *last = if n.is_multiple_of(2) { -1 } else { 1 };
        }
        Self::new(signs)
    }

    /// Every term positive; the three-time Leggett-Garg form for `n = 3`.
    pub fn all_plus(n: usize) -> Result<Self> {
        Self::new(vec![1; n])
    }

    pub fn n(&self) -> usize {
        self.signs.len()
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    /// Observable indices of term `i`.
    pub fn term(&self, i: usize) -> (usize, usize) {
        (i, (i + 1) % self.n())
    }

    /// Relabel observables `X_i → X_{i+k}`, carrying the signs along.
    pub fn rotated(&self, k: usize) -> Self {
        let n = self.n();
        Self {
            signs: (0..n).map(|i| self.signs[(i + k) % n]).collect(),
        }
    }

    pub fn is_canonical(&self) -> bool {
        CycleScenario::canonical(self.n()).is_ok_and(|c| c == *self)
    }
}

impl fmt::Display for CycleScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let signs: String = self
            .signs
            .iter()
            .map(|&s| if s > 0 { '+' } else { '-' })
            .collect();
        write!(f, "cycle(n={}, signs={signs})", self.n())
    }
}

/// The `n` adjacent-pair correlators `⟨X_i X_{i+1 mod n}⟩` of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationVector {
    scenario: CycleScenario,
    values: Vec<f64>,
}

impl CorrelationVector {
    pub fn new(scenario: CycleScenario, values: Vec<f64>) -> Result<Self> {
        if values.len() != scenario.n() {
            return Err(Error::DimensionMismatch {
                expected: scenario.n(),
                actual: values.len(),
            });
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || v.abs() > 1.0 + CORRELATOR_RANGE_TOL {
                return Err(Error::precondition(format!(
                    "correlator {i} = {v} lies outside [-1, 1]"
                )));
            }
        }
        Ok(Self { scenario, values })
    }

    pub fn scenario(&self) -> &CycleScenario {
        &self.scenario
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// `Σ signs[i] · ⟨X_i X_{i+1}⟩`.
pub fn inequality_lhs(c: &CorrelationVector) -> f64 {
    c.scenario
        .signs
        .iter()
        .zip(&c.values)
        .map(|(&s, &v)| f64::from(s) * v)
        .sum()
}

/// Minimum of `Σ signs[i]·x_i·x_{i+1}` over all `x ∈ {±1}^n`.
///
/// Exhaustive over `2^{n−1}` assignments (the objective is invariant under a
/// global flip, so `x_0 = +1` is fixed). Bit `b` set means `x_b = −1`; a term
/// is `−1` exactly when the bits of its two endpoints differ.
pub fn classical_bound(s: &CycleScenario) -> Result<i64> {
    classical_bound_with(s, Execution::default())
}

pub fn classical_bound_with(s: &CycleScenario, exec: Execution) -> Result<i64> {
    let n = s.n();
    if n > MAX_ENUMERATION_N {
        return Err(Error::Resource(format!(
            "classical bound enumeration capped at n = {MAX_ENUMERATION_N}, got {n}"
        )));
    }
    let mut plus_mask = 0u32;
    let mut minus_mask = 0u32;
    for (i, &sign) in s.signs.iter().enumerate() {
        if sign > 0 {
            plus_mask |= 1 << i;
        } else {
            minus_mask |= 1 << i;
        }
    }
    let total: i64 = s.signs.iter().map(|&x| i64::from(x)).sum();
    let full = (1u32 << n) - 1;
    let value = move |bits: u32| -> i64 {
        // d_i = bit_i XOR bit_{i+1}
        let next = ((bits >> 1) | ((bits & 1) << (n - 1))) & full;
        let d = bits ^ next;
        total - 2 * (i64::from((d & plus_mask).count_ones()) - i64::from((d & minus_mask).count_ones()))
    };

    // x_0 = +1: enumerate bits 1..n.
    let count: u64 = 1 << (n - 1);
    const BLOCK: u64 = 1 << 14;
    let blocks = count.div_ceil(BLOCK) as usize;
    let minima = exec.map_indexed(blocks, |b| {
        let start = b as u64 * BLOCK;
        let end = (start + BLOCK).min(count);
        (start..end)
            .map(|k| value((k as u32) << 1))
            .min()
            .unwrap_or(i64::MAX)
    });
    Ok(minima.into_iter().min().expect("at least one block"))
}

/// Sequential measurements of one observable evolving under
/// `U_t = exp(i·angular_rate·t·(axis·σ))`.
#[derive(Debug, Clone)]
pub struct TemporalProtocol {
    initial_state: State,
    axis: [f64; 3],
    angular_rate: f64,
    times: Vec<f64>,
    measured: Observable,
}

impl TemporalProtocol {
    pub fn new(
        initial_state: State,
        axis: [f64; 3],
        angular_rate: f64,
        times: Vec<f64>,
        measured: Observable,
    ) -> Result<Self> {
        if initial_state.dim() != 2 || measured.dim() != 2 {
            return Err(Error::precondition("temporal protocols act on a qubit"));
        }
        if times.len() < 3 {
            return Err(Error::precondition("need at least three measurement times"));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::precondition("times must be strictly increasing"));
        }
        // Validates the axis as a side effect.
        su2_rotation(axis, 0.0)?;
        Ok(Self {
            initial_state,
            axis,
            angular_rate,
            times,
            measured,
        })
    }

    pub fn initial_state(&self) -> &State {
        &self.initial_state
    }

    pub fn axis(&self) -> [f64; 3] {
        self.axis
    }

    pub fn angular_rate(&self) -> f64 {
        self.angular_rate
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn measured(&self) -> &Observable {
        &self.measured
    }

    /// `U_t` at time `t`.
    pub fn unitary_at(&self, t: f64) -> crate::qmat::ComplexMatrix {
        su2_rotation(self.axis, self.angular_rate * t).expect("axis validated on construction")
    }

    /// Heisenberg-picture observable `X_t = U_t† X U_t`.
    pub fn observable_at(&self, t: f64) -> Observable {
        self.measured
            .conjugated(&self.unitary_at(t))
            .expect("unitary conjugation preserves the spectrum")
    }

    /// Heisenberg observables at every protocol time.
    pub fn observables(&self) -> Vec<Observable> {
        self.times.iter().map(|&t| self.observable_at(t)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Party {
    Alice(usize),
    Bob(usize),
}

/// One signed term `sign · ⟨A_alice B_bob⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairTerm {
    pub alice: usize,
    pub bob: usize,
    pub sign: i8,
}

/// Bipartite state and local settings, with the cycle terms they realize.
///
/// `nodes[i]` names the local measurement playing the cycle observable
/// `X_i`; it is used to read off single-observable marginals.
#[derive(Debug, Clone)]
pub struct BipartiteConfig {
    state: State,
    alice: Vec<Observable>,
    bob: Vec<Observable>,
    pairing: Vec<PairTerm>,
    nodes: Vec<Party>,
}

impl BipartiteConfig {
    pub fn new(
        state: State,
        alice: Vec<Observable>,
        bob: Vec<Observable>,
        pairing: Vec<PairTerm>,
        nodes: Vec<Party>,
    ) -> Result<Self> {
        let (Some(a0), Some(b0)) = (alice.first(), bob.first()) else {
            return Err(Error::precondition("both parties need at least one setting"));
        };
        let (da, db) = (a0.dim(), b0.dim());
        if alice.iter().any(|a| a.dim() != da) || bob.iter().any(|b| b.dim() != db) {
            return Err(Error::precondition("settings of one party must share a dimension"));
        }
        if state.dim() != da * db {
            return Err(Error::DimensionMismatch {
                expected: da * db,
                actual: state.dim(),
            });
        }
        for t in &pairing {
            if t.alice >= alice.len() {
                return Err(Error::IndexOutOfRange { index: t.alice, len: alice.len() });
            }
            if t.bob >= bob.len() {
                return Err(Error::IndexOutOfRange { index: t.bob, len: bob.len() });
            }
            if t.sign != 1 && t.sign != -1 {
                return Err(Error::precondition("term signs must be ±1"));
            }
        }
        if nodes.len() != pairing.len() {
            return Err(Error::DimensionMismatch {
                expected: pairing.len(),
                actual: nodes.len(),
            });
        }
        for node in &nodes {
            match *node {
                Party::Alice(i) if i >= alice.len() => {
                    return Err(Error::IndexOutOfRange { index: i, len: alice.len() })
                }
                Party::Bob(j) if j >= bob.len() => {
                    return Err(Error::IndexOutOfRange { index: j, len: bob.len() })
                }
                _ => {}
            }
        }
        Ok(Self {
            state,
            alice,
            bob,
            pairing,
            nodes,
        })
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn alice(&self) -> &[Observable] {
        &self.alice
    }

    pub fn bob(&self) -> &[Observable] {
        &self.bob
    }

    pub fn pairing(&self) -> &[PairTerm] {
        &self.pairing
    }

    pub fn nodes(&self) -> &[Party] {
        &self.nodes
    }

    pub fn alice_dim(&self) -> usize {
        self.alice[0].dim()
    }

    pub fn bob_dim(&self) -> usize {
        self.bob[0].dim()
    }

    pub fn scenario(&self) -> CycleScenario {
        CycleScenario::new(self.pairing.iter().map(|t| t.sign).collect())
            .expect("pairing validated on construction")
    }
}

/// Optional builder parameters carried by a scenario file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuilderParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
}

impl BuilderParams {
    pub fn is_empty(&self) -> bool {
        self.times.is_none() && self.rate.is_none()
    }
}

/// On-disk scenario description (TOML).
///
/// ```toml
/// n = 5
/// signs = [1, 1, 1, 1, 1]
/// builder = "kcbs-temporal"      # optional
/// correlators = [-0.6, -0.6, -0.6, -0.6, -0.6]   # optional
/// singles = [0.0, 0.0, 0.0, 0.0, 0.0]            # optional
/// pairs = [[0.25, 0.25, 0.25, 0.25], ...]        # optional, cells ++ +- -+ --
///
/// [params]                        # optional builder parameters
/// times = [0.0, 0.25, 0.5, 0.75, 1.0]
/// rate = 5.026548245743669
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub n: usize,
    pub signs: Vec<i8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builder: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correlators: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub singles: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<[f64; 4]>>,
    #[serde(default, skip_serializing_if = "BuilderParams::is_empty")]
    pub params: BuilderParams,
}

impl ScenarioFile {
    pub fn from_scenario(s: &CycleScenario) -> Self {
        Self {
            n: s.n(),
            signs: s.signs().to_vec(),
            builder: None,
            correlators: None,
            singles: None,
            pairs: None,
            params: BuilderParams::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        file.validate()?;
        Ok(file)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario file serializes")
    }

    pub fn scenario(&self) -> Result<CycleScenario> {
        CycleScenario::new(self.signs.clone())
    }

    pub fn validate(&self) -> Result<()> {
        if self.signs.len() != self.n {
            return Err(Error::Parse(format!(
                "n = {} but {} signs given",
                self.n,
                self.signs.len()
            )));
        }
        self.scenario()?;
        for (name, len) in [
            ("correlators", self.correlators.as_ref().map(Vec::len)),
            ("singles", self.singles.as_ref().map(Vec::len)),
            ("pairs", self.pairs.as_ref().map(Vec::len)),
        ] {
            if let Some(len) = len {
                if len != self.n {
                    return Err(Error::Parse(format!("{name} has {len} entries, n = {}", self.n)));
                }
            }
        }
        Ok(())
    }

    /// The correlation vector, when correlators are given.
    pub fn correlation_vector(&self) -> Result<Option<CorrelationVector>> {
        self.correlators
            .as_ref()
            .map(|c| CorrelationVector::new(self.scenario()?, c.clone()))
            .transpose()
    }
}
