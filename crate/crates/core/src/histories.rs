//! Consistent-histories analysis of three-time sequential measurements.
//!
//! A family holds three measurement slots, each a pair of projectors
//! already in the Heisenberg picture at its time. A history picks one
//! outcome per slot; its chain operator is `C = P⁽³⁾ P⁽²⁾ P⁽¹⁾` (later slots
//! act on the left) and the decoherence functional is `Tr(C_e ρ C_g†)`.

use std::fmt;
use std::str::FromStr;

use crate::qmat::{ComplexMatrix, Observable, State, IDENTITY_TOL};
use crate::quantum::anticommutator_correlation;
use crate::scenario::TemporalProtocol;
use crate::{Error, Result};

pub const SLOTS: usize = 3;
/// `|Re Tr(C_e ρ C_g†)|` at or below this counts as consistent.
pub const CONSISTENT_TOL: f64 = 1e-10;
/// Values in `(CONSISTENT_TOL, INCONSISTENT_TOL)` are marginally inconsistent.
pub const INCONSISTENT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Plus,
    Minus,
    /// Slot summed out (no measurement at that time).
    Star,
}

impl Outcome {
    fn from_sign(k: i8) -> Self {
        if k > 0 {
            Outcome::Plus
        } else {
            Outcome::Minus
        }
    }

    fn sign(self) -> Option<i8> {
        match self {
            Outcome::Plus => Some(1),
            Outcome::Minus => Some(-1),
            Outcome::Star => None,
        }
    }
}

/// Outcome pattern over the three slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct History(pub [Outcome; SLOTS]);

impl History {
    /// Fully specified history from ±1 outcomes.
    pub fn from_signs(k: i8, l: i8, m: i8) -> Self {
        History([Outcome::from_sign(k), Outcome::from_sign(l), Outcome::from_sign(m)])
    }

    /// History with slot `star` summed out; the remaining two slots take
    /// `a` then `b` in time order.
    pub fn with_star(star: usize, a: i8, b: i8) -> Self {
        let mut rest = [a, b].into_iter().map(Outcome::from_sign);
        let mut slots = [Outcome::Star; SLOTS];
        for (i, slot) in slots.iter_mut().enumerate() {
            if i != star {
                *slot = rest.next().expect("two filled slots");
            }
        }
        History(slots)
    }

    pub fn stars(&self) -> usize {
        self.0.iter().filter(|&&o| o == Outcome::Star).count()
    }

    pub fn star_slot(&self) -> Option<usize> {
        self.0.iter().position(|&o| o == Outcome::Star)
    }

    /// Replace the `*` slot with `k`.
    pub fn filled(&self, k: i8) -> History {
        let mut h = *self;
        if let Some(s) = self.star_slot() {
            h.0[s] = Outcome::from_sign(k);
        }
        h
    }

    /// All eight fully specified histories, `+` before `−`, first slot slowest.
    pub fn all() -> Vec<History> {
        let signs = [1i8, -1];
        let mut out = Vec::with_capacity(8);
        for &k in &signs {
            for &l in &signs {
                for &m in &signs {
                    out.push(History::from_signs(k, l, m));
                }
            }
        }
        out
    }
}

impl fmt::Display for History {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<&str> = self
            .0
            .iter()
            .map(|o| match o {
                Outcome::Plus => "+",
                Outcome::Minus => "-",
                Outcome::Star => "*",
            })
            .collect();
        write!(f, "({})", s.join(","))
    }
}

impl FromStr for History {
    type Err = Error;

    /// Accepts `"+-*"` or `"(+,-,*)"`.
    fn from_str(s: &str) -> Result<Self> {
        let symbols: Vec<Outcome> = s
            .chars()
            .filter(|c| !matches!(c, '(' | ')' | ',' | ' '))
            .map(|c| match c {
                '+' => Ok(Outcome::Plus),
                '-' => Ok(Outcome::Minus),
                '*' => Ok(Outcome::Star),
                other => Err(Error::Parse(format!("bad history symbol `{other}`"))),
            })
            .collect::<Result<_>>()?;
        let slots: [Outcome; SLOTS] = symbols
            .try_into()
            .map_err(|_| Error::Parse(format!("history `{s}` needs {SLOTS} slots")))?;
        Ok(History(slots))
    }
}

/// A pair `(P₊, P₋)` of complementary projectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Slot {
    plus: ComplexMatrix,
    minus: ComplexMatrix,
}

impl Slot {
    pub fn new(plus: ComplexMatrix, minus: ComplexMatrix) -> Result<Self> {
        if plus.dim() != minus.dim() {
            return Err(Error::DimensionMismatch {
                expected: plus.dim(),
                actual: minus.dim(),
            });
        }
        let id = ComplexMatrix::identity(plus.dim());
        let checks = [
            ("P₊ + P₋ = I", (&plus + &minus).max_diff(&id)),
            ("P₊P₋ = 0", plus.matmul(&minus).max_abs()),
            ("P₊² = P₊", plus.matmul(&plus).max_diff(&plus)),
            ("P₋² = P₋", minus.matmul(&minus).max_diff(&minus)),
            ("P₊ Hermitian", plus.hermiticity_defect()),
            ("P₋ Hermitian", minus.hermiticity_defect()),
        ];
        for (what, defect) in checks {
            if defect > IDENTITY_TOL {
                return Err(Error::precondition(format!("slot violates {what} ({defect:.3e})")));
            }
        }
        Ok(Self { plus, minus })
    }

    pub fn from_observable(x: &Observable) -> Self {
        Self {
            plus: x.proj_plus().clone(),
            minus: x.proj_minus().clone(),
        }
    }

    /// Both projectors equal to... the identity and zero, i.e. a trivial slot
    /// that always yields `+`.
    pub fn trivial(dim: usize) -> Self {
        Self {
            plus: ComplexMatrix::identity(dim),
            minus: ComplexMatrix::zeros(dim),
        }
    }

    pub fn projector(&self, k: i8) -> &ComplexMatrix {
        if k > 0 {
            &self.plus
        } else {
            &self.minus
        }
    }

    /// `P₊ − P₋`.
    pub fn observable_matrix(&self) -> ComplexMatrix {
        &self.plus - &self.minus
    }
}

/// Initial state and three time-ordered measurement slots.
#[derive(Debug, Clone)]
pub struct HistoryFamily {
    state: State,
    slots: [Slot; SLOTS],
}

impl HistoryFamily {
    pub fn new(state: State, slots: [Slot; SLOTS]) -> Result<Self> {
        for s in &slots {
            if s.plus.dim() != state.dim() {
                return Err(Error::DimensionMismatch {
                    expected: state.dim(),
                    actual: s.plus.dim(),
                });
            }
        }
        Ok(Self { state, slots })
    }

    /// Slots from three ±1 observables (already Heisenberg-evolved).
    pub fn from_observables(state: State, obs: [&Observable; SLOTS]) -> Result<Self> {
        Self::new(state, obs.map(Slot::from_observable))
    }

    /// Slots from a temporal protocol at the protocol times with indices
    /// `which`, in the order given.
    pub fn from_temporal(protocol: &TemporalProtocol, which: [usize; SLOTS]) -> Result<Self> {
        let times = protocol.times();
        let mut obs = Vec::with_capacity(SLOTS);
        for &i in &which {
            let t = *times
                .get(i)
                .ok_or(Error::IndexOutOfRange { index: i, len: times.len() })?;
            obs.push(protocol.observable_at(t));
        }
        Self::from_observables(
            protocol.initial_state().clone(),
            [&obs[0], &obs[1], &obs[2]],
        )
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn slots(&self) -> &[Slot; SLOTS] {
        &self.slots
    }

    /// `P⁽³⁾ P⁽²⁾ P⁽¹⁾`, with `*` slots replaced by the identity.
    fn chain_with_stars(&self, h: &History) -> ComplexMatrix {
        let mut c = ComplexMatrix::identity(self.state.dim());
        for (slot, o) in self.slots.iter().zip(h.0) {
            if let Some(k) = o.sign() {
                c = slot.projector(k).matmul(&c);
            }
        }
        c
    }

    /// `Tr(C_e ρ C_g†)`, allowing `*` slots (identity).
    fn functional(&self, e: &History, g: &History) -> num_complex::Complex64 {
        let ce = self.chain_with_stars(e);
        let cg = self.chain_with_stars(g);
        ce.matmul(self.state.matrix()).trace_product(&cg.adjoint())
    }
}

fn require_full(h: &History) -> Result<()> {
    if h.stars() != 0 {
        return Err(Error::precondition(format!("history {h} must be fully specified")));
    }
    Ok(())
}

/// `C_h = P⁽³⁾_m P⁽²⁾_l P⁽¹⁾_k`.
pub fn chain_operator(f: &HistoryFamily, h: &History) -> Result<ComplexMatrix> {
    require_full(h)?;
    Ok(f.chain_with_stars(h))
}

/// `p(k,l,m) = Tr(C ρ C†)`.
pub fn history_probability(f: &HistoryFamily, h: &History) -> Result<f64> {
    require_full(h)?;
    Ok(f.functional(h, h).re)
}

/// Probability of a pattern with `*` slots not measured at all,
/// e.g. `p(*,k,k) = Tr(P⁽³⁾_k P⁽²⁾_k ρ P⁽²⁾_k P⁽³⁾_k)`.
pub fn marginal_probability(f: &HistoryFamily, pattern: &History) -> f64 {
    f.functional(pattern, pattern).re
}

/// `Re Tr(C_e ρ C_g†)`; zero for a consistent pair of distinct histories.
pub fn consistency(f: &HistoryFamily, e: &History, g: &History) -> Result<f64> {
    require_full(e)?;
    require_full(g)?;
    Ok(f.functional(e, g).re)
}

/// `I = 2 Re Tr(C_{e(+)} ρ C_{e(−)}†)`, where `e(±)` fill the single `*`.
pub fn interference_term(f: &HistoryFamily, pattern: &History) -> Result<f64> {
    if pattern.stars() != 1 {
        return Err(Error::precondition(format!(
            "interference pattern {pattern} needs exactly one *"
        )));
    }
    Ok(2.0 * f.functional(&pattern.filled(1), &pattern.filled(-1)).re)
}

/// Three-way classification of a decoherence-functional value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Consistency {
    Consistent,
    MarginallyInconsistent,
    Inconsistent,
}

impl Consistency {
    pub fn classify(value: f64) -> Self {
        let a = value.abs();
        if a <= CONSISTENT_TOL {
            Consistency::Consistent
        } else if a < INCONSISTENT_TOL {
            Consistency::MarginallyInconsistent
        } else {
            Consistency::Inconsistent
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Consistency::Consistent => "consistent",
            Consistency::MarginallyInconsistent => "marginally-inconsistent",
            Consistency::Inconsistent => "inconsistent",
        }
    }
}

/// A correlator computed from history marginals and from `½Tr(ρ{X,Y})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelatorRoutes {
    pub slots: (usize, usize),
    pub from_marginals: f64,
    pub from_anticommutator: f64,
}

/// One history pair whose members differ only in one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairConsistency {
    pub first: History,
    pub second: History,
    pub value: f64,
    pub class: Consistency,
}

/// Everything the three-time Leggett-Garg analysis produces for one family.
#[derive(Debug, Clone, PartialEq)]
pub struct LgReport {
    /// `p(k,l,m)` for all eight histories, in [`History::all`] order.
    pub probabilities: Vec<(History, f64)>,
    /// `⟨X₁X₂⟩`, `⟨X₂X₃⟩`, `⟨X₁X₃⟩`.
    pub correlators: [CorrelatorRoutes; 3],
    /// `⟨X₁X₂⟩ + ⟨X₂X₃⟩ + ⟨X₁X₃⟩` (marginal route); classical bound −1.
    pub lhs: f64,
    /// `I(*,k,k)`, `I(k,*,k)`, `I(*,k,−k)`, `I(k,*,−k)` for `k = +, −`.
    pub interference: Vec<(History, f64)>,
    /// `I(k,k,*)`, `I(k,−k,*)`; zero identically.
    pub last_slot_interference: Vec<(History, f64)>,
    /// `Σ_k [4p(k,k,k) + I(*,k,k) + I(k,*,k) − I(*,k,−k) − I(k,*,−k)]`.
    pub rewritten: f64,
    /// The pairs `{(+,k,k),(−,k,k)}`, `{(k,+,k),(k,−,k)}`,
    /// `{(+,k,−k),(−,k,−k)}`, `{(k,+,−k),(k,−,−k)}` for `k = +, −`.
    pub pairs: Vec<PairConsistency>,
}

impl LgReport {
    pub fn violated(&self) -> bool {
        self.lhs < -1.0
    }

    /// Largest gap between the two correlator routes.
    pub fn route_disagreement(&self) -> f64 {
        self.correlators
            .iter()
            .map(|c| (c.from_marginals - c.from_anticommutator).abs())
            .fold(0.0, f64::max)
    }

    pub fn any_inconsistent(&self, threshold: f64) -> bool {
        self.pairs.iter().any(|p| p.value.abs() > threshold)
    }
}

/// `Σ_k (p(pattern_same(k)) − p(pattern_diff(k)))` for the two unstarred slots.
fn marginal_correlator(f: &HistoryFamily, star: usize) -> f64 {
    let mut acc = 0.0;
    for k in [1i8, -1] {
        acc += marginal_probability(f, &History::with_star(star, k, k));
        acc -= marginal_probability(f, &History::with_star(star, k, -k));
    }
    acc
}

/// Full three-time decomposition: correlators by two routes, the
/// Leggett-Garg sum, all interference terms, the rewritten inequality and
/// the consistency of the history pairs that feed it.
pub fn lg_decomposition(f: &HistoryFamily) -> Result<LgReport> {
    let probabilities = History::all()
        .into_iter()
        .map(|h| history_probability(f, &h).map(|p| (h, p)))
        .collect::<Result<Vec<_>>>()?;

    let obs = f
        .slots
        .iter()
        .map(|s| Observable::new(s.observable_matrix()))
        .collect::<Result<Vec<_>>>()?;
    let route = |a: usize, b: usize, star: usize| -> Result<CorrelatorRoutes> {
        Ok(CorrelatorRoutes {
            slots: (a + 1, b + 1),
            from_marginals: marginal_correlator(f, star),
            from_anticommutator: anticommutator_correlation(&f.state, &obs[a], &obs[b])?,
        })
    };
    let correlators = [route(0, 1, 2)?, route(1, 2, 0)?, route(0, 2, 1)?];
    let lhs = correlators.iter().map(|c| c.from_marginals).sum();

    let mut interference = Vec::with_capacity(8);
    let mut rewritten = 0.0;
    for k in [1i8, -1] {
        rewritten += 4.0 * history_probability(f, &History::from_signs(k, k, k))?;
        for (pattern, sign) in [
            (History::with_star(0, k, k), 1.0),
            (History::with_star(1, k, k), 1.0),
            (History::with_star(0, k, -k), -1.0),
            (History::with_star(1, k, -k), -1.0),
        ] {
            let value = interference_term(f, &pattern)?;
            rewritten += sign * value;
            interference.push((pattern, value));
        }
    }

    let last_slot_interference = [1i8, -1]
        .iter()
        .flat_map(|&k| [History::with_star(2, k, k), History::with_star(2, k, -k)])
        .map(|p| interference_term(f, &p).map(|v| (p, v)))
        .collect::<Result<Vec<_>>>()?;

    let mut pairs = Vec::with_capacity(8);
    for k in [1i8, -1] {
        for (star, b) in [(0, k), (1, k), (0, -k), (1, -k)] {
            let pattern = History::with_star(star, k, b);
            let (first, second) = (pattern.filled(1), pattern.filled(-1));
            let value = consistency(f, &first, &second)?;
            pairs.push(PairConsistency {
                first,
                second,
                value,
                class: Consistency::classify(value),
            });
        }
    }

    Ok(LgReport {
        probabilities,
        correlators,
        lhs,
        interference,
        last_slot_interference,
        rewritten,
        pairs,
    })
}

/// Three qubit observables `M(θ_i) = cos θ_i σ_z + sin θ_i σ_x`.
pub fn xz_family(state: State, angles: [f64; SLOTS]) -> Result<HistoryFamily> {
    let obs = angles.map(crate::quantum::xz_observable);
    HistoryFamily::from_observables(state, [&obs[0], &obs[1], &obs[2]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::{sigma_x, sigma_z};
    use crate::quantum::sequential_probabilities;
    use std::f64::consts::PI;

    fn lg_family() -> HistoryFamily {
        xz_family(State::maximally_mixed(2), [0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0]).unwrap()
    }

    fn h(s: &str) -> History {
        s.parse().unwrap()
    }

    #[test]
    fn history_parsing() {
        assert_eq!(h("(+,-,*)"), History([Outcome::Plus, Outcome::Minus, Outcome::Star]));
        assert_eq!(h("+-*").to_string(), "(+,-,*)");
        assert!("++".parse::<History>().is_err());
        assert!("++x".parse::<History>().is_err());
        assert_eq!(History::with_star(1, 1, -1), h("+*-"));
    }

    #[test]
    fn identity_family() {
        let f = HistoryFamily::new(
            State::maximally_mixed(2),
            [Slot::trivial(2), Slot::trivial(2), Slot::trivial(2)],
        )
        .unwrap();
        assert_eq!(chain_operator(&f, &h("+++")).unwrap(), ComplexMatrix::identity(2));
        assert!((history_probability(&f, &h("+++")).unwrap() - 1.0).abs() < 1e-15);
        assert!(chain_operator(&f, &h("*++")).is_err());
    }

    #[test]
    fn single_projector_chain() {
        let z = Observable::new(sigma_z()).unwrap();
        let f = HistoryFamily::new(
            State::maximally_mixed(2),
            [Slot::from_observable(&z), Slot::trivial(2), Slot::trivial(2)],
        )
        .unwrap();
        let c = chain_operator(&f, &h("+++")).unwrap();
        assert_eq!(c, ComplexMatrix::diagonal(&[1.0, 0.0]));
    }

    #[test]
    fn z_then_x_chain() {
        let z = Observable::new(sigma_z()).unwrap();
        let x = Observable::new(sigma_x()).unwrap();
        let f = HistoryFamily::new(
            State::maximally_mixed(2),
            [Slot::from_observable(&z), Slot::from_observable(&x), Slot::trivial(2)],
        )
        .unwrap();
        let c = chain_operator(&f, &h("+++")).unwrap();
        // |+⟩⟨+|0⟩⟨0| = ½ [[1, 0], [1, 0]]
        let want = ComplexMatrix::from_real_rows(&[&[0.5, 0.0], &[0.5, 0.0]]).unwrap();
        assert!(c.max_diff(&want) < 1e-15);
        assert!((history_probability(&f, &h("+++")).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn lg_probabilities_match_luders_chain() {
        let f = lg_family();
        let obs: Vec<Observable> = [0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0]
            .iter()
            .map(|&a| crate::quantum::xz_observable(a))
            .collect();
        let oracle = sequential_probabilities(f.state(), &[&obs[0], &obs[1], &obs[2]]).unwrap();
        let mut total = 0.0;
        for (outcomes, p) in oracle {
            let hist = History::from_signs(outcomes[0], outcomes[1], outcomes[2]);
            let got = history_probability(&f, &hist).unwrap();
            assert!((got - p).abs() < 1e-12);
            total += got;
        }
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn consistency_examples() {
        let f = lg_family();
        let e = h("+++");
        assert!((consistency(&f, &e, &e).unwrap() - history_probability(&f, &e).unwrap()).abs() < 1e-15);
        for k in [1i8, -1] {
            let value = consistency(&f, &History::from_signs(1, k, k), &History::from_signs(-1, k, k)).unwrap();
            let i = interference_term(&f, &History::with_star(0, k, k)).unwrap();
            assert!((value - 0.5 * i).abs() < 1e-15);
        }
        let z = Observable::new(sigma_z()).unwrap();
        let diag = HistoryFamily::from_observables(State::maximally_mixed(2), [&z, &z, &z]).unwrap();
        assert_eq!(consistency(&diag, &h("+++"), &h("-++")).unwrap(), 0.0);
    }

    #[test]
    fn interference_examples() {
        let f = lg_family();
        for k in [1i8, -1] {
            for b in [k, -k] {
                let v = interference_term(&f, &History::with_star(2, k, b)).unwrap();
                assert!(v.abs() < 1e-15);
            }
        }
        // First-slot interference vanishes for ρ ∝ I; the middle slot does not.
        assert!(interference_term(&f, &h("*++")).unwrap().abs() < 1e-15);
        let pattern = h("+*+");
        let i = interference_term(&f, &pattern).unwrap();
        assert!(i.abs() > 0.01);
        let residual = marginal_probability(&f, &pattern)
            - history_probability(&f, &h("+++")).unwrap()
            - history_probability(&f, &h("+-+")).unwrap();
        assert!((residual - i).abs() < 1e-12);
        assert!(interference_term(&f, &h("+++")).is_err());
        assert!(interference_term(&f, &h("**+")).is_err());
    }

    #[test]
    fn lg_report_examples() {
        let same = xz_family(State::maximally_mixed(2), [0.3; 3]).unwrap();
        let r = lg_decomposition(&same).unwrap();
        assert!((r.lhs - 3.0).abs() < 1e-12);
        assert!(r.interference.iter().all(|(_, v)| v.abs() < 1e-12));

        let r = lg_decomposition(&lg_family()).unwrap();
        assert!((r.lhs + 1.5).abs() < 1e-12);
        assert!(r.violated());
        assert!(r.interference.iter().any(|(_, v)| v.abs() > 0.01));
        assert!(r.route_disagreement() < 1e-9);
        assert!((r.rewritten - (r.lhs + 1.0)).abs() < 1e-12);
        assert!(r.any_inconsistent(INCONSISTENT_TOL));
    }

    #[test]
    fn dropping_the_last_projector_changes_nothing() {
        let f = lg_family();
        for hist in History::all() {
            let full = chain_operator(&f, &hist).unwrap();
            let mut truncated = ComplexMatrix::identity(2);
            for (slot, o) in f.slots().iter().zip(hist.0).take(2) {
                truncated = slot.projector(o.sign().unwrap()).matmul(&truncated);
            }
            let rho = f.state().matrix();
            let p3 = f.slots()[2].projector(hist.0[2].sign().unwrap());
            let a = full.matmul(rho).matmul(&full.adjoint()).trace().re;
            // Tr(P3 (C' ρ C'†)) equals Tr(P3 C' ρ C'† P3).
            let b = p3.matmul(&truncated).matmul(rho).trace_product(&truncated.adjoint()).re;
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn classification_thresholds() {
        assert_eq!(Consistency::classify(1e-11), Consistency::Consistent);
        assert_eq!(Consistency::classify(-1e-8), Consistency::MarginallyInconsistent);
        assert_eq!(Consistency::classify(2e-6), Consistency::Inconsistent);
    }

    #[test]
    fn slot_validation() {
        let bad = Slot::new(ComplexMatrix::identity(2), ComplexMatrix::identity(2));
        assert!(bad.is_err());
    }

    #[test]
    fn temporal_family_builder() {
        let protocol = crate::quantum::temporal_kcbs_protocol();
        let f = HistoryFamily::from_temporal(&protocol, [0, 1, 2]).unwrap();
        let r = lg_decomposition(&f).unwrap();
        let c = (4.0 * PI / 5.0).cos();
        assert!((r.correlators[0].from_marginals - c).abs() < 1e-12);
        assert!(HistoryFamily::from_temporal(&protocol, [0, 1, 7]).is_err());
    }
}
