//! Quantum-mechanical correlators in the three settings, and builders for
//! the explicit configurations (contextual pentagram, temporal qubit
//! protocol, bipartite `|φ+⟩` settings for KCBS and chained inequalities).

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::qmat::{
    bloch_observable, kron, ket_projector, sigma_z, su2_rotation, ComplexMatrix, Observable, State,
    C64,
};
use crate::scenario::{
    BipartiteConfig, BuilderParams, CorrelationVector, CycleScenario, PairTerm, Party,
    TemporalProtocol,
};
use crate::{Error, Result};

/// Commutator bound for a pair to count as jointly measurable.
pub const COMMUTING_TOL: f64 = 1e-9;
/// Largest imaginary part tolerated in a real-valued trace.
pub const REAL_TOL: f64 = 1e-10;
/// Branches with probability at most this are treated as empty.
pub const ZERO_BRANCH: f64 = 1e-15;

fn real_part(z: C64, what: &str) -> Result<f64> {
    if z.im.abs() > REAL_TOL {
        return Err(Error::precondition(format!(
            "{what} has imaginary part {:.3e}",
            z.im
        )));
    }
    Ok(z.re)
}

fn check_dims(rho: &State, ops: &[&Observable]) -> Result<()> {
    for op in ops {
        if op.dim() != rho.dim() {
            return Err(Error::DimensionMismatch {
                expected: rho.dim(),
                actual: op.dim(),
            });
        }
    }
    Ok(())
}

/// `Tr(ρ x y)` for a commuting (jointly measurable) pair.
pub fn correlation_joint(rho: &State, x: &Observable, y: &Observable) -> Result<f64> {
    check_dims(rho, &[x, y])?;
    let comm = x.matrix().commutator_norm(y.matrix());
    if comm > COMMUTING_TOL {
        return Err(Error::precondition(format!(
            "observables do not commute (‖[x,y]‖ = {comm:.3e}); not a valid context"
        )));
    }
    let xy = x.matrix().matmul(y.matrix());
    real_part(rho.expectation(&xy), "joint correlator")
}

/// `½ Tr(ρ {x, y})`.
pub fn anticommutator_correlation(rho: &State, x: &Observable, y: &Observable) -> Result<f64> {
    check_dims(rho, &[x, y])?;
    let anti = x.matrix().anticommutator(y.matrix());
    Ok(0.5 * real_part(rho.expectation(&anti), "anticommutator correlator")?)
}

/// Outcome statistics of two sequential projective measurements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequentialOutcomeTable {
    /// `p_first[0]` for outcome +1, `p_first[1]` for −1.
    pub p_first: [f64; 2],
    /// `p_second_given_first[k][l]`: outcome `l` second given `k` first,
    /// same index convention. Rows of empty branches are zero.
    pub p_second_given_first: [[f64; 2]; 2],
}

fn outcome_index(k: i8) -> usize {
    if k > 0 {
        0
    } else {
        1
    }
}

impl SequentialOutcomeTable {
    pub fn p(&self, k: i8) -> f64 {
        self.p_first[outcome_index(k)]
    }

    pub fn q(&self, l: i8, given: i8) -> f64 {
        self.p_second_given_first[outcome_index(given)][outcome_index(l)]
    }

    /// `Σ_{k,l} k·l·p_k·q_{l|k}`.
    pub fn correlator(&self) -> f64 {
        let mut acc = 0.0;
        for k in [1i8, -1] {
            for l in [1i8, -1] {
                acc += f64::from(k * l) * self.p(k) * self.q(l, k);
            }
        }
        acc
    }
}

/// Lüders update `ρ → PρP / Tr(Pρ)`; `None` for an empty branch.
fn luders(rho: &ComplexMatrix, p: &ComplexMatrix) -> (f64, Option<ComplexMatrix>) {
    let unnormalized = p.matmul(rho).matmul(p);
    let prob = unnormalized.trace().re.max(0.0);
    if prob <= ZERO_BRANCH {
        (prob, None)
    } else {
        (prob, Some(unnormalized.scale_real(1.0 / prob)))
    }
}

/// Measure `first`, update by the Lüders rule, then measure `second`.
pub fn correlation_sequential(
    rho: &State,
    first: &Observable,
    second: &Observable,
) -> Result<(f64, SequentialOutcomeTable)> {
    check_dims(rho, &[first, second])?;
    let mut table = SequentialOutcomeTable {
        p_first: [0.0; 2],
        p_second_given_first: [[0.0; 2]; 2],
    };
    for k in [1i8, -1] {
        let (pk, post) = luders(rho.matrix(), first.projector(k));
        let Some(post) = post else { continue };
        table.p_first[outcome_index(k)] = pk;
        for l in [1i8, -1] {
            let q = post.trace_product(second.projector(l)).re.clamp(0.0, 1.0);
            table.p_second_given_first[outcome_index(k)][outcome_index(l)] = q;
        }
    }
    Ok((table.correlator(), table))
}

/// Joint outcome probabilities of a chain of projective measurements,
/// `p(k_1, …, k_m) = Tr(P_m…P_1 ρ P_1…P_m)`, enumerated with outcome
/// `+1` first (index bit `j` set means step `j` gave −1).
pub fn sequential_probabilities(rho: &State, steps: &[&Observable]) -> Result<Vec<(Vec<i8>, f64)>> {
    check_dims(rho, steps)?;
    let m = steps.len();
    let mut out = Vec::with_capacity(1 << m);
    for bits in 0u32..1 << m {
        let outcomes: Vec<i8> = (0..m).map(|j| if bits >> j & 1 == 1 { -1 } else { 1 }).collect();
        let mut branch = rho.matrix().clone();
        for (obs, &k) in steps.iter().zip(&outcomes) {
            let p = obs.projector(k);
            branch = p.matmul(&branch).matmul(p);
        }
        out.push((outcomes, branch.trace().re.max(0.0)));
    }
    Ok(out)
}

/// `Tr(ρ′ (A_i ⊗ B_j))`.
pub fn correlation_spatial(cfg: &BipartiteConfig, i: usize, j: usize) -> Result<f64> {
    let a = cfg
        .alice()
        .get(i)
        .ok_or(Error::IndexOutOfRange { index: i, len: cfg.alice().len() })?;
    let b = cfg
        .bob()
        .get(j)
        .ok_or(Error::IndexOutOfRange { index: j, len: cfg.bob().len() })?;
    let op = kron(a.matrix(), b.matrix());
    real_part(cfg.state().expectation(&op), "spatial correlator")
}

/// `⟨A_i⟩` or `⟨B_j⟩` on the reduced state.
pub fn local_expectation(cfg: &BipartiteConfig, party: Party) -> f64 {
    let op = match party {
        Party::Alice(i) => kron(cfg.alice()[i].matrix(), &ComplexMatrix::identity(cfg.bob_dim())),
        Party::Bob(j) => kron(&ComplexMatrix::identity(cfg.alice_dim()), cfg.bob()[j].matrix()),
    };
    cfg.state().expectation(&op).re
}

/// Correlators of every pairing term of a bipartite configuration.
pub fn spatial_correlation_vector(cfg: &BipartiteConfig) -> Result<CorrelationVector> {
    let values = cfg
        .pairing()
        .iter()
        .map(|t| correlation_spatial(cfg, t.alice, t.bob))
        .collect::<Result<Vec<_>>>()?;
    CorrelationVector::new(cfg.scenario(), values)
}

/// Full `Tr(ρ′ (A_i ⊗ B_j))` table, Alice settings by row.
pub fn spatial_correlator_matrix(cfg: &BipartiteConfig) -> Result<Vec<Vec<f64>>> {
    (0..cfg.alice().len())
        .map(|i| (0..cfg.bob().len()).map(|j| correlation_spatial(cfg, i, j)).collect())
        .collect()
}

/// Adjacent correlators `⟨X_i X_{i+1}⟩` of commuting observables on one system.
pub fn contextual_correlation_vector(
    rho: &State,
    observables: &[Observable],
    scenario: &CycleScenario,
) -> Result<CorrelationVector> {
    if observables.len() != scenario.n() {
        return Err(Error::DimensionMismatch {
            expected: scenario.n(),
            actual: observables.len(),
        });
    }
    let values = (0..scenario.n())
        .map(|i| {
            let (a, b) = scenario.term(i);
            correlation_joint(rho, &observables[a], &observables[b])
        })
        .collect::<Result<Vec<_>>>()?;
    CorrelationVector::new(scenario.clone(), values)
}

/// Two-time correlators in the Heisenberg picture for arbitrary (not
/// necessarily ordered) times: `½Tr(ρ{X_{t_i}, X_{t_{i+1}}})`.
pub fn temporal_correlations_at(
    rho: &State,
    measured: &Observable,
    axis: [f64; 3],
    rate: f64,
    times: &[f64],
) -> Result<Vec<f64>> {
    let observables = times
        .iter()
        .map(|&t| measured.conjugated(&su2_rotation(axis, rate * t)?))
        .collect::<Result<Vec<_>>>()?;
    let n = observables.len();
    (0..n)
        .map(|i| anticommutator_correlation(rho, &observables[i], &observables[(i + 1) % n]))
        .collect()
}

/// Heisenberg-picture correlators of a temporal protocol; term `i` pairs
/// times `t_i` and `t_{i+1 mod n}`.
pub fn temporal_correlation_vector(
    protocol: &TemporalProtocol,
    scenario: &CycleScenario,
) -> Result<CorrelationVector> {
    if scenario.n() != protocol.times().len() {
        return Err(Error::DimensionMismatch {
            expected: protocol.times().len(),
            actual: scenario.n(),
        });
    }
    let values = temporal_correlations_at(
        protocol.initial_state(),
        protocol.measured(),
        protocol.axis(),
        protocol.angular_rate(),
        protocol.times(),
    )?;
    CorrelationVector::new(scenario.clone(), values)
}

/// Schrödinger-picture simulation of measuring at `t_i` then at `t_j`
/// (`t_i ≤ t_j`): evolve, measure, Lüders update, evolve, measure.
pub fn temporal_correlation_schrodinger(
    protocol: &TemporalProtocol,
    i: usize,
    j: usize,
) -> Result<(f64, SequentialOutcomeTable)> {
    let times = protocol.times();
    for &k in &[i, j] {
        if k >= times.len() {
            return Err(Error::IndexOutOfRange { index: k, len: times.len() });
        }
    }
    let (early, late) = if times[i] <= times[j] { (i, j) } else { (j, i) };
    let u1 = protocol.unitary_at(times[early]);
    let rho1 = u1.matmul(protocol.initial_state().matrix()).matmul(&u1.adjoint());
    let u2 = protocol.unitary_at(times[late] - times[early]);
    let x = protocol.measured();
    let mut table = SequentialOutcomeTable {
        p_first: [0.0; 2],
        p_second_given_first: [[0.0; 2]; 2],
    };
    for k in [1i8, -1] {
        let (pk, post) = luders(&rho1, x.projector(k));
        let Some(post) = post else { continue };
        table.p_first[outcome_index(k)] = pk;
        let evolved = u2.matmul(&post).matmul(&u2.adjoint());
        for l in [1i8, -1] {
            table.p_second_given_first[outcome_index(k)][outcome_index(l)] =
                evolved.trace_product(x.projector(l)).re.clamp(0.0, 1.0);
        }
    }
    Ok((table.correlator(), table))
}

/// `½Tr(ρ{X_{t_k}, X_{t_l}})` for every pair of protocol times.
pub fn temporal_correlator_matrix(protocol: &TemporalProtocol) -> Result<Vec<Vec<f64>>> {
    let obs = protocol.observables();
    let rho = protocol.initial_state();
    obs.iter()
        .map(|a| obs.iter().map(|b| anticommutator_correlation(rho, a, b)).collect())
        .collect()
}

/// Completely mixed qubit, `U = exp(i(8/5)πtσ_y)`, `σ_z` measured at
/// `t ∈ {0, ¼, ½, ¾, 1}`.
pub fn temporal_kcbs_protocol() -> TemporalProtocol {
    TemporalProtocol::new(
        State::maximally_mixed(2),
        [0.0, 1.0, 0.0],
        8.0 * PI / 5.0,
        vec![0.0, 0.25, 0.5, 0.75, 1.0],
        Observable::new(sigma_z()).expect("σ_z is dichotomic"),
    )
    .expect("fixed protocol is valid")
}

/// Cone half-angle of the KCBS pentagram: `cos²θ = cos(π/5)/(1 + cos(π/5))`,
/// which makes vectors two steps of `4π/5` apart in azimuth orthogonal.
pub fn kcbs_cone_angle() -> f64 {
    let c = (PI / 5.0).cos();
    (c / (1.0 + c)).sqrt().acos()
}

/// Qutrit observables `2|v_j⟩⟨v_j| − I` for five real unit vectors on a cone
/// of half-angle `cone_angle` about `z`, at azimuths `4πj/5`.
pub fn pentagram_observables(cone_angle: f64) -> Vec<Observable> {
    let (s, c) = cone_angle.sin_cos();
    (0..5)
        .map(|j| {
            let phi = 4.0 * PI * j as f64 / 5.0;
            let v = [
                C64::new(s * phi.cos(), 0.0),
                C64::new(s * phi.sin(), 0.0),
                C64::new(c, 0.0),
            ];
            let p = ket_projector(&v).expect("unit vector");
            Observable::from_projector(&p).expect("rank-1 projector")
        })
        .collect()
}

/// Pure qutrit state along `(sin α, 0, cos α)`.
pub fn tilted_qutrit_state(tilt: f64) -> State {
    let (s, c) = tilt.sin_cos();
    State::pure(&[C64::new(s, 0.0), C64::new(0.0, 0.0), C64::new(c, 0.0)]).expect("unit ket")
}

/// The optimal contextual KCBS configuration: pentagram observables and the
/// state along the pentagram's symmetry axis.
pub fn contextual_kcbs_configuration() -> (State, Vec<Observable>) {
    (tilted_qutrit_state(0.0), pentagram_observables(kcbs_cone_angle()))
}

/// `(|00⟩ + |11⟩)/√2`.
pub fn phi_plus() -> State {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let z = C64::new(0.0, 0.0);
    State::pure(&[C64::new(h, 0.0), z, z, C64::new(h, 0.0)]).expect("unit ket")
}

/// `M(α) = cos α σ_z + sin α σ_x`.
pub fn xz_observable(alpha: f64) -> Observable {
    bloch_observable([alpha.sin(), 0.0, alpha.cos()]).expect("unit vector")
}

/// `|φ+⟩` with `A_i = σ_i ⊗ I`, `B_i = I ⊗ σ_i`,
/// `σ_i = e^{i2πi/5 σ_y} σ_z e^{−i2πi/5 σ_y}`, and terms `⟨A_i B_{i+1}⟩`.
pub fn spatial_kcbs_configuration() -> BipartiteConfig {
    let settings: Vec<Observable> = (0..5)
        .map(|i| {
            let u = su2_rotation([0.0, 1.0, 0.0], 2.0 * PI * i as f64 / 5.0).expect("unit axis");
            // conjugated(W) forms W† X W, so pass U† to get U σ_z U†.
            Observable::new(sigma_z())
                .and_then(|z| z.conjugated(&u.adjoint()))
                .expect("rotation preserves the spectrum")
        })
        .collect();
    let pairing = (0..5)
        .map(|i| PairTerm { alice: i, bob: (i + 1) % 5, sign: 1 })
        .collect();
    let nodes = (0..5).map(Party::Alice).collect();
    BipartiteConfig::new(phi_plus(), settings.clone(), settings, pairing, nodes)
        .expect("fixed configuration is valid")
}

/// Bipartite `|φ+⟩` realization of the canonical `n`-cycle inequality.
///
/// Even `n` splits the cycle as `X_{2i} = A_i`, `X_{2i+1} = B_i` with Bloch
/// vectors `a_m = (−sin(2mπ/n), 0, cos(2mπ/n))` and
/// `b_m = (sin((2m+1)π/n), 0, −cos((2m+1)π/n))`. Odd `n` doubles the
/// measurements, `a_m = b_m = (sin((π−π/n)m), 0, cos((π−π/n)m))`, with terms
/// `⟨A_i B_{i+1}⟩` and `⟨A_i B_i⟩ = 1` guaranteed by `|φ+⟩`.
pub fn chained_configuration(n: usize) -> Result<BipartiteConfig> {
    if n < 3 {
        return Err(Error::precondition(format!("chained inequality needs n ≥ 3, got {n}")));
    }
    let nf = n as f64;
    let scenario = CycleScenario::canonical(n)?;
    let last_sign = scenario.signs()[n - 1];
    if n.is_multiple_of(2) {
        let half = n / 2;
        let alice = (0..half)
            .map(|m| {
                let ang = 2.0 * m as f64 * PI / nf;
                bloch_observable([-ang.sin(), 0.0, ang.cos()])
            })
            .collect::<Result<Vec<_>>>()?;
        let bob = (0..half)
            .map(|m| {
                let ang = (2 * m + 1) as f64 * PI / nf;
                bloch_observable([ang.sin(), 0.0, -ang.cos()])
            })
            .collect::<Result<Vec<_>>>()?;
        let pairing = (0..n)
            .map(|i| {
                if i == n - 1 {
                    PairTerm { alice: 0, bob: half - 1, sign: last_sign }
                } else if i % 2 == 0 {
                    PairTerm { alice: i / 2, bob: i / 2, sign: 1 }
                } else {
                    PairTerm { alice: i.div_ceil(2), bob: (i - 1) / 2, sign: 1 }
                }
            })
            .collect();
        let nodes = (0..n)
            .map(|i| if i % 2 == 0 { Party::Alice(i / 2) } else { Party::Bob(i / 2) })
            .collect();
        BipartiteConfig::new(phi_plus(), alice, bob, pairing, nodes)
    } else {
        let step = PI - PI / nf;
        let settings = (0..n)
            .map(|m| {
                let ang = step * m as f64;
                bloch_observable([ang.sin(), 0.0, ang.cos()])
            })
            .collect::<Result<Vec<_>>>()?;
        let pairing = (0..n)
            .map(|i| PairTerm {
                alice: i,
                bob: (i + 1) % n,
                sign: scenario.signs()[i],
            })
            .collect();
        let nodes = (0..n).map(Party::Alice).collect();
        BipartiteConfig::new(phi_plus(), settings.clone(), settings, pairing, nodes)
    }
}

/// `n·cos(π(n−1)/n)`, the quantum value reached by [`chained_configuration`].
pub fn chained_quantum_value(n: usize) -> f64 {
    let nf = n as f64;
    nf * (PI * (nf - 1.0) / nf).cos()
}

/// Named configuration builders addressable from files and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builder {
    KcbsContextual,
    KcbsTemporal,
    KcbsSpatial,
    Chained(usize),
}

impl FromStr for Builder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kcbs-contextual" => Ok(Builder::KcbsContextual),
            "kcbs-temporal" => Ok(Builder::KcbsTemporal),
            "kcbs-spatial" => Ok(Builder::KcbsSpatial),
            other => {
                let n = other
                    .strip_prefix("chained-")
                    .and_then(|n| n.parse::<usize>().ok())
                    .ok_or_else(|| Error::Parse(format!("unknown builder `{other}`")))?;
                if n < 3 {
                    return Err(Error::precondition(format!("chained-{n}: n must be ≥ 3")));
                }
                Ok(Builder::Chained(n))
            }
        }
    }
}

impl fmt::Display for Builder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Builder::KcbsContextual => f.write_str("kcbs-contextual"),
            Builder::KcbsTemporal => f.write_str("kcbs-temporal"),
            Builder::KcbsSpatial => f.write_str("kcbs-spatial"),
            Builder::Chained(n) => write!(f, "chained-{n}"),
        }
    }
}

/// A concrete quantum realization of a cycle scenario.
#[derive(Debug, Clone)]
pub enum Configuration {
    Contextual {
        state: State,
        observables: Vec<Observable>,
        scenario: CycleScenario,
    },
    Temporal {
        protocol: TemporalProtocol,
        scenario: CycleScenario,
    },
    Spatial(BipartiteConfig),
}

impl Configuration {
    pub fn build(builder: Builder, params: &BuilderParams) -> Result<Self> {
        if builder != Builder::KcbsTemporal && !params.is_empty() {
            return Err(Error::precondition(format!(
                "builder {builder} takes no parameters"
            )));
        }
        Ok(match builder {
            Builder::KcbsContextual => {
                let (state, observables) = contextual_kcbs_configuration();
                Configuration::Contextual {
                    state,
                    observables,
                    scenario: CycleScenario::canonical(5)?,
                }
            }
            Builder::KcbsTemporal => {
                let base = temporal_kcbs_protocol();
                let times = params.times.clone().unwrap_or_else(|| base.times().to_vec());
                let rate = params.rate.unwrap_or(base.angular_rate());
                let protocol = TemporalProtocol::new(
                    base.initial_state().clone(),
                    base.axis(),
                    rate,
                    times,
                    base.measured().clone(),
                )?;
                let scenario = CycleScenario::canonical(protocol.times().len())?;
                Configuration::Temporal { protocol, scenario }
            }
            Builder::KcbsSpatial => Configuration::Spatial(spatial_kcbs_configuration()),
            Builder::Chained(n) => Configuration::Spatial(chained_configuration(n)?),
        })
    }

    pub fn scenario(&self) -> CycleScenario {
        match self {
            Configuration::Contextual { scenario, .. } | Configuration::Temporal { scenario, .. } => {
                scenario.clone()
            }
            Configuration::Spatial(cfg) => cfg.scenario(),
        }
    }

    pub fn correlations(&self) -> Result<CorrelationVector> {
        match self {
            Configuration::Contextual {
                state,
                observables,
                scenario,
            } => contextual_correlation_vector(state, observables, scenario),
            Configuration::Temporal { protocol, scenario } => {
                temporal_correlation_vector(protocol, scenario)
            }
            Configuration::Spatial(cfg) => spatial_correlation_vector(cfg),
        }
    }

    /// Single-observable expectations `⟨X_i⟩` of the cycle observables.
    pub fn singles(&self) -> Vec<f64> {
        match self {
            Configuration::Contextual {
                state, observables, ..
            } => observables
                .iter()
                .map(|o| state.expectation(o.matrix()).re)
                .collect(),
            Configuration::Temporal { protocol, .. } => protocol
                .observables()
                .iter()
                .map(|o| protocol.initial_state().expectation(o.matrix()).re)
                .collect(),
            Configuration::Spatial(cfg) => cfg
                .nodes()
                .iter()
                .map(|&p| local_expectation(cfg, p))
                .collect(),
        }
    }

    /// Largest commutator norm over the pairs that must be jointly
    /// measurable (contextual setting only; zero otherwise).
    pub fn max_adjacent_commutator(&self) -> f64 {
        match self {
            Configuration::Contextual {
                observables,
                scenario,
                ..
            } => (0..scenario.n())
                .map(|i| {
                    let (a, b) = scenario.term(i);
                    observables[a].matrix().commutator_norm(observables[b].matrix())
                })
                .fold(0.0, f64::max),
            _ => 0.0,
        }
    }
}
