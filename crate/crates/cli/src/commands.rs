use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use toml::{Table, Value};

use jpdlab_core::classical::{
    correlators_to_marginals, jpd_feasible, min_cycle_inequality_slack, Feasibility, MarginalSet,
    WITNESS_RESIDUAL_TOL,
};
use jpdlab_core::histories::{lg_decomposition, xz_family, HistoryFamily, INCONSISTENT_TOL};
use jpdlab_core::qmat::State;
use jpdlab_core::quantum::{
    chained_configuration, correlation_spatial, spatial_correlation_vector,
    temporal_correlations_at, temporal_kcbs_protocol, Builder, Configuration,
};
use jpdlab_core::scenario::{
    classical_bound, inequality_lhs, BuilderParams, CorrelationVector, CycleScenario,
    ScenarioFile, TemporalProtocol,
};
use jpdlab_core::search::{
    minimize_lhs, standard_problem, BlochAngles, Evaluator, SearchOptions, SpaceKind,
};

use crate::report::{floats, ints, table, Report};
use crate::{CliError, CliResult, ScanMode, TemporalArgs};

/// A report's violation flag: `LHS < bound − VIOLATION_MARGIN`.
pub const VIOLATION_MARGIN: f64 = 1e-9;
/// `min_cycle_inequality_slack` enumerates `4^n` terms; skip it above this.
const SLACK_MAX_N: usize = 10;
/// Histories route and identity checks.
const ROUTE_TOL: f64 = 1e-9;
const LAST_SLOT_TOL: f64 = 1e-12;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn params(t: &TemporalArgs) -> BuilderParams {
    BuilderParams {
        times: t.times.clone(),
        rate: t.rate,
    }
}

fn parse_builder(name: &str) -> CliResult<Builder> {
    name.parse().map_err(|e: jpdlab_core::Error| usage(e.to_string()))
}

fn scenario_section(report: &mut Report, s: &CycleScenario, source: &str) {
    *report.section("scenario") = table([
        ("source", Value::String(source.into())),
        ("n", Value::Integer(s.n() as i64)),
        ("signs", ints(s.signs())),
        ("canonical", Value::Boolean(s.is_canonical())),
    ]);
}

/// Signed terms, LHS, bound and violation flag; returns `(lhs, bound)`.
fn inequality_section(report: &mut Report, c: &CorrelationVector) -> CliResult<(f64, i64)> {
    let s = c.scenario();
    let lhs = inequality_lhs(c);
    let bound = classical_bound(s)?;
    let violated = lhs < bound as f64 - VIOLATION_MARGIN;
    *report.section("inequality") = table([
        ("correlators", floats(c.values())),
        ("lhs", Value::Float(lhs)),
        ("classical_bound", Value::Integer(bound)),
        ("violated", Value::Boolean(violated)),
    ]);
    report.line(format!("{:<6}{:<10}{:<6}{:>14}", "term", "pair", "sign", "correlator"));
    for (i, v) in c.values().iter().enumerate() {
        let (a, b) = s.term(i);
        let sign = if s.signs()[i] > 0 { "+" } else { "-" };
        report.line(format!("{i:<6}{:<10}{sign:<6}{v:>14.9}", format!("({a},{b})")));
    }
    report.line(format!("lhs              {lhs:.9}"));
    report.line(format!("classical bound  {bound}"));
    report.line(format!("violated         {violated}"));
    Ok((lhs, bound))
}

pub fn evaluate(builder: &str, temporal: &TemporalArgs) -> CliResult<Report> {
    let b = parse_builder(builder)?;
    let cfg = Configuration::build(b, &params(temporal))?;
    let c = cfg.correlations()?;
    let mut report = Report::default();
    report.line(format!("configuration    {b}  {}", c.scenario()));
    scenario_section(&mut report, c.scenario(), &b.to_string());
    inequality_section(&mut report, &c)?;

    let singles = cfg.singles();
    let mut extra = Table::new();
    extra.insert("singles".into(), floats(&singles));
    match &cfg {
        Configuration::Contextual { .. } => {
            let comm = cfg.max_adjacent_commutator();
            extra.insert("max_adjacent_commutator".into(), Value::Float(comm));
            report.line(format!("max ‖[X_i,X_i+1]‖ {comm:.3e}"));
        }
        Configuration::Temporal { protocol, .. } => {
            extra.insert("times".into(), floats(protocol.times()));
            extra.insert("rate".into(), Value::Float(protocol.angular_rate()));
        }
        Configuration::Spatial(sp) => {
            // Only the KCBS and odd chained settings share angles between parties.
            let shared = matches!(b, Builder::KcbsSpatial)
                || matches!(b, Builder::Chained(n) if n % 2 == 1);
            if shared {
                let same = (0..sp.alice().len())
                    .map(|i| correlation_spatial(sp, i, i))
                    .collect::<Result<Vec<_>, _>>()?;
                let worst = same.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
                report.line(format!("max |⟨A_iB_i⟩−1|  {worst:.3e}"));
                extra.insert("same_index_correlators".into(), floats(&same));
            }
        }
    }
    *report.section("configuration") = extra;
    Ok(report)
}

pub struct FeasibilityInput<'a> {
    pub builder: Option<&'a str>,
    pub scenario: Option<&'a Path>,
    pub correlators: Option<&'a [f64]>,
    pub singles: Option<&'a [f64]>,
    pub signs: Option<&'a [i8]>,
    pub temporal: &'a TemporalArgs,
}

/// Marginals and (when known) correlators with their scenario.
struct FeasibilityProblem {
    source: String,
    scenario: CycleScenario,
    marginals: MarginalSet,
}

fn from_builder(b: Builder, p: &BuilderParams) -> CliResult<FeasibilityProblem> {
    let cfg = Configuration::build(b, p)?;
    let c = cfg.correlations()?;
    let marginals = correlators_to_marginals(&c, &cfg.singles())?;
    Ok(FeasibilityProblem {
        source: b.to_string(),
        scenario: c.scenario().clone(),
        marginals,
    })
}

fn from_moments(
    source: String,
    scenario: CycleScenario,
    correlators: &[f64],
    singles: Option<&[f64]>,
) -> CliResult<FeasibilityProblem> {
    let n = scenario.n();
    let zeros = vec![0.0; n];
    let singles = singles.unwrap_or(&zeros);
    let c = CorrelationVector::new(scenario.clone(), correlators.to_vec())?;
    Ok(FeasibilityProblem {
        source,
        scenario,
        marginals: correlators_to_marginals(&c, singles)?,
    })
}

fn feasibility_problem(input: &FeasibilityInput) -> CliResult<FeasibilityProblem> {
    if let Some(name) = input.builder {
        return from_builder(parse_builder(name)?, &params(input.temporal));
    }
    if let Some(path) = input.scenario {
        let file = ScenarioFile::parse(&read(path)?)?;
        let scenario = file.scenario()?;
        let source = path.display().to_string();
        if let Some(pairs) = &file.pairs {
            return Ok(FeasibilityProblem {
                source,
                scenario,
                marginals: MarginalSet::new(pairs.clone())?,
            });
        }
        if let Some(c) = &file.correlators {
            return from_moments(source, scenario, c, file.singles.as_deref());
        }
        if let Some(name) = &file.builder {
            return from_builder(parse_builder(name)?, &file.params);
        }
        return Err(usage(format!(
            "{source}: scenario file needs `pairs`, `correlators` or `builder`"
        )));
    }
    if let Some(c) = input.correlators {
        let scenario = match input.signs {
            Some(s) => CycleScenario::new(s.to_vec())?,
            None => CycleScenario::canonical(c.len())?,
        };
        return from_moments("correlators".into(), scenario, c, input.singles);
    }
    Err(usage("feasibility needs a builder, --scenario FILE or --correlators"))
}

pub fn feasibility(input: &FeasibilityInput, witness_path: Option<&Path>) -> CliResult<Report> {
    let problem = feasibility_problem(input)?;
    let m = &problem.marginals;
    let w = jpd_feasible(m)?;
    let mut report = Report::default();
    report.line(format!("input            {}  {}", problem.source, problem.scenario));
    scenario_section(&mut report, &problem.scenario, &problem.source);
    let c = CorrelationVector::new(problem.scenario.clone(), m.correlators())?;
    inequality_section(&mut report, &c)?;

    let status = match w.status {
        Feasibility::Feasible => "feasible",
        Feasibility::FeasibleWithinTolerance => "feasible-within-tolerance",
        Feasibility::Infeasible => "infeasible",
    };
    let mut sec = table([
        ("status", Value::String(status.into())),
        ("feasible", Value::Boolean(w.feasible())),
        ("phase_one_objective", Value::Float(w.phase_one_objective)),
        ("max_constraint_residual", Value::Float(w.max_constraint_residual)),
        ("support_size", Value::Integer(w.nonzero().len() as i64)),
    ]);
    report.line(format!("jpd              {status}"));
    report.line(format!("phase-one value  {:.3e}", w.phase_one_objective));
    if w.feasible() {
        report.line(format!("witness residual {:.3e}", w.max_constraint_residual));
        if w.max_constraint_residual > WITNESS_RESIDUAL_TOL {
            report.failures.push(format!(
                "witness residual {:.3e} exceeds {WITNESS_RESIDUAL_TOL:e}",
                w.max_constraint_residual
            ));
        }
    }
    if m.n() <= SLACK_MAX_N {
        let slack = min_cycle_inequality_slack(&m.correlators())?;
        sec.insert("min_cycle_inequality_slack".into(), Value::Float(slack));
        report.line(format!("min slack over sign patterns {slack:.9}"));
    }
    if let Some(path) = witness_path {
        crate::write_file(path, &w.to_toml())?;
        sec.insert("witness_path".into(), Value::String(path.display().to_string()));
        report.line(format!("witness written  {}", path.display()));
    }
    *report.section("feasibility") = sec;
    Ok(report)
}

pub fn bound(
    n: Option<usize>,
    all_plus: bool,
    signs: Option<&[i8]>,
    scenario: Option<&Path>,
) -> CliResult<Report> {
    let (s, source) = match (n, signs, scenario) {
        (_, _, Some(path)) => (
            ScenarioFile::parse(&read(path)?)?.scenario()?,
            path.display().to_string(),
        ),
        (_, Some(signs), None) => (CycleScenario::new(signs.to_vec())?, "signs".to_string()),
        (Some(n), None, None) if all_plus => (CycleScenario::all_plus(n)?, "all-plus".into()),
        (Some(n), None, None) => (CycleScenario::canonical(n)?, "canonical".into()),
        (None, None, None) => return Err(usage("bound needs --n, --signs or --scenario")),
    };
    let b = classical_bound(&s)?;
    let mut report = Report::default();
    scenario_section(&mut report, &s, &source);
    *report.section("bound") = table([
        ("classical_bound", Value::Integer(b)),
        ("assignments_enumerated", Value::Integer(1i64 << (s.n() - 1))),
    ]);
    report.line(format!("scenario         {s}"));
    report.line(format!("classical bound  {b}"));
    Ok(report)
}

fn protocol_from(t: &TemporalArgs) -> CliResult<TemporalProtocol> {
    let base = temporal_kcbs_protocol();
    Ok(TemporalProtocol::new(
        base.initial_state().clone(),
        base.axis(),
        t.rate.unwrap_or(base.angular_rate()),
        t.times.clone().unwrap_or_else(|| base.times().to_vec()),
        base.measured().clone(),
    )?)
}

fn three<T: Copy>(v: &[T], what: &str) -> CliResult<[T; 3]> {
    v.try_into()
        .map_err(|_| usage(format!("{what} needs exactly three values, got {}", v.len())))
}

pub fn histories(
    slots: Option<&[usize]>,
    angles: Option<&[f64]>,
    temporal: &TemporalArgs,
) -> CliResult<Report> {
    let (family, source): (HistoryFamily, String) = match angles {
        Some(a) => {
            let a = three(a, "--angles")?;
            (xz_family(State::maximally_mixed(2), a)?, format!("angles {a:?}"))
        }
        None => {
            let which = three(slots.unwrap_or(&[0, 1, 2]), "--slots")?;
            let p = protocol_from(temporal)?;
            (HistoryFamily::from_temporal(&p, which)?, format!("kcbs-temporal slots {which:?}"))
        }
    };
    let r = lg_decomposition(&family)?;
    let mut report = Report::default();
    let violated = r.lhs < -1.0 - VIOLATION_MARGIN;
    *report.section("lg") = table([
        ("source", Value::String(source.clone())),
        ("lhs", Value::Float(r.lhs)),
        ("classical_bound", Value::Integer(-1)),
        ("violated", Value::Boolean(violated)),
        ("rewritten", Value::Float(r.rewritten)),
        ("rewritten_minus_lhs", Value::Float(r.rewritten - r.lhs)),
        ("route_disagreement", Value::Float(r.route_disagreement())),
    ]);
    report.line(format!("family           {source}"));
    report.line("history   probability");
    for (h, p) in &r.probabilities {
        report.push_row("probability", table([
            ("history", Value::String(h.to_string())),
            ("value", Value::Float(*p)),
        ]));
        report.line(format!("{:<10}{p:.12}", h.to_string()));
    }
    for c in &r.correlators {
        report.push_row("correlator", table([
            ("slots", ints(&[c.slots.0 as i64, c.slots.1 as i64])),
            ("from_marginals", Value::Float(c.from_marginals)),
            ("from_anticommutator", Value::Float(c.from_anticommutator)),
        ]));
        report.line(format!(
            "⟨X{}X{}⟩  marginals {:.12}  anticommutator {:.12}",
            c.slots.0, c.slots.1, c.from_marginals, c.from_anticommutator
        ));
    }
    report.line(format!("lhs {:.12}  (bound -1, violated {violated})", r.lhs));
    report.line(format!("rewritten sum {:.12} = lhs + {:.12}", r.rewritten, r.rewritten - r.lhs));
    for (h, v) in r.interference.iter().chain(&r.last_slot_interference) {
        report.push_row("interference", table([
            ("pattern", Value::String(h.to_string())),
            ("value", Value::Float(*v)),
        ]));
        report.line(format!("I{h}  {v:.12}"));
    }
    for p in &r.pairs {
        report.push_row("pair", table([
            ("first", Value::String(p.first.to_string())),
            ("second", Value::String(p.second.to_string())),
            ("value", Value::Float(p.value)),
            ("class", Value::String(p.class.as_str().into())),
        ]));
        report.line(format!("{} vs {}  {:+.3e}  {}", p.first, p.second, p.value, p.class.as_str()));
    }

    if r.route_disagreement() > ROUTE_TOL {
        report.failures.push(format!("correlator routes disagree by {:.3e}", r.route_disagreement()));
    }
    if ((r.rewritten - r.lhs) - 1.0).abs() > ROUTE_TOL {
        report.failures.push("rewritten inequality does not equal lhs + 1".into());
    }
    if r.last_slot_interference.iter().any(|(_, v)| v.abs() > LAST_SLOT_TOL) {
        report.failures.push("last-slot interference does not vanish".into());
    }
    if r.lhs < -1.0 - INCONSISTENT_TOL && !r.any_inconsistent(INCONSISTENT_TOL) {
        report.failures.push("violation without an inconsistent history pair".into());
    }
    Ok(report)
}

pub struct ScanSpec<'a> {
    pub mode: ScanMode,
    pub from: Option<f64>,
    pub to: Option<f64>,
    pub steps: usize,
    pub n: usize,
    pub space: &'a str,
    pub seeds: usize,
    pub starts: usize,
    pub seed: u64,
}

fn grid(from: f64, to: f64, steps: usize) -> CliResult<Vec<f64>> {
    if steps == 0 {
        return Err(usage("--steps must be positive"));
    }
    if steps == 1 {
        return Ok(vec![from]);
    }
    Ok((0..steps)
        .map(|k| from + (to - from) * k as f64 / (steps - 1) as f64)
        .collect())
}

fn signed(s: &CycleScenario, c: &[f64]) -> f64 {
    s.signs().iter().zip(c).map(|(&x, v)| f64::from(x) * v).sum()
}

/// Grid value of a scan row: integers (n, seeds) stay exact.
enum Param {
    Int(u64),
    Real(f64),
}

impl Param {
    fn csv(&self) -> String {
        match self {
            Param::Int(k) => k.to_string(),
            Param::Real(x) => format!("{x:?}"),
        }
    }

    fn value(&self) -> Value {
        match self {
            Param::Int(k) => i64::try_from(*k)
                .map(Value::Integer)
                .unwrap_or_else(|_| Value::String(k.to_string())),
            Param::Real(x) => Value::Float(*x),
        }
    }
}

fn mode_name(mode: ScanMode) -> String {
    use clap::ValueEnum;
    mode.to_possible_value()
        .map(|v| v.get_name().to_string())
        .unwrap_or_default()
}

/// Returns the report and the CSV body.
pub fn scan(spec: &ScanSpec) -> CliResult<(Report, String)> {
    let mut rows: Vec<(Param, f64, i64)> = Vec::new();
    match spec.mode {
        ScanMode::ChainedN => {
            let from = spec.from.unwrap_or(3.0);
            let to = spec.to.unwrap_or(12.0);
            if from < 3.0 || to < from || from.fract() != 0.0 || to.fract() != 0.0 {
                return Err(usage("chained-n needs integer --from ≥ 3 and --to ≥ --from"));
            }
            for n in from as usize..=to as usize {
                let cfg = chained_configuration(n)?;
                let lhs = inequality_lhs(&spatial_correlation_vector(&cfg)?);
                rows.push((Param::Int(n as u64), lhs, classical_bound(&cfg.scenario())?));
            }
        }
        ScanMode::TemporalStep => {
            let s = CycleScenario::canonical(spec.n)?;
            let bound = classical_bound(&s)?;
            let p = temporal_kcbs_protocol();
            for tau in grid(spec.from.unwrap_or(0.0), spec.to.unwrap_or(0.5), spec.steps)? {
                let times: Vec<f64> = (0..spec.n).map(|k| k as f64 * tau).collect();
                let c = temporal_correlations_at(
                    p.initial_state(),
                    p.measured(),
                    p.axis(),
                    p.angular_rate(),
                    &times,
                )?;
                rows.push((Param::Real(tau), signed(&s, &c), bound));
            }
        }
        ScanMode::SpatialAngle => {
            let s = CycleScenario::canonical(spec.n)?;
            let bound = classical_bound(&s)?;
            let eval = BlochAngles::new(spec.n);
            for delta in grid(spec.from.unwrap_or(0.0), spec.to.unwrap_or(PI), spec.steps)? {
                let angles: Vec<f64> = (0..spec.n).map(|k| k as f64 * delta).collect();
                rows.push((Param::Real(delta), signed(&s, &eval.evaluate(&angles).correlations), bound));
            }
        }
        ScanMode::Optimize => {
            let kind: SpaceKind = spec.space.parse()?;
            let (space, s, eval) = standard_problem(kind, spec.n)?;
            let bound = classical_bound(&s)?;
            for k in 0..spec.seeds as u64 {
                let seed = spec.seed.wrapping_add(k);
                let opts = SearchOptions {
                    starts: spec.starts,
                    ..SearchOptions::with_seed(seed)
                };
                let r = minimize_lhs(&space, &s, eval.as_ref(), &opts)?;
                rows.push((Param::Int(seed), r.value, bound));
            }
        }
    }

    let mut csv = String::from("parameter,lhs_value,classical_bound\n");
    let mut report = Report::default();
    for (param, lhs, bound) in &rows {
        let _ = writeln!(csv, "{},{lhs:?},{bound}", param.csv());
        report.push_row("row", table([
            ("parameter", param.value()),
            ("lhs_value", Value::Float(*lhs)),
            ("classical_bound", Value::Integer(*bound)),
        ]));
    }
    *report.section("scan") = table([
        ("mode", Value::String(mode_name(spec.mode))),
        ("rows", Value::Integer(rows.len() as i64)),
    ]);
    report.text = csv.clone();
    Ok((report, csv))
}
