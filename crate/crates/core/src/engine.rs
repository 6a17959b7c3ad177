//! Plan execution over a [`StateSpace`].

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gflow::{find_gflow, induced_signals, OpenGraph};
use crate::pattern::{validate, Action, Pattern, PatternError, QubitId, Signal, ValidationReport};
use crate::scheduler::{tune_weights_free, ExecutionPlan, SchedulerError};
use crate::substate::{Branch, KernelCounts, NormWarning, StateSpace, SubState, SubStateError, NORM_TOLERANCE};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EngineError {
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error("pattern violates its rules:\n{0}")]
    Invalid(ValidationReport),
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
    #[error(transparent)]
    SubState(#[from] SubStateError),
    #[error("input state: {0}")]
    Input(String),
    #[error("expected {expected} forced outcomes, got {got}")]
    ForcedLength { expected: usize, got: usize },
    #[error("forced outcome {0} is not a bit")]
    ForcedNotBit(u8),
    #[error("plan does not match the pattern: {0}")]
    PlanMismatch(String),
    #[error("qubit {0} is measured with entanglements still pending")]
    PendingEntangle(QubitId),
    #[error("signal reads qubit {0} which has no recorded outcome")]
    MissingSignal(QubitId),
    #[error("non-output qubit {0} is still live after the last measurement")]
    LeftoverQubit(QubitId),
    #[error("incorrect pattern: its open graph has no gflow")]
    IncorrectPattern,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Owqs,
    Eowqs,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OutcomePolicy {
    /// Outcomes drawn from a ChaCha stream, one draw per measurement in plan order.
    Random { seed: u64 },
    /// One bit per measurement in plan order.
    Forced(Vec<u8>),
    /// Every outcome 0, no probabilities computed.
    PositiveBranch,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunConfig {
    pub mode: Mode,
    /// Ignored in [`Mode::Eowqs`], which always takes the positive branch.
    pub policy: OutcomePolicy,
    pub record_probs: bool,
    /// Snapshot every sub-state after each action.
    pub trace: bool,
}

impl RunConfig {
    pub fn owqs(policy: OutcomePolicy) -> Self {
        RunConfig {
            mode: Mode::Owqs,
            policy,
            record_probs: true,
            trace: false,
        }
    }

    pub fn eowqs() -> Self {
        RunConfig {
            mode: Mode::Eowqs,
            policy: OutcomePolicy::PositiveBranch,
            record_probs: true,
            trace: false,
        }
    }

    pub fn with_trace(mut self) -> Self {
        self.trace = true;
        self
    }

    fn effective_policy(&self) -> &OutcomePolicy {
        match self.mode {
            Mode::Owqs => &self.policy,
            Mode::Eowqs => &OutcomePolicy::PositiveBranch,
        }
    }
}

/// One factor of an input state; amplitudes are indexed LSB-first in the
/// order of `qubits`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputGroup {
    pub qubits: Vec<QubitId>,
    pub amps: Vec<Complex64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InputState {
    pub groups: Vec<InputGroup>,
}

impl InputState {
    /// Every listed qubit in `|+>`, one group per qubit.
    pub fn plus(inputs: impl IntoIterator<Item = QubitId>) -> Self {
        let h = Complex64::from(std::f64::consts::FRAC_1_SQRT_2);
        InputState {
            groups: inputs
                .into_iter()
                .map(|q| InputGroup {
                    qubits: vec![q],
                    amps: vec![h, h],
                })
                .collect(),
        }
    }

    /// A single group in the basis state `index` (bit `p` belongs to `qubits[p]`).
    pub fn basis(qubits: &[QubitId], index: usize) -> Self {
        let mut amps = vec![Complex64::default(); 1 << qubits.len()];
        amps[index] = Complex64::from(1.0);
        InputState {
            groups: vec![InputGroup {
                qubits: qubits.to_vec(),
                amps,
            }],
        }
    }

    pub fn from_substates<'a>(states: impl IntoIterator<Item = &'a SubState>) -> Self {
        InputState {
            groups: states
                .into_iter()
                .map(|s| InputGroup {
                    qubits: s.qubits().to_vec(),
                    amps: s.amplitudes().to_vec(),
                })
                .collect(),
        }
    }

    /// Checks that the groups partition `inputs` and are normalized.
    pub fn to_substates(&self, inputs: &BTreeSet<QubitId>) -> Result<Vec<SubState>, EngineError> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(self.groups.len());
        for g in &self.groups {
            let s = SubState::new(g.qubits.clone(), g.amps.clone()).map_err(|e| EngineError::Input(e.to_string()))?;
            for q in &g.qubits {
                if !inputs.contains(q) {
                    return Err(EngineError::Input(format!("qubit {q} is not an input")));
                }
                if !seen.insert(*q) {
                    return Err(EngineError::Input(format!("qubit {q} appears in two groups")));
                }
            }
            if (s.norm_sqr() - 1.0).abs() > NORM_TOLERANCE {
                return Err(EngineError::Input(format!(
                    "group {:?} has squared norm {}",
                    g.qubits.iter().map(|q| q.0).collect::<Vec<_>>(),
                    s.norm_sqr()
                )));
            }
            out.push(s);
        }
        if let Some(q) = inputs.iter().find(|q| !seen.contains(q)) {
            return Err(EngineError::Input(format!("input qubit {q} has no amplitudes")));
        }
        Ok(out)
    }
}

/// Recorded outcomes `s_v` of the qubits measured so far.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SignalTable {
    outcomes: BTreeMap<QubitId, u8>,
}

impl SignalTable {
    pub fn new() -> Self {
        SignalTable::default()
    }

    pub fn get(&self, q: QubitId) -> Option<u8> {
        self.outcomes.get(&q).copied()
    }

    pub fn record(&mut self, q: QubitId, bit: u8) {
        self.outcomes.insert(q, bit);
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (QubitId, u8)> + '_ {
        self.outcomes.iter().map(|(q, b)| (*q, *b))
    }
}

/// XOR of the referenced outcomes.
pub fn eval_signal(sig: &Signal, table: &SignalTable) -> Result<u8, EngineError> {
    sig.terms().try_fold(0, |acc, q| {
        table.get(q).map(|b| acc ^ b).ok_or(EngineError::MissingSignal(q))
    })
}

/// `(-1)^s * base + t * pi`.
pub fn resolve_angle(base: f64, s_val: u8, t_val: u8) -> f64 {
    let a = if s_val & 1 == 1 { -base } else { base };
    if t_val & 1 == 1 {
        a + std::f64::consts::PI
    } else {
        a
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    /// `None` for the state loaded from the input.
    pub action: Option<Action>,
    /// Live sub-states, each in its internal qubit order.
    pub substates: Vec<SubState>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunStats {
    /// Largest sub-state instantiated, in qubits.
    pub m_peak: usize,
    /// `prob0` per measurement in plan order; `-1` where not computed.
    pub probs: Vec<f64>,
    pub measurement_order: Vec<QubitId>,
    pub ops: KernelCounts,
    pub wall_ms: f64,
    pub norm_warnings: Vec<NormWarning>,
    pub discarded_phases: Vec<Complex64>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    /// Output factors, each sorted by label, ordered by their smallest qubit.
    pub factors: Vec<SubState>,
    pub outcomes: SignalTable,
    pub stats: RunStats,
    pub trace: Vec<Snapshot>,
}

impl RunResult {
    /// Tensor product of the factors over all outputs in ascending order.
    pub fn output_state(&self) -> SubState {
        let mut acc = SubState::new(Vec::new(), vec![Complex64::from(1.0)]).expect("scalar state");
        for f in &self.factors {
            acc = acc.tensor(f).expect("factors are disjoint");
        }
        acc.sorted()
    }

    /// Product of the amplitudes left behind by fully measured sub-states.
    pub fn global_phase(&self) -> Complex64 {
        self.stats.discarded_phases.iter().product()
    }

    /// [`Self::output_state`] scaled by [`Self::global_phase`], i.e. the
    /// exact branch amplitude rather than a phase-free representative.
    pub fn output_state_with_phase(&self) -> SubState {
        let s = self.output_state();
        let c = self.global_phase();
        SubState::new(s.qubits().to_vec(), s.amplitudes().iter().map(|a| a * c).collect()).expect("same shape")
    }
}

fn check_plan(p: &Pattern, plan: &ExecutionPlan) -> Result<(), EngineError> {
    let planned: Vec<QubitId> = plan.measurement_order();
    let mut sorted = planned.clone();
    sorted.sort();
    let mut expected = p.measured_qubits();
    expected.sort();
    if sorted != expected {
        return Err(EngineError::PlanMismatch("measured qubits differ".into()));
    }
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(EngineError::PlanMismatch("a qubit is measured twice".into()));
    }
    for s in &plan.steps {
        if !matches!(s.measure, Action::Measure { qubit, .. } if qubit == s.qubit) {
            return Err(EngineError::PlanMismatch(format!(
                "step for {} carries {}",
                s.qubit, s.measure
            )));
        }
    }
    Ok(())
}

/// Executes `plan` for `p` starting from `input`.
pub fn run(p: &Pattern, plan: &ExecutionPlan, input: &InputState, cfg: &RunConfig) -> Result<RunResult, EngineError> {
    check_plan(p, plan)?;
    let graph = p.entanglement_graph()?;
    let inputs = input.to_substates(p.inputs())?;
    let policy = cfg.effective_policy();
    if let OutcomePolicy::Forced(bits) = policy {
        if bits.len() != plan.steps.len() {
            return Err(EngineError::ForcedLength {
                expected: plan.steps.len(),
                got: bits.len(),
            });
        }
        if let Some(b) = bits.iter().find(|b| **b > 1) {
            return Err(EngineError::ForcedNotBit(*b));
        }
    }
    let mut rng = match policy {
        OutcomePolicy::Random { seed } => Some(ChaCha8Rng::seed_from_u64(*seed)),
        _ => None,
    };

    let start = Instant::now();
    let mut space = StateSpace::new();
    for s in inputs {
        space.insert(s)?;
    }
    let mut pending: HashMap<QubitId, usize> = graph.vertices().iter().map(|&v| (v, graph.degree(v))).collect();
    let mut table = SignalTable::new();
    let mut stats = RunStats::default();
    let mut trace = Vec::new();
    let snapshot = |space: &StateSpace, action: Option<Action>, trace: &mut Vec<Snapshot>| {
        if cfg.trace {
            let mut substates: Vec<SubState> = space.substates().map(|(_, s)| s.clone()).collect();
            substates.sort_by_key(|s| s.qubits().iter().min().copied());
            trace.push(Snapshot { action, substates });
        }
    };
    snapshot(&space, None, &mut trace);
    let ensure_live = |space: &mut StateSpace, table: &SignalTable, q: QubitId| -> Result<(), EngineError> {
        if space.is_live(q) {
            Ok(())
        } else if table.get(q).is_some() {
            Err(EngineError::PlanMismatch(format!(
                "qubit {q} is used after its measurement"
            )))
        } else {
            space.prepare_plus(q)?;
            Ok(())
        }
    };
    let entangle = |space: &mut StateSpace,
                    table: &SignalTable,
                    pending: &mut HashMap<QubitId, usize>,
                    u: QubitId,
                    v: QubitId|
     -> Result<(), EngineError> {
        ensure_live(space, table, u)?;
        ensure_live(space, table, v)?;
        space.entangle(u, v)?;
        for q in [u, v] {
            let c = pending.get_mut(&q).expect("vertex of the graph");
            *c = c
                .checked_sub(1)
                .ok_or_else(|| EngineError::PlanMismatch(format!("qubit {q} entangled too often")))?;
        }
        Ok(())
    };

    for (k, step) in plan.steps.iter().enumerate() {
        for &(u, v) in &step.entangles {
            entangle(&mut space, &table, &mut pending, u, v)?;
            snapshot(&space, Some(Action::Entangle(u, v)), &mut trace);
        }
        let Action::Measure { qubit, angle, s, t } = &step.measure else {
            unreachable!("checked by check_plan");
        };
        ensure_live(&mut space, &table, *qubit)?;
        if pending[qubit] != 0 {
            return Err(EngineError::PendingEntangle(*qubit));
        }
        let s_val = eval_signal(s, &table)?;
        let t_val = eval_signal(t, &table)?;
        let alpha = resolve_angle(angle.radians(), s_val, t_val);
        let branch = match policy {
            OutcomePolicy::Random { .. } => Branch::Sample(rng.as_mut().expect("seeded").gen::<f64>()),
            OutcomePolicy::Forced(bits) => Branch::Forced(bits[k]),
            OutcomePolicy::PositiveBranch => Branch::Positive,
        };
        let out = space.measure_eliminate(*qubit, alpha, branch)?;
        table.record(*qubit, out.outcome);
        stats.measurement_order.push(*qubit);
        if cfg.record_probs {
            stats.probs.push(out.prob0);
        }
        snapshot(&space, Some(step.measure.clone()), &mut trace);
    }

    for &(u, v) in &plan.output_entangles {
        entangle(&mut space, &table, &mut pending, u, v)?;
        snapshot(&space, Some(Action::Entangle(u, v)), &mut trace);
    }
    if let Some((q, _)) = pending.iter().find(|(_, c)| **c > 0) {
        return Err(EngineError::PlanMismatch(format!(
            "edges of qubit {q} were never applied"
        )));
    }
    for q in p.outputs() {
        ensure_live(&mut space, &table, *q)?;
    }
    for c in &plan.corrections {
        let (q, sig, is_x) = match c {
            Action::CorrectX { qubit, signal } => (*qubit, signal, true),
            Action::CorrectZ { qubit, signal } => (*qubit, signal, false),
            other => return Err(EngineError::PlanMismatch(format!("{other} in the correction list"))),
        };
        if eval_signal(sig, &table)? == 1 {
            if is_x {
                space.apply_x(q)?;
            } else {
                space.apply_z(q)?;
            }
        }
        snapshot(&space, Some(c.clone()), &mut trace);
    }

    if let Some(q) = space
        .substates()
        .flat_map(|(_, s)| s.qubits().iter().copied())
        .find(|q| !p.outputs().contains(q))
    {
        return Err(EngineError::LeftoverQubit(q));
    }
    let (substates, space_stats) = space.into_substates();
    let mut factors: Vec<SubState> = substates.iter().map(SubState::sorted).collect();
    factors.sort_by_key(|s| s.qubits().first().copied());
    stats.wall_ms = start.elapsed().as_secs_f64() * 1e3;

    if cfg.mode == Mode::Owqs {
        for f in &factors {
            let n = f.norm_sqr();
            if (n - 1.0).abs() > NORM_TOLERANCE {
                stats.warnings.push(format!(
                    "output factor {:?} has squared norm {n}",
                    f.qubits().iter().map(|q| q.0).collect::<Vec<_>>()
                ));
            }
        }
    }
    stats.m_peak = space_stats.m_peak;
    stats.ops = space_stats.ops;
    stats.norm_warnings = space_stats.norm_warnings;
    stats.discarded_phases = space_stats.discarded_phases;

    Ok(RunResult {
        factors,
        outcomes: table,
        stats,
        trace,
    })
}

/// Checks the pattern for a gflow, drops its signal dependencies, reorders
/// with tuned weights and runs the positive branch only.
///
/// Fails with [`EngineError::IncorrectPattern`] when no gflow exists.
pub fn run_eowqs(p: &Pattern, input: &InputState) -> Result<(ExecutionPlan, RunResult), EngineError> {
    let report = validate(p);
    if !report.is_ok() {
        return Err(EngineError::Invalid(report));
    }
    let og = OpenGraph::from_pattern(p)?;
    let g = find_gflow(&og).ok_or(EngineError::IncorrectPattern)?;
    let free = p.without_signals();
    let (_, plan) = tune_weights_free(p)?;
    let mut result = run(&free, &plan, input, &RunConfig::eowqs())?;
    if !signals_match(p, &induced_signals(&og, &g)) {
        result
            .stats
            .warnings
            .push("pattern signals differ from those induced by the gflow found for its graph".into());
    }
    Ok((plan, result))
}

fn signals_match(p: &Pattern, induced: &crate::gflow::InducedSignals) -> bool {
    let mut ours = crate::gflow::InducedSignals::default();
    for a in p.actions() {
        match a {
            Action::Measure { qubit, s, t, .. } => {
                ours.measure.insert(*qubit, (s.clone(), t.clone()));
            }
            Action::CorrectX { qubit, signal } => {
                let e = ours.output.entry(*qubit).or_default();
                for q in signal.terms() {
                    e.0.toggle(q);
                }
            }
            Action::CorrectZ { qubit, signal } => {
                let e = ours.output.entry(*qubit).or_default();
                for q in signal.terms() {
                    e.1.toggle(q);
                }
            }
            _ => {}
        }
    }
    ours.output.retain(|_, (x, z)| !(x.is_zero() && z.is_zero()));
    let mut theirs = induced.clone();
    theirs.output.retain(|_, (x, z)| !(x.is_zero() && z.is_zero()));
    for q in p.measured_qubits() {
        theirs.measure.entry(q).or_default();
    }
    ours == theirs
}
