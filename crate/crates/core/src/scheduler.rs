//! Pattern reordering: interleave each qubit's entanglements with its
//! measurement and pick the measurement order greedily so the largest
//! sub-state stays small.
//!
//! Before a qubit is measured only the entanglements touching it need to have
//! been applied; measurements and entanglements on disjoint qubits commute.
//! Each iteration therefore picks a ready qubit, emits its pending
//! entanglements followed by its measurement, and updates the predicted
//! sub-state grouping. Among ready qubits the one with the lowest cost wins:
//!
//! ```text
//! cost(v) = w_ms * MS(v)                 + w_os * OS(v) - w_ss * SS(v)   if flag(v)
//!         = w_ms * (MS(v) + 1) * w_flag  + w_os * OS(v) - w_ss * SS(v)   otherwise
//! ```
//!
//! * `MS(v)`: size of the sub-state needed to measure `v`,
//! * `OS(v)`: pending edges from `v` to output qubits,
//! * `SS(v)`: number of qubits whose signals read `v`'s outcome,
//! * `flag(v)`: `v` already sits in a sub-state built up by earlier steps.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pattern::{Action, EntanglementGraph, Pattern, PatternError, QubitId, Signal};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SchedulerError {
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error("cost weights must be finite and non-negative")]
    InvalidWeights,
    #[error("expected four comma-separated weights, got `{0}`")]
    WeightsSyntax(String),
    #[error("no ready qubit while {0:?} still wait on unmeasured signals")]
    Deadlock(Vec<QubitId>),
    #[error("qubit {0} is measured more than once")]
    DoubleMeasure(QubitId),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    /// Weight of the measurement state-space size.
    pub w_ms: f64,
    /// Weight of the edges to output qubits.
    pub w_os: f64,
    /// Weight of the number of dependent qubits.
    pub w_ss: f64,
    /// Penalty factor for starting a fresh sub-state.
    pub w_flag: f64,
}

impl CostWeights {
    pub fn new(w_ms: f64, w_os: f64, w_ss: f64, w_flag: f64) -> Result<Self, SchedulerError> {
        let w = CostWeights {
            w_ms,
            w_os,
            w_ss,
            w_flag,
        };
        if [w_ms, w_os, w_ss, w_flag].iter().all(|x| x.is_finite() && *x >= 0.0) {
            Ok(w)
        } else {
            Err(SchedulerError::InvalidWeights)
        }
    }
}

impl std::str::FromStr for CostWeights {
    type Err = SchedulerError;

    /// `w_ms,w_os,w_ss,w_flag`
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| SchedulerError::WeightsSyntax(s.to_string()))?;
        match parts[..] {
            [a, b, c, d] => CostWeights::new(a, b, c, d),
            _ => Err(SchedulerError::WeightsSyntax(s.to_string())),
        }
    }
}

impl fmt::Display for CostWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.w_ms, self.w_os, self.w_ss, self.w_flag)
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Group {
    members: BTreeSet<QubitId>,
    /// Built up by earlier steps (some member's sub-state absorbed a measured qubit).
    grown: bool,
}

/// Bookkeeping of the greedy loop: ready and dependent lists plus the
/// predicted partition of live qubits into sub-states.
#[derive(Clone, Debug)]
pub struct ScheduleState {
    ready: BTreeSet<QubitId>,
    dependent: BTreeSet<QubitId>,
    selected: BTreeSet<QubitId>,
    /// measured qubit -> qubits its measurement signals read
    waits_on: BTreeMap<QubitId, BTreeSet<QubitId>>,
    group_of: HashMap<QubitId, usize>,
    groups: Vec<Group>,
    /// Unapplied edges, as normalized `(low, high)` pairs.
    pending: BTreeSet<(QubitId, QubitId)>,
}

fn edge(u: QubitId, v: QubitId) -> (QubitId, QubitId) {
    (u.min(v), u.max(v))
}

impl ScheduleState {
    pub fn new(p: &Pattern, graph: &EntanglementGraph) -> Result<Self, SchedulerError> {
        let mut waits_on: BTreeMap<QubitId, BTreeSet<QubitId>> = BTreeMap::new();
        for a in p.measurements() {
            if let Action::Measure { qubit, s, t, .. } = a {
                let sources = s.terms().chain(t.terms()).collect();
                if waits_on.insert(*qubit, sources).is_some() {
                    return Err(SchedulerError::DoubleMeasure(*qubit));
                }
            }
        }
        let (ready, dependent) =
            waits_on
                .iter()
                .fold((BTreeSet::new(), BTreeSet::new()), |(mut r, mut d), (q, src)| {
                    if src.is_empty() {
                        r.insert(*q);
                    } else {
                        d.insert(*q);
                    }
                    (r, d)
                });
        let groups: Vec<Group> = p
            .qubits()
            .iter()
            .map(|&q| Group {
                members: BTreeSet::from([q]),
                grown: false,
            })
            .collect();
        let group_of = p.qubits().iter().enumerate().map(|(i, &q)| (q, i)).collect();
        Ok(ScheduleState {
            ready,
            dependent,
            selected: BTreeSet::new(),
            waits_on,
            group_of,
            groups,
            pending: graph.edges().iter().copied().collect(),
        })
    }

    pub fn ready(&self) -> &BTreeSet<QubitId> {
        &self.ready
    }

    pub fn dependent(&self) -> &BTreeSet<QubitId> {
        &self.dependent
    }

    pub fn selected(&self) -> &BTreeSet<QubitId> {
        &self.selected
    }

    /// Current predicted sub-state groups, each sorted.
    pub fn current_subsets(&self) -> Vec<Vec<QubitId>> {
        let mut out: Vec<Vec<QubitId>> = self
            .groups
            .iter()
            .filter(|g| !g.members.is_empty())
            .map(|g| g.members.iter().copied().collect())
            .collect();
        out.sort();
        out
    }

    fn pending_neighbors<'a>(&'a self, v: QubitId, graph: &'a EntanglementGraph) -> impl Iterator<Item = QubitId> + 'a {
        graph.neighbors(v).filter(move |&w| self.pending.contains(&edge(v, w)))
    }

    /// Qubits of the sub-state that measuring `v` would require.
    pub fn measurement_space(&self, v: QubitId, graph: &EntanglementGraph) -> BTreeSet<QubitId> {
        let mut gids: BTreeSet<usize> = BTreeSet::from([self.group_of[&v]]);
        gids.extend(self.pending_neighbors(v, graph).map(|w| self.group_of[&w]));
        gids.iter()
            .flat_map(|&g| self.groups[g].members.iter().copied())
            .collect()
    }

    /// Applies the pending edges of `v`, merges the touched groups and
    /// removes `v`. Returns the edges applied, in graph order.
    fn select(&mut self, v: QubitId, graph: &EntanglementGraph) -> Vec<(QubitId, QubitId)> {
        let edges: Vec<_> = graph
            .edges()
            .iter()
            .copied()
            .filter(|&(a, b)| (a == v || b == v) && self.pending.contains(&(a, b)))
            .collect();
        let target = self.group_of[&v];
        for &(a, b) in &edges {
            self.pending.remove(&(a, b));
            let other = if a == v { b } else { a };
            self.merge(target, self.group_of[&other]);
        }
        self.groups[target].members.remove(&v);
        self.groups[target].grown = true;
        self.group_of.remove(&v);
        self.ready.remove(&v);
        self.selected.insert(v);

        let promoted: Vec<QubitId> = self
            .dependent
            .iter()
            .copied()
            .filter(|d| self.waits_on[d].is_subset(&self.selected))
            .collect();
        for d in promoted {
            self.dependent.remove(&d);
            self.ready.insert(d);
        }
        edges
    }

    fn merge(&mut self, into: usize, from: usize) {
        if into == from {
            return;
        }
        let moved = std::mem::take(&mut self.groups[from].members);
        for q in &moved {
            self.group_of.insert(*q, into);
        }
        self.groups[into].members.extend(moved);
        self.groups[into].grown |= self.groups[from].grown;
    }

    fn largest_group(&self) -> usize {
        self.groups.iter().map(|g| g.members.len()).max().unwrap_or(0)
    }
}

/// The individual terms entering the cost of a candidate.
#[derive(Clone, Debug, PartialEq)]
pub struct CostTerms {
    pub ms: BTreeSet<QubitId>,
    pub os: usize,
    pub ss: usize,
    pub flag: bool,
}

impl CostTerms {
    pub fn cost(&self, w: &CostWeights) -> f64 {
        let ms = self.ms.len() as f64;
        let size = if self.flag {
            w.w_ms * ms
        } else {
            w.w_ms * ((ms + 1.0) * w.w_flag)
        };
        size + w.w_os * self.os as f64 - w.w_ss * self.ss as f64
    }
}

pub fn cost_terms(
    v: QubitId,
    sched: &ScheduleState,
    graph: &EntanglementGraph,
    outputs: &BTreeSet<QubitId>,
    dependents: &BTreeMap<QubitId, BTreeSet<QubitId>>,
) -> CostTerms {
    CostTerms {
        ms: sched.measurement_space(v, graph),
        os: sched
            .pending_neighbors(v, graph)
            .filter(|w| outputs.contains(w))
            .count(),
        ss: dependents
            .get(&v)
            .map_or(0, |d| d.iter().filter(|q| !sched.selected.contains(q)).count()),
        flag: sched.groups[sched.group_of[&v]].grown,
    }
}

pub fn cost(
    v: QubitId,
    sched: &ScheduleState,
    weights: &CostWeights,
    graph: &EntanglementGraph,
    outputs: &BTreeSet<QubitId>,
    dependents: &BTreeMap<QubitId, BTreeSet<QubitId>>,
) -> f64 {
    cost_terms(v, sched, graph, outputs, dependents).cost(weights)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanStep {
    pub qubit: QubitId,
    /// Entanglements applied right before the measurement.
    pub entangles: Vec<(QubitId, QubitId)>,
    /// The original Measure action.
    pub measure: Action,
    /// Qubits of the sub-state the measurement acts on.
    pub ms: Vec<QubitId>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExecutionPlan {
    pub steps: Vec<PlanStep>,
    /// Edges between output qubits, applied after the last measurement.
    pub output_entangles: Vec<(QubitId, QubitId)>,
    pub corrections: Vec<Action>,
    pub predicted_peak: usize,
}

impl ExecutionPlan {
    pub fn measurement_order(&self) -> Vec<QubitId> {
        self.steps.iter().map(|s| s.qubit).collect()
    }

    pub fn predicted_ms(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.ms.len()).collect()
    }

    pub fn total_ms(&self) -> usize {
        self.steps.iter().map(|s| s.ms.len()).sum()
    }

    /// Flattened action sequence in execution order.
    pub fn actions(&self) -> Vec<Action> {
        let mut out = Vec::new();
        for s in &self.steps {
            out.extend(s.entangles.iter().map(|&(u, v)| Action::Entangle(u, v)));
            out.push(s.measure.clone());
        }
        out.extend(self.output_entangles.iter().map(|&(u, v)| Action::Entangle(u, v)));
        out.extend(self.corrections.iter().cloned());
        out
    }

    /// The same order with every signal replaced by 0; a valid plan for
    /// [`Pattern::without_signals`].
    pub fn without_signals(&self) -> ExecutionPlan {
        let strip = |a: &Action| match a {
            Action::Measure { qubit, angle, .. } => Action::Measure {
                qubit: *qubit,
                angle: *angle,
                s: Signal::zero(),
                t: Signal::zero(),
            },
            Action::CorrectX { qubit, .. } => Action::CorrectX {
                qubit: *qubit,
                signal: Signal::zero(),
            },
            Action::CorrectZ { qubit, .. } => Action::CorrectZ {
                qubit: *qubit,
                signal: Signal::zero(),
            },
            other => other.clone(),
        };
        ExecutionPlan {
            steps: self
                .steps
                .iter()
                .map(|s| PlanStep {
                    measure: strip(&s.measure),
                    ..s.clone()
                })
                .collect(),
            corrections: self.corrections.iter().map(strip).collect(),
            ..self.clone()
        }
    }

    /// Every signal source is measured before the action reading it.
    pub fn respects_dependencies(&self) -> bool {
        let mut measured = BTreeSet::new();
        for a in self.actions() {
            if a.signals().iter().any(|s| s.terms().any(|q| !measured.contains(&q))) {
                return false;
            }
            if let Action::Measure { qubit, .. } = a {
                measured.insert(qubit);
            }
        }
        true
    }
}

impl fmt::Display for ExecutionPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |qs: &[QubitId]| qs.iter().map(|q| q.to_string()).collect::<Vec<_>>().join(",");
        for (k, s) in self.steps.iter().enumerate() {
            write!(f, "step {}:", k + 1)?;
            for (u, v) in &s.entangles {
                write!(f, " E({u},{v})")?;
            }
            writeln!(f, " ; M {} ; MS={{{}}}", s.qubit, list(&s.ms))?;
        }
        if !self.output_entangles.is_empty() {
            f.write_str("outputs:")?;
            for (u, v) in &self.output_entangles {
                write!(f, " E({u},{v})")?;
            }
            f.write_str("\n")?;
        }
        for c in &self.corrections {
            writeln!(f, "{c}")?;
        }
        writeln!(f, "peak m = {}", self.predicted_peak)
    }
}

/// Greedy reordering of a standard-form pattern. Ties in cost go to the
/// smallest qubit label.
pub fn reorder(p: &Pattern, weights: &CostWeights) -> Result<ExecutionPlan, SchedulerError> {
    let graph = p.entanglement_graph()?;
    let dependents = p.dependents();
    let mut sched = ScheduleState::new(p, &graph)?;
    let measures: BTreeMap<QubitId, &Action> = p
        .measurements()
        .map(|a| match a {
            Action::Measure { qubit, .. } => (*qubit, a),
            _ => unreachable!(),
        })
        .collect();

    let mut peak = if p.qubits().is_empty() { 0 } else { 1 };
    let mut steps = Vec::with_capacity(measures.len());
    while !sched.ready.is_empty() || !sched.dependent.is_empty() {
        let mut best: Option<(f64, QubitId, BTreeSet<QubitId>)> = None;
        for &v in &sched.ready {
            let terms = cost_terms(v, &sched, &graph, p.outputs(), &dependents);
            let c = terms.cost(weights);
            if best.as_ref().is_none_or(|(bc, _, _)| c < *bc) {
                best = Some((c, v, terms.ms));
            }
        }
        let Some((_, v, ms)) = best else {
            return Err(SchedulerError::Deadlock(sched.dependent.iter().copied().collect()));
        };
        peak = peak.max(ms.len());
        let entangles = sched.select(v, &graph);
        steps.push(PlanStep {
            qubit: v,
            entangles,
            measure: measures[&v].clone(),
            ms: ms.into_iter().collect(),
        });
    }

    let output_entangles: Vec<_> = graph
        .edges()
        .iter()
        .copied()
        .filter(|e| sched.pending.contains(e))
        .collect();
    for &(u, v) in &output_entangles {
        let (gu, gv) = (sched.group_of[&u], sched.group_of[&v]);
        sched.merge(gu, gv);
    }
    peak = peak.max(sched.largest_group());

    Ok(ExecutionPlan {
        steps,
        output_entangles,
        corrections: p.actions().iter().filter(|a| a.is_correction()).cloned().collect(),
        predicted_peak: peak,
    })
}

/// Starts from `(|O|, |O|, 0.5, |O|)` and lowers `w_ms` by one per
/// iteration for `|O|` iterations, keeping the plan with the smallest
/// predicted peak (then smallest summed state-space, then earliest).
pub fn tune_weights(p: &Pattern) -> Result<(CostWeights, ExecutionPlan), SchedulerError> {
    let o = p.outputs().len().max(1);
    let mut best: Option<(CostWeights, ExecutionPlan)> = None;
    for k in 0..o {
        let w = CostWeights::new((o - k) as f64, o as f64, 0.5, o as f64)?;
        let plan = reorder(p, &w)?;
        let better = match &best {
            None => true,
            Some((_, b)) => (plan.predicted_peak, plan.total_ms()) < (b.predicted_peak, b.total_ms()),
        };
        if better {
            best = Some((w, plan));
        }
    }
    Ok(best.expect("at least one iteration"))
}

/// Plan for the positive branch of `p`: weights are tuned on the
/// signal-free pattern, and the plan tuned under `p`'s own dependencies is
/// kept as an extra candidate so dropping dependencies never yields a larger
/// peak than the constrained schedule.
pub fn tune_weights_free(p: &Pattern) -> Result<(CostWeights, ExecutionPlan), SchedulerError> {
    let (w_free, free) = tune_weights(&p.without_signals())?;
    let (w_dep, dep) = tune_weights(p)?;
    if (dep.predicted_peak, dep.total_ms()) < (free.predicted_peak, free.total_ms()) {
        Ok((w_dep, dep.without_signals()))
    } else {
        Ok((w_free, free))
    }
}

/// `E * K^2`, the order of work the reordering loop performs.
pub fn plan_complexity_guard(p: &Pattern) -> u64 {
    let e = p.entangle_count() as u64;
    let k = p.measured_count() as u64;
    e * k * k
}
