//! Generalized flow on open graphs with XY-plane measurements.
//!
//! A gflow assigns each measured qubit `v` a correction set `g(v)` of
//! non-input qubits and a layer such that, measuring layer by layer:
//!
//! * `v` is not in `g(v)` but is in its odd neighbourhood `Odd(g(v))`,
//! * every other member of `g(v)` and every other measured qubit of
//!   `Odd(g(v))` is measured strictly after `v`.
//!
//! Patterns whose open graph has a gflow are strongly deterministic: every
//! measurement outcome has probability 1/2 and all branches implement the
//! same map up to a global phase.

pub mod brute;
mod gf2;

use std::collections::{BTreeMap, BTreeSet};

pub use gf2::Gf2System;

use crate::pattern::{Action, Angle, EntanglementGraph, Pattern, PatternError, QubitId, Signal};

#[derive(Clone, Debug, PartialEq)]
pub struct OpenGraph {
    pub graph: EntanglementGraph,
    pub inputs: BTreeSet<QubitId>,
    pub outputs: BTreeSet<QubitId>,
}

impl OpenGraph {
    pub fn new(
        graph: EntanglementGraph,
        inputs: BTreeSet<QubitId>,
        outputs: BTreeSet<QubitId>,
    ) -> Result<Self, PatternError> {
        if let Some(q) = inputs.iter().chain(&outputs).find(|q| !graph.vertices().contains(q)) {
            return Err(PatternError::UndeclaredQubit { qubit: *q, line: None });
        }
        Ok(OpenGraph { graph, inputs, outputs })
    }

    pub fn from_pattern(p: &Pattern) -> Result<Self, PatternError> {
        Ok(OpenGraph {
            graph: p.entanglement_graph()?,
            inputs: p.inputs().clone(),
            outputs: p.outputs().clone(),
        })
    }

    /// Non-output vertices.
    pub fn measured(&self) -> impl Iterator<Item = QubitId> + '_ {
        self.graph
            .vertices()
            .iter()
            .copied()
            .filter(|q| !self.outputs.contains(q))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GFlow {
    pub correction_sets: BTreeMap<QubitId, BTreeSet<QubitId>>,
    /// Measurement layer of every vertex; layer 0 is measured first and the
    /// outputs sit in the last layer.
    pub layering: BTreeMap<QubitId, usize>,
}

impl GFlow {
    pub fn layer_count(&self) -> usize {
        self.layering.values().max().map_or(0, |m| m + 1)
    }

    /// Measured qubits sorted by layer, then label.
    pub fn measurement_order(&self) -> Vec<QubitId> {
        let mut order: Vec<QubitId> = self.correction_sets.keys().copied().collect();
        order.sort_by_key(|q| (self.layering[q], *q));
        order
    }
}

/// Layer-by-layer backward search. Starting from the outputs, each sweep
/// assigns every unassigned measured qubit `v` for which some subset `X` of
/// the already layered non-input qubits satisfies
/// `Odd(X) ∩ unassigned = {v}`. A sweep that assigns nothing while
/// measured qubits remain means no gflow exists.
pub fn find_gflow(og: &OpenGraph) -> Option<GFlow> {
    let vertices = og.graph.vertices();
    let mut depth: BTreeMap<QubitId, usize> = og.outputs.iter().map(|&q| (q, 0)).collect();
    let mut correction_sets = BTreeMap::new();
    let mut sweep = 0;

    loop {
        let unassigned: Vec<QubitId> = vertices.iter().copied().filter(|q| !depth.contains_key(q)).collect();
        if unassigned.is_empty() {
            break;
        }
        sweep += 1;
        let correctors: Vec<QubitId> = depth.keys().copied().filter(|q| !og.inputs.contains(q)).collect();
        let system = Gf2System::new(unassigned.len(), correctors.len(), |r, c| {
            og.graph.has_edge(unassigned[r], correctors[c])
        });
        let mut solved = Vec::new();
        for (row, &v) in unassigned.iter().enumerate() {
            if let Some(cols) = system.solve_unit(row) {
                solved.push(v);
                correction_sets.insert(v, cols.into_iter().map(|c| correctors[c]).collect());
            }
        }
        if solved.is_empty() {
            return None;
        }
        for v in solved {
            depth.insert(v, sweep);
        }
    }

    let last = depth.values().copied().max().unwrap_or(0);
    Some(GFlow {
        correction_sets,
        layering: depth.into_iter().map(|(q, d)| (q, last - d)).collect(),
    })
}

/// Checks every gflow condition from scratch.
pub fn verify_gflow(og: &OpenGraph, g: &GFlow) -> bool {
    let vertices = og.graph.vertices();
    if g.layering.keys().collect::<BTreeSet<_>>() != vertices.iter().collect::<BTreeSet<_>>() {
        return false;
    }
    let measured: BTreeSet<QubitId> = og.measured().collect();
    if g.correction_sets.keys().copied().collect::<BTreeSet<_>>() != measured {
        return false;
    }
    let layer = |q: &QubitId| g.layering[q];
    for (v, set) in &g.correction_sets {
        if set.contains(v) || set.iter().any(|u| og.inputs.contains(u) || !vertices.contains(u)) {
            return false;
        }
        if set.iter().any(|u| layer(u) <= layer(v)) {
            return false;
        }
        let odd = og.graph.odd_neighborhood(set);
        if !odd.contains(v) {
            return false;
        }
        if odd
            .iter()
            .any(|u| u != v && measured.contains(u) && layer(u) <= layer(v))
        {
            return false;
        }
    }
    true
}

/// Signals a gflow induces: measuring `v` with outcome `s_v` is
/// compensated by `X^{s_v}` on `g(v)` and `Z^{s_v}` on `Odd(g(v)) \ {v}`.
/// On measured qubits these become `s` and `t` domains, on outputs `X` and
/// `Z` corrections.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct InducedSignals {
    /// `(s, t)` per measured qubit.
    pub measure: BTreeMap<QubitId, (Signal, Signal)>,
    /// `(x, z)` per output qubit.
    pub output: BTreeMap<QubitId, (Signal, Signal)>,
}

pub fn induced_signals(og: &OpenGraph, g: &GFlow) -> InducedSignals {
    let mut out = InducedSignals::default();
    for v in og.measured() {
        out.measure.entry(v).or_default();
    }
    for (v, set) in &g.correction_sets {
        for u in set {
            let slot = if og.outputs.contains(u) {
                &mut out.output
            } else {
                &mut out.measure
            };
            slot.entry(*u).or_default().0.toggle(*v);
        }
        for u in og.graph.odd_neighborhood(set) {
            if u == *v {
                continue;
            }
            let slot = if og.outputs.contains(&u) {
                &mut out.output
            } else {
                &mut out.measure
            };
            slot.entry(u).or_default().1.toggle(*v);
        }
    }
    out
}

/// Standard-form pattern for an open graph: all edges, measurements in
/// gflow order with induced domains, then the output corrections.
/// Measured qubits missing from `angles` are measured at angle 0.
pub fn pattern_from_gflow(og: &OpenGraph, g: &GFlow, angles: &BTreeMap<QubitId, Angle>) -> Pattern {
    let sig = induced_signals(og, g);
    let mut actions: Vec<Action> = og.graph.edges().iter().map(|&(u, v)| Action::Entangle(u, v)).collect();
    for v in g.measurement_order() {
        let (s, t) = sig.measure[&v].clone();
        actions.push(Action::Measure {
            qubit: v,
            angle: angles.get(&v).copied().unwrap_or(Angle::ZERO),
            s,
            t,
        });
    }
    for (u, (x, z)) in sig.output {
        if !x.is_zero() {
            actions.push(Action::CorrectX { qubit: u, signal: x });
        }
        if !z.is_zero() {
            actions.push(Action::CorrectZ { qubit: u, signal: z });
        }
    }
    Pattern::new(
        og.graph.vertices().clone(),
        og.inputs.clone(),
        og.outputs.clone(),
        actions,
    )
    .expect("open graph vertices cover every action")
}
