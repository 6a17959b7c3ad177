//! Measurement patterns in standard form: data model, text format, rule checks,
//! entanglement graph and quantum depth.
//!
//! Actions are stored in execution order: `actions()[0]` runs first.

mod parse;
mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use parse::parse_pattern;
pub use validate::{validate, Rule, ValidationReport, Violation};

/// Label of a qubit inside a pattern. Labels are positive integers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QubitId(pub u32);

impl fmt::Display for QubitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for QubitId {
    fn from(v: u32) -> Self {
        QubitId(v)
    }
}

/// A measurement angle. Rational multiples of pi are kept exact so that they
/// survive a round trip through the text format.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Angle {
    Radians(f64),
    /// `num * pi / den`, with `gcd(num, den) = 1` and `num != 0`.
    PiMultiple {
        num: i64,
        den: u64,
    },
}

impl Angle {
    pub const ZERO: Angle = Angle::Radians(0.0);

    pub fn pi_multiple(num: i64, den: u64) -> Angle {
        assert!(den > 0, "zero denominator");
        if num == 0 {
            return Angle::ZERO;
        }
        let g = gcd(num.unsigned_abs(), den);
        Angle::PiMultiple {
            num: num / g as i64,
            den: den / g,
        }
    }

    pub fn radians(&self) -> f64 {
        match *self {
            Angle::Radians(r) => r,
            Angle::PiMultiple { num, den } => num as f64 * std::f64::consts::PI / den as f64,
        }
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Angle::Radians(r) => write!(f, "{r}"),
            Angle::PiMultiple { num, den } => {
                if num < 0 {
                    f.write_str("-")?;
                }
                match num.unsigned_abs() {
                    1 => f.write_str("pi")?,
                    k => write!(f, "{k}pi")?,
                }
                if den != 1 {
                    write!(f, "/{den}")?;
                }
                Ok(())
            }
        }
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// XOR of recorded measurement outcomes. The empty signal is the constant 0.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Signal(BTreeSet<QubitId>);

impl Signal {
    pub fn zero() -> Self {
        Signal::default()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = QubitId> + '_ {
        self.0.iter().copied()
    }

    pub fn contains(&self, q: QubitId) -> bool {
        self.0.contains(&q)
    }

    /// Adds `q` to the XOR sum. Adding a term twice cancels it.
    pub fn toggle(&mut self, q: QubitId) {
        if !self.0.remove(&q) {
            self.0.insert(q);
        }
    }
}

impl FromIterator<QubitId> for Signal {
    fn from_iter<I: IntoIterator<Item = QubitId>>(iter: I) -> Self {
        let mut s = Signal::zero();
        for q in iter {
            s.toggle(q);
        }
        s
    }
}

impl fmt::Display for Signal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, q) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("+")?;
            }
            write!(f, "{q}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Action {
    Prepare(QubitId),
    Entangle(QubitId, QubitId),
    Measure {
        qubit: QubitId,
        angle: Angle,
        s: Signal,
        t: Signal,
    },
    CorrectX {
        qubit: QubitId,
        signal: Signal,
    },
    CorrectZ {
        qubit: QubitId,
        signal: Signal,
    },
}

impl Action {
    /// Qubits the action operates on.
    pub fn targets(&self) -> Vec<QubitId> {
        match self {
            Action::Prepare(q) => vec![*q],
            Action::Entangle(u, v) => vec![*u, *v],
            Action::Measure { qubit, .. } | Action::CorrectX { qubit, .. } | Action::CorrectZ { qubit, .. } => {
                vec![*qubit]
            }
        }
    }

    /// Every signal the action reads.
    pub fn signals(&self) -> Vec<&Signal> {
        match self {
            Action::Prepare(_) | Action::Entangle(..) => Vec::new(),
            Action::Measure { s, t, .. } => vec![s, t],
            Action::CorrectX { signal, .. } | Action::CorrectZ { signal, .. } => vec![signal],
        }
    }

    pub fn is_correction(&self) -> bool {
        matches!(self, Action::CorrectX { .. } | Action::CorrectZ { .. })
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Prepare(q) => write!(f, "N {q}"),
            Action::Entangle(u, v) => write!(f, "E {u} {v}"),
            Action::Measure { qubit, angle, s, t } => {
                write!(f, "M {qubit} {angle}")?;
                if !s.is_zero() {
                    write!(f, " s[{s}]")?;
                }
                if !t.is_zero() {
                    write!(f, " t[{t}]")?;
                }
                Ok(())
            }
            Action::CorrectX { qubit, signal } | Action::CorrectZ { qubit, signal } => {
                let op = if matches!(self, Action::CorrectX { .. }) {
                    'X'
                } else {
                    'Z'
                };
                write!(f, "{op} {qubit}")?;
                if !signal.is_zero() {
                    write!(f, " s[{signal}]")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum PatternError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}, column {column}: malformed angle `{text}`")]
    MalformedAngle { line: usize, column: usize, text: String },
    #[error("qubit {qubit} is not declared{}", at_line(*line))]
    UndeclaredQubit { qubit: QubitId, line: Option<usize> },
    #[error("qubit {qubit} declared twice{}", at_line(*line))]
    DuplicateQubit { qubit: QubitId, line: Option<usize> },
    #[error("qubit {0} entangled with itself")]
    SelfEntangle(QubitId),
    #[error("qubits {0} and {1} are entangled more than once")]
    DuplicateEdge(QubitId, QubitId),
}

fn at_line(line: Option<usize>) -> String {
    line.map(|l| format!(" (line {l})")).unwrap_or_default()
}

/// A measurement pattern `(V, I, O, A)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Pattern {
    qubits: BTreeSet<QubitId>,
    inputs: BTreeSet<QubitId>,
    outputs: BTreeSet<QubitId>,
    actions: Vec<Action>,
}

impl Pattern {
    /// Builds a pattern, checking that every referenced qubit is declared and
    /// that no entanglement is a self-loop. Rule checks live in [`validate`].
    pub fn new(
        qubits: impl IntoIterator<Item = QubitId>,
        inputs: impl IntoIterator<Item = QubitId>,
        outputs: impl IntoIterator<Item = QubitId>,
        actions: Vec<Action>,
    ) -> Result<Pattern, PatternError> {
        let qubits: BTreeSet<_> = qubits.into_iter().collect();
        let inputs: BTreeSet<_> = inputs.into_iter().collect();
        let outputs: BTreeSet<_> = outputs.into_iter().collect();
        let declared = |q: QubitId| {
            if qubits.contains(&q) {
                Ok(())
            } else {
                Err(PatternError::UndeclaredQubit { qubit: q, line: None })
            }
        };
        for &q in inputs.iter().chain(&outputs) {
            declared(q)?;
        }
        for a in &actions {
            if let Action::Entangle(u, v) = a {
                if u == v {
                    return Err(PatternError::SelfEntangle(*u));
                }
            }
            for q in a.targets() {
                declared(q)?;
            }
            for s in a.signals() {
                for q in s.terms() {
                    declared(q)?;
                }
            }
        }
        Ok(Pattern {
            qubits,
            inputs,
            outputs,
            actions,
        })
    }

    pub fn qubits(&self) -> &BTreeSet<QubitId> {
        &self.qubits
    }

    pub fn inputs(&self) -> &BTreeSet<QubitId> {
        &self.inputs
    }

    pub fn outputs(&self) -> &BTreeSet<QubitId> {
        &self.outputs
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    /// Measure actions in execution order.
    pub fn measurements(&self) -> impl Iterator<Item = &Action> + '_ {
        self.actions.iter().filter(|a| matches!(a, Action::Measure { .. }))
    }

    /// Measured qubits in execution order.
    pub fn measured_qubits(&self) -> Vec<QubitId> {
        self.measurements()
            .map(|a| match a {
                Action::Measure { qubit, .. } => *qubit,
                _ => unreachable!(),
            })
            .collect()
    }

    /// Number of non-output qubits, `|V| - |O|`.
    pub fn measured_count(&self) -> usize {
        self.qubits.len() - self.outputs.len()
    }

    pub fn entangle_count(&self) -> usize {
        self.actions
            .iter()
            .filter(|a| matches!(a, Action::Entangle(..)))
            .count()
    }

    /// Maps each qubit `v` to the set of qubits whose measurement or correction
    /// signals read `s_v`.
    pub fn dependents(&self) -> BTreeMap<QubitId, BTreeSet<QubitId>> {
        let mut deps: BTreeMap<QubitId, BTreeSet<QubitId>> = BTreeMap::new();
        for a in &self.actions {
            let target = match a {
                Action::Measure { qubit, .. } | Action::CorrectX { qubit, .. } | Action::CorrectZ { qubit, .. } => {
                    *qubit
                }
                _ => continue,
            };
            for s in a.signals() {
                for src in s.terms() {
                    deps.entry(src).or_default().insert(target);
                }
            }
        }
        deps
    }

    /// The same pattern with every signal replaced by the constant 0. This is
    /// the positive branch of the pattern: all angles take their base value
    /// and every correction is a no-op.
    pub fn without_signals(&self) -> Pattern {
        let actions = self
            .actions
            .iter()
            .map(|a| match a {
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
            })
            .collect();
        Pattern {
            actions,
            ..self.clone()
        }
    }

    /// One edge per Entangle action. A pair entangled twice is an error.
    pub fn entanglement_graph(&self) -> Result<EntanglementGraph, PatternError> {
        let edges = self.actions.iter().filter_map(|a| match a {
            Action::Entangle(u, v) => Some((*u, *v)),
            _ => None,
        });
        EntanglementGraph::new(self.qubits.iter().copied(), edges)
    }

    /// Longest chain of signal dependencies. A measurement without
    /// dependencies has depth 1; corrections only add depth when they read
    /// a signal.
    pub fn quantum_depth(&self) -> usize {
        let mut depth_of: BTreeMap<QubitId, usize> = BTreeMap::new();
        let mut max_depth = 0;
        for a in &self.actions {
            let from_signals = a
                .signals()
                .iter()
                .flat_map(|s| s.terms())
                .map(|q| depth_of.get(&q).copied().unwrap_or(0))
                .max()
                .unwrap_or(0);
            let has_deps = a.signals().iter().any(|s| !s.is_zero());
            match a {
                Action::Measure { qubit, .. } => {
                    let d = from_signals + 1;
                    depth_of.insert(*qubit, d);
                    max_depth = max_depth.max(d);
                }
                Action::CorrectX { .. } | Action::CorrectZ { .. } if has_deps => {
                    max_depth = max_depth.max(from_signals + 1);
                }
                _ => {}
            }
        }
        max_depth
    }
}

/// Simple undirected graph with one edge per entanglement.
#[derive(Clone, Debug, PartialEq)]
pub struct EntanglementGraph {
    vertices: BTreeSet<QubitId>,
    /// Normalized `(low, high)` pairs in the order they were added.
    edges: Vec<(QubitId, QubitId)>,
    adjacency: BTreeMap<QubitId, BTreeSet<QubitId>>,
}

impl EntanglementGraph {
    pub fn new(
        vertices: impl IntoIterator<Item = QubitId>,
        edges: impl IntoIterator<Item = (QubitId, QubitId)>,
    ) -> Result<Self, PatternError> {
        let vertices: BTreeSet<_> = vertices.into_iter().collect();
        let mut adjacency: BTreeMap<QubitId, BTreeSet<QubitId>> =
            vertices.iter().map(|&v| (v, BTreeSet::new())).collect();
        let mut list = Vec::new();
        for (u, v) in edges {
            if u == v {
                return Err(PatternError::SelfEntangle(u));
            }
            for q in [u, v] {
                if !vertices.contains(&q) {
                    return Err(PatternError::UndeclaredQubit { qubit: q, line: None });
                }
            }
            if !adjacency.get_mut(&u).unwrap().insert(v) {
                return Err(PatternError::DuplicateEdge(u.min(v), u.max(v)));
            }
            adjacency.get_mut(&v).unwrap().insert(u);
            list.push((u.min(v), u.max(v)));
        }
        Ok(EntanglementGraph {
            vertices,
            edges: list,
            adjacency,
        })
    }

    pub fn vertices(&self) -> &BTreeSet<QubitId> {
        &self.vertices
    }

    pub fn edges(&self) -> &[(QubitId, QubitId)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, v: QubitId) -> impl Iterator<Item = QubitId> + '_ {
        self.adjacency.get(&v).into_iter().flatten().copied()
    }

    pub fn degree(&self, v: QubitId) -> usize {
        self.adjacency.get(&v).map_or(0, |n| n.len())
    }

    pub fn has_edge(&self, u: QubitId, v: QubitId) -> bool {
        self.adjacency.get(&u).is_some_and(|n| n.contains(&v))
    }

    /// Vertices with an odd number of neighbours in `set`.
    pub fn odd_neighborhood(&self, set: &BTreeSet<QubitId>) -> BTreeSet<QubitId> {
        let mut odd = BTreeSet::new();
        for &u in set {
            for w in self.neighbors(u) {
                if !odd.remove(&w) {
                    odd.insert(w);
                }
            }
        }
        odd
    }

    pub fn is_connected(&self) -> bool {
        let Some(&start) = self.vertices.iter().next() else {
            return true;
        };
        let mut seen = BTreeSet::from([start]);
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for w in self.neighbors(u) {
                if seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        seen.len() == self.vertices.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(v: u32) -> QubitId {
        QubitId(v)
    }

    fn measure(v: u32, s: &[u32], t: &[u32]) -> Action {
        Action::Measure {
            qubit: q(v),
            angle: Angle::ZERO,
            s: s.iter().map(|&x| q(x)).collect(),
            t: t.iter().map(|&x| q(x)).collect(),
        }
    }

    #[test]
    fn signal_terms_cancel_in_pairs() {
        let s: Signal = [q(2), q(3), q(2)].into_iter().collect();
        assert_eq!(s.terms().collect::<Vec<_>>(), vec![q(3)]);
        assert!(Signal::zero().is_zero());
    }

    #[test]
    fn pi_multiples_are_reduced() {
        assert_eq!(Angle::pi_multiple(2, 4), Angle::PiMultiple { num: 1, den: 2 });
        assert_eq!(Angle::pi_multiple(0, 3), Angle::ZERO);
        assert_eq!(Angle::pi_multiple(-3, 4).to_string(), "-3pi/4");
        assert_eq!(Angle::pi_multiple(1, 1).to_string(), "pi");
        assert!((Angle::pi_multiple(-1, 4).radians() + std::f64::consts::FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn undeclared_action_qubit_is_rejected() {
        let err = Pattern::new([q(1)], [q(1)], [q(1)], vec![Action::Prepare(q(9))]).unwrap_err();
        assert_eq!(
            err,
            PatternError::UndeclaredQubit {
                qubit: q(9),
                line: None
            }
        );
    }

    #[test]
    fn duplicate_edge_is_an_error() {
        let p = Pattern::new(
            [q(1), q(2)],
            [q(1)],
            [q(2)],
            vec![
                Action::Entangle(q(1), q(2)),
                Action::Entangle(q(2), q(1)),
                measure(1, &[], &[]),
            ],
        )
        .unwrap();
        assert_eq!(p.entanglement_graph(), Err(PatternError::DuplicateEdge(q(1), q(2))));
    }

    #[test]
    fn edgeless_graph() {
        let p = Pattern::new([q(1)], [q(1)], [q(1)], vec![]).unwrap();
        let g = p.entanglement_graph().unwrap();
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.vertices().len(), 1);
    }

    #[test]
    fn depth_of_five_qubit_chain() {
        // X5^{s2+s4} Z5^{s1+s3} M4 [M3]^{s2} [M2]^{s1} M1 E12 E23 E34 E45
        let mut actions: Vec<Action> = (1..5).map(|i| Action::Entangle(q(i), q(i + 1))).collect();
        actions.push(measure(1, &[], &[]));
        actions.push(measure(2, &[1], &[]));
        actions.push(measure(3, &[2], &[]));
        actions.push(measure(4, &[], &[]));
        actions.push(Action::CorrectZ {
            qubit: q(5),
            signal: [q(1), q(3)].into_iter().collect(),
        });
        actions.push(Action::CorrectX {
            qubit: q(5),
            signal: [q(2), q(4)].into_iter().collect(),
        });
        let p = Pattern::new((1..=5).map(q), [q(1)], [q(5)], actions).unwrap();
        assert_eq!(p.quantum_depth(), 4);
    }

    #[test]
    fn depth_of_independent_and_empty_patterns() {
        let p = Pattern::new(
            [q(1), q(2), q(3)],
            [q(1)],
            [q(3)],
            vec![
                Action::Entangle(q(1), q(2)),
                Action::Entangle(q(2), q(3)),
                measure(1, &[], &[]),
                measure(2, &[], &[]),
            ],
        )
        .unwrap();
        assert_eq!(p.quantum_depth(), 1);
        let empty = Pattern::new([q(1)], [q(1)], [q(1)], vec![]).unwrap();
        assert_eq!(empty.quantum_depth(), 0);
    }

    #[test]
    fn dependents_collects_measure_and_correction_readers() {
        let p = Pattern::new(
            [q(1), q(2), q(3)],
            [q(1)],
            [q(3)],
            vec![
                measure(1, &[], &[]),
                measure(2, &[1], &[]),
                Action::CorrectZ {
                    qubit: q(3),
                    signal: [q(1)].into_iter().collect(),
                },
            ],
        )
        .unwrap();
        let deps = p.dependents();
        assert_eq!(deps[&q(1)], BTreeSet::from([q(2), q(3)]));
        assert!(p.without_signals().dependents().is_empty());
    }

    #[test]
    fn odd_neighborhood_of_path() {
        let g = EntanglementGraph::new((1..=4).map(q), [(q(1), q(2)), (q(2), q(3)), (q(3), q(4))]).unwrap();
        assert_eq!(
            g.odd_neighborhood(&BTreeSet::from([q(2)])),
            BTreeSet::from([q(1), q(3)])
        );
        assert_eq!(
            g.odd_neighborhood(&BTreeSet::from([q(2), q(4)])),
            BTreeSet::from([q(1)])
        );
        assert!(g.is_connected());
    }
}
