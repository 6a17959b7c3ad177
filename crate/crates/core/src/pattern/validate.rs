use std::collections::BTreeSet;
use std::fmt;

use super::{Action, Pattern};

/// Well-formedness rule a pattern can break.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Rule {
    /// A signal reads an outcome that has not been measured yet.
    D0,
    /// An action touches an already measured qubit.
    D1,
    /// An action touches a qubit before its preparation.
    D2,
    /// A qubit is measured iff it is not an output.
    D3,
    /// Entanglements, then measurements, then corrections.
    StandardForm,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub rule: Rule,
    /// Index into the action list, when a single action is at fault.
    pub action: Option<usize>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.action {
            Some(i) => write!(f, "{:?} at action {}: {}", self.rule, i, self.message),
            None => write!(f, "{:?}: {}", self.rule, self.message),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, rule: Rule) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks rules D0-D3 and the standard-form ordering. Preparation of
/// non-input qubits is implicit; explicit `N` actions must come before any
/// other use of their qubit.
pub fn validate(p: &Pattern) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut push = |rule, action, message: String| report.violations.push(Violation { rule, action, message });

    let mut measured = BTreeSet::new();
    let mut used = BTreeSet::new();
    let mut prepared = BTreeSet::new();
    // 0: entangling, 1: measuring, 2: correcting
    let mut phase = 0;

    for (i, a) in p.actions().iter().enumerate() {
        for sig in a.signals() {
            for src in sig.terms() {
                if !measured.contains(&src) {
                    push(
                        Rule::D0,
                        Some(i),
                        format!("signal reads s{src} before qubit {src} is measured"),
                    );
                }
            }
        }
        for q in a.targets() {
            if measured.contains(&q) {
                push(Rule::D1, Some(i), format!("qubit {q} was already measured"));
            }
        }
        match a {
            Action::Prepare(q) => {
                if p.inputs().contains(q) {
                    push(Rule::D2, Some(i), format!("input qubit {q} cannot be prepared"));
                } else if used.contains(q) {
                    push(Rule::D2, Some(i), format!("qubit {q} used before its preparation"));
                } else if !prepared.insert(*q) {
                    push(Rule::D2, Some(i), format!("qubit {q} prepared twice"));
                }
            }
            Action::Entangle(..) => {
                if phase > 0 {
                    push(
                        Rule::StandardForm,
                        Some(i),
                        "entanglement after a measurement or correction".into(),
                    );
                }
            }
            Action::Measure { qubit, .. } => {
                if phase > 1 {
                    push(Rule::StandardForm, Some(i), "measurement after a correction".into());
                }
                phase = phase.max(1);
                if p.outputs().contains(qubit) {
                    push(Rule::D3, Some(i), format!("output qubit {qubit} is measured"));
                }
                measured.insert(*qubit);
            }
            Action::CorrectX { .. } | Action::CorrectZ { .. } => phase = 2,
        }
        if !matches!(a, Action::Prepare(_)) {
            used.extend(a.targets());
        }
    }

    for q in p.qubits() {
        if !p.outputs().contains(q) && !measured.contains(q) {
            push(Rule::D3, None, format!("non-output qubit {q} is never measured"));
        }
    }
    report
}
