#![allow(dead_code)]

use std::collections::BTreeMap;

use num_complex::Complex64;
use owqs::engine::InputGroup;
use owqs::oracle::DenseState;
use owqs::{InputState, Pattern, QubitId, SubState};
use rand::Rng;

pub fn q(v: u32) -> QubitId {
    QubitId(v)
}

pub fn random_amps(n: usize, rng: &mut impl Rng) -> Vec<Complex64> {
    let amps: Vec<Complex64> = (0..1usize << n)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    amps.into_iter().map(|a| a / norm).collect()
}

/// One random, possibly entangled group over all inputs.
pub fn random_input(p: &Pattern, rng: &mut impl Rng) -> InputState {
    let qubits: Vec<QubitId> = p.inputs().iter().copied().collect();
    if qubits.is_empty() {
        return InputState::default();
    }
    let amps = random_amps(qubits.len(), rng);
    InputState {
        groups: vec![InputGroup { qubits, amps }],
    }
}

/// Outcome bits for the pattern's measurements listed in pattern order and
/// in the plan's order.
pub fn split_outcomes(p: &Pattern, plan_order: &[QubitId], bits: &BTreeMap<QubitId, u8>) -> (Vec<u8>, Vec<u8>) {
    let pattern_order: Vec<u8> = p.measured_qubits().iter().map(|v| bits[v]).collect();
    let plan: Vec<u8> = plan_order.iter().map(|v| bits[v]).collect();
    (pattern_order, plan)
}

pub fn max_diff(a: &SubState, b: &DenseState) -> f64 {
    assert_eq!(a.qubits(), b.qubits.as_slice(), "qubit orders differ");
    a.amplitudes()
        .iter()
        .zip(&b.amps)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}
