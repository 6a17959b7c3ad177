//! Dense reference simulator.
//!
//! Holds all `2^n` amplitudes of every pattern qubit, builds operators from
//! explicit Kronecker products and measures with textbook projectors. It is
//! slow on purpose and shares no kernel code with [`crate::substate`].
//!
//! Bit `r` of an amplitude index belongs to the `r`-th smallest qubit label.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use thiserror::Error;

use crate::engine::InputState;
use crate::pattern::{Action, Pattern, QubitId, Signal};
use crate::substate::SubState;

/// Largest qubit count [`dense_run`] accepts.
pub const DENSE_LIMIT: usize = 14;

/// Tolerance for the "measured axis is collapsed" assertion.
pub const COLLAPSE_TOLERANCE: f64 = 1e-10;

pub type Matrix = Vec<Vec<Complex64>>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum OracleError {
    #[error("{0} qubits exceed the dense limit of {DENSE_LIMIT}")]
    TooLarge(usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("qubit {0} is not part of the state")]
    UnknownQubit(QubitId),
    #[error("forced outcome {outcome} on qubit {qubit} has probability {prob:e}")]
    ImpossibleBranch { qubit: QubitId, outcome: u8, prob: f64 },
    #[error("expected {expected} forced outcomes, got {got}")]
    ForcedLength { expected: usize, got: usize },
    #[error("qubit {qubit} is not collapsed after its measurement (stray amplitude {stray:e})")]
    NotCollapsed { qubit: QubitId, stray: f64 },
    #[error("input state: {0}")]
    Input(String),
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(dim: usize) -> Matrix {
    (0..dim)
        .map(|i| (0..dim).map(|j| c(if i == j { 1.0 } else { 0.0 }, 0.0)).collect())
        .collect()
}

/// `a ⊗ b`; `a` acts on the more significant bits.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (ra, ca, rb, cb) = (a.len(), a[0].len(), b.len(), b[0].len());
    let mut out = vec![vec![Complex64::default(); ca * cb]; ra * rb];
    for i in 0..ra {
        for j in 0..ca {
            for k in 0..rb {
                for l in 0..cb {
                    out[i * rb + k][j * cb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = b[0].len();
    a.iter()
        .map(|row| {
            (0..n)
                .map(|j| row.iter().zip(b).map(|(x, brow)| x * brow[j]).sum())
                .collect()
        })
        .collect()
}

pub fn matvec(a: &Matrix, v: &[Complex64]) -> Vec<Complex64> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

pub fn adjoint(a: &Matrix) -> Matrix {
    (0..a[0].len())
        .map(|j| a.iter().map(|row| row[j].conj()).collect())
        .collect()
}

pub fn add(a: &Matrix, b: &Matrix) -> Matrix {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + q).collect())
        .collect()
}

pub fn from_2x2(m: [[Complex64; 2]; 2]) -> Matrix {
    m.iter().map(|r| r.to_vec()).collect()
}

pub fn pauli_x() -> Matrix {
    vec![vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]]
}

pub fn pauli_z() -> Matrix {
    vec![vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(-1.0, 0.0)]]
}

pub fn hadamard() -> Matrix {
    let h = FRAC_1_SQRT_2;
    vec![vec![c(h, 0.0), c(h, 0.0)], vec![c(h, 0.0), c(-h, 0.0)]]
}

/// `diag(1, e^{i theta})`.
pub fn rz(theta: f64) -> Matrix {
    vec![
        vec![c(1.0, 0.0), c(0.0, 0.0)],
        vec![c(0.0, 0.0), Complex64::from_polar(1.0, theta)],
    ]
}

/// The 4x4 controlled-Z, `diag(1, 1, 1, -1)`.
pub fn cz_gate() -> Matrix {
    let mut m = identity(4);
    m[3][3] = c(-1.0, 0.0);
    m
}

/// `I ⊗ … ⊗ op ⊗ … ⊗ I` acting on bit `bit` of an `n`-bit index.
pub fn embed(op: &Matrix, bit: usize, n: usize) -> Matrix {
    let high = identity(1 << (n - bit - 1));
    let low = identity(1 << bit);
    kron(&kron(&high, op), &low)
}

/// CZ between bits `a` and `b` as `|0><0|_a ⊗ I + |1><1|_a ⊗ Z_b`.
pub fn embed_cz(a: usize, b: usize, n: usize) -> Matrix {
    let p0 = vec![vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(0.0, 0.0)]];
    let p1 = vec![vec![c(0.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]];
    add(&embed(&p0, a, n), &matmul(&embed(&p1, a, n), &embed(&pauli_z(), b, n)))
}

/// `|+a> = (|0> + e^{ia}|1>)/sqrt(2)` and `|-a> = (|0> - e^{ia}|1>)/sqrt(2)`,
/// the basis whose projectors are `P0`, `P1` and in which `M0 = |0><+a|`,
/// `M1 = |1><-a|` eliminate the measured qubit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasBasisVectors {
    pub plus_alpha: [Complex64; 2],
    pub minus_alpha: [Complex64; 2],
}

impl MeasBasisVectors {
    pub fn new(alpha: f64) -> Self {
        let e = Complex64::from_polar(FRAC_1_SQRT_2, alpha);
        let h = c(FRAC_1_SQRT_2, 0.0);
        MeasBasisVectors {
            plus_alpha: [h, e],
            minus_alpha: [h, -e],
        }
    }

    fn vector(&self, outcome: u8) -> [Complex64; 2] {
        if outcome == 0 {
            self.plus_alpha
        } else {
            self.minus_alpha
        }
    }

    /// `|v><v|` for the basis vector of `outcome`.
    pub fn projector(&self, outcome: u8) -> Matrix {
        let v = self.vector(outcome);
        (0..2).map(|i| (0..2).map(|j| v[i] * v[j].conj()).collect()).collect()
    }

    /// `|outcome><v|`.
    pub fn eliminating_operator(&self, outcome: u8) -> Matrix {
        let v = self.vector(outcome);
        let mut m = vec![vec![Complex64::default(); 2]; 2];
        for j in 0..2 {
            m[outcome as usize][j] = v[j].conj();
        }
        m
    }
}

/// `H · Rz(-a)`, rotating `|+a>` to `|0>` and `|-a>` to `|1>`.
pub fn basis_change(alpha: f64) -> Matrix {
    matmul(&hadamard(), &rz(-alpha))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseState {
    /// Ascending labels; `qubits[r]` owns bit `r`.
    pub qubits: Vec<QubitId>,
    pub amps: Vec<Complex64>,
}

impl DenseState {
    pub fn new(mut qubits: Vec<QubitId>, amps: Vec<Complex64>) -> Result<Self, OracleError> {
        if amps.len() != 1 << qubits.len() {
            return Err(OracleError::Dimension(format!(
                "{} amplitudes for {} qubits",
                amps.len(),
                qubits.len()
            )));
        }
        let mut sorted = qubits.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != qubits.len() {
            return Err(OracleError::Dimension("repeated qubit".into()));
        }
        if sorted != qubits {
            // permute into ascending order
            let src: Vec<usize> = sorted
                .iter()
                .map(|q| qubits.iter().position(|x| x == q).unwrap())
                .collect();
            let mut out = vec![Complex64::default(); amps.len()];
            for (i, a) in amps.iter().enumerate() {
                let mut j = 0;
                for (r, &s) in src.iter().enumerate() {
                    if i >> s & 1 == 1 {
                        j |= 1 << r;
                    }
                }
                out[j] = *a;
            }
            qubits = sorted;
            return Ok(DenseState { qubits, amps: out });
        }
        Ok(DenseState { qubits, amps })
    }

    pub fn from_substate(s: &SubState) -> Self {
        DenseState::new(s.qubits().to_vec(), s.amplitudes().to_vec()).expect("valid sub-state")
    }

    pub fn to_substate(&self) -> SubState {
        SubState::new(self.qubits.clone(), self.amps.clone()).expect("matching sizes")
    }

    pub fn num_qubits(&self) -> usize {
        self.qubits.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn bit(&self, q: QubitId) -> Result<usize, OracleError> {
        self.qubits
            .iter()
            .position(|&x| x == q)
            .ok_or(OracleError::UnknownQubit(q))
    }

    /// Product state from factors over disjoint qubit sets.
    fn product(qubits: Vec<QubitId>, factors: &[(Vec<QubitId>, Vec<Complex64>)]) -> Result<Self, OracleError> {
        let n = qubits.len();
        let mut amps = vec![Complex64::default(); 1 << n];
        let bits: Vec<Vec<usize>> = factors
            .iter()
            .map(|(qs, _)| qs.iter().map(|q| qubits.iter().position(|x| x == q).unwrap()).collect())
            .collect();
        for (i, slot) in amps.iter_mut().enumerate() {
            let mut a = c(1.0, 0.0);
            for ((_, fa), fb) in factors.iter().zip(&bits) {
                let k = fb.iter().enumerate().fold(0, |acc, (p, &b)| acc | ((i >> b & 1) << p));
                a *= fa[k];
            }
            *slot = a;
        }
        DenseState::new(qubits, amps)
    }
}

/// Applies `I ⊗ … ⊗ op ⊗ … ⊗ I` without forming the full matrix: each
/// output amplitude mixes the pair of inputs differing only in `bit`.
fn apply_local(amps: &mut [Complex64], op: &Matrix, bit: usize) {
    let old = amps.to_vec();
    for (i, a) in amps.iter_mut().enumerate() {
        let r = i >> bit & 1;
        let base = i & !(1 << bit);
        *a = op[r][0] * old[base] + op[r][1] * old[base | 1 << bit];
    }
}

/// Diagonal of CZ: a sign flip on indices with both bits set.
fn apply_cz_diagonal(amps: &mut [Complex64], a: usize, b: usize) {
    for (i, x) in amps.iter_mut().enumerate() {
        if i >> a & 1 == 1 && i >> b & 1 == 1 {
            *x = -*x;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KernelOp {
    Cz(QubitId, QubitId),
    X(QubitId),
    Z(QubitId),
    /// Projective measurement into `outcome`, renormalized, then rotated so
    /// the measured axis reads `|outcome>`.
    Measure {
        qubit: QubitId,
        angle: f64,
        outcome: u8,
    },
}

/// Literal matrix-vector product with the full `2^n x 2^n` operator.
pub fn dense_kernel_reference(op: KernelOp, state: &DenseState) -> Result<DenseState, OracleError> {
    let n = state.num_qubits();
    if n > 10 {
        return Err(OracleError::TooLarge(n));
    }
    let amps = match op {
        KernelOp::Cz(u, v) => {
            let (a, b) = (state.bit(u)?, state.bit(v)?);
            if a == b {
                return Err(OracleError::Dimension("CZ needs two distinct qubits".into()));
            }
            matvec(&embed_cz(a, b, n), &state.amps)
        }
        KernelOp::X(q) => matvec(&embed(&pauli_x(), state.bit(q)?, n), &state.amps),
        KernelOp::Z(q) => matvec(&embed(&pauli_z(), state.bit(q)?, n), &state.amps),
        KernelOp::Measure { qubit, angle, outcome } => {
            let bit = state.bit(qubit)?;
            let basis = MeasBasisVectors::new(angle);
            let projected = matvec(&embed(&basis.projector(outcome), bit, n), &state.amps);
            let prob: f64 = projected.iter().map(|a| a.norm_sqr()).sum();
            if prob < 1e-12 {
                return Err(OracleError::ImpossibleBranch { qubit, outcome, prob });
            }
            let scale = 1.0 / prob.sqrt();
            let normalized: Vec<Complex64> = projected.iter().map(|a| a * scale).collect();
            matvec(&embed(&basis_change(angle), bit, n), &normalized)
        }
    };
    DenseState::new(state.qubits.clone(), amps)
}

/// Removes `q`'s axis keeping the half where it reads `value`.
pub fn slice(state: &DenseState, q: QubitId, value: u8) -> Result<DenseState, OracleError> {
    let bit = state.bit(q)?;
    let mut qubits = state.qubits.clone();
    qubits.remove(bit);
    let amps = (0..state.amps.len())
        .filter(|i| (i >> bit & 1) as u8 == value)
        .map(|i| state.amps[i])
        .collect();
    DenseState::new(qubits, amps)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseRun {
    /// State restricted to the outputs.
    pub output: DenseState,
    /// `prob` of the forced outcome at each measurement, in pattern order.
    pub probs: Vec<f64>,
    /// `prob0` at each measurement, in pattern order.
    pub prob0: Vec<f64>,
    pub outcomes: BTreeMap<QubitId, u8>,
}

fn signal_value(sig: &Signal, outcomes: &BTreeMap<QubitId, u8>) -> u8 {
    sig.terms().map(|q| outcomes[&q]).fold(0, |a, b| a ^ b)
}

/// Runs `p` in its own action order with every qubit held in one dense
/// vector. `forced` lists one outcome per measurement in pattern order.
pub fn dense_run(p: &Pattern, input: &InputState, forced: &[u8]) -> Result<DenseRun, OracleError> {
    let n = p.qubits().len();
    if n > DENSE_LIMIT {
        return Err(OracleError::TooLarge(n));
    }
    let k = p.measurements().count();
    if forced.len() != k {
        return Err(OracleError::ForcedLength {
            expected: k,
            got: forced.len(),
        });
    }
    let qubits: Vec<QubitId> = p.qubits().iter().copied().collect();
    let mut factors: Vec<(Vec<QubitId>, Vec<Complex64>)> = Vec::new();
    let mut covered = Vec::new();
    for g in &input.groups {
        if g.amps.len() != 1 << g.qubits.len() {
            return Err(OracleError::Input("group size mismatch".into()));
        }
        covered.extend(g.qubits.iter().copied());
        factors.push((g.qubits.clone(), g.amps.clone()));
    }
    covered.sort();
    if covered != p.inputs().iter().copied().collect::<Vec<_>>() {
        return Err(OracleError::Input("groups do not partition the inputs".into()));
    }
    let h = c(FRAC_1_SQRT_2, 0.0);
    for q in qubits.iter().filter(|q| !p.inputs().contains(q)) {
        factors.push((vec![*q], vec![h, h]));
    }
    let mut state = DenseState::product(qubits, &factors)?;

    let mut outcomes = BTreeMap::new();
    let mut probs = Vec::new();
    let mut prob0 = Vec::new();
    let mut next = forced.iter();
    for a in p.actions() {
        match a {
            Action::Prepare(_) => {}
            Action::Entangle(u, v) => {
                let (a, b) = (state.bit(*u)?, state.bit(*v)?);
                apply_cz_diagonal(&mut state.amps, a, b);
            }
            Action::Measure { qubit, angle, s, t } => {
                let bit = state.bit(*qubit)?;
                let mut alpha = angle.radians();
                if signal_value(s, &outcomes) == 1 {
                    alpha = -alpha;
                }
                if signal_value(t, &outcomes) == 1 {
                    alpha += PI;
                }
                let outcome = *next.next().expect("length checked");
                let basis = MeasBasisVectors::new(alpha);
                let mut p0 = state.amps.clone();
                apply_local(&mut p0, &basis.projector(0), bit);
                let prob_0: f64 = p0.iter().map(|a| a.norm_sqr()).sum();
                let mut projected = state.amps.clone();
                apply_local(&mut projected, &basis.projector(outcome), bit);
                let prob: f64 = projected.iter().map(|a| a.norm_sqr()).sum();
                if prob < 1e-12 {
                    return Err(OracleError::ImpossibleBranch {
                        qubit: *qubit,
                        outcome,
                        prob,
                    });
                }
                let scale = 1.0 / prob.sqrt();
                for a in projected.iter_mut() {
                    *a *= scale;
                }
                apply_local(&mut projected, &basis_change(alpha), bit);
                let stray = projected
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| (i >> bit & 1) as u8 != outcome)
                    .map(|(_, a)| a.norm())
                    .fold(0.0, f64::max);
                if stray > COLLAPSE_TOLERANCE {
                    return Err(OracleError::NotCollapsed { qubit: *qubit, stray });
                }
                state.amps = projected;
                outcomes.insert(*qubit, outcome);
                probs.push(prob);
                prob0.push(prob_0);
            }
            Action::CorrectX { qubit, signal } => {
                if signal_value(signal, &outcomes) == 1 {
                    let bit = state.bit(*qubit)?;
                    apply_local(&mut state.amps, &pauli_x(), bit);
                }
            }
            Action::CorrectZ { qubit, signal } => {
                if signal_value(signal, &outcomes) == 1 {
                    let bit = state.bit(*qubit)?;
                    apply_local(&mut state.amps, &pauli_z(), bit);
                }
            }
        }
    }

    for (q, b) in &outcomes {
        state = slice(&state, *q, *b)?;
    }
    Ok(DenseRun {
        output: state,
        probs,
        prob0,
        outcomes,
    })
}
