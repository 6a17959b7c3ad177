//! Sub-state amplitude storage and the matrix-free kernels acting on it.
//!
//! A [`SubState`] over `m` qubits holds `2^m` amplitudes. The qubit at
//! position `p` (0-based) owns bit `p` of the amplitude index, so position 0
//! is the least significant bit.

mod space;

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use thiserror::Error;

use crate::pattern::QubitId;

pub use space::{KernelCounts, NormWarning, SpaceStats, StateSpace, SubStateId, NORM_TOLERANCE};

/// Branch probabilities below this are treated as impossible.
pub const IMPOSSIBLE_BRANCH: f64 = 1e-12;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SubStateError {
    #[error("position {pos} out of range for a {len}-qubit sub-state")]
    PositionOutOfRange { pos: usize, len: usize },
    #[error("two-qubit kernel needs distinct positions, got {0} twice")]
    SamePosition(usize),
    #[error("{amps} amplitudes do not fit {qubits} qubits")]
    LengthMismatch { qubits: usize, amps: usize },
    #[error("qubit {0} appears twice")]
    DuplicateQubit(QubitId),
    #[error("qubit {0} is already live")]
    AlreadyLive(QubitId),
    #[error("qubit {0} is not live")]
    NotLive(QubitId),
    #[error("sub-states share qubit {0}")]
    Overlap(QubitId),
    #[error("unknown sub-state")]
    UnknownSubState,
    #[error("measuring qubit {qubit} into outcome {outcome} which has probability {prob:e}")]
    ImpossibleBranch { qubit: QubitId, outcome: u8, prob: f64 },
}

/// How the outcome of a measurement is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Branch {
    /// A uniform draw from `[0, 1)`; outcome 0 iff the draw is `<= prob0`.
    Sample(f64),
    Forced(u8),
    /// Outcome 0 without computing its probability; the post-measurement
    /// state is rescaled by `sqrt(2)` assuming `prob0 = 1/2`.
    Positive,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasureOutcome {
    pub outcome: u8,
    /// `-1.0` when the probability was not computed ([`Branch::Positive`]).
    pub prob0: f64,
}

/// Elements of the eliminating measurement operators
/// `M0 = |0><+a|`, `M1 = |1><-a|` and of the projector `P0 = |+a><+a|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElimMeasOperators {
    pub angle: f64,
    /// Non-zero row of `M0`.
    pub m00: Complex64,
    pub m01: Complex64,
    /// Non-zero row of `M1`.
    pub m10: Complex64,
    pub m11: Complex64,
    pub p00: Complex64,
    pub p01: Complex64,
    pub p10: Complex64,
    pub p11: Complex64,
}

impl ElimMeasOperators {
    pub fn new(angle: f64) -> Self {
        let phase = Complex64::from_polar(1.0, -angle);
        let r = Complex64::from(FRAC_1_SQRT_2);
        ElimMeasOperators {
            angle,
            m00: r,
            m01: phase * FRAC_1_SQRT_2,
            m10: r,
            m11: -phase * FRAC_1_SQRT_2,
            p00: Complex64::from(0.5),
            p01: phase * 0.5,
            p10: phase.conj() * 0.5,
            p11: Complex64::from(0.5),
        }
    }

    pub fn m0(&self) -> [[Complex64; 2]; 2] {
        let z = Complex64::default();
        [[self.m00, self.m01], [z, z]]
    }

    pub fn m1(&self) -> [[Complex64; 2]; 2] {
        let z = Complex64::default();
        [[z, z], [self.m10, self.m11]]
    }

    pub fn p0(&self) -> [[Complex64; 2]; 2] {
        [[self.p00, self.p01], [self.p10, self.p11]]
    }

    /// `I - P0`.
    pub fn p1(&self) -> [[Complex64; 2]; 2] {
        [[self.p11, -self.p01], [-self.p10, self.p00]]
    }
}

/// Index with a 0 bit inserted at `bit`.
#[inline]
fn insert_zero(i: usize, bit: usize) -> usize {
    let low = i & ((1 << bit) - 1);
    ((i >> bit) << (bit + 1)) | low
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubState {
    qubits: Vec<QubitId>,
    amps: Vec<Complex64>,
}

impl SubState {
    pub fn new(qubits: Vec<QubitId>, amps: Vec<Complex64>) -> Result<Self, SubStateError> {
        if qubits.len() >= usize::BITS as usize || amps.len() != 1 << qubits.len() {
            return Err(SubStateError::LengthMismatch {
                qubits: qubits.len(),
                amps: amps.len(),
            });
        }
        for (i, q) in qubits.iter().enumerate() {
            if qubits[..i].contains(q) {
                return Err(SubStateError::DuplicateQubit(*q));
            }
        }
        Ok(SubState { qubits, amps })
    }

    /// `|+> = (|0> + |1>)/sqrt(2)` on a single qubit.
    pub fn plus(q: QubitId) -> Self {
        SubState {
            qubits: vec![q],
            amps: vec![Complex64::from(FRAC_1_SQRT_2); 2],
        }
    }

    /// Computational basis state; bit `p` of `index` is the value of the
    /// qubit at position `p`.
    pub fn basis(qubits: Vec<QubitId>, index: usize) -> Result<Self, SubStateError> {
        let mut amps = vec![Complex64::default(); 1 << qubits.len()];
        if index >= amps.len() {
            return Err(SubStateError::PositionOutOfRange {
                pos: index,
                len: amps.len(),
            });
        }
        amps[index] = Complex64::from(1.0);
        SubState::new(qubits, amps)
    }

    pub fn qubits(&self) -> &[QubitId] {
        &self.qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn num_qubits(&self) -> usize {
        self.qubits.len()
    }

    pub fn position(&self, q: QubitId) -> Option<usize> {
        self.qubits.iter().position(|&x| x == q)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_pos(&self, pos: usize) -> Result<(), SubStateError> {
        if pos < self.qubits.len() {
            Ok(())
        } else {
            Err(SubStateError::PositionOutOfRange {
                pos,
                len: self.qubits.len(),
            })
        }
    }

    /// Kronecker product; `self` keeps the low positions and `other`'s
    /// qubits follow at higher significance.
    pub fn tensor(&self, other: &SubState) -> Result<SubState, SubStateError> {
        if let Some(q) = other.qubits.iter().find(|q| self.qubits.contains(q)) {
            return Err(SubStateError::Overlap(*q));
        }
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for b in &other.amps {
            amps.extend(self.amps.iter().map(|a| a * b));
        }
        let mut qubits = self.qubits.clone();
        qubits.extend_from_slice(&other.qubits);
        SubState::new(qubits, amps)
    }

    /// Negates every amplitude whose index has both bits set. Touches
    /// `2^(m-2)` amplitudes.
    pub fn apply_cz(&mut self, u_pos: usize, v_pos: usize) -> Result<usize, SubStateError> {
        self.check_pos(u_pos)?;
        self.check_pos(v_pos)?;
        if u_pos == v_pos {
            return Err(SubStateError::SamePosition(u_pos));
        }
        let (lo, hi) = (u_pos.min(v_pos), u_pos.max(v_pos));
        let mask = (1 << lo) | (1 << hi);
        let n = self.amps.len() >> 2;
        for i in 0..n {
            let idx = insert_zero(insert_zero(i, lo), hi) | mask;
            self.amps[idx] = -self.amps[idx];
        }
        Ok(n)
    }

    /// Swaps the `|0>` and `|1>` halves of position `pos`.
    pub fn apply_x(&mut self, pos: usize) -> Result<usize, SubStateError> {
        self.check_pos(pos)?;
        let step = 1 << pos;
        let n = self.amps.len() >> 1;
        for i in 0..n {
            let j = insert_zero(i, pos);
            self.amps.swap(j, j + step);
        }
        Ok(n)
    }

    /// Negates the `|1>` half of position `pos`.
    pub fn apply_z(&mut self, pos: usize) -> Result<usize, SubStateError> {
        self.check_pos(pos)?;
        let step = 1 << pos;
        let n = self.amps.len() >> 1;
        for i in 0..n {
            let j = insert_zero(i, pos) + step;
            self.amps[j] = -self.amps[j];
        }
        Ok(n)
    }

    /// `(<psi|P0|psi>, <psi|P1|psi>)` for a measurement at `angle` on `pos`,
    /// each accumulated as a sum of squared moduli over amplitude pairs.
    pub fn branch_probabilities(&self, pos: usize, angle: f64) -> Result<(f64, f64), SubStateError> {
        self.check_pos(pos)?;
        Ok((self.prob(pos, angle, 1.0), self.prob(pos, angle, -1.0)))
    }

    fn prob(&self, pos: usize, angle: f64, sign: f64) -> f64 {
        let phase = Complex64::from_polar(sign, -angle);
        let step = 1 << pos;
        let mut acc = 0.0;
        for i in 0..self.amps.len() >> 1 {
            let j = insert_zero(i, pos);
            acc += (self.amps[j] + phase * self.amps[j + step]).norm_sqr();
        }
        (acc * 0.5).clamp(0.0, 1.0)
    }

    /// Measures position `pos` in the `|+-angle>` basis and removes it from
    /// the sub-state in place: the amplitude array is halved and positions
    /// above `pos` shift down by one.
    pub fn measure_eliminate(
        &mut self,
        pos: usize,
        angle: f64,
        branch: Branch,
    ) -> Result<MeasureOutcome, SubStateError> {
        self.check_pos(pos)?;
        let ops = ElimMeasOperators::new(angle);
        let qubit = self.qubits[pos];

        let (outcome, prob0, a, b) = match branch {
            Branch::Positive => {
                let s = std::f64::consts::SQRT_2;
                (0, -1.0, ops.m00 * s, ops.m01 * s)
            }
            Branch::Sample(_) | Branch::Forced(_) => {
                let prob0 = self.prob(pos, angle, 1.0);
                let prob1 = 1.0 - prob0;
                let outcome = match branch {
                    Branch::Forced(bit) => {
                        let p = if bit == 0 { prob0 } else { prob1 };
                        if p < IMPOSSIBLE_BRANCH {
                            return Err(SubStateError::ImpossibleBranch {
                                qubit,
                                outcome: bit,
                                prob: p,
                            });
                        }
                        bit
                    }
                    Branch::Sample(u) => {
                        if (u <= prob0 && prob0 >= IMPOSSIBLE_BRANCH) || prob1 < IMPOSSIBLE_BRANCH {
                            0
                        } else {
                            1
                        }
                    }
                    Branch::Positive => unreachable!(),
                };
                if outcome == 0 {
                    let n = prob0.sqrt();
                    (0, prob0, ops.m00 / n, ops.m01 / n)
                } else {
                    let n = prob1.sqrt();
                    (1, prob0, ops.m10 / n, ops.m11 / n)
                }
            }
        };

        let step = 1 << pos;
        let half = self.amps.len() >> 1;
        for i in 0..half {
            // j >= i, so reads never see an already overwritten slot
            let j = insert_zero(i, pos);
            self.amps[i] = a * self.amps[j] + b * self.amps[j + step];
        }
        self.amps.truncate(half);
        self.qubits.remove(pos);
        Ok(MeasureOutcome { outcome, prob0 })
    }

    /// Same state with the qubits laid out in `order` (a permutation of the
    /// current qubits).
    pub fn reordered(&self, order: &[QubitId]) -> Result<SubState, SubStateError> {
        if order.len() != self.qubits.len() {
            return Err(SubStateError::LengthMismatch {
                qubits: order.len(),
                amps: self.amps.len(),
            });
        }
        let src_bit: Vec<usize> = order
            .iter()
            .map(|q| self.position(*q).ok_or(SubStateError::NotLive(*q)))
            .collect::<Result<_, _>>()?;
        let mut amps = vec![Complex64::default(); self.amps.len()];
        for (new_idx, slot) in amps.iter_mut().enumerate() {
            let old_idx = src_bit
                .iter()
                .enumerate()
                .filter(|&(p, _)| new_idx >> p & 1 == 1)
                .fold(0, |acc, (_, &b)| acc | (1 << b));
            *slot = self.amps[old_idx];
        }
        SubState::new(order.to_vec(), amps)
    }

    /// The same state with qubits in ascending label order.
    pub fn sorted(&self) -> SubState {
        let mut order = self.qubits.clone();
        order.sort();
        self.reordered(&order).expect("permutation of own qubits")
    }
}

/// True iff `a = c * b` for some unit complex `c`, up to `tol` in the
/// max-norm. `c` is read off the largest-magnitude amplitude of `b`. Qubit
/// orders may differ as long as the qubit sets agree.
pub fn states_equal_up_to_phase(a: &SubState, b: &SubState, tol: f64) -> Result<bool, SubStateError> {
    let mut qa: Vec<_> = a.qubits().to_vec();
    let mut qb: Vec<_> = b.qubits().to_vec();
    qa.sort();
    qb.sort();
    if qa != qb {
        let q = qa
            .iter()
            .chain(&qb)
            .find(|q| !(qa.contains(q) && qb.contains(q)))
            .copied()
            .unwrap_or(QubitId(0));
        return Err(SubStateError::NotLive(q));
    }
    let b = b.reordered(a.qubits())?;
    let (k, bk) = b
        .amps
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.norm_sqr().total_cmp(&y.1.norm_sqr()))
        .map(|(k, v)| (k, *v))
        .unwrap_or((0, Complex64::from(1.0)));
    let c = if bk.norm() > 0.0 {
        let ratio = a.amps[k] / bk;
        if ratio.norm() > 0.0 {
            ratio / ratio.norm()
        } else {
            Complex64::from(1.0)
        }
    } else {
        Complex64::from(1.0)
    };
    Ok(a.amps.iter().zip(&b.amps).all(|(x, y)| (x - c * y).norm() <= tol))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn q(v: u32) -> QubitId {
        QubitId(v)
    }

    fn state(qs: &[u32], amps: &[f64]) -> SubState {
        SubState::new(
            qs.iter().map(|&v| q(v)).collect(),
            amps.iter().map(|&a| c(a, 0.0)).collect(),
        )
        .unwrap()
    }

    fn assert_amps(s: &SubState, want: &[f64]) {
        assert_eq!(s.amplitudes().len(), want.len());
        for (a, w) in s.amplitudes().iter().zip(want) {
            assert!((a - c(*w, 0.0)).norm() < 1e-12, "{:?} vs {:?}", s.amplitudes(), want);
        }
    }

    #[test]
    fn insert_zero_matches_index_map() {
        // j = (i mod 2^p) + floor(i / 2^p) * 2^(p+1)
        for p in 0..4 {
            for i in 0..32 {
                assert_eq!(insert_zero(i, p), (i % (1 << p)) + (i >> p) * (1 << (p + 1)));
            }
        }
    }

    #[test]
    fn new_rejects_bad_shapes() {
        assert!(SubState::new(vec![q(1)], vec![c(1.0, 0.0)]).is_err());
        assert_eq!(
            SubState::new(vec![q(1), q(1)], vec![c(1.0, 0.0); 4]),
            Err(SubStateError::DuplicateQubit(q(1)))
        );
    }

    #[test]
    fn tensor_of_ones() {
        let s = state(&[1], &[0.0, 1.0]).tensor(&state(&[2], &[0.0, 1.0])).unwrap();
        assert_eq!(s.qubits(), &[q(1), q(2)]);
        assert_amps(&s, &[0.0, 0.0, 0.0, 1.0]);
        let three = s.tensor(&SubState::plus(q(3))).unwrap();
        assert_eq!(three.amplitudes().len(), 8);
        assert!(s.tensor(&state(&[2], &[1.0, 0.0])).is_err());
    }

    #[test]
    fn cz_negates_eleven() {
        let mut s = SubState::new(
            vec![q(1), q(2)],
            vec![c(0.1, 0.0), c(0.2, 0.0), c(0.3, 0.0), c(0.4, 0.5)],
        )
        .unwrap();
        let orig = s.clone();
        assert_eq!(s.apply_cz(0, 1), Ok(1));
        assert_eq!(s.amplitudes()[3], c(-0.4, -0.5));
        assert_eq!(&s.amplitudes()[..3], &orig.amplitudes()[..3]);
        s.apply_cz(1, 0).unwrap();
        assert_eq!(s, orig);
        assert_eq!(s.apply_cz(1, 1), Err(SubStateError::SamePosition(1)));
        assert!(matches!(
            s.apply_cz(0, 2),
            Err(SubStateError::PositionOutOfRange { .. })
        ));
    }

    #[test]
    fn x_and_z_kernels() {
        let mut s = state(&[1], &[1.0, 0.0]);
        s.apply_x(0).unwrap();
        assert_amps(&s, &[0.0, 1.0]);
        s.apply_x(0).unwrap();
        assert_amps(&s, &[1.0, 0.0]);

        let mut p = SubState::plus(q(1));
        p.apply_z(0).unwrap();
        assert_amps(&p, &[FRAC_1_SQRT_2, -FRAC_1_SQRT_2]);
        p.apply_z(0).unwrap();
        assert_amps(&p, &[FRAC_1_SQRT_2, FRAC_1_SQRT_2]);

        let mut r = SubState::new(
            vec![q(1), q(2)],
            vec![c(0.1, 0.2), c(0.3, 0.0), c(0.0, 0.4), c(0.5, 0.5)],
        )
        .unwrap();
        let orig = r.clone();
        r.apply_z(1).unwrap();
        r.apply_x(1).unwrap();
        r.apply_z(1).unwrap();
        r.apply_x(1).unwrap();
        for (a, b) in r.amplitudes().iter().zip(orig.amplitudes()) {
            assert_eq!(*a, -*b);
        }
        assert!(r.apply_x(2).is_err());
        assert!(r.apply_z(7).is_err());
    }

    #[test]
    fn operators_match_closed_form() {
        let ops = ElimMeasOperators::new(0.7);
        let e = Complex64::from_polar(1.0, -0.7);
        assert!((ops.m00 - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((ops.m01 - e * FRAC_1_SQRT_2).norm() < 1e-15);
        assert!((ops.m10 - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((ops.m11 + e * FRAC_1_SQRT_2).norm() < 1e-15);
    }

    #[test]
    fn measuring_plus_at_zero_is_certain() {
        let mut s = SubState::plus(q(1));
        let out = s.measure_eliminate(0, 0.0, Branch::Sample(0.999)).unwrap();
        assert_eq!(out.outcome, 0);
        assert!((out.prob0 - 1.0).abs() < 1e-12);
        assert_eq!(s.num_qubits(), 0);
        assert!((s.amplitudes()[0].norm() - 1.0).abs() < 1e-12);

        let mut s = SubState::plus(q(1));
        assert!(matches!(
            s.measure_eliminate(0, 0.0, Branch::Forced(1)),
            Err(SubStateError::ImpossibleBranch { outcome: 1, .. })
        ));
    }

    #[test]
    fn positive_branch_skips_probability() {
        let mut s = state(&[1, 2], &[0.0, FRAC_1_SQRT_2, 0.0, -FRAC_1_SQRT_2]);
        let out = s.measure_eliminate(0, 0.0, Branch::Positive).unwrap();
        assert_eq!(
            out,
            MeasureOutcome {
                outcome: 0,
                prob0: -1.0
            }
        );
        assert_amps(&s, &[FRAC_1_SQRT_2, -FRAC_1_SQRT_2]);
    }

    #[test]
    fn reorder_round_trip() {
        let s = SubState::new(
            vec![q(3), q(1), q(2)],
            (0..8).map(|i| c(i as f64, -(i as f64))).collect(),
        )
        .unwrap();
        let r = s.reordered(&[q(1), q(2), q(3)]).unwrap();
        // index in r: bit0 = q1, bit1 = q2, bit2 = q3; in s: bit0 = q3, bit1 = q1, bit2 = q2
        for idx in 0..8 {
            let (b1, b2, b3) = (idx & 1, idx >> 1 & 1, idx >> 2 & 1);
            let old = b3 | b1 << 1 | b2 << 2;
            assert_eq!(r.amplitudes()[idx], s.amplitudes()[old]);
        }
        assert_eq!(r.reordered(s.qubits()).unwrap(), s);
        assert_eq!(s.sorted(), r);
    }

    #[test]
    fn phase_equality() {
        let a = state(&[1], &[1.0, 0.0]);
        let b = SubState::new(vec![q(1)], vec![c(0.0, 1.0), c(0.0, 0.0)]).unwrap();
        assert!(states_equal_up_to_phase(&a, &b, 1e-10).unwrap());
        let o = state(&[1], &[0.0, 1.0]);
        assert!(!states_equal_up_to_phase(&a, &o, 1e-10).unwrap());
        assert!(states_equal_up_to_phase(&a, &state(&[2], &[1.0, 0.0]), 1e-10).is_err());
    }
}
