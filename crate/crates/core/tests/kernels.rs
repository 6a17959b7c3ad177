mod common;

use common::q;
use num_complex::Complex64;
use owqs::oracle::{
    self, adjoint, dense_kernel_reference, from_2x2, matmul, matvec, slice, DenseState, KernelOp, Matrix,
};
use owqs::substate::{Branch, ElimMeasOperators};
use owqs::{QubitId, SubState};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn state(m: usize, raw: &[(f64, f64)]) -> SubState {
    let amps: Vec<Complex64> = raw[..1 << m].iter().map(|&(re, im)| Complex64::new(re, im)).collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt().max(1e-6);
    let qubits: Vec<QubitId> = (1..=m as u32).map(q).collect();
    SubState::new(qubits, amps.into_iter().map(|a| a / norm).collect()).unwrap()
}

fn max_err(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn mat_err(a: &Matrix, b: &Matrix) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn amplitudes() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 16)
}

proptest! {
    #[test]
    fn pauli_and_cz_kernels_match_kronecker_matrices(m in 1usize..=4, raw in amplitudes()) {
        let s = state(m, &raw);
        let dense = DenseState::from_substate(&s);
        for p in 0..m {
            let mut x = s.clone();
            x.apply_x(p).unwrap();
            let rx = dense_kernel_reference(KernelOp::X(s.qubits()[p]), &dense).unwrap();
            prop_assert!(max_err(x.amplitudes(), &rx.amps) <= 1e-12);

            let mut z = s.clone();
            z.apply_z(p).unwrap();
            let rz = dense_kernel_reference(KernelOp::Z(s.qubits()[p]), &dense).unwrap();
            prop_assert!(max_err(z.amplitudes(), &rz.amps) <= 1e-12);

            for r in 0..m {
                if r == p {
                    continue;
                }
                let mut cz = s.clone();
                cz.apply_cz(p, r).unwrap();
                let rcz = dense_kernel_reference(KernelOp::Cz(s.qubits()[p], s.qubits()[r]), &dense).unwrap();
                prop_assert!(max_err(cz.amplitudes(), &rcz.amps) <= 1e-12);
            }
        }
    }

    #[test]
    fn elimination_matches_projection_then_slicing(m in 1usize..=4, raw in amplitudes(), alpha in -7.0..7.0f64) {
        let s = state(m, &raw);
        let dense = DenseState::from_substate(&s);
        for p in 0..m {
            let (p0, p1) = s.branch_probabilities(p, alpha).unwrap();
            prop_assert!((p0 + p1 - 1.0).abs() <= 1e-12);
            for b in 0..2u8 {
                let prob = if b == 0 { p0 } else { p1 };
                if prob < 1e-9 {
                    continue;
                }
                let mut e = s.clone();
                let out = e.measure_eliminate(p, alpha, Branch::Forced(b)).unwrap();
                prop_assert_eq!(out.outcome, b);
                prop_assert!((out.prob0 - p0).abs() <= 1e-12);
                let qubit = s.qubits()[p];
                let reference = dense_kernel_reference(KernelOp::Measure { qubit, angle: alpha, outcome: b }, &dense).unwrap();
                let other: f64 = reference
                    .amps
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| (i >> p & 1) as u8 != b)
                    .map(|(_, a)| a.norm())
                    .fold(0.0, f64::max);
                prop_assert!(other <= 1e-12);
                let sliced = slice(&reference, qubit, b).unwrap();
                prop_assert!(max_err(e.amplitudes(), &sliced.amps) <= 1e-10);
                prop_assert!((e.norm_sqr() - 1.0).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn tensor_matches_kronecker(raw_a in amplitudes(), raw_b in amplitudes()) {
        let a = state(2, &raw_a);
        let b = SubState::new(vec![q(3)], state(1, &raw_b).amplitudes().to_vec()).unwrap();
        let t = a.tensor(&b).unwrap();
        let ka: Matrix = a.amplitudes().iter().map(|x| vec![*x]).collect();
        let kb: Matrix = b.amplitudes().iter().map(|x| vec![*x]).collect();
        let k = oracle::kron(&kb, &ka);
        let flat: Vec<Complex64> = k.into_iter().map(|r| r[0]).collect();
        prop_assert!(max_err(t.amplitudes(), &flat) <= 1e-15);
    }
}

#[test]
fn measurement_operator_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let id = oracle::identity(2);
    for _ in 0..1000 {
        let alpha = rng.gen_range(-10.0..10.0);
        let ops = ElimMeasOperators::new(alpha);
        let (m0, m1, p0, p1) = (
            from_2x2(ops.m0()),
            from_2x2(ops.m1()),
            from_2x2(ops.p0()),
            from_2x2(ops.p1()),
        );
        let mm0 = matmul(&adjoint(&m0), &m0);
        let mm1 = matmul(&adjoint(&m1), &m1);
        assert!(mat_err(&mm0, &p0) <= 1e-12);
        assert!(mat_err(&mm1, &p1) <= 1e-12);
        assert!(mat_err(&oracle::add(&p0, &p1), &id) <= 1e-12);
        assert!(mat_err(&oracle::add(&mm0, &mm1), &id) <= 1e-12);
        // the kernel's operators are the oracle's basis projectors
        let basis = oracle::MeasBasisVectors::new(alpha);
        assert!(mat_err(&p0, &basis.projector(0)) <= 1e-12);
        assert!(mat_err(&p1, &basis.projector(1)) <= 1e-12);
        assert!(mat_err(&m0, &basis.eliminating_operator(0)) <= 1e-12);
        assert!(mat_err(&m1, &basis.eliminating_operator(1)) <= 1e-12);
    }
}

#[test]
fn generalized_and_projective_measurements_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..500 {
        let alpha = rng.gen_range(-4.0..4.0);
        let psi = common::random_amps(1, &mut rng);
        let basis = oracle::MeasBasisVectors::new(alpha);
        for o in 0..2 {
            let projected = matvec(&basis.projector(o), &psi);
            let generalized = matvec(&basis.eliminating_operator(o), &psi);
            let prob_p: f64 = projected.iter().map(|a| a.norm_sqr()).sum();
            let prob_m: f64 = generalized.iter().map(|a| a.norm_sqr()).sum();
            assert!((prob_p - prob_m).abs() <= 1e-12);
            let rotated = matvec(&oracle::basis_change(alpha), &projected);
            assert!(max_err(&rotated, &generalized) <= 1e-12);
        }
    }
}
