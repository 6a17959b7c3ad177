mod common;

use std::collections::BTreeMap;

use common::{max_diff, q, random_input, split_outcomes};
use num_complex::Complex64;
use owqs::engine::{InputGroup, Snapshot};
use owqs::generators::{self, RandomSpec};
use owqs::oracle::dense_run;
use owqs::scheduler::reorder;
use owqs::{
    run, run_eowqs, states_equal_up_to_phase, tune_weights, Action, CostWeights, InputState, OutcomePolicy, Pattern,
    QubitId, RunConfig, SubState,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn amps(v: &[f64]) -> Vec<Complex64> {
    v.iter().map(|&x| Complex64::from(x)).collect()
}

fn assert_state(s: &SubState, qubits: &[u32], expect: &[f64]) {
    let want: Vec<QubitId> = qubits.iter().map(|&v| q(v)).collect();
    assert_eq!(s.qubits(), want.as_slice());
    for (a, e) in s.amplitudes().iter().zip(expect) {
        assert!((a - e).norm() <= 1e-12, "{:?} != {:?}", s.amplitudes(), expect);
    }
}

fn only(snap: &Snapshot, qubit: u32) -> &SubState {
    snap.substates.iter().find(|s| s.qubits().contains(&q(qubit))).unwrap()
}

fn one_one() -> InputState {
    InputState {
        groups: vec![
            InputGroup {
                qubits: vec![q(1)],
                amps: amps(&[0.0, 1.0]),
            },
            InputGroup {
                qubits: vec![q(2)],
                amps: amps(&[0.0, 1.0]),
            },
        ],
    }
}

#[test]
fn cnot_intermediate_states() {
    let p = generators::cnot();
    let (_, plan) = tune_weights(&p).unwrap();
    assert_eq!(plan.measurement_order(), vec![q(2), q(3)]);
    let r = run(
        &p,
        &plan,
        &one_one(),
        &RunConfig::owqs(OutcomePolicy::Forced(vec![0, 1])).with_trace(),
    )
    .unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let t = &r.trace;
    // loaded inputs
    assert_state(only(&t[0], 1), &[1], &[0.0, 1.0]);
    assert_state(only(&t[0], 2), &[2], &[0.0, 1.0]);
    // E(2,3)
    assert_eq!(t[1].action, Some(Action::Entangle(q(2), q(3))));
    assert_state(only(&t[1], 3), &[2, 3], &[0.0, h, 0.0, -h]);
    // M 2 -> 0
    assert_state(only(&t[2], 3), &[3], &[h, -h]);
    assert!((r.stats.probs[0] - 0.5).abs() < 1e-12);
    // E(1,3), E(3,4)
    assert_state(only(&t[4], 3), &[1, 3, 4], &[0.0, 0.5, 0.0, 0.5, 0.0, 0.5, 0.0, -0.5]);
    // M 3 -> 1
    assert_state(only(&t[5], 4), &[1, 4], &[0.0, 0.0, 0.0, 1.0]);
    // X 4 fires on s3 = 1
    assert_state(&r.output_state(), &[1, 4], &[0.0, 1.0, 0.0, 0.0]);
    assert_eq!(r.stats.m_peak, 3);
}

fn cnot_expected(index: usize) -> SubState {
    // control q1 (bit 0), target q2 (bit 1) leaves on q4
    let (c, t) = (index & 1, index >> 1 & 1);
    SubState::basis(vec![q(1), q(4)], c | (t ^ c) << 1).unwrap()
}

#[test]
fn cnot_truth_table_random_outcomes() {
    let p = generators::cnot();
    let (_, plan) = tune_weights(&p).unwrap();
    for index in 0..4 {
        let input = InputState::basis(&[q(1), q(2)], index);
        for seed in 0..20 {
            let r = run(&p, &plan, &input, &RunConfig::owqs(OutcomePolicy::Random { seed })).unwrap();
            assert!(states_equal_up_to_phase(&r.output_state(), &cnot_expected(index), 1e-10).unwrap());
        }
    }
}

#[test]
fn cnot_fixes_zero_zero_in_every_mode() {
    let p = generators::cnot();
    let (_, plan) = tune_weights(&p).unwrap();
    let input = InputState::basis(&[q(1), q(2)], 0);
    let zero = SubState::basis(vec![q(1), q(4)], 0).unwrap();
    for policy in [
        OutcomePolicy::PositiveBranch,
        OutcomePolicy::Random { seed: 9 },
        OutcomePolicy::Forced(vec![1, 1]),
    ] {
        let r = run(&p, &plan, &input, &RunConfig::owqs(policy)).unwrap();
        assert!(states_equal_up_to_phase(&r.output_state(), &zero, 1e-10).unwrap());
    }
    let (_, r) = run_eowqs(&p, &input).unwrap();
    assert!(states_equal_up_to_phase(&r.output_state(), &zero, 1e-10).unwrap());
}

#[test]
fn cnot_branches_agree() {
    let p = generators::cnot();
    let (_, plan) = tune_weights(&p).unwrap();
    // q1 = 0, q2 = 1
    let input = InputState::basis(&[q(1), q(2)], 2);
    let outs: Vec<SubState> = [[0, 0], [0, 1], [1, 0], [1, 1]]
        .iter()
        .map(|b| {
            run(&p, &plan, &input, &RunConfig::owqs(OutcomePolicy::Forced(b.to_vec())))
                .unwrap()
                .output_state()
        })
        .collect();
    for o in &outs {
        assert!(states_equal_up_to_phase(o, &outs[0], 1e-10).unwrap());
        let dense = dense_run(&p, &input, &[0, 0]).unwrap();
        assert!(states_equal_up_to_phase(o, &dense.output.to_substate(), 1e-10).unwrap());
    }
}

fn random_patterns(count: usize) -> Vec<Pattern> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..count)
        .map(|i| {
            let mut spec = RandomSpec::new(rng.gen_range(2..=10), 1000 + i as u64);
            spec.density = rng.gen_range(0.1..0.6);
            generators::random(&spec).unwrap()
        })
        .collect()
}

#[test]
fn engine_matches_dense_oracle_on_random_patterns() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for p in random_patterns(120) {
        let (_, plan) = tune_weights(&p).unwrap();
        let input = random_input(&p, &mut rng);
        let bits: BTreeMap<QubitId, u8> = p
            .measured_qubits()
            .into_iter()
            .map(|v| (v, rng.gen_range(0..2)))
            .collect();
        let (pattern_bits, plan_bits) = split_outcomes(&p, &plan.measurement_order(), &bits);
        let r = run(&p, &plan, &input, &RunConfig::owqs(OutcomePolicy::Forced(plan_bits))).unwrap();
        let dense = dense_run(&p, &input, &pattern_bits).unwrap();
        let d = max_diff(&r.output_state_with_phase(), &dense.output);
        assert!(d <= 1e-10, "pattern\n{p}\ndiffers by {d}");
        for prob in &r.stats.probs {
            assert!((prob - 0.5).abs() <= 1e-9, "prob0 {prob} on\n{p}");
        }
        // the planner sees inputs as separate factors
        let plus = InputState::plus(p.inputs().iter().copied());
        let r = run(&p, &plan, &plus, &RunConfig::owqs(OutcomePolicy::Random { seed: 0 })).unwrap();
        assert_eq!(r.stats.m_peak, plan.predicted_peak);
    }
}

#[test]
fn plans_agree_branch_by_branch() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let natural = CostWeights::new(0.0, 0.0, 0.0, 0.0).unwrap();
    let flat = CostWeights::new(1.0, 1.0, 0.5, 1.0).unwrap();
    for p in random_patterns(40) {
        let input = random_input(&p, &mut rng);
        let bits: BTreeMap<QubitId, u8> = p
            .measured_qubits()
            .into_iter()
            .map(|v| (v, rng.gen_range(0..2)))
            .collect();
        let mut results = Vec::new();
        for plan in [
            tune_weights(&p).unwrap().1,
            reorder(&p, &natural).unwrap(),
            reorder(&p, &flat).unwrap(),
        ] {
            let (_, plan_bits) = split_outcomes(&p, &plan.measurement_order(), &bits);
            let r = run(&p, &plan, &input, &RunConfig::owqs(OutcomePolicy::Forced(plan_bits))).unwrap();
            results.push(r.output_state_with_phase());
        }
        for r in &results[1..] {
            let d = r
                .amplitudes()
                .iter()
                .zip(results[0].amplitudes())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(d <= 1e-10, "plans disagree by {d} on\n{p}");
        }
    }
}

#[test]
fn positive_branch_matches_forced_zeros() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for p in random_patterns(40) {
        let input = random_input(&p, &mut rng);
        let (plan, fast) = run_eowqs(&p, &input).unwrap();
        assert!(fast.stats.probs.iter().all(|&x| x == -1.0));
        assert!(fast.stats.warnings.is_empty(), "{:?}", fast.stats.warnings);
        let (_, owqs_plan) = tune_weights(&p).unwrap();
        let zeros = vec![0; owqs_plan.steps.len()];
        let slow = run(&p, &owqs_plan, &input, &RunConfig::owqs(OutcomePolicy::Forced(zeros))).unwrap();
        assert!(states_equal_up_to_phase(&fast.output_state(), &slow.output_state(), 1e-10).unwrap());
        let plus = InputState::plus(p.inputs().iter().copied());
        let (_, fast_plus) = run_eowqs(&p, &plus).unwrap();
        assert_eq!(fast_plus.stats.m_peak, plan.predicted_peak);
        let random = run(
            &p,
            &owqs_plan,
            &input,
            &RunConfig::owqs(OutcomePolicy::Random { seed: 1 }),
        )
        .unwrap();
        assert!(states_equal_up_to_phase(&random.output_state(), &slow.output_state(), 1e-10).unwrap());
    }
}

#[test]
fn first_outcome_is_a_fair_coin() {
    let p = generators::linear(3);
    let (_, plan) = tune_weights(&p).unwrap();
    let input = InputState::plus(p.inputs().iter().copied());
    let runs = 10_000;
    let zeros = (0..runs)
        .filter(|&seed| {
            let r = run(&p, &plan, &input, &RunConfig::owqs(OutcomePolicy::Random { seed })).unwrap();
            r.outcomes.get(plan.steps[0].qubit) == Some(0)
        })
        .count();
    let freq = zeros as f64 / runs as f64;
    assert!((0.48..=0.52).contains(&freq), "frequency {freq}");
}

#[test]
fn cz_update_counts_follow_substate_sizes() {
    let p = generators::cluster(3, 4);
    let (_, plan) = tune_weights(&p).unwrap();
    let input = InputState::plus(p.inputs().iter().copied());
    let r = run(
        &p,
        &plan,
        &input,
        &RunConfig::owqs(OutcomePolicy::Random { seed: 4 }).with_trace(),
    )
    .unwrap();
    let mut expected = 0u64;
    let mut calls = 0u64;
    let mut measure = 0u64;
    for (k, snap) in r.trace.iter().enumerate() {
        match &snap.action {
            Some(Action::Entangle(u, _)) => {
                let m = snap
                    .substates
                    .iter()
                    .find(|s| s.qubits().contains(u))
                    .unwrap()
                    .num_qubits();
                expected += 1 << (m - 2);
                calls += 1;
            }
            Some(Action::Measure { qubit, .. }) => {
                let before = &r.trace[k - 1];
                let m = before
                    .substates
                    .iter()
                    .find(|s| s.qubits().contains(qubit))
                    .unwrap()
                    .num_qubits();
                measure += 1 << (m - 1);
            }
            _ => {}
        }
    }
    assert_eq!(r.stats.ops.cz_calls, calls);
    assert_eq!(r.stats.ops.cz_updates, expected);
    assert_eq!(r.stats.ops.measure_updates, measure);
}

#[test]
fn dense_oracle_reproduces_cnot_golden_output() {
    let p = generators::cnot();
    let r = dense_run(&p, &one_one(), &[0, 1]).unwrap();
    let s = r.output.to_substate();
    assert_state(&s, &[1, 4], &[0.0, 1.0, 0.0, 0.0]);
}
