mod common;

use std::collections::BTreeSet;

use owqs::engine::Snapshot;
use owqs::generators::{self, AngleSet, RandomSpec};
use owqs::pattern::Action;
use owqs::{parse_pattern, run, tune_weights, tune_weights_free, validate, InputState, OutcomePolicy, RunConfig};
use proptest::prelude::*;

fn spec(n: usize, seed: u64, density: f64) -> RandomSpec {
    RandomSpec {
        n,
        density,
        angles: AngleSet::PiQuarter,
        seed,
        allow_nogflow: false,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn plans_are_valid_and_predict_the_engine(n in 2usize..=12, seed in 0u64..10_000, density in 0.05..0.6f64) {
        let p = generators::random(&spec(n, seed, density)).unwrap();
        prop_assert!(validate(&p).is_ok());
        let (_, plan) = tune_weights(&p).unwrap();
        prop_assert!(plan.respects_dependencies());
        let order: BTreeSet<_> = plan.measurement_order().into_iter().collect();
        prop_assert_eq!(order.len(), plan.steps.len());
        prop_assert_eq!(order, p.measured_qubits().into_iter().collect::<BTreeSet<_>>());

        let input = InputState::plus(p.inputs().iter().copied());
        let r = run(&p, &plan, &input, &RunConfig::owqs(OutcomePolicy::Random { seed }).with_trace()).unwrap();
        prop_assert_eq!(r.stats.m_peak, plan.predicted_peak);
        // the sub-state holding each measured qubit is the predicted one
        let mut step = 0;
        let mut before: Option<&Snapshot> = None;
        for snap in &r.trace {
            if let Some(Action::Measure { qubit, .. }) = &snap.action {
                let held = before.unwrap().substates.iter().find(|s| s.qubits().contains(qubit)).unwrap();
                let held: BTreeSet<_> = held.qubits().iter().copied().collect();
                prop_assert_eq!(held, plan.steps[step].ms.iter().copied().collect::<BTreeSet<_>>());
                step += 1;
            }
            before = Some(snap);
        }
    }

    #[test]
    fn text_format_round_trips(n in 2usize..=10, seed in 0u64..10_000) {
        let mut s = spec(n, seed, 0.3);
        s.angles = AngleSet::Uniform;
        let p = generators::random(&s).unwrap();
        let text = p.to_string();
        prop_assert_eq!(parse_pattern(&text).unwrap(), p);
    }

    #[test]
    fn positive_branch_plan_is_never_larger(n in 2usize..=12, seed in 0u64..10_000, density in 0.05..0.6f64) {
        let p = generators::random(&spec(n, seed, density)).unwrap();
        let (_, with_signals) = tune_weights(&p).unwrap();
        let (_, free) = tune_weights_free(&p).unwrap();
        prop_assert!(free.predicted_peak <= with_signals.predicted_peak,
            "free {} > signalled {} on\n{}", free.predicted_peak, with_signals.predicted_peak, p);
    }
}

#[test]
fn cluster_peak_is_rows_plus_one() {
    for n in 1..=4 {
        for m in [2, 5, 9] {
            let p = generators::cluster(n, m);
            let (_, plan) = tune_weights(&p).unwrap();
            assert_eq!(plan.predicted_peak, n + 1, "{n}x{m}");
            let (_, free) = tune_weights_free(&p).unwrap();
            assert_eq!(free.predicted_peak, n + 1, "{n}x{m} without signals");
        }
    }
}
