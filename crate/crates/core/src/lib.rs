//! Simulation of one-way quantum computation patterns.
//!
//! The simulator keeps the state as a collection of disjoint sub-states,
//! merges them only when an entanglement requires it and removes every
//! measured qubit from the amplitude array right away. Patterns are
//! reordered before execution so that each qubit's entanglements run just
//! before its measurement, which keeps the largest sub-state small.
//!
//! * [`pattern`]: pattern model, `.owp` text format, rule checks.
//! * [`substate`]: amplitude storage and in-place kernels.
//! * [`scheduler`]: measurement reordering.
//! * [`gflow`]: generalized flow finder, gating the positive-branch mode.
//! * [`engine`]: plan execution.
//! * [`oracle`]: dense reference simulator used for cross-checks.
//! * [`generators`]: benchmark pattern families.

pub mod engine;
pub mod generators;
pub mod gflow;
pub mod oracle;
pub mod pattern;
pub mod scheduler;
pub mod substate;

pub use engine::{run, run_eowqs, EngineError, InputState, Mode, OutcomePolicy, RunConfig, RunResult};
pub use pattern::{parse_pattern, validate, Action, Angle, Pattern, QubitId, Signal};
pub use scheduler::{reorder, tune_weights, tune_weights_free, CostWeights, ExecutionPlan};
pub use substate::{states_equal_up_to_phase, StateSpace, SubState};
